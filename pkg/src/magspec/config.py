"""YAML scenario files with line-anchored validation errors.

The document is composed node by node so every value keeps the line it came
from; :class:`ConfigError` messages then point at the offending line.
See ``docs/config.md`` for the full schema.
"""

import yaml

__all__ = ["ConfigError", "ConfigDoc", "load_config", "parse_config_text"]


class ConfigError(ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class ConfigDoc:
    """Parsed data plus a map from key paths to 1-based source lines."""

    def __init__(self, data, lines, source="<config>"):
        self.data = data
        self.lines = lines
        self.source = source

    def line(self, path):
        path = tuple(path)
        while path:
            if path in self.lines:
                return self.lines[path]
            path = path[:-1]
        return self.lines.get((), None)

    def error(self, path, message):
        return ConfigError(f"{self.source}: {'.'.join(map(str, path)) or '<root>'}: {message}", self.line(path), tuple(path))


def _construct(node, path, lines, loader):
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, value_node in node.value:
            key = loader.construct_object(key_node, deep=True)
            lines[path + (key,)] = key_node.start_mark.line + 1
            out[key] = _construct(value_node, path + (key,), lines, loader)
            lines[path + (key,)] = key_node.start_mark.line + 1
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_construct(child, path + (i,), lines, loader) for i, child in enumerate(node.value)]
    return loader.construct_object(node, deep=True)


def parse_config_text(text, source="<config>"):
    loader = yaml.SafeLoader(text)
    try:
        node = loader.get_single_node()
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"{source}: malformed YAML: {getattr(exc, 'problem', exc)}", line) from exc
    finally:
        loader.dispose()
    if node is None:
        raise ConfigError(f"{source}: empty config", 1)
    lines = {}
    data = _construct(node, (), lines, yaml.SafeLoader(""))
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping", 1)
    return ConfigDoc(data, lines, source)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))
