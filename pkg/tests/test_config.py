import pytest

from magspec.config import ConfigError, parse_config_text
from magspec.scenario import parse_scenario


def scenario(text):
    doc = parse_config_text(text, "t.yaml")
    return parse_scenario(doc, 0)


def test_line_numbers_point_at_offending_key():
    text = "scenarios:\n  - name: a\n    geometry:\n      type: flat_torus\n    solver:\n      k: 0\n"
    with pytest.raises(ConfigError) as exc:
        scenario(text)
    assert exc.value.line == 6
    assert "line 6" in str(exc.value)


def test_malformed_yaml_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("a: [1, 2\nb: 3\n")
    assert exc.value.line is not None


def test_unknown_geometry():
    with pytest.raises(ConfigError, match="unknown geometry"):
        scenario("scenarios:\n  - geometry: {type: klein_bottle}\n")


def test_genus_two_unsupported():
    with pytest.raises(ConfigError, match="unsupported"):
        scenario("scenarios:\n  - geometry: {type: surface, genus: 2}\n")


def test_surface_genus_maps_to_mesh():
    assert scenario("scenarios:\n  - geometry: {type: surface, genus: 0}\n").kind == "sphere"
    assert scenario("scenarios:\n  - geometry: {type: surface, genus: 1}\n").kind == "revolution_torus"


def test_check_geometry_mismatch():
    with pytest.raises(ConfigError, match="planar"):
        scenario("scenarios:\n  - geometry: {type: sphere}\n    checks: [riesz_mean]\n")


def test_flux_shorthand():
    sc = scenario("scenarios:\n  - geometry: {type: flat_torus, basis: [[2, 0], [0, 1]]}\n    potential: {A: {kind: constant, flux: [1, 0]}}\n")
    from magspec.scenario import _potentials

    A, _ = _potentials(sc)
    assert A.components[0] == pytest.approx(3.141592653589793)


def test_rotation_form_needs_surface():
    with pytest.raises(ConfigError, match="rotation"):
        scenario("scenarios:\n  - geometry: {type: flat_torus}\n    potential: {A: {kind: rotation}}\n")
