import os

import numpy as np
import pytest

import disk_rigidity
from disk_rigidity.analysis import utils
from disk_rigidity.config import DEFAULT_TOLERANCES, ExperimentConfig, load_config
from disk_rigidity.errors import ConfigError
from disk_rigidity.geometry import hyperbolic as hyp
from disk_rigidity.main import main


def _ini(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _table(path):
    with open(path) as f:
        lines = f.read().splitlines()
    return lines[1:]


def test_defaults_are_valid():
    config = load_config(experiment="curvature")
    assert config.family == "conformal"
    assert config.tolerances == DEFAULT_TOLERANCES


def test_ini_values_and_overrides(tmp_path):
    path = _ini(tmp_path, "[experiment]\nname = moebius\n\n[deformation]\nfamily = twist\namplitude = 0.02\n\n"
                          "[samplers]\nseed = 3\nt_values = 0, 0.5, 1\n\n[tolerances]\nmoebius = 1e-4\n\n"
                          "[output]\ndirectory = out\n")
    config = load_config(path)
    assert (config.experiment, config.family, config.seed, config.out) == ("moebius", "twist", 3, "out")
    assert config.t_values == (0.0, 0.5, 1.0)
    assert config.tolerance("moebius") == 1e-4
    assert config.tolerance("kernel") == DEFAULT_TOLERANCES["kernel"]

    overridden = load_config(path, experiment="schwarzian", seed=11, out=str(tmp_path))
    assert (overridden.experiment, overridden.seed, overridden.out) == ("schwarzian", 11, str(tmp_path))


@pytest.mark.parametrize("text, key", [
    ("[deformation]\ncolour = red\n", "deformation.colour"),
    ("[plotting]\nstyle = dark\n", "plotting"),
    ("[tolerances]\nmoebius = -1\n", "tolerances.moebius"),
    ("[tolerances]\nspeed = 1\n", "tolerances.speed"),
    ("[samplers]\npairs = many\n", "samplers.pairs"),
    ("[experiment]\nname = moebius\n", "samplers.seed"),
    ("[deformation]\nfamily = wobble\n", "deformation.family"),
    ("[deformation]\ncdrm_radius = 0.4\n", "deformation.cdrm_radius"),
    ("[samplers]\nn_angular = 30\n", "samplers.n_angular"),
])
def test_invalid_configuration(tmp_path, text, key):
    with pytest.raises(ConfigError) as info:
        load_config(_ini(tmp_path, text))
    assert info.value.key == key


def test_config_validation_without_file():
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="unknown").validate()


def test_registry():
    assert sorted(disk_rigidity.registry) == sorted(("curvature", "moebius", "schwarzian", "raytransform", "kernel",
                                                     "decompose", "variation", "pipeline", "volume"))
    assert callable(disk_rigidity.make("moebius"))
    with pytest.raises(KeyError):
        disk_rigidity.make("unknown")
    with pytest.raises(ValueError):
        disk_rigidity.register(id="moebius", entry_point="disk_rigidity.experiments:moebius")


def test_list_experiments(capsys):
    assert main(["--list"]) == 0
    assert "pipeline" in capsys.readouterr().out


def test_bad_configuration_exits_with_two(tmp_path):
    assert main(["moebius", "--config", _ini(tmp_path, "[samplers]\nseed = x\n")]) == 2


def test_curvature_violation_is_reported(tmp_path):
    path = _ini(tmp_path, "[deformation]\nfamily = conformal\namplitude = 0.5\n")
    assert main(["curvature", "--config", path, "--out", str(tmp_path)]) == 1
    report = tmp_path / "curvature" / "report.csv"
    assert report.exists()
    lines = _table(report)
    assert lines[0] == "# tolerance curvature_margin=0"
    assert lines[-1].endswith("fail")
    assert (tmp_path / "curvature" / "summary.txt").exists()


def test_small_conformal_bump_violates_curvature_bound(tmp_path):
    assert main(["curvature", "--out", str(tmp_path)]) == 1
    assert (tmp_path / "curvature" / "plot_curvature.svg").exists()


def test_curvature_within_configured_margin(tmp_path):
    path = _ini(tmp_path, "[tolerances]\ncurvature_margin = 0.5\n")
    assert main(["curvature", "--config", path, "--out", str(tmp_path)]) == 0


def test_twist_family_meets_curvature_bound(tmp_path):
    path = _ini(tmp_path, "[deformation]\nfamily = twist\n")
    assert main(["curvature", "--config", path, "--out", str(tmp_path)]) == 0
    table = np.genfromtxt(tmp_path / "curvature" / "report.csv", delimiter=",", comments="#", dtype=str)
    assert np.all(table[:, -1] == "pass")
    assert np.allclose(table[:, 1].astype(float), -1.0, atol=1e-6)


def test_curvature_hypothesis_status_in_summary(tmp_path):
    path = _ini(tmp_path, "[deformation]\nfamily = conformal\n\n[samplers]\nseed = 2\nquadruples = 2\n")
    main(["moebius", "--config", path, "--out", str(tmp_path)])
    summary = (tmp_path / "moebius" / "summary.txt").read_text()
    assert "note curvature hypothesis K <= -1 not met" in summary

    path = _ini(tmp_path, "[deformation]\nfamily = twist\n\n[samplers]\nseed = 2\nquadruples = 2\n", "twist.ini")
    main(["moebius", "--config", path, "--out", str(tmp_path / "twist")])
    summary = (tmp_path / "twist" / "moebius" / "summary.txt").read_text()
    assert "PASS curvature hypothesis K <= -1" in summary


def test_constant_family_has_zero_schwarzian(tmp_path):
    path = _ini(tmp_path, "[deformation]\nfamily = constant\n\n[samplers]\npairs = 3\npoint_pairs = 3\n")
    assert main(["schwarzian", "--config", path, "--seed", "5", "--out", str(tmp_path)]) == 0
    table = np.genfromtxt(tmp_path / "schwarzian" / "report.csv", delimiter=",", comments="#")
    assert table.shape == (3, 7)
    assert np.all(table[:, 2] == 0.0)
    assert (tmp_path / "schwarzian" / "geodesic.csv").exists()


def test_runs_are_reproducible(tmp_path):
    path = _ini(tmp_path, "[deformation]\nfamily = constant\n\n[samplers]\npairs = 2\npoint_pairs = 2\n")
    for name in ("first", "second"):
        assert main(["schwarzian", "--config", path, "--seed", "9", "--out", str(tmp_path / name)]) == 0
    for table in ("report.csv", "gaps.csv", "history.csv"):
        assert _table(tmp_path / "first" / "schwarzian" / table) == _table(tmp_path / "second" / "schwarzian" / table)


def test_write_table_format(tmp_path):
    path = utils.write_table(str(tmp_path / "t" / "table.csv"), ("a", "b", "ok"), [(0.1, 2, True)], {"x": 1e-3})
    lines = open(path).read().splitlines()
    assert lines[0].startswith("# generated ")
    assert lines[1:] == ["# tolerance x=0.001", "# a,b,ok", "0.10000000000000001,2,pass"]


def test_plot_series_writes_svg(tmp_path):
    path = utils.plot_series(str(tmp_path / "p.svg"), {"a": ([0, 1], [1e-3, 1e-2])}, "x", "y", log_y=True)
    assert os.path.getsize(path) > 0


def test_samplers(rng):
    for xi, eta in utils.sample_pairs(rng, 20, 0.5):
        assert 0.5 - 1e-12 <= abs((xi - eta + np.pi) % (2.0 * np.pi) - np.pi) <= np.pi
    for xi, eta in utils.sample_chords(rng, 20, 0.5):
        m, _ = hyp.ideal_geodesic(xi, eta)
        assert abs(m) < 0.5
    for xi, eta in utils.sample_chords(rng, 20, 0.5, through=False):
        m, _ = hyp.ideal_geodesic(xi, eta)
        assert abs(m) > 0.5
    quadruples = utils.sample_quadruples(rng, 10)
    assert quadruples.shape == (10, 4)
    assert np.all((quadruples >= 0.0) & (quadruples < 2.0 * np.pi))
    points = utils.sample_points(rng, 50, 0.9)
    assert np.all(np.hypot(points[:, 0], points[:, 1]) < 0.9)


def test_chord_endpoints_of_diameter():
    a, b = utils.chord_endpoints(0.0)
    assert abs(a - b) == pytest.approx(np.pi)
