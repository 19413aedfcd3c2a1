import json

import pytest
from click.testing import CliRunner

from asymptotic_plateau.cli import EXIT_PASS, EXIT_USAGE, main


@pytest.fixture
def runner():
    return CliRunner()


def write_scene(tmp_path, payload):
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(payload))
    return str(path)


def read_report(out):
    with open(out / "report.json", "r", encoding="utf-8") as file:
        return json.load(file)


def test_out_of_range_eps_is_a_usage_error(runner, tmp_path):
    scene = write_scene(tmp_path, {"experiment": "strip", "eps": 0.5})
    out = tmp_path / "out"
    result = runner.invoke(main, ["--scene", scene, "--out", str(out)])
    assert result.exit_code == EXIT_USAGE
    report = read_report(out)
    assert report["passed"] is False
    assert report["error"]["field"] == "eps"


def test_unknown_tag_is_a_usage_error(runner, tmp_path):
    result = runner.invoke(main, ["--scene", write_scene(tmp_path, {"experiment": "torus"})])
    assert result.exit_code == EXIT_USAGE


def test_missing_scene_is_a_usage_error(runner, tmp_path):
    result = runner.invoke(main, ["--scene", str(tmp_path / "absent.json")])
    assert result.exit_code == EXIT_USAGE


def test_flag_overrides_are_validated(runner, tmp_path):
    scene = write_scene(tmp_path, {"experiment": "strip"})
    result = runner.invoke(main, ["--scene", scene, "--out", str(tmp_path / "out"), "--eps", "0.9"])
    assert result.exit_code == EXIT_USAGE


def test_strip_scene_passes(runner, tmp_path):
    out = tmp_path / "strip"
    result = runner.invoke(main, ["--scene", write_scene(tmp_path, {"experiment": "strip"}), "--out", str(out)])
    assert result.exit_code == EXIT_PASS
    report = read_report(out)
    assert report["passed"] is True
    assert report["experiment"] == "strip"
    assert report["parameters"]["out_dir"] == str(out)
    assert "strip_profile.csv" in report["artifacts"]
    assert (out / "strip_profile.csv").exists()


def test_exhaustion_scene_echoes_overrides(runner, tmp_path):
    out = tmp_path / "exhaustion"
    scene = write_scene(tmp_path, {"experiment": "exhaustion", "count": 20})
    result = runner.invoke(main, ["--scene", scene, "--out", str(out), "--seed", "11"])
    assert result.exit_code == EXIT_PASS
    assert read_report(out)["parameters"]["seed"] == 11


def test_reports_are_byte_identical(runner, tmp_path):
    scene = write_scene(tmp_path, {"experiment": "exhaustion", "count": 50, "seed": 3})
    out = tmp_path / "again"
    runner.invoke(main, ["--scene", scene, "--out", str(out)])
    first = (out / "report.json").read_bytes()
    runner.invoke(main, ["--scene", scene, "--out", str(out)])
    assert (out / "report.json").read_bytes() == first


def test_plots_are_written_on_request(runner, tmp_path):
    out = tmp_path / "plotted"
    scene = write_scene(tmp_path, {"experiment": "strip", "plots": True})
    result = runner.invoke(main, ["--scene", scene, "--out", str(out)])
    assert result.exit_code == EXIT_PASS
    assert (out / "strip_profile.png").exists()
