import pytest

from tool_kit.config_loader import CONFIG, load_config, section


def test_sections_come_from_the_loaded_config():
    assert section("minimizer") is CONFIG["minimizer"]
    assert section("minimizer")["eps"] == pytest.approx(0.1)


def test_unknown_section_is_empty():
    assert section("no_such_section") == {}


def test_missing_file_names_the_path(tmp_path):
    path = tmp_path / "absent.json"
    with pytest.raises(FileNotFoundError, match="absent.json"):
        load_config(str(path))


def test_malformed_file_names_the_path(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"eps\": ")
    with pytest.raises(ValueError, match="broken.json"):
        load_config(str(path))
