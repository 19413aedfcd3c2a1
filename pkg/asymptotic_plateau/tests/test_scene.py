import json
import os

import pytest

from asymptotic_plateau.exceptions import SceneError
from asymptotic_plateau.scene import EXPERIMENTS, parse_scene, scene_from_dict
from asymptotic_plateau.services.exhaustion import SurfaceSpec
from tool_kit.config_loader import CONFIG


def test_strip_scene_gets_its_defaults():
    scene = scene_from_dict({"experiment": "strip"})
    assert scene.n == 4096
    assert scene.eps == pytest.approx(0.1)
    assert scene.out_dir == os.path.join(CONFIG["output_dir"], "strip")


def test_construct_scene_runs_at_the_thin_truncation():
    scene = scene_from_dict({"experiment": "construct"})
    assert scene.eps == pytest.approx(0.02)
    assert scene.surface_spec() == SurfaceSpec(genus=1, ends=2)


def test_slab_scene_has_infinite_topology():
    assert not scene_from_dict({"experiment": "slab"}).surface_spec().is_finite


def test_lists_become_tuples():
    scene = scene_from_dict({"experiment": "plateau", "circles": [[0, 0, 1], [3, 0, 0.5]], "widths": [0.3, 0.1]})
    assert scene.circles == ((0, 0, 1), (3, 0, 0.5))
    assert scene.widths == (0.3, 0.1)
    assert scene.to_json()["circles"] == [[0, 0, 1], [3, 0, 0.5]]


def test_every_tag_builds_with_defaults():
    for tag in EXPERIMENTS:
        assert scene_from_dict({"experiment": tag}).experiment == tag


@pytest.mark.parametrize("payload, field", [
    ([], "<root>"),
    ({}, "experiment"),
    ({"experiment": "torus"}, "experiment"),
    ({"experiment": "strip", "colour": "red"}, "colour"),
    ({"experiment": "strip", "eps": 0.3}, "eps"),
    ({"experiment": "strip", "eps": True}, "eps"),
    ({"experiment": "strip", "resolution": 8}, "resolution"),
    ({"experiment": "strip", "resolution": 32.0}, "resolution"),
    ({"experiment": "strip", "tol": 0}, "tol"),
    ({"experiment": "strip", "max_iters": 0}, "max_iters"),
    ({"experiment": "strip", "seed": -1}, "seed"),
    ({"experiment": "bridge", "widths": [0.1, 0.2]}, "widths"),
    ({"experiment": "collapse", "deltas": [1.5]}, "deltas"),
    ({"experiment": "plateau", "circles": [[0, 0, -1]]}, "circles"),
    ({"experiment": "construct", "spec": {"genus": -1, "ends": 2}}, "spec"),
    ({"experiment": "construct", "spec": {"genus": 1.5, "ends": 2}}, "spec"),
    ({"experiment": "construct", "spec": {"colour": 1}}, "spec"),
    ({"experiment": "strip", "out_dir": ""}, "out_dir"),
    ({"experiment": "strip", "plots": "yes"}, "plots"),
])
def test_invalid_scenes_name_the_field(payload, field):
    with pytest.raises(SceneError) as info:
        scene_from_dict(payload)
    assert info.value.field == field


def test_unknown_tag_lists_choices():
    with pytest.raises(SceneError, match="Choose from"):
        scene_from_dict({"experiment": "torus"})


def test_overrides_skip_missing_flags():
    scene = scene_from_dict({"experiment": "strip"})
    assert scene.with_overrides(eps=None, seed=None) is scene
    assert scene.with_overrides(eps=0.05).eps == pytest.approx(0.05)


def test_overrides_are_validated():
    with pytest.raises(SceneError) as info:
        scene_from_dict({"experiment": "strip"}).with_overrides(eps=0.5)
    assert info.value.field == "eps"


def test_scene_file_is_parsed(tmp_path):
    path = tmp_path / "scene.json"
    path.write_text(json.dumps({"experiment": "exhaustion", "count": 10}))
    scene = parse_scene(str(path))
    assert scene.count == 10


def test_missing_scene_file(tmp_path):
    with pytest.raises(SceneError) as info:
        parse_scene(str(tmp_path / "absent.json"))
    assert info.value.field == "scene"


def test_malformed_scene_file(tmp_path):
    path = tmp_path / "scene.json"
    path.write_text("{\"experiment\": ")
    with pytest.raises(SceneError) as info:
        parse_scene(str(path))
    assert info.value.field == "scene"
