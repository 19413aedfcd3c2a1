import json
import logging
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, Tuple

from asymptotic_plateau.exceptions import DomainError, SceneError
from asymptotic_plateau.services.exhaustion import SurfaceSpec
from tool_kit.config_loader import CONFIG, section

log = logging.getLogger(__name__)

EXPERIMENTS = ("strip", "skillet", "plateau", "bridge", "far-apart", "construct", "exhaustion", "dense",
               "collapse", "slab")

MINIMIZER = section("minimizer")
CONSTRUCT = section("construct")
BRIDGE = section("bridge")
STRIP = section("strip")

# per-experiment defaults on top of the minimizer section
EXPERIMENT_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "strip": {"n": STRIP.get("n", 4096)},
    "skillet": {"resolution": 64},
    "plateau": {},
    "bridge": {"eps": CONSTRUCT.get("eps", 0.02), "resolution": CONSTRUCT.get("resolution", 320),
               "tol": CONSTRUCT.get("tol", 1e-4), "max_iters": CONSTRUCT.get("max_iters", 5000)},
    "far-apart": {},
    "construct": {"eps": CONSTRUCT.get("eps", 0.02), "resolution": CONSTRUCT.get("resolution", 320),
                  "tol": CONSTRUCT.get("tol", 1e-4), "max_iters": CONSTRUCT.get("max_iters", 5000),
                  "spec": {"genus": 1, "ends": 2}},
    "exhaustion": {"count": 1000},
    "dense": {"resolution": 128, "n": 2},
    "collapse": {},
    "slab": {"n": 5, "spec": {"genus": None, "ends": None}},
}


# ===========================================
# REGION: Scene
# ===========================================
@dataclass(frozen=True)
class Scene:
    """
    One experiment request, validated and with every default filled in.

    ``spec`` holds the surface type as ``{"genus": g, "ends": k}`` with None for
    infinitely many; ``circles`` lists ``[cx, cy, r]`` triples for plateau scenes.
    """
    experiment: str
    eps: float = MINIMIZER.get("eps", 0.1)
    resolution: int = MINIMIZER.get("resolution", 32)
    tol: float = MINIMIZER.get("tol", 1e-6)
    max_iters: int = MINIMIZER.get("max_iters", 50000)
    widths: Tuple[float, ...] = tuple(BRIDGE.get("widths", (0.2, 0.1, 0.05)))
    spec: Dict[str, Any] = field(default_factory=lambda: {"genus": 0, "ends": 1})
    stages: int = CONSTRUCT.get("stages", 3)
    seed: int = CONFIG.get("seed", 0)
    n: int = 1
    count: int = 1000
    circles: Tuple[Tuple[float, float, float], ...] = ((0.0, 0.0, 1.0),)
    deltas: Tuple[float, ...] = (0.1, 0.05, 0.025)
    out_dir: str = CONFIG.get("output_dir", "artifacts")
    plots: bool = False

    def __post_init__(self):
        validate_scene(self)

    def surface_spec(self) -> SurfaceSpec:
        return SurfaceSpec.from_json(self.spec)

    def with_overrides(self, **overrides) -> "Scene":
        """Flags given on the command line; None leaves the scene value alone."""
        given = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **given) if given else self

    def to_json(self) -> dict:
        return {"experiment": self.experiment, "eps": self.eps, "resolution": self.resolution, "tol": self.tol,
                "max_iters": self.max_iters, "widths": list(self.widths), "spec": dict(self.spec),
                "stages": self.stages, "seed": self.seed, "n": self.n, "count": self.count,
                "circles": [list(c) for c in self.circles], "deltas": list(self.deltas), "out_dir": self.out_dir,
                "plots": self.plots}


# ===========================================
# REGION: Validation
# ===========================================
def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_integer(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _positive_numbers(name: str, values, decreasing: bool = False) -> None:
    if not isinstance(values, (list, tuple)) or not values or not all(_is_number(v) and v > 0 for v in values):
        raise SceneError(name, "must be a nonempty list of positive numbers")
    if decreasing and any(b >= a for a, b in zip(values, values[1:])):
        raise SceneError(name, "must be strictly decreasing")


def validate_scene(scene: Scene) -> None:
    """
    Field-level checks of a scene.

    Raises:
    -------
    SceneError:
        Naming the first offending field.
    """
    if scene.experiment not in EXPERIMENTS:
        raise SceneError("experiment", f"unknown tag {scene.experiment!r}. Choose from {list(EXPERIMENTS)}")
    if not _is_number(scene.eps) or not 0.0 < scene.eps <= 0.2:
        raise SceneError("eps", f"must lie in (0, 0.2], got {scene.eps!r}")
    if not _is_integer(scene.resolution) or scene.resolution < 16:
        raise SceneError("resolution", f"must be an integer ≥ 16, got {scene.resolution!r}")
    if not _is_number(scene.tol) or scene.tol <= 0.0:
        raise SceneError("tol", f"must be positive, got {scene.tol!r}")
    for name in ("max_iters", "stages", "n", "count"):
        value = getattr(scene, name)
        if not _is_integer(value) or value < 1:
            raise SceneError(name, f"must be a positive integer, got {value!r}")
    if not _is_integer(scene.seed) or scene.seed < 0:
        raise SceneError("seed", f"must be a nonnegative integer, got {scene.seed!r}")
    _positive_numbers("widths", scene.widths, decreasing=True)
    _positive_numbers("deltas", scene.deltas)
    if any(d >= 1.0 for d in scene.deltas):
        raise SceneError("deltas", "must lie below 1")
    if not scene.circles or not all(isinstance(c, (list, tuple)) and len(c) == 3 and all(_is_number(v) for v in c)
                                    and c[2] > 0 for c in scene.circles):
        raise SceneError("circles", "must be a nonempty list of [cx, cy, r] with r > 0")
    if not isinstance(scene.spec, dict) or set(scene.spec) - {"genus", "ends", "schedule", "prefix"}:
        raise SceneError("spec", "must be an object with genus, ends and optional schedule, prefix")
    for key in ("genus", "ends"):
        value = scene.spec.get(key, 0 if key == "genus" else 1)
        if value is not None and not _is_integer(value):
            raise SceneError("spec", f"{key} must be an integer or null, got {value!r}")
    try:
        scene.surface_spec()
    except DomainError as exc:
        raise SceneError("spec", str(exc)) from exc
    if not isinstance(scene.out_dir, str) or not scene.out_dir:
        raise SceneError("out_dir", "must be a nonempty path")
    if not isinstance(scene.plots, bool):
        raise SceneError("plots", "must be true or false")


# ===========================================
# REGION: Parsing
# ===========================================
def scene_from_dict(payload: dict) -> Scene:
    """
    Builds a Scene from its JSON object, filling experiment defaults.

    Raises:
    -------
    SceneError:
        Unknown or invalid fields, or a missing experiment tag.
    """
    if not isinstance(payload, dict):
        raise SceneError("<root>", "scene must be a JSON object")
    if "experiment" not in payload:
        raise SceneError("experiment", f"missing. Choose from {list(EXPERIMENTS)}")
    tag = payload["experiment"]
    if tag not in EXPERIMENTS:
        raise SceneError("experiment", f"unknown tag {tag!r}. Choose from {list(EXPERIMENTS)}")
    known = {f.name for f in fields(Scene)}
    unknown = sorted(set(payload) - known)
    if unknown:
        raise SceneError(unknown[0], "unknown field")
    values = dict(EXPERIMENT_DEFAULTS[tag])
    values.update(payload)
    if "out_dir" not in payload:
        values["out_dir"] = os.path.join(CONFIG.get("output_dir", "artifacts"), tag)
    for name in ("widths", "deltas"):
        if isinstance(values.get(name), list):
            values[name] = tuple(values[name])
    if isinstance(values.get("circles"), list):
        values["circles"] = tuple(tuple(c) if isinstance(c, list) else c for c in values["circles"])
    return Scene(**values)


def parse_scene(path: str) -> Scene:
    """
    Reads and validates a JSON scene file.

    Example Usage:
    --------------
    >>> scene = parse_scene("scenes/strip.json")   # {"experiment": "strip", "n": 4096}
    >>> scene.eps, scene.n
    (0.1, 4096)

    Raises:
    -------
    SceneError:
        Missing file, malformed JSON or a schema violation.
    """
    try:
        with open(path, "r", encoding="utf-8") as file:
            payload = json.load(file)
    except FileNotFoundError:
        raise SceneError("scene", f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise SceneError("scene", f"invalid JSON in {path}: {exc.msg} at line {exc.lineno}")
    scene = scene_from_dict(payload)
    log.debug("scene %s: %s", path, scene.to_json())
    return scene
