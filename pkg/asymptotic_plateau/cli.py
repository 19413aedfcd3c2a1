import json
import logging
import sys

import click

from asymptotic_plateau import __version__
from asymptotic_plateau.exceptions import (
    BoundaryError,
    ConstructionError,
    DegenerateMeshError,
    DomainError,
    GraphFailureError,
    NumericalFailure,
    SceneError,
)
from asymptotic_plateau.experiments import emit_failure, run_experiment
from asymptotic_plateau.scene import parse_scene
from tool_kit.logger import configure_logging

log = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _fail(out_dir: str | None, scene, error: Exception, code: int) -> None:
    click.echo(json.dumps({"error": type(error).__name__, "message": str(error),
                           "field": getattr(error, "field", None), "exit": code}, sort_keys=True), err=True)
    if out_dir:
        emit_failure(out_dir, scene, error)
    sys.exit(code)


@click.command(name="asymptotic-plateau")
@click.option("--scene", "scene_path", required=True, type=click.Path(dir_okay=False),
              help="JSON scene file.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Artifact directory; overrides the scene's out_dir.")
@click.option("--seed", type=int, default=None)
@click.option("--eps", type=float, default=None, help="Truncation height in (0, 0.2].")
@click.option("--resolution", type=int, default=None)
@click.option("--max-iters", "max_iters", type=int, default=None)
@click.option("--tol", type=float, default=None, help="Gradient-norm tolerance.")
@click.option("--log-level", "log_level", default=None, help="Overrides the configured log level.")
@click.version_option(__version__)
def main(scene_path, out_dir, seed, eps, resolution, max_iters, tol, log_level):
    """
    Runs one experiment scene and writes its artifacts and report.json.

    Exit status: 0 when every check passes, 1 when a check fails, 2 for scene or usage
    errors, 3 for numerical failures.
    """
    configure_logging(log_level)
    scene = None
    try:
        scene = parse_scene(scene_path).with_overrides(out_dir=out_dir, seed=seed, eps=eps, resolution=resolution,
                                                       max_iters=max_iters, tol=tol)
    except SceneError as exc:
        _fail(out_dir, None, exc, EXIT_USAGE)

    try:
        result = run_experiment(scene)
    except (NumericalFailure, GraphFailureError, DegenerateMeshError) as exc:
        log.error("%s experiment stopped: %s", scene.experiment, exc)
        _fail(scene.out_dir, scene, exc, EXIT_NUMERICAL)
    except DomainError as exc:
        _fail(scene.out_dir, scene, exc, EXIT_USAGE)
    except (BoundaryError, ConstructionError) as exc:
        log.error("%s experiment stopped: %s", scene.experiment, exc)
        _fail(scene.out_dir, scene, exc, EXIT_CHECK_FAILED)

    click.echo(json.dumps({"experiment": scene.experiment, "passed": result.passed,
                           "failed_checks": result.failed_checks(), "out_dir": scene.out_dir}, sort_keys=True))
    sys.exit(EXIT_PASS if result.passed else EXIT_CHECK_FAILED)


if __name__ == "__main__":
    main()
