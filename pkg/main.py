import logging

from asymptotic_plateau.experiments import run_experiment
from asymptotic_plateau.scene import scene_from_dict
from tool_kit.logger import configure_logging

log = logging.getLogger(__name__)

if __name__ == '__main__':
    # ===========================================
    # REGION: Input
    # ===========================================
    experiment = 'plateau'
    circles = [[0.0, 0.0, 1.0]]
    eps = 0.1
    resolution = 64
    plots = True

    # ===========================================
    # END REGION: Input
    # ===========================================
    configure_logging()
    scene = scene_from_dict({"experiment": experiment, "circles": circles, "eps": eps,
                             "resolution": resolution, "plots": plots})
    result = run_experiment(scene)
    log.info("checks: %s", result.checks)
    # scene = scene_from_dict({"experiment": "far-apart", "plots": True})
    # run_experiment(scene)
