import abc
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Dict, List

import numpy as np
import pandas as pd

from asymptotic_plateau import __version__
from asymptotic_plateau.scene import Scene
from asymptotic_plateau.services.boundary import (
    IdealArc,
    IdealCurveSet,
    RegionK,
    check_nicely_shrinking,
    make_bridge_family,
    skillet_boundary,
)
from asymptotic_plateau.services.construct import check_budget, initial_state, run_construction
from asymptotic_plateau.services.exhaustion import build_simple_exhaustion, random_finite_specs, sweep_plans, validate_plan
from asymptotic_plateau.services.far_apart import far_apart_threshold, two_circle_collapse
from asymptotic_plateau.services.hypgeom import IdealPoint
from asymptotic_plateau.services.layouts import dense_plan, slab_plan, slab_stabilization
from asymptotic_plateau.services.mesh import mesh_topology
from asymptotic_plateau.services.meshing import attach_band, hemisphere_mesh, skillet_mesh
from asymptotic_plateau.services.minimizer import minimize_area, solve_asymptotic_plateau
from asymptotic_plateau.services.stability import assemble_jacobi, smallest_eigenvalue, spectrum_ladder
from asymptotic_plateau.services.strip import (
    first_integral_residual,
    matched_strip_height,
    peak_height,
    solve_strip_profile,
    w_star,
)
from asymptotic_plateau.services.surface_checks import convex_hull_check, radial_graph_check
from tool_kit.artifact_store import ensure_dir, write_csv, write_json
from tool_kit.config_loader import section
from tool_kit.plots import PlotUsingMatplotLib

log = logging.getLogger(__name__)

BRIDGE = section("bridge")
TOOL = "asymptotic_plateau"
REPORT_NAME = "report.json"
PEAK_TOL = 1e-4
FIRST_INTEGRAL_TOL = 1e-8
AREA_REL_TOL = 0.01
SPHERE_TOL = 1e-2
SPHERE_MIN_TRIANGLES = 10000
STRIP_MATCH_TOL = 5e-3
RAYS = 10000
LADDER_RADII = (0.5, 1.0, 1.5, 2.0)


# ===========================================
# REGION: Results
# ===========================================
@dataclass
class ExperimentResult:
    """Named pass/fail checks, the numbers behind them and the artifact files written."""
    experiment: str
    checks: Dict[str, bool] = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    artifacts: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failed_checks(self) -> List[str]:
        return sorted(k for k, ok in self.checks.items() if not ok)

    def to_json(self) -> dict:
        return {"experiment": self.experiment, "passed": self.passed, "checks": dict(self.checks),
                "failed_checks": self.failed_checks(), "results": self.results,
                "artifacts": sorted(self.artifacts)}


def build_report(scene: Scene | None, result: ExperimentResult | None) -> dict:
    """
    Report payload: tool name and version, the full parameter echo and the result.

    Missing inputs give the empty skeleton with the same keys.
    """
    payload = {"tool": TOOL, "version": __version__,
               "parameters": scene.to_json() if scene is not None else {},
               "experiment": scene.experiment if scene is not None else None,
               "passed": True, "checks": {}, "failed_checks": [], "results": {}, "artifacts": []}
    if result is not None:
        payload.update(result.to_json())
    return payload


def emit_report(out_dir: str, scene: Scene | None, result: ExperimentResult | None) -> str:
    """Writes ``report.json`` into ``out_dir``; identical inputs give identical bytes."""
    ensure_dir(out_dir)
    return write_json(os.path.join(out_dir, REPORT_NAME), build_report(scene, result))


def emit_failure(out_dir: str, scene: Scene | None, error: Exception) -> str:
    """Report of a run that stopped on an exception: no checks, ``passed`` false and the error."""
    payload = build_report(scene, None)
    payload.update({"passed": False, "error": {"type": type(error).__name__, "message": str(error),
                                               "field": getattr(error, "field", None)}})
    ensure_dir(out_dir)
    return write_json(os.path.join(out_dir, REPORT_NAME), payload)


# ===========================================
# REGION: Experiments
# ===========================================
class Experiment(abc.ABC):
    """
    One experiment run from a validated scene.

    Subclasses implement :meth:`run`, write their artifacts under the scene's output
    directory and return every invariant check they evaluated.

    Parameters:
    -----------
    scene : Scene
        Validated scene with defaults filled in.
    """

    def __init__(self, scene: Scene):
        self.__scene = scene
        self.__plotter = PlotUsingMatplotLib() if scene.plots else None

    @property
    def get_scene(self) -> Scene:
        return self.__scene

    @property
    def get_plotter(self) -> PlotUsingMatplotLib | None:
        return self.__plotter

    @property
    def get_out_dir(self) -> str:
        return ensure_dir(self.__scene.out_dir)

    def path(self, name: str) -> str:
        return os.path.join(self.get_out_dir, name)

    @abc.abstractmethod
    def run(self) -> ExperimentResult:
        """Runs the experiment and returns its checks."""
        pass


class StripExperiment(Experiment):
    def run(self) -> ExperimentResult:
        scene = self.get_scene
        profile = solve_strip_profile(scene.n)
        reference = peak_height()
        residual = first_integral_residual(profile)
        w0 = float(w_star(profile, 0.0))
        result = ExperimentResult(scene.experiment)
        result.results = {"u0": profile.u0, "u0_reference": reference, "residual": residual,
                          "landing": profile.landing, "w_star_origin": w0, "n": profile.n}
        result.checks = {
            "peak_height": bool(abs(profile.u0 - reference) < PEAK_TOL),
            "first_integral": bool(residual < FIRST_INTEGRAL_TOL),
            "even": bool(np.allclose(profile.u, profile.u[::-1], rtol=0.0, atol=1e-12)),
            "concave": bool(np.all(np.diff(profile.u, 2) < 0.0)),
            "w_star_origin": bool(abs(w0 - 1.0) < 1e-12),
        }
        frame = profile.to_frame()
        result.artifacts.append(os.path.basename(write_csv(self.path("strip_profile.csv"), frame)))
        if self.get_plotter:
            result.artifacts.append(os.path.basename(self.get_plotter.strip_profile(frame, self.path("strip_profile.png"))))
        return result


class PlateauExperiment(Experiment):
    """Round-circle (or several-circle) boundaries solved at one truncation height."""

    def run(self) -> ExperimentResult:
        scene = self.get_scene
        curves = IdealCurveSet.circles([((cx, cy), r) for cx, cy, r in scene.circles])
        mesh, report = solve_asymptotic_plateau(RegionK(curves), scene.eps, scene.resolution,
                                                tol=scene.tol, max_iters=scene.max_iters)
        topology = mesh_topology(mesh)
        hull = report.hull
        spectrum = smallest_eigenvalue(assemble_jacobi(mesh))
        result = ExperimentResult(scene.experiment)
        result.results = {"area": report.to_json(topology), "convex_hull": hull.to_json(),
                          "lambda1": spectrum.lambda1, "triangles": mesh.n_triangles, "mesh_id": mesh.digest()}
        result.checks = {"convex_hull": hull.passed, "stable": bool(spectrum.lambda1 > 0.0)}
        if len(scene.circles) == 1:
            cx, cy, r = scene.circles[0]
            radius = float(np.hypot(r, scene.eps))
            reference = 2.0 * np.pi * (radius / scene.eps - 1.0)
            deviation = float(np.abs(np.linalg.norm(mesh.get_vertices - [cx, cy, 0.0], axis=1) - radius).max())
            result.results.update({"area_reference": reference, "sphere_deviation": deviation})
            result.checks["area"] = bool(abs(report.area - reference) <= AREA_REL_TOL * reference)
            result.checks["disk_topology"] = (topology.chi, topology.boundary_components) == (1, 1)
            if mesh.n_triangles >= SPHERE_MIN_TRIANGLES:
                result.checks["sphere"] = bool(deviation < SPHERE_TOL)
        mesh.save(self.path("plateau.mesh"))
        result.artifacts.append("plateau.mesh")
        if self.get_plotter:
            ladder = spectrum_ladder(mesh, LADDER_RADII).ladder
            result.results["ladder"] = ladder
            if ladder:
                result.artifacts.append(os.path.basename(self.get_plotter.eigen_ladder(ladder, self.path("ladder.png"))))
            result.artifacts.append(os.path.basename(
                self.get_plotter.ideal_curves(curves.get_components, self.path("curves.png"))))
        return result


class BridgeExperiment(Experiment):
    """
    Diameter bridges of decreasing width on the unit disk.

    Each bridge turns the hemisphere into an annulus; away from a fixed tube around the
    diameter the annuli should approach the hemisphere as the width shrinks.
    """

    def run(self) -> ExperimentResult:
        scene = self.get_scene
        base = IdealCurveSet.circle((0.0, 0.0), 1.0)
        arc = IdealArc.segment((-1.0, 0.0), (1.0, 0.0), samples=129)
        family = make_bridge_family(base, arc, scene.widths, BRIDGE.get("skillet_support_radius", 2.0))
        shrinking = check_nicely_shrinking(family, [IdealPoint(0.0, 0.0), IdealPoint(1.0, 0.0)])
        radius = float(np.hypot(1.0, scene.eps))
        disk = hemisphere_mesh((0.0, 0.0), radius, scene.eps, scene.resolution)
        tube = 2.0 * max(scene.widths)
        rows = []
        for i, bridge in enumerate(family, start=1):
            mesh, report = minimize_area(attach_band(disk, arc, bridge.width), tol=scene.tol, max_iters=scene.max_iters)
            topology = mesh_topology(mesh)
            verts = mesh.get_vertices
            outside = np.abs(verts[:, 1]) > tube
            deviation = float(np.abs(np.linalg.norm(verts[outside], axis=1) - radius).max())
            name = f"bridge_{i}.mesh"
            mesh.save(self.path(name))
            rows.append({"width": bridge.width, "chi": topology.chi, "boundary": topology.boundary_components,
                         "deviation": deviation, "area": report.area, "converged": report.converged, "mesh": name})
            log.info("bridge width %.4g: χ %d, %d boundary curves, deviation %.4e",
                     bridge.width, topology.chi, topology.boundary_components, deviation)
        deviations = [row["deviation"] for row in rows]
        result = ExperimentResult(scene.experiment, artifacts=[row["mesh"] for row in rows])
        result.results = {"rows": rows, "tube": tube, "shrinking": shrinking.to_json()}
        result.checks = {
            "annuli": all((row["chi"], row["boundary"]) == (0, 2) for row in rows),
            "deviation_decreasing": all(b < a for a, b in zip(deviations, deviations[1:])),
            "nicely_shrinking": shrinking.passed,
        }
        write_csv(self.path("bridge.csv"), pd.DataFrame(rows))
        result.artifacts.append("bridge.csv")
        if self.get_plotter:
            result.artifacts.append(os.path.basename(
                self.get_plotter.ideal_curves(family[-1].curves.get_components, self.path("bridge.png"))))
        return result


class SkilletExperiment(Experiment):
    def run(self) -> ExperimentResult:
        scene = self.get_scene
        window = BRIDGE.get("window", 4.0)
        skillet = skillet_boundary(BRIDGE.get("skillet_support_radius", 2.0), BRIDGE.get("skillet_height", 0.5))
        mesh, report = minimize_area(skillet_mesh(skillet, scene.eps, scene.resolution, window),
                                     tol=scene.tol, max_iters=scene.max_iters)
        radial = radial_graph_check(mesh, (0.0, -window, 0.0), rays=RAYS, rng=np.random.default_rng(scene.seed))
        hull = convex_hull_check(mesh)

        # cross-sections well up the tunnel against the truncated strip
        verts = mesh.get_vertices
        band = (np.abs(verts[:, 0]) < 1.0) & (verts[:, 1] > 0.5 * window) & (verts[:, 1] < 0.75 * window)
        profile = solve_strip_profile()
        gap = np.abs(verts[band, 2] - matched_strip_height(profile, scene.eps, verts[band, 0]))
        strip_gap = float(gap.max()) if gap.size else float("nan")

        mesh.save(self.path("skillet.mesh"))
        result = ExperimentResult(scene.experiment, artifacts=["skillet.mesh"])
        result.results = {"area": report.to_json(mesh_topology(mesh)), "radial_graph": radial.to_json(),
                          "convex_hull": hull.to_json(), "strip_gap": strip_gap, "strip_samples": int(band.sum())}
        result.checks = {"radial_graph": radial.passed, "normal_positive": radial.normal_positive,
                         "convex_hull": hull.passed, "strip_match": bool(gap.size and strip_gap < STRIP_MATCH_TOL)}
        return result


class FarApartExperiment(Experiment):
    def run(self) -> ExperimentResult:
        scene = self.get_scene
        report = far_apart_threshold(scene.eps)
        result = ExperimentResult(scene.experiment, results=report.to_json())
        result.checks = {"threshold_in_range": bool(1.0 < report.threshold < 100.0),
                         "dilation_consistent": report.dilation_consistent}
        write_csv(self.path("far_apart.csv"), pd.DataFrame(report.rows))
        result.artifacts.append("far_apart.csv")
        if self.get_plotter and report.rows:
            result.artifacts.append(os.path.basename(
                self.get_plotter.far_apart(report.rows, report.threshold, self.path("far_apart.png"))))
        return result


class CollapseExperiment(Experiment):
    def run(self) -> ExperimentResult:
        scene = self.get_scene
        report = two_circle_collapse(scene.deltas)
        ratios = report.ratios
        result = ExperimentResult(scene.experiment, results=report.to_json())
        result.checks = {"proportional": bool(ratios.max() <= 2.0 * ratios.min()),
                         "connected_wins": all(row["connected_wins"] for row in report.rows)}
        write_csv(self.path("collapse.csv"), pd.DataFrame(report.rows))
        result.artifacts.append("collapse.csv")
        return result


class ConstructExperiment(Experiment):
    def run(self) -> ExperimentResult:
        scene = self.get_scene
        state, reports, limits = run_construction(scene.surface_spec(), scene.stages, scene.eps, scene.resolution,
                                                  out_dir=self.get_out_dir, tol=scene.tol, max_iters=scene.max_iters)
        result = ExperimentResult(scene.experiment)
        result.results = {"budget": check_budget(scene.stages), "stages": [r.to_json() for r in reports],
                          "limit_sets": limits.to_json()}
        result.checks = {f"stage_{r.stage}": r.passed for r in reports}
        result.checks["all_stages"] = len(reports) == scene.stages
        result.checks["limit_sets"] = limits.passed
        result.artifacts = [f"stage_{i}.mesh" for i in range(1, len(state.references) + 1)]
        result.artifacts += ["manifest.json", "limit_sets.json"]
        write_json(self.path("curves.json"), state.curves.to_json())
        result.artifacts.append("curves.json")
        if self.get_plotter:
            result.artifacts.append(os.path.basename(
                self.get_plotter.ideal_curves(state.curves.get_components, self.path("curves.png"))))
        return result


class ExhaustionExperiment(Experiment):
    """Random finite surface types plus the plan of the scene's own surface type."""

    def run(self) -> ExperimentResult:
        scene = self.get_scene
        specs = random_finite_specs(np.random.default_rng(scene.seed), scene.count)
        frame = pd.DataFrame(sweep_plans(specs))
        plan = build_simple_exhaustion(scene.surface_spec(), scene.stages)
        plan_report = validate_plan(plan)
        result = ExperimentResult(scene.experiment)
        result.results = {"specs": len(frame), "failures": int((~frame["passed"]).sum()),
                          "plan": plan_report.to_json(), "pieces": plan.pieces()}
        result.checks = {"random_plans": bool(frame["passed"].all()),
                         "stabilization": bool((frame["stabilized_at"] == frame["expected"]).all()),
                         "scene_plan": plan_report.passed}
        write_csv(self.path("exhaustion.csv"), frame)
        write_json(self.path("plan.json"), plan.to_json())
        result.artifacts += ["exhaustion.csv", "plan.json"]
        return result


class DenseExperiment(Experiment):
    """Stages 1..n of the dense-limit-set layout grown from the unit circle."""

    def run(self) -> ExperimentResult:
        scene = self.get_scene
        plan = build_simple_exhaustion(scene.surface_spec(), 1)
        state = initial_state(plan, scene.eps, scene.resolution)
        result = ExperimentResult(scene.experiment)
        stages = []
        for m in range(1, scene.n + 1):
            config = dense_plan(state, m)
            state = replace(state, stage=config.stage, curves=config.boundary)
            name = f"dense_{m}.json"
            write_json(self.path(name), config.boundary.to_json())
            result.artifacts.append(name)
            stages.append(config.to_json())
            result.checks[f"covering_{m}"] = bool(config.checks["covering"]["passed"])
        result.results = {"stages": stages}
        if self.get_plotter:
            result.artifacts.append(os.path.basename(
                self.get_plotter.ideal_curves(state.curves.get_components, self.path("dense.png"))))
        return result


class SlabExperiment(Experiment):
    """Slab layouts of an infinite-topology surface and their stabilization on {x < 2m - 2}."""

    def run(self) -> ExperimentResult:
        scene = self.get_scene
        spec = scene.surface_spec()
        configs = [slab_plan(spec, m) for m in range(1, scene.n + 1)]
        result = ExperimentResult(scene.experiment)
        stages = []
        for m, config in enumerate(configs, start=1):
            name = f"slab_{m}.json"
            write_json(self.path(name), config.boundary.to_json())
            result.artifacts.append(name)
            entry = config.to_json()
            if m >= 2:
                result.checks[f"arc_in_slabs_{m}"] = bool(config.checks["arc_in_slabs"])
            if m < len(configs):
                same, distance = slab_stabilization(config.boundary, configs[m].boundary, x_max=2.0 * m - 2.0)
                entry["stabilization_distance"] = distance
                result.checks[f"stabilized_{m}"] = same
            stages.append(entry)
        result.results = {"stages": stages, "spec": spec.to_json()}
        if self.get_plotter:
            result.artifacts.append(os.path.basename(
                self.get_plotter.ideal_curves(configs[-1].boundary.get_components, self.path("slab.png"))))
        return result


class ExperimentFactory:
    """Creates the experiment runner named by a scene's ``experiment`` tag."""

    @staticmethod
    def get_experiment(scene: Scene) -> Experiment:
        experiments = {
            "strip": StripExperiment,
            "skillet": SkilletExperiment,
            "plateau": PlateauExperiment,
            "bridge": BridgeExperiment,
            "far-apart": FarApartExperiment,
            "collapse": CollapseExperiment,
            "construct": ConstructExperiment,
            "exhaustion": ExhaustionExperiment,
            "dense": DenseExperiment,
            "slab": SlabExperiment,
        }
        if scene.experiment not in experiments:
            raise ValueError(f"Invalid experiment: {scene.experiment}. Choose from {list(experiments.keys())}")
        return experiments[scene.experiment](scene)


def run_experiment(scene: Scene) -> ExperimentResult:
    """
    Dispatches the scene, then writes ``report.json`` next to the other artifacts.

    Example Usage:
    --------------
    >>> result = run_experiment(scene_from_dict({"experiment": "strip", "n": 4096}))
    >>> result.passed
    True
    """
    experiment = ExperimentFactory.get_experiment(scene)
    log.info("running %s experiment into %s", scene.experiment, scene.out_dir)
    result = experiment.run()
    emit_report(scene.out_dir, scene, result)
    log.info("%s experiment %s", scene.experiment, "passed" if result.passed else f"failed: {result.failed_checks()}")
    return result
