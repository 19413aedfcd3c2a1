import logging
import os
from dataclasses import dataclass, field, replace
from typing import List, Sequence, Tuple

import numpy as np
import shapely
from scipy.spatial import cKDTree
from shapely.geometry import Polygon

from asymptotic_plateau.exceptions import (
    BoundaryError,
    ConstructionError,
    DegenerateMeshError,
    DomainError,
    GraphFailureError,
    NumericalFailure,
)
from asymptotic_plateau.services.boundary import (
    BridgeSpec,
    IdealArc,
    IdealCurveSet,
    away_disk,
    bounds_hole,
    build_bridge,
    component_order,
    exterior_orthogonal_arc,
    find_orthogonal_chord,
)
from asymptotic_plateau.services.exhaustion import (
    PANTS,
    ExhaustionPlan,
    ExhaustionStep,
    SurfaceSpec,
    build_simple_exhaustion,
    euler_of_step,
)
from asymptotic_plateau.services.hypgeom import hyp_distance_many
from asymptotic_plateau.services.mesh import MeshTopology, TriMesh, mesh_topology, submesh
from asymptotic_plateau.services.meshing import attach_band, hemisphere_mesh
from asymptotic_plateau.services.minimizer import inner_outer_agreement, minimize_area
from asymptotic_plateau.services.stability import assemble_jacobi, smallest_eigenvalue
from asymptotic_plateau.services.surface_checks import normal_graph_decompose
from tool_kit.artifact_store import ensure_dir, write_json, write_manifest
from tool_kit.config_loader import section

log = logging.getLogger(__name__)

CONSTRUCT = section("construct")
BRIDGE = section("bridge")
STAGES = CONSTRUCT.get("stages", 3)
EPS = CONSTRUCT.get("eps", 0.02)
TOL = CONSTRUCT.get("tol", 1e-4)
MAX_ITERS = CONSTRUCT.get("max_iters", 5000)
RESOLUTION = CONSTRUCT.get("resolution", 320)
INITIAL_WIDTH = CONSTRUCT.get("initial_width", 0.2)
RADIUS_LADDER = tuple(CONSTRUCT.get("radius_ladder", (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0)))
CHECK_UNIQUENESS = CONSTRUCT.get("check_uniqueness", True)
MAX_HALVINGS = BRIDGE.get("max_halvings", 8)
EPS_SCALE = 3.0 / np.pi ** 2
ANCHOR = (0.0, 0.0, 1.0)
BAND_SEAM = 1.5
# second bridge of a handle, relative to the first: width and seam radius factor
CROSS_WIDTH = 0.75
CROSS_SEAM = 0.8
LOCALITY_TOL = 1e-3


# ===========================================
# REGION: Budgets and radii
# ===========================================
def eps_budget(n: int, scale: float = EPS_SCALE) -> float:
    """ε_n = scale / n²; the default scale 3/π² makes the whole series sum to 1/2."""
    return scale / float(n) ** 2


def graph_bound(i: int, n: int, scale: float = EPS_SCALE) -> float:
    """Σ_{k=i+1}^{n} ε_k, the allowed size of Σ_n as a normal graph over Σ_i."""
    return float(sum(eps_budget(k, scale) for k in range(i + 1, n + 1)))


def check_budget(stages: int, scale: float = EPS_SCALE) -> float:
    total = float(sum(eps_budget(k, scale) for k in range(1, stages + 1)))
    if total >= 1.0:
        raise ConstructionError(f"Tolerance budget Σ ε_n = {total:.4g} over {stages} stages is not below 1.")
    return total


def _triple(topology: MeshTopology | None) -> Tuple[int, int, int] | None:
    if topology is None:
        return None
    return topology.chi, topology.genus, topology.boundary_components


def ball_topology(mesh: TriMesh, radius: float, anchor: Sequence[float] = ANCHOR) -> MeshTopology | None:
    """
    Topology of the piece of the surface inside the hyperbolic ball B(anchor, radius)
    that contains the vertex closest to the anchor; None when the clipped piece is empty
    or pinched.
    """
    anchor = np.asarray(anchor, dtype=float)
    inside = hyp_distance_many(mesh.get_vertices, anchor) < radius
    if inside.sum() < 3:
        return None
    try:
        clipped, _ = submesh(mesh, inside)
        if clipped.n_triangles == 0:
            return None
        _, labels = clipped.component_labels()
        root = int(np.argmin(hyp_distance_many(clipped.get_vertices, anchor)))
        piece, _ = submesh(clipped, labels == labels[root])
        return mesh_topology(piece)
    except DegenerateMeshError:
        return None


def stage_radius(mesh: TriMesh, expected: Tuple[int, int, int], ladder: Sequence[float] = RADIUS_LADDER,
                 above: float = 0.0) -> float | None:
    """Smallest rung above ``above`` on which the ball piece already has the topology (χ, genus, boundary)."""
    for r in sorted(ladder):
        if r > above and _triple(ball_topology(mesh, r)) == tuple(expected):
            return float(r)
    return None


def _inherited_index(new: TriMesh, old: TriMesh, tol: float = 1e-12) -> np.ndarray:
    """Index of the coinciding vertex of ``old`` for every vertex of ``new``, -1 for new vertices."""
    d, idx = cKDTree(old.get_vertices).query(new.get_vertices)
    return np.where(d <= tol, idx, -1)


def _limit_disks(curves: IdealCurveSet) -> Tuple[Polygon, ...]:
    return tuple(away_disk(curves, k) for k in range(len(curves)))


# ===========================================
# REGION: Stage data
# ===========================================
@dataclass(frozen=True)
class StageConfig:
    """
    Boundary data of one construction stage.

    ``case`` is one of pants, handle, annuli-only, dense-disk, slab-A_n, slab-T_n (or disk
    for the first slab stage). ``bridges`` are applied in order; ``seam_factors`` go with
    them to the band surgery. Layout plans carry their finished ``boundary``.
    """
    stage: int
    case: str
    eps_n: float
    expected: Tuple[int, int, int] | None = None
    width: float = 0.0
    component: int | None = None
    chord: IdealArc | None = None
    bridges: Tuple[BridgeSpec, ...] = ()
    seam_factors: Tuple[float, ...] = ()
    disk_region: Polygon | None = None
    boundary: IdealCurveSet | None = None
    notes: Tuple[str, ...] = ()
    checks: dict = field(default_factory=dict)

    def with_width(self, width: float) -> "StageConfig":
        bridges, seams = _stage_bridges(self.case, self.chord, width)
        return replace(self, width=width, bridges=bridges, seam_factors=seams)

    @property
    def min_width(self) -> float:
        return min((b.width for b in self.bridges), default=0.0)

    def to_json(self) -> dict:
        payload = {"stage": self.stage, "case": self.case, "eps_n": self.eps_n, "width": self.width,
                   "component": self.component, "bridges": len(self.bridges),
                   "bridge_widths": [b.width for b in self.bridges], "notes": list(self.notes)}
        if self.expected is not None:
            payload["expected"] = dict(zip(("chi", "genus", "boundary"), self.expected))
        if self.boundary is not None:
            payload["boundary_components"] = len(self.boundary)
        payload.update(self.checks)
        return payload


def _stage_bridges(case: str, chord: IdealArc | None, width: float) -> Tuple[Tuple[BridgeSpec, ...], Tuple[float, ...]]:
    if chord is None or case not in ("pants", "handle"):
        return (), ()
    bridges, seams = [BridgeSpec(chord, width)], [BAND_SEAM]
    if case == "handle":
        s = 0.5 * chord.length
        mid, tangent = chord.frame_at(s)
        normal = np.array([-tangent[1], tangent[0]])
        cross = IdealArc.segment(mid - width * normal, mid + width * normal, samples=17)
        bridges.append(BridgeSpec(cross, CROSS_WIDTH * width))
        seams.append(CROSS_SEAM)
    return tuple(bridges), tuple(seams)


@dataclass(frozen=True, eq=False)
class ConstructionState:
    """
    Solved stage Σ_n with everything the later checks read back: the stage radii r_i,
    the earlier surfaces Σ_i, for every i the index map from the current vertices to the
    vertices of Σ_i they descend from (-1 for later additions), the graph decompositions
    of every stage and the ideal disks bounding the ends.
    """
    stage: int
    mesh: TriMesh
    curves: IdealCurveSet
    plan: ExhaustionPlan
    eps: float
    radii: Tuple[float, ...] = ()
    references: Tuple[TriMesh, ...] = ()
    origins: Tuple[np.ndarray, ...] = ()
    decompositions: Tuple[Tuple[dict, ...], ...] = ()
    limit_disks: Tuple[Polygon, ...] = ()

    @property
    def spec(self) -> SurfaceSpec | None:
        return self.plan.spec


@dataclass
class StageReport:
    stage: int
    case: str
    width: float
    halvings: int
    checks: dict
    radius: float | None
    area: float | None
    passed: bool
    reason: str = ""
    notes: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"stage": self.stage, "case": self.case, "width": self.width, "halvings": self.halvings,
                "checks": self.checks, "radius": self.radius, "area": self.area, "passed": self.passed,
                "reason": self.reason, "notes": self.notes}


# ===========================================
# REGION: Planning
# ===========================================
def initial_state(plan: ExhaustionPlan, eps: float = EPS, resolution: int = RESOLUTION,
                  ladder: Sequence[float] = RADIUS_LADDER) -> ConstructionState:
    """Σ_1: the totally geodesic disk over the unit circle, cut at z = ε."""
    if not 0.0 < eps <= 0.2:
        raise DomainError(f"Truncation height must lie in (0, 0.2], got {eps}.")
    mesh = hemisphere_mesh((0.0, 0.0), float(np.hypot(1.0, eps)), eps, resolution)
    curves = IdealCurveSet.circle((0.0, 0.0), 1.0, samples=resolution)
    r1 = stage_radius(mesh, euler_of_step(plan, 1), ladder)
    return ConstructionState(stage=1, mesh=mesh, curves=curves, plan=plan, eps=float(eps),
                             radii=(r1 if r1 is not None else float(max(ladder)),), references=(mesh,),
                             origins=(np.arange(mesh.n_vertices),), decompositions=((),),
                             limit_disks=_limit_disks(curves))


def plan_stage(state: ConstructionState, step: ExhaustionStep, width: float | None = None) -> StageConfig:
    """
    Bridges realizing one exhaustion step on the solved state.

    A pants piece becomes one bridge along an arc meeting the designated curve Γ_k
    orthogonally and running through the disk D_k that Γ_k bounds away from the region:
    a chord across the hole Γ_k rims, or an exterior circular arc when Γ_k is an outer
    curve. Circle j of the step is the j-th curve of :func:`component_order`. A handle
    adds a second bridge across the first one, joining the two opposite points at
    distance w from the arc middle. Annuli need no bridge. When the chord leaves no room for the band at the requested width the width
    is halved and the reduction noted.

    Raises:
    -------
    ConstructionError:
        Steps with more than one nonannular piece, attachments to missing curves, or no
        admissible width above 2ε.
    """
    n = state.stage + 1
    if n > len(state.plan):
        raise ConstructionError(f"Plan has only {len(state.plan)} stages.")
    expected = euler_of_step(state.plan, n)
    pieces = step.nonannular
    if not pieces:
        return StageConfig(n, "annuli-only", eps_budget(n), expected)
    if len(pieces) > 1:
        raise ConstructionError("The construction consumes one nonannular piece per stage.")
    if pieces[0].attached_to is None:
        raise ConstructionError("Nonannular piece without a boundary circle.")
    order = component_order(state.curves)
    k = order[pieces[0].attached_to % len(order)]
    comps = state.curves.get_components

    if bounds_hole(state.curves, k):
        others = [c for i, c in enumerate(comps) if i != k]
        hint = comps[k][int(np.argmax(IdealCurveSet(others).distance(comps[k])))] if others else None
        chord = find_orthogonal_chord(state.curves, k, hint=hint)
    else:
        chord = exterior_orthogonal_arc(state.curves, k)

    width = width or INITIAL_WIDTH * 0.5 ** (n - 2)
    notes = []
    while chord.length <= 3.15 * BAND_SEAM * width:
        width *= 0.5
        notes.append(f"width reduced to {width:.4g}: chord of length {chord.length:.4g} leaves no room")
        log.warning("stage %d: %s", n, notes[-1])
    case = "pants" if pieces[0].kind == PANTS else "handle"
    if (CROSS_WIDTH if case == "handle" else 1.0) * width <= 2.0 * state.eps:
        raise ConstructionError(f"No bridge width above 2ε = {2 * state.eps} fits curve {k}.")
    bridges, seams = _stage_bridges(case, chord, width)
    return StageConfig(n, case, eps_budget(n), expected, width, k, chord, bridges, seams,
                       away_disk(state.curves, k), notes=tuple(notes))


def apply_bridges(curves: IdealCurveSet, config: StageConfig) -> IdealCurveSet:
    for spec in config.bridges:
        curves = build_bridge(curves, spec).curves
    return curves


def check_locality(old: IdealCurveSet, new: IdealCurveSet, disk: Polygon | None, tol: float = LOCALITY_TOL) -> bool:
    """Every curve that is not an old one lies in the designated disk D_k."""
    if disk is None:
        return True
    zone = disk.buffer(tol)
    for comp in new.get_components:
        if old.distance(comp).max() <= 1e-9:
            continue
        if not np.all(shapely.contains_xy(zone, comp[:, 0], comp[:, 1])):
            return False
    return True


# ===========================================
# REGION: Verification
# ===========================================
def verify_stage(state: ConstructionState, mesh: TriMesh, origins: Sequence[np.ndarray],
                 expected: Tuple[int, int, int], n: int, ladder: Sequence[float] = RADIUS_LADDER,
                 spectrum: bool = True) -> Tuple[dict, float | None, Tuple[dict, ...]]:
    """
    Checks of a candidate Σ_n against the stored stages.

    topology: (χ, genus, boundary) of the mesh equals the exhaustion's.
    nested_balls: the ball piece of radius r_j has the topology of stage j for every
    stored r_j, and some rung above the last one already has the topology of stage n
    (that rung becomes r_n).
    normal_graph: the part of Σ_n descending from Σ_i is a normal graph over Σ_i in
    B(r_i) with sup|f| and sup|∇f| within Σ_{k=i+1}^{n} ε_k.
    stable: λ1 of the Jacobi operator is positive.
    """
    checks = {}
    got = _triple(mesh_topology(mesh))
    checks["topology"] = {"passed": got == tuple(expected), "topology": got, "expected": tuple(expected)}

    above = state.radii[-1] if n > 1 else 0.0
    radius = stage_radius(mesh, expected, ladder, above)
    rows, ok = [], radius is not None
    for j, r_j in enumerate(state.radii[:n - 1], start=1):
        want = euler_of_step(state.plan, j)
        have = _triple(ball_topology(mesh, r_j))
        rows.append({"stage": j, "radius": r_j, "topology": have, "expected": want})
        ok = ok and have == want
    checks["nested_balls"] = {"passed": bool(ok), "radius": radius, "balls": rows}

    decompositions, ok = [], True
    for i, (ref, r_i) in enumerate(zip(state.references[:n - 1], state.radii), start=1):
        bound = graph_bound(i, n)
        try:
            inherited, _ = submesh(mesh, origins[i - 1] >= 0)
            dec = normal_graph_decompose(inherited, ref, r_i)
            entry = dec.to_json()
            entry["passed"] = bool(dec.sup_f <= bound and dec.sup_grad <= bound)
        except (GraphFailureError, DomainError) as exc:
            entry = {"passed": False, "error": str(exc)}
        entry.update({"stage": i, "bound": bound})
        ok = ok and entry["passed"]
        decompositions.append(entry)
    checks["normal_graph"] = {"passed": bool(ok), "decompositions": decompositions}

    if spectrum:
        try:
            lam = smallest_eigenvalue(assemble_jacobi(mesh)).lambda1
            checks["stable"] = {"passed": bool(lam > 0.0), "lambda1": lam}
        except (NumericalFailure, DomainError) as exc:
            checks["stable"] = {"passed": False, "error": str(exc)}
    return checks, radius, tuple(decompositions)


def _graph_checks_pass(checks: dict) -> bool:
    return all(checks[key]["passed"] for key in ("topology", "nested_balls", "normal_graph"))


def stage_one_report(state: ConstructionState) -> StageReport:
    checks, radius, _ = verify_stage(state, state.mesh, state.origins, euler_of_step(state.plan, 1), 1)
    passed = all(c["passed"] for c in checks.values())
    return StageReport(1, "disk", 0.0, 0, checks, radius, None, passed, "" if passed else "stage-1 checks failed")


# ===========================================
# REGION: Stages
# ===========================================
def _attempt(state: ConstructionState, config: StageConfig, tol: float, max_iters: int):
    curves = apply_bridges(state.curves, config)
    if not check_locality(state.curves, curves, config.disk_region):
        raise ConstructionError(f"New curves leave the disk bounded by curve {config.component}.")
    mesh = state.mesh
    for spec, seam in zip(config.bridges, config.seam_factors):
        mesh = attach_band(mesh, spec.arc, spec.width, seam_factor=seam)
    parent = _inherited_index(mesh, state.mesh)
    if config.bridges:
        mesh, area = minimize_area(mesh, tol=tol, max_iters=max_iters)
        area = area.area
    else:
        area = None
    origins = tuple(np.where(parent >= 0, o[np.maximum(parent, 0)], -1) for o in state.origins)
    return curves, mesh, origins, area


def run_stage(state: ConstructionState, config: StageConfig, tol: float = TOL, max_iters: int = MAX_ITERS,
              max_halvings: int = MAX_HALVINGS, check_uniqueness: bool = CHECK_UNIQUENESS,
              ladder: Sequence[float] = RADIUS_LADDER) -> Tuple[ConstructionState, StageReport]:
    """
    Applies the stage's bridges to the curves and the mesh, minimizes, and verifies the
    stage. While the topology, ball or graph checks fail the bridge widths are halved,
    at most ``max_halvings`` times and never below 2ε. A failed stage returns the unchanged state with a failure report.
    """
    n = config.stage
    notes = list(config.notes)
    if check_uniqueness and config.bridges:
        agreement = inner_outer_agreement(state.mesh, tol=tol, max_iters=max_iters)
        notes.append(f"uniqueness proxy on stage {state.stage}: hausdorff {agreement.hausdorff:.3e} "
                     f"vs {agreement.threshold:.3e}")
        if not agreement.agree:
            return state, StageReport(n, config.case, config.width, 0, {"uniqueness": agreement.to_json()},
                                      None, None, False, "previous stage fails the uniqueness proxy", notes)

    current, halvings, reason = config, 0, ""
    outcome = None
    while True:
        try:
            curves, mesh, origins, area = _attempt(state, current, tol, max_iters)
            checks, radius, decompositions = verify_stage(state, mesh, origins, current.expected, n, ladder,
                                                          spectrum=False)
            if _graph_checks_pass(checks):
                outcome = (curves, mesh, origins, area, checks, radius, decompositions)
                break
            reason = ", ".join(k for k in ("topology", "nested_balls", "normal_graph") if not checks[k]["passed"]) + " failed"
        except (BoundaryError, ConstructionError, DegenerateMeshError) as exc:
            reason = str(exc)
        if not current.bridges or halvings >= max_halvings:
            break
        narrower = current.with_width(0.5 * current.width)
        if narrower.min_width <= 2.0 * state.eps:
            reason += f"; bounds unachievable at minimum width {current.width:.4g}"
            break
        halvings += 1
        current = narrower
        notes.append(f"width halved to {current.width:.4g}: {reason}")
        log.warning("stage %d: width halved to %.4g (%s)", n, current.width, reason)

    if outcome is None:
        log.warning("stage %d failed: %s", n, reason)
        return state, StageReport(n, config.case, current.width, halvings, {}, None, None, False, reason, notes)

    curves, mesh, origins, area, checks, radius, decompositions = outcome
    try:
        lam = smallest_eigenvalue(assemble_jacobi(mesh)).lambda1
        checks["stable"] = {"passed": bool(lam > 0.0), "lambda1": lam}
    except (NumericalFailure, DomainError) as exc:
        checks["stable"] = {"passed": False, "error": str(exc)}
    passed = all(c["passed"] for c in checks.values())
    new_state = replace(state, stage=n, mesh=mesh, curves=curves, radii=state.radii + (radius,),
                        references=state.references + (mesh,),
                        origins=origins + (np.arange(mesh.n_vertices),),
                        decompositions=state.decompositions + (decompositions,),
                        limit_disks=_limit_disks(curves))
    log.info("stage %d (%s) done: width %.4g, r_n %.3g, passed=%s", n, config.case, current.width, radius, passed)
    return new_state, StageReport(n, config.case, current.width, halvings, checks, radius, area, passed,
                                  "" if passed else "stability check failed", notes)


# ===========================================
# REGION: Limit sets
# ===========================================
@dataclass
class LimitSetReport:
    pairs: List[dict]
    passed: bool
    min_separation: float | None
    reason: str = ""

    def to_json(self) -> dict:
        return {"pairs": self.pairs, "passed": self.passed, "min_separation": self.min_separation,
                "reason": self.reason}


def limit_set_disjointness(state: ConstructionState) -> LimitSetReport:
    """Pairwise Euclidean separation of the ideal disks bounding the ends; one end passes vacuously."""
    disks = state.limit_disks
    if len(disks) < 2:
        return LimitSetReport([], True, None, "single end")
    pairs = []
    for i in range(len(disks)):
        for j in range(i + 1, len(disks)):
            sep = float(disks[i].distance(disks[j]))
            pairs.append({"ends": [i, j], "separation": sep, "disjoint": bool(sep > 0.0)})
    passed = all(p["disjoint"] for p in pairs)
    return LimitSetReport(pairs, passed, min(p["separation"] for p in pairs),
                          "" if passed else "limit-set disks overlap")


# ===========================================
# REGION: Pipeline
# ===========================================
def run_construction(spec: SurfaceSpec, stages: int = STAGES, eps: float = EPS, resolution: int = RESOLUTION,
                     out_dir: str | None = None, **kwargs) -> Tuple[ConstructionState, List[StageReport], LimitSetReport]:
    """
    Runs stages 1..``stages`` of the construction for ``spec`` and stops at the first
    failed stage. With ``out_dir`` every solved stage mesh and the manifest are written.

    Example Usage:
    --------------
    >>> state, reports, limits = run_construction(SurfaceSpec(genus=1, ends=2), stages=3)
    >>> [r.passed for r in reports]
    [True, True, True]
    """
    check_budget(stages)
    plan = build_simple_exhaustion(spec, stages)
    state = initial_state(plan, eps, resolution)
    reports = [stage_one_report(state)]
    for step in plan.steps:
        if not reports[-1].passed:
            break
        try:
            config = plan_stage(state, step)
        except (ConstructionError, BoundaryError) as exc:
            reports.append(StageReport(state.stage + 1, "unplanned", 0.0, 0, {}, None, None, False, str(exc)))
            break
        state, report = run_stage(state, config, **kwargs)
        reports.append(report)
    limits = limit_set_disjointness(state)
    if out_dir is not None:
        ensure_dir(out_dir)
        for i, mesh in enumerate(state.references, start=1):
            mesh.save(os.path.join(out_dir, f"stage_{i}.mesh"))
        write_manifest(os.path.join(out_dir, "manifest.json"), [r.to_json() for r in reports])
        write_json(os.path.join(out_dir, "limit_sets.json"), limits.to_json())
    return state, reports, limits
