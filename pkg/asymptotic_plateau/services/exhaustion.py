import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from asymptotic_plateau.exceptions import DomainError

log = logging.getLogger(__name__)

ANNULUS = "annulus"
PANTS = "pants"
HANDLE = "handle"

# (Δχ, Δgenus, Δboundary) of gluing one piece along a single circle
PIECE_EFFECT: Dict[str, Tuple[int, int, int]] = {
    ANNULUS: (0, 0, 0),
    PANTS: (-1, 0, 1),
    HANDLE: (-2, 1, 0),
}
DISK = (1, 0, 1)


# ===========================================
# REGION: Surface specs
# ===========================================
@dataclass(frozen=True)
class SurfaceSpec:
    """
    Topological type of an open orientable surface.

    ``genus`` or ``ends`` set to None stands for infinitely many. Nonannular pieces are
    consumed in the order ``prefix`` and then ``schedule`` repeated cyclically; both
    default to what the finite counts require.
    """
    genus: int | None = 0
    ends: int | None = 1
    schedule: Tuple[str, ...] = ()
    prefix: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.genus is not None and self.genus < 0:
            raise DomainError(f"Genus must be nonnegative, got {self.genus}.")
        if self.ends is not None and self.ends < 1:
            raise DomainError(f"A noncompact surface has at least one end, got {self.ends}.")
        for kind in tuple(self.schedule) + tuple(self.prefix):
            if kind not in (PANTS, HANDLE):
                raise DomainError(f"Invalid piece: {kind}. Choose from {[PANTS, HANDLE]}")
        object.__setattr__(self, "schedule", tuple(self.schedule) or self._default_schedule())
        object.__setattr__(self, "prefix", tuple(self.prefix) or self._default_prefix())
        self._check_counts()

    @property
    def is_finite(self) -> bool:
        return self.genus is not None and self.ends is not None

    @property
    def stabilization_stage(self) -> int | None:
        """Stage g + k from which M_n has the final topology; None for infinite topology."""
        return self.genus + self.ends if self.is_finite else None

    def _default_schedule(self) -> Tuple[str, ...]:
        if self.is_finite:
            return ()
        if self.genus is None and self.ends is None:
            return (PANTS, HANDLE)
        return (HANDLE,) if self.genus is None else (PANTS,)

    def _default_prefix(self) -> Tuple[str, ...]:
        pants = (PANTS,) * (self.ends - 1) if self.ends is not None else ()
        handles = (HANDLE,) * self.genus if self.genus is not None else ()
        return pants + handles

    def _check_counts(self) -> None:
        if self.ends is not None and self.prefix.count(PANTS) != self.ends - 1:
            raise DomainError(f"{self.ends} ends need {self.ends - 1} pants, prefix has {self.prefix.count(PANTS)}.")
        if self.genus is not None and self.prefix.count(HANDLE) != self.genus:
            raise DomainError(f"Genus {self.genus} needs {self.genus} handles, prefix has {self.prefix.count(HANDLE)}.")
        if self.is_finite:
            if self.schedule:
                raise DomainError("A finite spec takes no generator schedule.")
            return
        if not self.schedule:
            raise DomainError("Infinite topology needs a nonempty generator schedule.")
        if self.genus is not None and HANDLE in self.schedule:
            raise DomainError("Finite genus leaves no room for handles in the schedule.")
        if self.ends is not None and PANTS in self.schedule:
            raise DomainError("Finitely many ends leave no room for pants in the schedule.")

    def pieces(self):
        """Nonannular piece consumed at each step; None once the finite topology is reached."""
        if self.is_finite:
            return itertools.chain(self.prefix, itertools.repeat(None))
        return itertools.chain(self.prefix, itertools.cycle(self.schedule))

    def to_json(self) -> dict:
        return {"genus": self.genus, "ends": self.ends, "schedule": list(self.schedule), "prefix": list(self.prefix)}

    @classmethod
    def from_json(cls, payload: dict) -> "SurfaceSpec":
        return cls(payload.get("genus", 0), payload.get("ends", 1),
                   tuple(payload.get("schedule", ())), tuple(payload.get("prefix", ())))


# ===========================================
# REGION: Plans
# ===========================================
@dataclass(frozen=True)
class Component:
    """One component of M_{n+1} ∖ Int(M_n), glued to boundary circle ``attached_to`` of M_n."""
    kind: str
    attached_to: int | None

    def __post_init__(self):
        if self.kind not in PIECE_EFFECT:
            raise DomainError(f"Invalid component kind: {self.kind}. Choose from {list(PIECE_EFFECT.keys())}")

    @property
    def new_circles(self) -> int:
        return 2 if self.kind == PANTS else 1

    @property
    def is_annular(self) -> bool:
        return self.kind == ANNULUS


@dataclass(frozen=True)
class ExhaustionStep:
    components: Tuple[Component, ...]

    @property
    def nonannular(self) -> List[Component]:
        return [c for c in self.components if not c.is_annular]

    def effect(self) -> Tuple[int, int, int]:
        dchi, dg, db = 0, 0, 0
        for c in self.components:
            a, b, d = PIECE_EFFECT[c.kind]
            dchi, dg, db = dchi + a, dg + b, db + d
        return dchi, dg, db

    def to_json(self) -> dict:
        return {"components": [{"kind": c.kind, "attached_to": c.attached_to} for c in self.components]}

    @classmethod
    def from_json(cls, payload: dict) -> "ExhaustionStep":
        return cls(tuple(Component(c["kind"], c.get("attached_to")) for c in payload["components"]))


@dataclass(frozen=True)
class ExhaustionPlan:
    """Steps M_n → M_{n+1}; ``initial`` is (χ, genus, boundary) of M_1."""
    steps: Tuple[ExhaustionStep, ...]
    spec: SurfaceSpec | None = None
    initial: Tuple[int, int, int] = DISK

    @property
    def stages(self) -> List[Tuple[int, int, int]]:
        chi, g, b = self.initial
        out = [(chi, g, b)]
        for step in self.steps:
            dchi, dg, db = step.effect()
            chi, g, b = chi + dchi, g + dg, b + db
            out.append((chi, g, b))
        return out

    def __len__(self) -> int:
        return len(self.steps) + 1

    def pieces(self) -> List[str]:
        """Nonannular kind entering at each stage ≥ 2 ("annuli" when there is none)."""
        out = []
        for step in self.steps:
            kinds = [c.kind for c in step.nonannular]
            out.append("+".join(kinds) if kinds else "annuli")
        return out

    def last_nonannular_stage(self) -> int:
        """Largest stage n with a nonannular piece in M_n ∖ Int(M_{n-1}); 1 when there is none."""
        stage = 1
        for n, step in enumerate(self.steps, start=2):
            if step.nonannular:
                stage = n
        return stage

    def to_json(self) -> dict:
        return {"spec": self.spec.to_json() if self.spec else None,
                "initial": list(self.initial),
                "steps": [s.to_json() for s in self.steps],
                "stages": [{"stage": n, "chi": chi, "genus": g, "boundary": b}
                           for n, (chi, g, b) in enumerate(self.stages, start=1)]}

    @classmethod
    def from_json(cls, payload: dict) -> "ExhaustionPlan":
        spec = SurfaceSpec.from_json(payload["spec"]) if payload.get("spec") else None
        return cls(tuple(ExhaustionStep.from_json(s) for s in payload["steps"]), spec,
                   tuple(payload.get("initial", DISK)))


def build_simple_exhaustion(spec: SurfaceSpec, stages: int) -> ExhaustionPlan:
    """
    Simple exhaustion M_1 ⊂ ... ⊂ M_stages of the surface described by ``spec``.

    M_1 is a disk. Every step glues one component to each boundary circle of M_n; the
    nonannular piece of the step, if any, goes on circle 0 and the others are annuli.
    New circles are numbered in the order of the components they come from.

    Parameters:
    -----------
    spec : SurfaceSpec
        Target topology; finite specs stabilize at stage g + k.
    stages : int
        Number of stages n ≥ 1.

    Returns:
    --------
    ExhaustionPlan
        Plan with stages - 1 steps.

    Example Usage:
    --------------
    >>> plan = build_simple_exhaustion(SurfaceSpec(genus=1, ends=1), 4)
    >>> [chi for chi, _, _ in plan.stages]
    [1, -1, -1, -1]
    """
    if stages < 1:
        raise DomainError(f"An exhaustion has at least one stage, got {stages}.")
    pieces = spec.pieces()
    steps = []
    boundary = DISK[2]
    for _ in range(stages - 1):
        piece = next(pieces)
        components = tuple(Component(piece if (i == 0 and piece) else ANNULUS, i) for i in range(boundary))
        step = ExhaustionStep(components)
        boundary += step.effect()[2]
        steps.append(step)
    plan = ExhaustionPlan(tuple(steps), spec)
    log.debug("exhaustion for %s: %s", spec.to_json(), plan.pieces())
    return plan


# ===========================================
# REGION: Validation
# ===========================================
@dataclass
class PlanReport:
    strict: bool
    items: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(item["passed"] for item in self.items)

    def failed_items(self) -> List[int]:
        return sorted({item["item"] for item in self.items if not item["passed"]})

    def add(self, item: int, stage: int, passed: bool, detail: str = "") -> None:
        self.items.append({"item": item, "stage": stage, "passed": bool(passed), "detail": detail})

    def to_json(self) -> dict:
        return {"strict": self.strict, "passed": self.passed, "failed_items": self.failed_items(), "items": self.items}


def _attachment_detail(step: ExhaustionStep, boundary: int) -> str:
    used = [c.attached_to for c in step.components]
    if any(a is None for a in used):
        return "component without a boundary circle in the previous stage"
    if any(not 0 <= a < boundary for a in used):
        return f"attachment outside circles 0..{boundary - 1}"
    if len(set(used)) != len(used):
        return "two components share a boundary circle"
    if set(used) != set(range(boundary)):
        return f"circles {sorted(set(range(boundary)) - set(used))} are not covered"
    return ""


def validate_plan(plan: ExhaustionPlan, strict: bool = True) -> PlanReport:
    """
    Itemized check of the four simple-exhaustion properties.

    Item 1: M_1 is a disk. Item 2: every component has exactly one boundary circle in
    ∂M_n, all circles of ∂M_n are used, and every component reaches ∂M_{n+1}. Item 3:
    exactly one nonannular piece per step for infinite topology, or up to stage g + k for
    finite topology; ``strict=False`` only asks every piece to be an annulus, pants or
    annulus with a handle. Item 4 (finite specs): all steps after stage g + k are
    annular and M_n has genus g and k boundary circles from stage g + k on.

    Failures are reported, never raised.
    """
    report = PlanReport(strict)
    report.add(1, 1, tuple(plan.initial) == DISK, "" if tuple(plan.initial) == DISK else f"M_1 is {plan.initial}")

    spec = plan.spec
    limit = spec.stabilization_stage if spec is not None else None
    stages = plan.stages
    for n, step in enumerate(plan.steps, start=1):
        _, _, boundary = stages[n - 1]
        detail = _attachment_detail(step, boundary)
        report.add(2, n + 1, detail == "", detail)

        count = len(step.nonannular)
        if strict:
            needs_piece = spec is not None and (limit is None or n + 1 <= limit)
            ok = count == 1 if needs_piece else count <= 1
            report.add(3, n + 1, ok, "" if ok else f"{count} nonannular components")
        else:
            report.add(3, n + 1, all(c.kind in PIECE_EFFECT for c in step.components))

        if limit is not None and n + 1 > limit:
            report.add(4, n + 1, count == 0, "" if count == 0 else "nonannular piece after stabilization")

    if limit is not None:
        for n, (_, g, b) in enumerate(stages, start=1):
            if n >= limit:
                ok = (g, b) == (spec.genus, spec.ends)
                report.add(4, n, ok, "" if ok else f"(genus, boundary) = ({g}, {b})")
    log.debug("plan validation strict=%s: failed items %s", strict, report.failed_items())
    return report


def euler_of_step(plan: ExhaustionPlan, n: int) -> Tuple[int, int, int]:
    """(χ, genus, boundary) of M_n, 1-based, with χ = 2 - 2g - b."""
    if not 1 <= n <= len(plan):
        raise IndexError(f"Stage {n} outside 1..{len(plan)}.")
    return plan.stages[n - 1]


def random_finite_specs(rng, count: int, max_genus: int = 10, max_ends: int = 10) -> List[SurfaceSpec]:
    genus = rng.integers(0, max_genus + 1, size=count)
    ends = rng.integers(1, max_ends + 1, size=count)
    return [SurfaceSpec(int(g), int(k)) for g, k in zip(genus, ends)]


def sweep_plans(specs: Sequence[SurfaceSpec], extra_stages: int = 2) -> List[dict]:
    """Builds and validates a plan per spec, g + k + extra_stages stages each."""
    rows = []
    for spec in specs:
        plan = build_simple_exhaustion(spec, spec.stabilization_stage + extra_stages)
        report = validate_plan(plan)
        rows.append({"genus": spec.genus, "ends": spec.ends, "passed": report.passed,
                     "stabilized_at": plan.last_nonannular_stage(), "expected": spec.stabilization_stage})
    return rows
