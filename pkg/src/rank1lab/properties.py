"""Finite checkable properties: index-set recursion, double-ergodicity witness
search, level return bounds, and ratio-set probing.

Everything here is a pure function over an immutable built tower.  Scans over
shift ranges may be partitioned across workers and merged; results are
deterministic either way.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

from . import engine
from .engine import CocycleValue, LevelSet, Tower
from .errors import DepthError, SpecError
from .presets import HK_FAMILY

WITNESS_FOUND = "witness-found"
NONE_UP_TO_N = "none-up-to-n"
INCONCLUSIVE = "inconclusive"


def paper_pair(tower: Tower) -> tuple[LevelSet, LevelSet]:
    """Default witness pair: B the top level of C_1 and A the level below it."""
    h1 = tower.spec.height(1)
    if h1 < 2:
        raise SpecError("column 1 too short for the default witness pair")
    return LevelSet(1, (h1 - 2,)), LevelSet(1, (h1 - 1,))


@dataclass(frozen=True)
class IndexSet:
    """Cyclic-shift hitting times: i in members iff R_n^i(source) meets target."""

    stage: int
    source: LevelSet
    target: LevelSet
    members: frozenset[int]

    @property
    def sorted_members(self) -> tuple[int, ...]:
        return tuple(sorted(self.members))


def index_set(tower: Tower, a: LevelSet, target: LevelSet, n: int) -> IndexSet:
    """I_n(a, target) = {i in [0, h_n): measure(R_n^i a ∩ target) > 0}.

    Levels have positive measure, so membership reduces to the difference set
    of the refined index sets mod h_n.
    """
    h = tower.spec.height(n)
    a_n = engine.refine(tower, a, n)
    t_n = engine.refine(tower, target, n)
    members = {(t - s) % h for s in a_n.indices for t in t_n.indices}
    return IndexSet(n, a_n, t_n, frozenset(members))


@dataclass(frozen=True)
class InclusionReport:
    """Whether I_{n+1} sits inside the four translates of I_n."""

    n: int
    offsets: tuple[int, ...]
    holds: bool
    violations: tuple[int, ...]
    lower: tuple[int, ...]
    upper: tuple[int, ...]


def recursion_inclusion_check(tower: Tower, a: LevelSet, target: LevelSet, n: int) -> InclusionReport:
    """Check I_{n+1}(a,L) ⊆ I_n(a,L) ∪ (+h_n) ∪ (+2h_n+1) ∪ (+3h_n+1) mod h_{n+1}.

    Only meaningful for the two-cut tower family with 2h+1 spacers; other
    specs are rejected.
    """
    if tower.spec.family != HK_FAMILY:
        raise SpecError("index-set recursion check requires an hk_plus1-family spec")
    h_n = tower.spec.height(n)
    h_next = tower.spec.height(n + 1)
    lower = index_set(tower, a, target, n)
    upper = index_set(tower, a, target, n + 1)
    offsets = (0, h_n, 2 * h_n + 1, 3 * h_n + 1)
    allowed = {(i + off) % h_next for i in lower.members for off in offsets}
    violations = tuple(sorted(upper.members - allowed))
    return InclusionReport(
        n, offsets, not violations, violations, lower.sorted_members, upper.sorted_members
    )


@dataclass(frozen=True)
class BaseStageReport:
    """Index sets at stage 1 for the default pair, including the nonempty
    source-target set alongside the empty joint set."""

    i1_aa: tuple[int, ...]
    i1_ab: tuple[int, ...]
    i1_joint: tuple[int, ...]
    ab_nonempty_joint_empty: bool


def base_stage_report(tower: Tower) -> BaseStageReport:
    a, b = paper_pair(tower)
    aa = index_set(tower, a, a, 1)
    ab = index_set(tower, a, b, 1)
    joint = tuple(sorted(aa.members & ab.members))
    return BaseStageReport(
        aa.sorted_members,
        ab.sorted_members,
        joint,
        bool(ab.members) and not joint,
    )


@dataclass(frozen=True)
class WdeReport:
    """Outcome of a double-ergodicity witness search over 1 <= |i| <= N.

    Witness tuples are (i, measure(S^i A ∩ A), measure(S^i A ∩ B)).  For
    negative i only positivity is reflected (measure(S^-i A ∩ L) > 0 iff
    measure(A ∩ S^i L) > 0), so the recorded measures are the reflected ones.
    """

    searched_range: int
    witnesses: tuple[tuple[int, Fraction, Fraction], ...]
    verdict: str
    mode: str
    unresolved_encountered: bool


def wde_witness_search(
    tower: Tower,
    a: LevelSet,
    b: LevelSet,
    n_max: int,
    mode: Literal["stabilized", "truncated"] = "stabilized",
    max_stage: int | None = None,
) -> WdeReport:
    """Search 1 <= |i| <= n_max for i with both S^i a ∩ a and S^i a ∩ b of
    positive measure."""
    if n_max < 1:
        raise SpecError(f"search range must be >= 1, got {n_max}")
    if mode not in ("stabilized", "truncated"):
        raise SpecError(f"unknown wde mode {mode!r}")
    witnesses: list[tuple[int, Fraction, Fraction]] = []
    any_unresolved = False

    def forward(src: LevelSet, i: int) -> tuple[LevelSet, bool]:
        if mode == "stabilized":
            return engine.stabilized_shift(tower, src, i), False
        res = engine.shift(tower, src, i, max_stage)
        return res.image, res.unresolved_measure > 0

    for i in range(1, n_max + 1):
        image_a, ua = forward(a, i)
        any_unresolved |= ua
        maa = engine.measure(tower, engine.intersect(tower, image_a, a))
        mab = engine.measure(tower, engine.intersect(tower, image_a, b))
        if maa > 0 and mab > 0:
            witnesses.append((i, maa, mab))
        # Negative shift by reflection: measure(S^-i a ∩ L) > 0 iff
        # measure(a ∩ S^i L) > 0.  Positivity is cocycle-independent.
        image_b, ub = forward(b, i)
        any_unresolved |= ub
        naa = maa  # measure(a ∩ S^i a) is the same intersection
        nab = engine.measure(tower, engine.intersect(tower, a, image_b))
        if naa > 0 and nab > 0:
            witnesses.append((-i, naa, nab))

    if witnesses:
        verdict = WITNESS_FOUND
    elif any_unresolved:
        verdict = INCONCLUSIVE
    else:
        verdict = NONE_UP_TO_N
    return WdeReport(n_max, tuple(witnesses), verdict, mode, any_unresolved)


@dataclass(frozen=True)
class ReturnBoundReport:
    """Exact return ratios of T^{h_n} on the levels of C_n, resolved at stage n+1.

    image_min_ratio minimizes measure(T^{h_n} L ∩ L) / measure(L) over levels
    L; source_min_ratio minimizes the mass of L that returns to L, i.e.
    measure(L ∩ T^{-h_n} L) / measure(L), both computed on the part of the
    orbit resolvable at stage n+1 (exact for towers whose spacers absorb the
    top-of-column overflow).
    """

    stage: int
    image_min_ratio: Fraction
    image_min_level: int
    image_max_ratio: Fraction
    source_min_ratio: Fraction
    unresolved_any: bool

    @property
    def min_ratio(self) -> Fraction:
        return self.image_min_ratio

    @property
    def achieved_level(self) -> int:
        return self.image_min_level


def level_return_ratio(tower: Tower, n: int) -> ReturnBoundReport:
    """Minimum over levels L of C_n of the exact return ratio of T^{h_n}."""
    if n + 1 > tower.depth:
        raise DepthError(f"return bound at stage {n} needs built depth >= {n + 1}")
    h_n = tower.spec.height(n)
    child = tower.column(n + 1)
    h_next = child.height
    nums = child.measure_numerators
    offs = tower.child_offsets(n)
    col = tower.column(n)

    best: Fraction | None = None
    best_level = 0
    worst: Fraction | None = None
    src_best: Fraction | None = None
    unresolved_any = False
    for j in range(col.height):
        children = [off + j for off in offs]
        member = set(children)
        # child numerators sum to the parent's measure in child units
        total = sum(nums[x] for x in children)
        hit = 0
        src = 0
        for x in children:
            y = x + h_n
            if y > h_next - 1:
                unresolved_any = True
                continue
            if y in member:
                hit += nums[y]
                src += nums[x]
        ratio = Fraction(hit, total)
        src_ratio = Fraction(src, total)
        if best is None or ratio < best:
            best, best_level = ratio, j
        if worst is None or ratio > worst:
            worst = ratio
        if src_best is None or src_ratio < src_best:
            src_best = src_ratio
    assert best is not None and worst is not None and src_best is not None
    return ReturnBoundReport(n, best, best_level, worst, src_best, unresolved_any)


@dataclass(frozen=True)
class RatioProbeReport:
    """Cocycle values observed on recurrent sublevels, with hits near a target.

    Every hit (n, sublevel, value) satisfies |value - t| < eps, the sublevel
    has positive measure, and the sublevel lies in A ∩ T^{-n} A.
    """

    target: Fraction
    epsilon: Fraction
    hits: tuple[tuple[int, LevelSet, CocycleValue], ...]
    observed_values: tuple[CocycleValue, ...]
    inconclusive: bool


def ratio_set_probe(
    tower: Tower,
    a: LevelSet,
    t: Fraction,
    eps: Fraction,
    n_max: int,
    max_stage: int | None = None,
) -> RatioProbeReport:
    """Scan n in [1, n_max] for positive-measure sublevels of a ∩ T^{-n} a on
    which the cocycle of T^n lies within eps of t."""
    t, eps = Fraction(t), Fraction(eps)
    if t < 0:
        raise SpecError("ratio-set target must be >= 0")
    if eps <= 0:
        raise SpecError("ratio-set epsilon must be positive")
    hits: list[tuple[int, LevelSet, CocycleValue]] = []
    observed: dict[Fraction, CocycleValue] = {}
    any_unresolved = False
    for n in range(1, n_max + 1):
        part = engine.rn_derivative(tower, a, n, max_stage)
        any_unresolved |= part.unresolved_measure > 0
        a_ref = set(engine.refine(tower, a, part.working_stage).indices)
        for sub, cv in part.parts:
            recurrent = tuple(j for j in sub.indices if j + n in a_ref)
            if not recurrent:
                continue
            observed.setdefault(cv.value, cv)
            if abs(cv.value - t) < eps:
                hits.append((n, LevelSet(part.working_stage, recurrent), cv))
    observed_values = tuple(observed[v] for v in sorted(observed))
    return RatioProbeReport(t, eps, tuple(hits), observed_values, any_unresolved)
