"""Exact cutting-and-stacking engine for rank-one transformations.

A construction is given stage by stage: every level of the current column is
cut into ``num_cuts`` pieces with prescribed measure fractions, then
``spacer_counts[i]`` fresh spacer levels are placed above the i-th subcolumn,
and the subcolumns are stacked left to right (top of subcolumn i maps to the
bottom of subcolumn i+1).  Columns record exact rational level measures and
the provenance of every level.  That is enough to evaluate the level-set
algebra, the dynamics T^i at finite depth, the cyclic column rotation R_n,
and Radon-Nikodym cocycles, all without ever representing individual points
of the underlying space.

Spacer levels above subcolumn i are given the measure of that subcolumn's
top piece, so the climb through a spacer block is measure-preserving and
every nontrivial cocycle value arises at a subcolumn junction.

No floating point is used anywhere in this module; all measures are
``fractions.Fraction``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple, Optional, Sequence, Union

from .errors import DepthError, SpecError, StabilizationError, UnresolvedMassError

Rational = Union[Fraction, int, str]


def _as_fraction(x: Rational) -> Fraction:
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise SpecError(f"not a rational: {x!r}") from exc


class FromParent(NamedTuple):
    """Level obtained by cutting ``parent_level`` of the previous column."""

    parent_level: int
    cut_slot: int


class Spacer(NamedTuple):
    """Fresh level inserted at ``birth_stage``; ``slot`` counts that stage's spacers."""

    birth_stage: int
    slot: int


LevelProvenance = Union[FromParent, Spacer]


@dataclass(frozen=True)
class StageRule:
    """One cutting step: cut count, measure fraction of each piece, spacers per subcolumn."""

    num_cuts: int
    cut_fractions: tuple[Fraction, ...]
    spacer_counts: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "cut_fractions", tuple(_as_fraction(f) for f in self.cut_fractions))
        object.__setattr__(self, "spacer_counts", tuple(int(s) for s in self.spacer_counts))
        if self.num_cuts < 2:
            raise SpecError(f"num_cuts must be >= 2, got {self.num_cuts}")
        if len(self.cut_fractions) != self.num_cuts:
            raise SpecError("cut_fractions length must equal num_cuts")
        if len(self.spacer_counts) != self.num_cuts:
            raise SpecError("spacer_counts length must equal num_cuts")
        if any(f <= 0 for f in self.cut_fractions):
            raise SpecError("every cut fraction must be positive")
        if sum(self.cut_fractions) != 1:
            raise SpecError("cut fractions must sum to 1 exactly")
        if any(s < 0 for s in self.spacer_counts):
            raise SpecError("spacer counts must be nonnegative")

    @property
    def total_spacers(self) -> int:
        return sum(self.spacer_counts)


class TransformationSpec:
    """Stage rules of a rank-one construction plus the base level measure.

    ``rule_fn(stage, height)`` produces the rule for a stage given the height
    of the column it subdivides, so spacer counts may depend on the current
    height.  Returning ``None`` means the rule is undefined at that stage.
    Rules and heights are memoized; a spec instance should be driven from a
    single execution context while columns are being built.
    """

    def __init__(
        self,
        rule_fn: Callable[[int, int], Optional[StageRule]],
        *,
        base_measure: Rational = 1,
        descriptor: dict | None = None,
        ratio_bases: Sequence[Rational] | None = None,
        family: str | None = None,
    ):
        self.base_measure = _as_fraction(base_measure)
        if self.base_measure <= 0:
            raise SpecError("base measure must be positive")
        self._rule_fn = rule_fn
        self.descriptor = descriptor if descriptor is not None else {}
        # Declared multiplicative bases for cocycle factorization. None means
        # no factorization is declared; an empty tuple declares the
        # measure-preserving case (all cocycle values are 1).
        self.ratio_bases: tuple[Fraction, ...] | None
        if ratio_bases is None:
            self.ratio_bases = None
        else:
            self.ratio_bases = tuple(_as_fraction(b) for b in ratio_bases)
        self.family = family
        self._rules: list[StageRule] = []
        self._heights: list[int] = [1]

    def rule_at(self, k: int) -> StageRule:
        """Rule applied to column k. Raises SpecError if undefined."""
        if k < 0:
            raise SpecError(f"stage index must be >= 0, got {k}")
        while len(self._rules) <= k:
            j = len(self._rules)
            rule = self._rule_fn(j, self._heights[j])
            if rule is None:
                raise SpecError(f"stage rule undefined at stage {j}")
            self._rules.append(rule)
            self._heights.append(rule.num_cuts * self._heights[j] + rule.total_spacers)
        return self._rules[k]

    def height(self, k: int) -> int:
        """Height of column k (pure integer recursion, no column build)."""
        if k < 0:
            raise SpecError(f"stage index must be >= 0, got {k}")
        if k > 0:
            self.rule_at(k - 1)
        return self._heights[k]

    def heights(self, depth: int) -> list[int]:
        """Heights [h_0, ..., h_depth]."""
        self.height(depth)
        return self._heights[: depth + 1]


def explicit_spec(
    rules: Sequence[StageRule],
    *,
    tail: int | None = None,
    base_measure: Rational = 1,
) -> TransformationSpec:
    """Spec from a finite rule list; ``tail`` indexes the rule repeated forever."""
    rules = list(rules)
    if tail is not None and not (0 <= tail < len(rules)):
        raise SpecError(f"tail index {tail} out of range for {len(rules)} rules")

    def rule_fn(k: int, _h: int) -> Optional[StageRule]:
        if k < len(rules):
            return rules[k]
        if tail is not None:
            return rules[tail]
        return None

    base = _as_fraction(base_measure)
    descriptor = {
        "base_measure": base,
        "rules": [
            {
                "cuts": r.num_cuts,
                "fractions": list(r.cut_fractions),
                "spacers": list(r.spacer_counts),
            }
            for r in rules
        ],
    }
    if tail is not None:
        descriptor["tail"] = tail
    # A spec whose every rule cuts uniformly is measure-preserving.
    uniform = all(len(set(r.cut_fractions)) == 1 for r in rules)
    return TransformationSpec(
        rule_fn,
        base_measure=base,
        descriptor=descriptor,
        ratio_bases=() if uniform else None,
    )


class Column:
    """Stage-k tower: exact level measures and the provenance of each level.

    Level measures are stored as integer numerators against a stage-wide
    unit: ``level_measure(j) == measure_unit * measure_numerators[j]``.
    Instances are immutable once built.
    """

    __slots__ = ("stage", "height", "measure_numerators", "measure_unit", "provenance", "_measures")

    def __init__(
        self,
        stage: int,
        numerators: list[int],
        unit: Fraction,
        provenance: list[LevelProvenance],
    ):
        self.stage = stage
        self.height = len(numerators)
        self.measure_numerators = numerators
        self.measure_unit = unit
        self.provenance = provenance
        self._measures: list[Fraction] | None = None

    def level_measure(self, j: int) -> Fraction:
        return self.measure_unit * self.measure_numerators[j]

    @property
    def level_measures(self) -> list[Fraction]:
        if self._measures is None:
            unit = self.measure_unit
            self._measures = [unit * n for n in self.measure_numerators]
        return self._measures

    @property
    def width(self) -> Fraction:
        """Largest level measure."""
        return self.measure_unit * max(self.measure_numerators)

    @property
    def total_measure(self) -> Fraction:
        return self.measure_unit * sum(self.measure_numerators)

    def is_spacer(self, j: int) -> bool:
        return isinstance(self.provenance[j], Spacer)

    @property
    def spacer_count(self) -> int:
        return sum(1 for p in self.provenance if isinstance(p, Spacer))


class Tower:
    """Columns C_0..C_depth of a construction, built lazily and memoized.

    Once built, columns are immutable; all query operations on a built tower
    are pure reads and safe to use concurrently.
    """

    def __init__(self, spec: TransformationSpec, depth: int):
        if depth < 0:
            raise SpecError(f"depth must be >= 0, got {depth}")
        self.spec = spec
        self.depth = depth
        spec.heights(depth)  # fail early if a rule is undefined
        base = spec.base_measure
        self._columns: list[Column] = [
            Column(0, [base.numerator], Fraction(1, base.denominator), [Spacer(0, 0)])
        ]
        self._offsets: dict[int, list[int]] = {}

    @property
    def heights(self) -> list[int]:
        return self.spec.heights(self.depth)

    def column(self, k: int) -> Column:
        if k < 0:
            raise SpecError(f"stage index must be >= 0, got {k}")
        if k > self.depth:
            raise DepthError(f"stage {k} beyond built depth {self.depth}")
        while len(self._columns) <= k:
            self._columns.append(self._build_next())
        return self._columns[k]

    def columns(self) -> list[Column]:
        return [self.column(k) for k in range(self.depth + 1)]

    def child_offsets(self, k: int) -> list[int]:
        """Index in C_{k+1} of the bottom of each subcolumn of C_k."""
        if k not in self._offsets:
            rule = self.spec.rule_at(k)
            h = self.spec.height(k)
            offs = [0]
            for c in range(rule.num_cuts - 1):
                offs.append(offs[-1] + h + rule.spacer_counts[c])
            self._offsets[k] = offs
        return self._offsets[k]

    def _build_next(self) -> Column:
        parent = self._columns[-1]
        k = parent.stage
        rule = self.spec.rule_at(k)
        lcm = math.lcm(*(f.denominator for f in rule.cut_fractions))
        mults = [f.numerator * (lcm // f.denominator) for f in rule.cut_fractions]
        pnums = parent.measure_numerators
        top = parent.height - 1
        nums: list[int] = []
        prov: list[LevelProvenance] = []
        spacer_slot = 0
        for c in range(rule.num_cuts):
            m = mults[c]
            nums.extend(n * m for n in pnums)
            prov.extend(FromParent(j, c) for j in range(parent.height))
            spacer_num = pnums[top] * m
            for _ in range(rule.spacer_counts[c]):
                nums.append(spacer_num)
                prov.append(Spacer(k + 1, spacer_slot))
                spacer_slot += 1
        col = Column(k + 1, nums, parent.measure_unit / lcm, prov)
        assert col.height == self.spec.height(k + 1)
        return col


def build_tower(spec: TransformationSpec, depth: int) -> Tower:
    """Build (lazily) columns C_0..C_depth for the given spec."""
    return Tower(spec, depth)


@dataclass(frozen=True)
class LevelSet:
    """Union of levels of one column: a stage and a sorted tuple of level indices."""

    stage: int
    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise SpecError("level indices must be strictly increasing")
        if self.indices and self.indices[0] < 0:
            raise SpecError("level indices must be nonnegative")

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def is_empty(self) -> bool:
        return not self.indices


def _check_bounds(tower: Tower, a: LevelSet) -> None:
    if a.stage > tower.depth:
        raise DepthError(f"level set at stage {a.stage} beyond built depth {tower.depth}")
    h = tower.spec.height(a.stage)
    if a.indices and a.indices[-1] >= h:
        raise SpecError(f"level index {a.indices[-1]} out of range at stage {a.stage} (h={h})")


def refine_once(tower: Tower, a: LevelSet) -> LevelSet:
    """Replace each level by its pieces in the next column (spacers excluded)."""
    k = a.stage
    tower.column(k + 1)  # depth check
    rule = tower.spec.rule_at(k)
    offs = tower.child_offsets(k)
    # Subcolumn blocks are disjoint ascending index ranges, so emitting
    # per-cut keeps the result sorted without an explicit sort.
    out: list[int] = []
    for c in range(rule.num_cuts):
        off = offs[c]
        out.extend(off + j for j in a.indices)
    return LevelSet(k + 1, tuple(out))


def refine(tower: Tower, a: LevelSet, m: int) -> LevelSet:
    """The same set expressed at stage m >= a.stage; measure is conserved exactly."""
    _check_bounds(tower, a)
    if m < a.stage:
        raise SpecError(f"cannot refine from stage {a.stage} down to {m}")
    if m > tower.depth:
        raise DepthError(f"stage {m} beyond built depth {tower.depth}")
    cur = a
    while cur.stage < m:
        cur = refine_once(tower, cur)
    return cur


def _common_stage(tower: Tower, a: LevelSet, b: LevelSet) -> tuple[LevelSet, LevelSet]:
    m = max(a.stage, b.stage)
    return refine(tower, a, m), refine(tower, b, m)


def union(tower: Tower, a: LevelSet, b: LevelSet) -> LevelSet:
    a, b = _common_stage(tower, a, b)
    return LevelSet(a.stage, tuple(sorted(set(a.indices) | set(b.indices))))


def intersect(tower: Tower, a: LevelSet, b: LevelSet) -> LevelSet:
    a, b = _common_stage(tower, a, b)
    return LevelSet(a.stage, tuple(sorted(set(a.indices) & set(b.indices))))


def difference(tower: Tower, a: LevelSet, b: LevelSet) -> LevelSet:
    a, b = _common_stage(tower, a, b)
    return LevelSet(a.stage, tuple(sorted(set(a.indices) - set(b.indices))))


def measure(tower: Tower, a: LevelSet) -> Fraction:
    _check_bounds(tower, a)
    col = tower.column(a.stage)
    nums = col.measure_numerators
    return col.measure_unit * sum(nums[j] for j in a.indices)


@dataclass(frozen=True)
class ShiftResult:
    """Image of a level set under T^i, truncated at a working stage.

    ``unresolved_measure`` is the source mass whose image is not representable
    as levels at ``working_stage``; ``unresolved_sources`` are those source
    levels.  In the measure-preserving case the source measure equals the
    image measure plus the unresolved measure.
    """

    image: LevelSet
    unresolved_measure: Fraction
    working_stage: int
    unresolved_sources: LevelSet


def shift(
    tower: Tower,
    a: LevelSet,
    i: int,
    max_stage: int | None = None,
    *,
    strict: bool = False,
) -> ShiftResult:
    """Compute T^i(a), refining until every level resolves or max_stage is hit.

    A level j at stage m resolves when 0 <= j+i <= h_m - 1; its image is the
    level j+i.  Unresolved mass is reported, never dropped; with
    ``strict=True`` positive unresolved mass raises UnresolvedMassError.
    """
    _check_bounds(tower, a)
    if max_stage is None:
        max_stage = tower.depth
    if max_stage > tower.depth:
        raise DepthError(f"max_stage {max_stage} beyond built depth {tower.depth}")
    if max_stage < a.stage:
        raise SpecError(f"max_stage {max_stage} below set stage {a.stage}")
    m = a.stage
    cur = a
    while True:
        h = tower.spec.height(m)
        bad = [j for j in cur.indices if not (0 <= j + i <= h - 1)]
        if not bad or m == max_stage:
            break
        m += 1
        cur = refine_once(tower, cur)
    good = tuple(j + i for j in cur.indices if 0 <= j + i <= tower.spec.height(m) - 1)
    unresolved = LevelSet(m, tuple(bad))
    unresolved_measure = measure(tower, unresolved)
    if strict and unresolved_measure > 0:
        raise UnresolvedMassError(
            f"shift by {i} left measure {unresolved_measure} unresolved at stage {m}"
        )
    return ShiftResult(LevelSet(m, good), unresolved_measure, m, unresolved)


def cyclic_shift(tower: Tower, a: LevelSet, i: int) -> LevelSet:
    """R_n^i: each level index j goes to (j+i) mod h_n. Total and invertible."""
    _check_bounds(tower, a)
    h = tower.spec.height(a.stage)
    return LevelSet(a.stage, tuple(sorted((j + i) % h for j in a.indices)))


def stabilized_shift(tower: Tower, a: LevelSet, i: int) -> LevelSet:
    """T^i(a) as the stabilized cyclic image S^i a = R_n^i a.

    Returns R_n^i(refine(a, n)) for the smallest n at which the cyclic images
    at stages n and n+1 agree as sets (compared at stage n+1).  Two
    consecutive agreements are a detection heuristic, not a proof; the result
    is exact whenever the agreement reflects genuine stabilization.
    """
    _check_bounds(tower, a)
    n = a.stage
    cur = refine(tower, a, n)
    image_n = cyclic_shift(tower, cur, i)
    while n + 1 <= tower.depth:
        nxt = refine_once(tower, cur)
        image_next = cyclic_shift(tower, nxt, i)
        if refine_once(tower, image_n) == image_next:
            return image_n
        n += 1
        cur = nxt
        image_n = image_next
    raise StabilizationError(
        f"no stabilization of shift by {i} from stage {a.stage} within depth {tower.depth}; "
        f"last compared stages {n - 1}/{n}",
        shift=i,
        last_stage=n,
    )


@dataclass(frozen=True)
class CocycleValue:
    """Exact value of a Radon-Nikodym cocycle on a level, with factorization.

    ``exponents`` maps each declared cut-ratio base to an integer exponent
    such that the value is the product of base**exponent (empty in the
    measure-preserving case).  ``None`` means no factorization is declared
    or none was found within the search bound.
    """

    value: Fraction
    exponents: tuple[tuple[Fraction, int], ...] | None = None

    @property
    def exponent_map(self) -> dict[Fraction, int] | None:
        return None if self.exponents is None else dict(self.exponents)


def _power_of(value: Fraction, base: Fraction, cap: int = 512) -> int | None:
    """Integer e with base**e == value, or None."""
    if base <= 0:
        return None
    if base == 1:
        return 0 if value == 1 else None
    if value == 1:
        return 0
    if value <= 0:
        return None
    lv = math.log(value.numerator) - math.log(value.denominator)
    lb = math.log(base.numerator) - math.log(base.denominator)
    guess = round(lv / lb)
    for e in (guess, guess - 1, guess + 1, guess - 2, guess + 2):
        if abs(e) <= cap and base**e == value:
            return e
    return None


def factor_into_bases(
    value: Fraction, bases: tuple[Fraction, ...], cap: int = 128
) -> tuple[tuple[Fraction, int], ...] | None:
    """Express value as a product of integer powers of the bases, if possible."""
    if not bases:
        return () if value == 1 else None
    if len(bases) == 1:
        e = _power_of(value, bases[0])
        return None if e is None else ((bases[0], e),)
    if len(bases) == 2:
        b1, b2 = bases
        for mag in range(cap + 1):
            for a in {mag, -mag}:
                e2 = _power_of(value / b1**a, b2)
                if e2 is not None:
                    return ((b1, a), (b2, e2))
        return None
    raise SpecError("factorization supports at most two declared ratio bases")


@dataclass(frozen=True)
class DerivativePartition:
    """Partition of the resolved part of a set into level sets of constant cocycle."""

    parts: tuple[tuple[LevelSet, CocycleValue], ...]
    unresolved_measure: Fraction
    working_stage: int


def rn_derivative(
    tower: Tower,
    a: LevelSet,
    i: int,
    max_stage: int | None = None,
    *,
    strict: bool = False,
) -> DerivativePartition:
    """Evaluate the cocycle of T^i on a, level by level.

    On a resolved level j at the working stage m the cocycle value is
    measure(level j+i) / measure(level j).  Parts are grouped by value and
    returned in ascending value order; unresolved mass is reported as in
    shift().
    """
    _check_bounds(tower, a)
    if max_stage is None:
        max_stage = tower.depth
    res = shift(tower, a, i, max_stage, strict=strict)
    m = res.working_stage
    col = tower.column(m)
    nums = col.measure_numerators
    unresolved = set(res.unresolved_sources.indices)
    source = refine(tower, a, m)
    by_value: dict[Fraction, list[int]] = {}
    for j in source.indices:
        if j in unresolved:
            continue
        by_value.setdefault(Fraction(nums[j + i], nums[j]), []).append(j)
    bases = tower.spec.ratio_bases
    parts = tuple(
        (
            LevelSet(m, tuple(js)),
            CocycleValue(v, None if bases is None else factor_into_bases(v, bases)),
        )
        for v, js in sorted(by_value.items())
    )
    return DerivativePartition(parts, res.unresolved_measure, m)
