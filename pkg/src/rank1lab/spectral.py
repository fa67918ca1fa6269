"""Spectral toolkit for tower height sequences.

Evaluates the eigenvalue membership sum Phi_N(theta) = sum |lambda^{h_i}-1|^2
with lambda = e^{2*pi*i*theta} over a height sequence, scans the unit circle
for candidate eigenvalues, measures rigidity sums of circle rotations along
return times, checks the covering gap bound for bounded-ratio sequences, and
builds the level-to-circle factor map for doubling towers.

Heights can have thousands of bits, so theta*h is always reduced mod 1 with
exact integer arithmetic on an exact rational theta before any floating-point
evaluation.  The circle metric is chord distance |e^{2*pi*i*a} - e^{2*pi*i*b}|.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import presets
from .engine import build_tower
from .errors import ResourceCapError, SpecError

DEFAULT_ENUM_CAP = 10**7
REFINE_ITERATIONS = 40


@dataclass(frozen=True)
class HeightSequence:
    """Strictly increasing positive integer heights with ratio flags."""

    values: tuple[int, ...]
    doubling: bool
    max_ratio: Fraction

    def __len__(self) -> int:
        return len(self.values)

    def bounded_by(self, k: int) -> bool:
        return self.max_ratio <= k


def height_sequence(values: Sequence[int]) -> HeightSequence:
    vals = tuple(int(v) for v in values)
    if not vals:
        raise SpecError("height sequence must be nonempty")
    if vals[0] < 1:
        raise SpecError("heights must be positive")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise SpecError("heights must be strictly increasing")
    ratios = [Fraction(b, a) for a, b in zip(vals, vals[1:])]
    doubling = all(r >= 2 for r in ratios)
    max_ratio = max(ratios, default=Fraction(1))
    return HeightSequence(vals, doubling, max_ratio)


def _frac_mod1(theta: Fraction, h: int) -> Fraction:
    """theta*h mod 1, exactly."""
    return Fraction((theta.numerator * h) % theta.denominator, theta.denominator)


def _term(theta: Fraction, h: int) -> float:
    """|e^{2 pi i theta h} - 1|^2 = 4 sin^2(pi * frac(theta h))."""
    r = _frac_mod1(theta, h)
    if r == 0:
        return 0.0
    s = math.sin(math.pi * float(r))
    return 4.0 * s * s


def chord(alpha: Fraction) -> float:
    """Chord distance from angle alpha (mod 1) to angle 0."""
    r = alpha - math.floor(alpha)
    if r == 0:
        return 0.0
    return 2.0 * abs(math.sin(math.pi * float(r)))


@dataclass(frozen=True)
class EigenCandidate:
    """A circle point with its partial eigenvalue-criterion sum."""

    theta: Fraction
    partial_sum: float
    tail_profile: tuple[float, ...]


def aana_sum(heights: HeightSequence, theta: Fraction, n_terms: int) -> EigenCandidate:
    """Partial sum Phi_N(theta) over the first n_terms heights."""
    if n_terms > len(heights):
        raise SpecError(f"need {n_terms} terms but only {len(heights)} heights")
    theta = Fraction(theta)
    profile = tuple(_term(theta, h) for h in heights.values[:n_terms])
    return EigenCandidate(theta, math.fsum(profile), profile)


@dataclass(frozen=True)
class ScanReport:
    """Grid scan of Phi_N: sub-threshold candidates plus the grid minimum.

    theta = 0 (the trivial eigenvalue, Phi identically 0) is excluded from
    the grid; candidates are refined by deterministic grid halving.
    """

    grid_size: int
    n_terms: int
    threshold: float
    candidates: tuple[EigenCandidate, ...]
    grid_min_theta: Fraction
    grid_min_phi: float


def _grid_scan_chunk(
    hmods: list[int], table: list[float], grid: int, start: int, stop: int
) -> list[float]:
    phi = [0.0] * (stop - start)
    for hm in hmods:
        k = (start * hm) % grid
        for idx in range(stop - start):
            phi[idx] += table[k]
            k += hm
            if k >= grid:
                k -= grid
    return phi


def eigenvalue_scan(
    heights: HeightSequence,
    grid_size: int,
    n_terms: int,
    threshold: float,
    threads: int = 1,
) -> ScanReport:
    """Evaluate Phi_N on the uniform grid j/grid_size, j = 1..grid_size-1,
    and refine every sub-threshold point.  Deterministic."""
    if grid_size < 2:
        raise SpecError(f"grid size must be >= 2, got {grid_size}")
    if n_terms > len(heights):
        raise SpecError(f"need {n_terms} terms but only {len(heights)} heights")
    hs = heights.values[:n_terms]
    table = [4.0 * math.sin(math.pi * k / grid_size) ** 2 for k in range(grid_size)]
    hmods = [h % grid_size for h in hs]
    if threads > 1:
        bounds = _chunk_bounds(grid_size, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(
                pool.map(lambda se: _grid_scan_chunk(hmods, table, grid_size, *se), bounds)
            )
        phi = [v for chunk in chunks for v in chunk]
    else:
        phi = _grid_scan_chunk(hmods, table, grid_size, 0, grid_size)

    min_j = min(range(1, grid_size), key=lambda j: (phi[j], j))
    candidates = []
    for j in range(1, grid_size):
        if phi[j] < threshold:
            candidates.append(_refine_candidate(heights, n_terms, Fraction(j, grid_size), grid_size))
    candidates.sort(key=lambda c: (c.partial_sum, c.theta))
    return ScanReport(
        grid_size,
        n_terms,
        threshold,
        tuple(candidates),
        Fraction(min_j, grid_size),
        phi[min_j],
    )


def _chunk_bounds(n: int, parts: int) -> list[tuple[int, int]]:
    step = (n + parts - 1) // parts
    return [(a, min(a + step, n)) for a in range(0, n, step)]


def _refine_candidate(
    heights: HeightSequence, n_terms: int, theta: Fraction, grid_size: int
) -> EigenCandidate:
    """Iterated grid halving around a grid minimum; exact dyadic thetas."""
    step = Fraction(1, grid_size)
    center = theta
    phi_c = aana_sum(heights, center, n_terms).partial_sum
    for _ in range(REFINE_ITERATIONS):
        step /= 2
        best, best_phi = center, phi_c
        for cand in (center - step, center + step):
            if not 0 < cand < 1:
                continue
            p = aana_sum(heights, cand, n_terms).partial_sum
            if p < best_phi:
                best, best_phi = cand, p
        center, phi_c = best, best_phi
    return aana_sum(heights, center, n_terms)


@dataclass(frozen=True)
class RigidityReport:
    """Partial sums of chord displacements d(S^{q_i} y, y)^p for a rotation."""

    theta: Fraction
    exponent: int
    terms: tuple[float, ...]
    partial_sums: tuple[float, ...]
    converged: bool


def rigidity_sum(
    q: HeightSequence,
    theta: Fraction,
    n_terms: int,
    exponent: int = 1,
    tol: float = 1e-9,
) -> RigidityReport:
    """Sum d(S^{q_i}y, y)^p for the rotation by theta; the converged flag
    holds when the last quartile of terms contributes less than tol."""
    if exponent not in (1, 2):
        raise SpecError("exponent must be 1 or 2")
    if n_terms > len(q):
        raise SpecError(f"need {n_terms} terms but only {len(q)} heights")
    theta = Fraction(theta)
    terms = []
    for h in q.values[:n_terms]:
        d = chord(_frac_mod1(theta, h))
        terms.append(d if exponent == 1 else d * d)
    sums = []
    acc = 0.0
    for t in terms:
        acc += t
        sums.append(acc)
    tail_start = (3 * n_terms) // 4
    tail = math.fsum(terms[tail_start:])
    return RigidityReport(theta, exponent, tuple(terms), tuple(sums), tail < tol)


@dataclass(frozen=True)
class GapReport:
    """Largest gap between consecutive bounded-digit sums of a height block."""

    lo: int
    hi: int
    max_gap: int
    holds: bool
    set_size: int


def gap_lemma_check(
    q: HeightSequence, lo: int, hi: int | None = None, enum_cap: int = DEFAULT_ENUM_CAP
) -> GapReport:
    """Enumerate B = {sum a_j q_j, lo <= j <= hi, 0 <= a_j <= floor(q_{j+1}/q_j)}
    (cap 1 for the last index when q_{hi+1} is absent) and test that consecutive
    gaps never exceed q_lo.  Indices are 1-based.
    """
    vals = q.values
    if hi is None:
        hi = len(vals)
    if not (1 <= lo <= hi <= len(vals)):
        raise SpecError(f"need 1 <= L <= M <= {len(vals)}, got L={lo}, M={hi}")
    caps = []
    for j in range(lo, hi + 1):
        if j < len(vals):
            caps.append(vals[j] // vals[j - 1])
        else:
            caps.append(1)
    count = 1
    for c in caps:
        count *= c + 1
        if count > enum_cap:
            raise ResourceCapError(
                f"gap enumeration would exceed cap {enum_cap}", cap=enum_cap
            )
    sums = {0}
    for idx, j in enumerate(range(lo, hi + 1)):
        qj = vals[j - 1]
        sums = {s + a * qj for s in sums for a in range(caps[idx] + 1)}
        if len(sums) > enum_cap:
            raise ResourceCapError(
                f"gap enumeration exceeded cap {enum_cap}", cap=enum_cap
            )
    ordered = sorted(sums)
    max_gap = max(b - a for a, b in zip(ordered, ordered[1:]))
    return GapReport(lo, hi, max_gap, max_gap <= vals[lo - 1], len(ordered))


@dataclass(frozen=True)
class FactorMapStage:
    """Circle assignment of one column and its distance to the next stage's.

    assignment[j] is the angle of level j (j*theta mod 1); delta_sup is the
    realized sup over levels of the distance between consecutive stage maps,
    and bound is the chord displacement of the rotation by q_k * theta.
    """

    stage: int
    assignment: tuple[Fraction, ...]
    delta_sup: float
    bound: float


@dataclass(frozen=True)
class FactorMapReport:
    stages: tuple[FactorMapStage, ...]
    equivariance_residual: float


def factor_map_build(q: HeightSequence, theta: Fraction, depth: int) -> FactorMapReport:
    """Level-to-circle maps g_k(level j of C_k) = angle j*theta for the tower
    with heights q, with the per-stage sup distance between consecutive maps
    and the equivariance residual over non-top levels (exactly 0 by
    construction, asserted)."""
    theta = Fraction(theta)
    if depth > len(q) - 1:
        raise SpecError(f"depth {depth} needs at least {depth + 1} heights")
    # Realize the tower to validate q and fix the stacking structure.
    tower = build_tower(presets.tower_from_heights(q.values), depth)
    residual = 0.0
    stages = []
    for k in range(depth):
        h_k = tower.spec.height(k)
        assignment = tuple(_frac_mod1(theta, j) for j in range(h_k))
        for j in range(h_k - 1):
            d = chord(assignment[j + 1] - (assignment[j] + theta))
            residual = max(residual, d)
        bound = chord(_frac_mod1(theta, h_k))
        # The next-stage map moves only on the second copy of C_k, where
        # level j carries angle (q_k + j) * theta instead of j * theta.
        delta = 0.0
        for j in range(h_k):
            d = chord(_frac_mod1(theta, h_k + j) - assignment[j])
            delta = max(delta, d)
        stages.append(FactorMapStage(k, assignment, delta, bound))
    assert residual == 0.0
    return FactorMapReport(tuple(stages), residual)


def preset_heights(spec_name_or_spec, depth: int, include_base: bool = False) -> HeightSequence:
    """Heights of a preset tower: h_1..h_depth, or h_0.. with include_base."""
    if isinstance(spec_name_or_spec, str):
        spec = presets.preset(spec_name_or_spec)
    else:
        spec = spec_name_or_spec
    hs = spec.heights(depth)
    return height_sequence(hs if include_base else hs[1:])
