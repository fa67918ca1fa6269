"""Independent test oracle: explicit interval realization of a construction.

Levels are half-open rational intervals on the line.  Stage k+1 is built by
subdividing each stage-k interval at the cut fractions and allocating spacer
intervals from fresh coordinates to the right of everything built so far,
with the width of the subcolumn's top piece.  The transformation acts on
points: the deepest built column maps level j affinely onto level j+1.

Nothing here uses the engine's level-index arithmetic; agreement between the
two is a real check.
"""

from __future__ import annotations

import bisect
from fractions import Fraction


class IntervalModel:
    def __init__(self, spec, depth: int):
        self.spec = spec
        self.depth = depth
        base = spec.base_measure
        self.stages: list[list[tuple[Fraction, Fraction]]] = [[(Fraction(0), base)]]
        free = base
        for k in range(depth):
            rule = spec.rule_at(k)
            cur = self.stages[k]
            pieces: list[list[tuple[Fraction, Fraction]]] = []
            for lo, hi in cur:
                cuts = [lo]
                acc = Fraction(0)
                for f in rule.cut_fractions:
                    acc += f
                    cuts.append(lo + acc * (hi - lo))
                cuts[-1] = hi
                pieces.append([(cuts[c], cuts[c + 1]) for c in range(rule.num_cuts)])
            nxt: list[tuple[Fraction, Fraction]] = []
            top = len(cur) - 1
            for c in range(rule.num_cuts):
                nxt.extend(pieces[j][c] for j in range(len(cur)))
                width = pieces[top][c][1] - pieces[top][c][0]
                for _ in range(rule.spacer_counts[c]):
                    nxt.append((free, free + width))
                    free += width
            self.stages.append(nxt)
        # per-stage lookup tables sorted by left endpoint
        self._lookup = []
        for levels in self.stages:
            order = sorted(range(len(levels)), key=lambda j: levels[j][0])
            self._lookup.append(([levels[j][0] for j in order], order))

    def heights(self) -> list[int]:
        return [len(levels) for levels in self.stages]

    def level_measure(self, stage: int, j: int) -> Fraction:
        lo, hi = self.stages[stage][j]
        return hi - lo

    def locate(self, stage: int, x: Fraction) -> int | None:
        """Level of C_stage containing x, or None."""
        lefts, order = self._lookup[stage]
        pos = bisect.bisect_right(lefts, x) - 1
        if pos < 0:
            return None
        j = order[pos]
        lo, hi = self.stages[stage][j]
        return j if lo <= x < hi else None

    def step(self, x: Fraction, direction: int = 1) -> Fraction | None:
        """Apply the deepest column map (or its inverse) once; None if undefined."""
        stage = self.depth
        j = self.locate(stage, x)
        if j is None:
            return None
        levels = self.stages[stage]
        tgt = j + direction
        if not 0 <= tgt < len(levels):
            return None
        lo, hi = levels[j]
        lo2, hi2 = levels[tgt]
        return lo2 + (x - lo) * (hi2 - lo2) / (hi - lo)

    def orbit(self, x: Fraction, i: int) -> Fraction | None:
        direction = 1 if i >= 0 else -1
        for _ in range(abs(i)):
            x = self.step(x, direction)
            if x is None:
                return None
        return x

    def derivative(self, x: Fraction, i: int) -> Fraction | None:
        """Exact slope of T^i at x: product of per-step affine slopes."""
        direction = 1 if i >= 0 else -1
        slope = Fraction(1)
        for _ in range(abs(i)):
            stage = self.depth
            j = self.locate(stage, x)
            if j is None:
                return None
            tgt = j + direction
            levels = self.stages[stage]
            if not 0 <= tgt < len(levels):
                return None
            lo, hi = levels[j]
            lo2, hi2 = levels[tgt]
            step_slope = (hi2 - lo2) / (hi - lo)
            slope *= step_slope if direction == 1 else 1 / step_slope
            x = lo2 + (x - lo) * step_slope
        return slope

    def sample_points(self, stage: int, j: int, count: int = 7) -> list[Fraction]:
        lo, hi = self.stages[stage][j]
        return [lo + (hi - lo) * Fraction(2 * t + 1, 2 * count) for t in range(count)]

    def image_levels(self, stage: int, indices, i: int, target_stage: int, count: int = 7):
        """Levels of C_target hit by sampled points of the given set under T^i.

        Returns (hit level indices, orbit_failures).
        """
        hits: set[int] = set()
        failures = 0
        for j in indices:
            for x in self.sample_points(stage, j, count):
                y = self.orbit(x, i)
                if y is None:
                    failures += 1
                    continue
                lvl = self.locate(target_stage, y)
                if lvl is None:
                    failures += 1
                    continue
                hits.add(lvl)
        return hits, failures
