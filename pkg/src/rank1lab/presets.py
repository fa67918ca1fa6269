"""Named constructors for the rank-one systems used throughout the package.

All presets share the stacking convention of the engine.  The tower family
with two cuts and all spacers over the second subcolumn ("hk family") is
tagged so downstream checks that are only valid for it can refuse other
specs.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .engine import Rational, StageRule, TransformationSpec, _as_fraction
from .errors import SpecError

HK_FAMILY = "hk_plus1_family"

PRESET_NAMES = (
    "chacon",
    "kakutani",
    "hajian_kakutani",
    "hk_plus1",
    "hk_plus1_lambda",
    "type_iii1",
    "tower_from_heights",
)


def _uniform(n: int) -> tuple[Fraction, ...]:
    return (Fraction(1, n),) * n


def _lambda_fractions(lam: Fraction) -> tuple[Fraction, Fraction]:
    # Two pieces with measure ratio lam, the left piece the larger one.
    return (Fraction(1, 1 + lam), Fraction(lam, 1 + lam))


def _check_unit(name: str, lam: Fraction) -> Fraction:
    # lam = 1 is allowed and degenerates to equal halves.
    if not 0 < lam <= 1:
        raise SpecError(f"{name} must lie in (0, 1], got {lam}")
    return lam


def chacon() -> TransformationSpec:
    """Three uniform cuts, one spacer over the middle subcolumn."""
    rule = StageRule(3, _uniform(3), (0, 1, 0))
    return TransformationSpec(
        lambda k, h: rule,
        descriptor={"preset": "chacon", "params": {}},
        ratio_bases=(),
    )


def kakutani() -> TransformationSpec:
    """Two uniform cuts, no spacers (the dyadic adding machine)."""
    rule = StageRule(2, _uniform(2), (0, 0))
    return TransformationSpec(
        lambda k, h: rule,
        descriptor={"preset": "kakutani", "params": {}},
        ratio_bases=(),
    )


def hajian_kakutani() -> TransformationSpec:
    """Two uniform cuts, 2h spacers over the second subcolumn."""
    return TransformationSpec(
        lambda k, h: StageRule(2, _uniform(2), (0, 2 * h)),
        descriptor={"preset": "hajian_kakutani", "params": {}},
        ratio_bases=(),
    )


def hk_plus1() -> TransformationSpec:
    """Two uniform cuts, 2h+1 spacers over the second subcolumn."""
    return TransformationSpec(
        lambda k, h: StageRule(2, _uniform(2), (0, 2 * h + 1)),
        descriptor={"preset": "hk_plus1", "params": {}},
        ratio_bases=(),
        family=HK_FAMILY,
    )


def hk_plus1_lambda(lam: Rational) -> TransformationSpec:
    """hk_plus1 spacers with the two pieces cut in measure ratio lam."""
    lam = _check_unit("lambda", _as_fraction(lam))
    fracs = _lambda_fractions(lam)
    return TransformationSpec(
        lambda k, h: StageRule(2, fracs, (0, 2 * h + 1)),
        descriptor={"preset": "hk_plus1_lambda", "params": {"lambda": lam}},
        ratio_bases=() if lam == 1 else (lam,),
        family=HK_FAMILY,
    )


def type_iii1(lam1: Rational, lam2: Rational) -> TransformationSpec:
    """hk_plus1 spacers, cut ratio lam1 at even stages and lam2 at odd stages."""
    lam1 = _check_unit("lambda1", _as_fraction(lam1))
    lam2 = _check_unit("lambda2", _as_fraction(lam2))
    f1, f2 = _lambda_fractions(lam1), _lambda_fractions(lam2)

    def rule_fn(k: int, h: int) -> StageRule:
        return StageRule(2, f1 if k % 2 == 0 else f2, (0, 2 * h + 1))

    bases = tuple(b for b in dict.fromkeys((lam1, lam2)) if b != 1)
    return TransformationSpec(
        rule_fn,
        descriptor={"preset": "type_iii1", "params": {"lambda1": lam1, "lambda2": lam2}},
        ratio_bases=bases,
        family=HK_FAMILY,
    )


def tower_from_heights(q: Sequence[int]) -> TransformationSpec:
    """Tower transformation whose column heights are exactly the list q.

    Requires q[0] == 1 and q[k+1] >= 2*q[k]; stage k uses two uniform cuts
    and q[k+1] - 2*q[k] spacers over the second subcolumn.
    """
    q = [int(x) for x in q]
    if not q or q[0] != 1:
        raise SpecError("height list must start with 1")
    for a, b in zip(q, q[1:]):
        if b < 2 * a:
            raise SpecError(f"heights need q[k+1] >= 2*q[k]; got {a} -> {b} (negative spacer count)")

    def rule_fn(k: int, h: int) -> StageRule | None:
        if k + 1 >= len(q):
            return None
        return StageRule(2, _uniform(2), (0, q[k + 1] - 2 * q[k]))

    return TransformationSpec(
        rule_fn,
        descriptor={"preset": "tower_from_heights", "params": {"q": list(q)}},
        ratio_bases=(),
    )


def preset(name: str, **params) -> TransformationSpec:
    """Look up a preset by name with keyword parameters."""
    if name == "chacon":
        return chacon()
    if name == "kakutani":
        return kakutani()
    if name == "hajian_kakutani":
        return hajian_kakutani()
    if name == "hk_plus1":
        return hk_plus1()
    if name == "hk_plus1_lambda":
        lam = params.pop("lambda", params.pop("lam", None))
        if lam is None:
            raise SpecError("hk_plus1_lambda needs a lambda parameter")
        return hk_plus1_lambda(lam)
    if name == "type_iii1":
        lam1 = params.pop("lambda1", None)
        lam2 = params.pop("lambda2", None)
        if lam1 is None or lam2 is None:
            raise SpecError("type_iii1 needs lambda1 and lambda2")
        return type_iii1(lam1, lam2)
    if name == "tower_from_heights":
        q = params.pop("q", None)
        if q is None:
            raise SpecError("tower_from_heights needs a height list q")
        return tower_from_heights(q)
    raise SpecError(f"unknown preset {name!r}")


def height_sequence(spec: TransformationSpec, depth: int) -> list[int]:
    """Heights [h_0..h_depth] by pure integer recursion (no column build)."""
    return spec.heights(depth)
