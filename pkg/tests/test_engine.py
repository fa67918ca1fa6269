"""Engine unit and property tests: columns, level sets, shifts, cocycles."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from rank1lab import (
    CocycleValue,
    DepthError,
    FromParent,
    LevelSet,
    Spacer,
    SpecError,
    StabilizationError,
    StageRule,
    UnresolvedMassError,
    build_tower,
    cyclic_shift,
    difference,
    explicit_spec,
    factor_into_bases,
    intersect,
    measure,
    presets,
    refine,
    rn_derivative,
    shift,
    stabilized_shift,
    union,
)

from interval_oracle import IntervalModel

HALF = Fraction(1, 2)


# ---------------------------------------------------------------- towers


def test_hk_plus1_heights(hk_tower):
    assert hk_tower.spec.heights(6) == [1, 5, 21, 85, 341, 1365, 5461]


def test_kakutani_heights(kakutani_tower):
    assert kakutani_tower.spec.heights(4) == [1, 2, 4, 8, 16]


def test_chacon_heights(chacon_tower):
    # h_{k+1} = 3 h_k + 1, cross-checked by direct column enumeration below
    assert chacon_tower.spec.heights(3) == [1, 4, 13, 40]
    model = IntervalModel(chacon_tower.spec, 3)
    assert model.heights() == [1, 4, 13, 40]


def test_height_recursion_and_measures(lam_tower):
    spec = lam_tower.spec
    for k in range(5):
        rule = spec.rule_at(k)
        assert spec.height(k + 1) == rule.num_cuts * spec.height(k) + rule.total_spacers
        parent = lam_tower.column(k)
        child = lam_tower.column(k + 1)
        for idx, prov in enumerate(child.provenance):
            if isinstance(prov, FromParent):
                expected = rule.cut_fractions[prov.cut_slot] * parent.level_measure(prov.parent_level)
                assert child.level_measure(idx) == expected


def test_spacer_width_rule(lam_tower):
    # spacers over subcolumn i carry that subcolumn's top-piece measure,
    # so the climb through a spacer block has cocycle 1
    for k in range(1, 5):
        col = lam_tower.column(k)
        for j in range(col.height - 1):
            if col.is_spacer(j + 1):
                prev = col.level_measure(j)
                assert col.level_measure(j + 1) == prev


def test_c1_structure(hk_tower):
    col = hk_tower.column(1)
    assert [col.is_spacer(j) for j in range(5)] == [False, False, True, True, True]
    assert col.level_measures == [HALF] * 5
    assert col.width == HALF
    assert isinstance(col.provenance[2], Spacer)


def test_lambda_half_c1_measures(lam_tower):
    # cut fractions solve l + r = 1, r/l = 1/2 with the left piece larger
    col = lam_tower.column(1)
    assert col.level_measures[:2] == [Fraction(2, 3), Fraction(1, 3)]


def test_column_total_and_interval_oracle(lam_tower):
    model = IntervalModel(lam_tower.spec, 4)
    for k in range(5):
        col = lam_tower.column(k)
        assert all(
            model.level_measure(k, j) == col.level_measure(j) for j in range(col.height)
        )


def test_depth_and_spec_errors():
    t = build_tower(presets.kakutani(), 2)
    with pytest.raises(DepthError):
        t.column(3)
    rule = StageRule(2, (HALF, HALF), (0, 0))
    spec = explicit_spec([rule])  # no tail: undefined beyond stage 0
    with pytest.raises(SpecError):
        build_tower(spec, 3)
    with pytest.raises(SpecError):
        StageRule(1, (Fraction(1),), (0,))
    with pytest.raises(SpecError):
        StageRule(2, (HALF, Fraction(1, 3)), (0, 0))
    with pytest.raises(SpecError):
        StageRule(2, (HALF, HALF), (0, -1))


def test_levelset_validation():
    with pytest.raises(SpecError):
        LevelSet(1, (3, 3))
    with pytest.raises(SpecError):
        LevelSet(1, (2, 1))
    with pytest.raises(SpecError):
        LevelSet(1, (-1,))


# ---------------------------------------------------------------- refine / algebra


def test_refine_identity(hk_tower):
    a = LevelSet(1, (3,))
    assert refine(hk_tower, a, 1) == a


def test_refine_base_level(hk_tower):
    assert refine(hk_tower, LevelSet(0, (0,)), 1) == LevelSet(1, (0, 1))


def test_refine_errors(hk_tower):
    with pytest.raises(SpecError):
        refine(hk_tower, LevelSet(2, (0,)), 1)
    with pytest.raises(DepthError):
        refine(hk_tower, LevelSet(1, (0,)), 99)
    with pytest.raises(SpecError):
        refine(hk_tower, LevelSet(1, (5,)), 2)  # index out of range at stage 1


def test_set_algebra(hk_tower):
    a = LevelSet(1, (0, 3))
    assert intersect(hk_tower, a, a) == a
    assert measure(hk_tower, LevelSet(0, (0,))) == 1
    assert measure(hk_tower, LevelSet(1, (2, 3, 4))) == Fraction(3, 2)
    b = LevelSet(2, (0, 1))
    u = union(hk_tower, a, b)
    assert u.stage == 2
    assert measure(hk_tower, u) == measure(hk_tower, a) + measure(hk_tower, b) - measure(
        hk_tower, intersect(hk_tower, a, b)
    )
    assert difference(hk_tower, a, a).is_empty


@settings(deadline=None)
@given(st.data())
def test_measure_conserved_under_refinement(hk_tower, lam_tower, data):
    tower = data.draw(st.sampled_from([hk_tower, lam_tower]))
    stage = data.draw(st.integers(0, 3))
    h = tower.spec.height(stage)
    idx = data.draw(st.sets(st.integers(0, h - 1), min_size=1, max_size=6))
    a = LevelSet(stage, tuple(sorted(idx)))
    m = data.draw(st.integers(stage, 6))
    assert measure(tower, refine(tower, a, m)) == measure(tower, a)


# ---------------------------------------------------------------- shift


def test_shift_identity(hk_tower):
    a = LevelSet(1, (3,))
    res = shift(hk_tower, a, 0)
    assert res.image == a and res.unresolved_measure == 0


def test_shift_down_one(hk_tower):
    res = shift(hk_tower, LevelSet(1, (4,)), -1)
    assert res.image == LevelSet(1, (3,))
    assert res.unresolved_measure == 0


def test_shift_resolves_into_spacers(hk_tower):
    res = shift(hk_tower, LevelSet(1, (0,)), 5, 2)
    assert res.image == LevelSet(2, (5, 10))
    assert res.working_stage == 2
    assert res.unresolved_measure == 0
    assert hk_tower.column(2).is_spacer(10)


def test_shift_unresolved_mass(kakutani_tower):
    base = LevelSet(0, (0,))
    res = shift(kakutani_tower, base, 1, 1)
    assert res.image == LevelSet(1, (1,))
    assert res.unresolved_measure == HALF
    res = shift(kakutani_tower, base, 1, 3)
    assert res.image.indices == (1, 2, 3, 4, 5, 6, 7)
    assert res.unresolved_measure == Fraction(1, 8)
    with pytest.raises(UnresolvedMassError):
        shift(kakutani_tower, base, 1, 3, strict=True)


def test_shift_oracle_cross_check(hk_tower):
    """Sampled point orbits land exactly in the computed image levels."""
    model = IntervalModel(hk_tower.spec, 4)
    for indices, i in [((3,), 2), ((0, 1), 7), ((2, 4), -2), ((0,), 21)]:
        a = LevelSet(1, indices)
        res = shift(hk_tower, a, i, 4)
        if res.unresolved_measure != 0:
            continue
        target = refine(hk_tower, res.image, 4)
        hits, failures = model.image_levels(1, indices, i, 4, count=5)
        assert failures == 0
        assert hits == set(target.indices)


# ---------------------------------------------------------------- cyclic / stabilized


def test_cyclic_examples(hk_tower):
    assert cyclic_shift(hk_tower, LevelSet(1, (3,)), 1) == LevelSet(1, (4,))
    assert cyclic_shift(hk_tower, LevelSet(1, (4,)), 1) == LevelSet(1, (0,))
    a = LevelSet(1, (0, 2))
    assert cyclic_shift(hk_tower, a, 5) == a


@settings(deadline=None)
@given(st.data())
def test_cyclic_group_laws(hk_tower, data):
    stage = data.draw(st.integers(1, 4))
    h = hk_tower.spec.height(stage)
    idx = data.draw(st.sets(st.integers(0, h - 1), min_size=1, max_size=5))
    a = LevelSet(stage, tuple(sorted(idx)))
    i = data.draw(st.integers(-2 * h, 2 * h))
    j = data.draw(st.integers(-2 * h, 2 * h))
    assert cyclic_shift(hk_tower, cyclic_shift(hk_tower, a, i), j) == cyclic_shift(hk_tower, a, i + j)
    assert cyclic_shift(hk_tower, a, h) == a


def test_stabilized_identity(hk_tower):
    a = LevelSet(1, (3,))
    assert stabilized_shift(hk_tower, a, 0) == a


def test_stabilized_one_step(hk_tower):
    assert stabilized_shift(hk_tower, LevelSet(1, (3,)), 1) == LevelSet(1, (4,))


def test_stabilized_two_steps_frozen_oracle(hk_tower):
    """S^2 {3}@C_1, frozen from point-orbit sampling at C_4."""
    res = stabilized_shift(hk_tower, LevelSet(1, (3,)), 2)
    assert res == LevelSet(2, (5, 10))
    at_c4 = refine(hk_tower, res, 4)
    assert at_c4.indices == (5, 10, 26, 31, 90, 95, 111, 116)
    model = IntervalModel(hk_tower.spec, 4)
    hits, failures = model.image_levels(1, (3,), 2, 4, count=9)
    assert failures == 0 and hits == set(at_c4.indices)


def test_stabilized_matches_shift(hk_tower):
    for i in (1, 3, 5, 21, 40):
        a = LevelSet(1, (0, 3))
        res = shift(hk_tower, a, i)
        stab = stabilized_shift(hk_tower, a, i)
        assert res.unresolved_measure == 0
        m = max(res.working_stage, stab.stage)
        assert refine(hk_tower, res.image, m) == refine(hk_tower, stab, m)


def test_stabilization_failure_diagnostic(chacon_tower):
    # the top-right chain of the chacon construction never resolves, so the
    # cyclic images keep changing with the stage
    with pytest.raises(StabilizationError) as err:
        stabilized_shift(chacon_tower, LevelSet(1, (0,)), 4)
    assert err.value.shift == 4


@settings(deadline=None, max_examples=60)
@given(st.data())
def test_shift_cyclic_agreement(hk_tower, lam_tower, data):
    """Resolved shifts agree with the cyclic rotation at the working stage."""
    tower = data.draw(st.sampled_from([hk_tower, lam_tower]))
    stage = data.draw(st.integers(1, 3))
    h = tower.spec.height(stage)
    idx = data.draw(st.sets(st.integers(0, h - 1), min_size=1, max_size=4))
    a = LevelSet(stage, tuple(sorted(idx)))
    i = data.draw(st.integers(-h, h))
    res = shift(tower, a, i, 6)
    if res.unresolved_measure == 0:
        assert res.image == cyclic_shift(tower, refine(tower, a, res.working_stage), i)


# ---------------------------------------------------------------- cocycles


def test_cocycle_measure_preserving(hk_tower):
    part = rn_derivative(hk_tower, LevelSet(1, (0, 3)), 7, 4)
    assert len(part.parts) == 1
    (_, cv), = part.parts
    assert cv.value == 1 and cv.exponents == ()


def test_cocycle_left_sublevel(lam_tower):
    # crossing from the left copy to the right copy contracts by the cut ratio
    for k in (1, 2, 3):
        h_k = lam_tower.spec.height(k)
        part = rn_derivative(lam_tower, LevelSet(k, (0,)), h_k, k + 1)
        by_value = {cv.value: ls for ls, cv in part.parts}
        assert HALF in by_value
        assert 0 in by_value[HALF].indices


def test_cocycle_factorization():
    assert factor_into_bases(HALF, (HALF,)) == ((HALF, 1),)
    assert factor_into_bases(Fraction(4), (HALF,)) == ((HALF, -2),)
    assert factor_into_bases(Fraction(1), ()) == ()
    assert factor_into_bases(Fraction(3), (HALF,)) is None
    two = factor_into_bases(Fraction(1, 6), (HALF, Fraction(1, 3)))
    assert two is not None
    value = Fraction(1)
    for b, e in two:
        value *= b**e
    assert value == Fraction(1, 6)


def test_cocycle_oracle_derivative(lam_tower):
    """Pointwise slopes of the interval realization equal the level cocycle."""
    model = IntervalModel(lam_tower.spec, 4)
    for indices, i in [((0,), 5), ((3,), 2), ((1, 4), 9)]:
        a = LevelSet(1, indices)
        part = rn_derivative(lam_tower, a, i, 4)
        for ls, cv in part.parts:
            for j in ls.indices:
                x = model.sample_points(ls.stage, j, 3)[1]
                assert model.derivative(x, i) == cv.value


@settings(deadline=None, max_examples=60)
@given(st.data())
def test_cocycle_chain_rule(lam_tower, iii1_tower, data):
    """omega_{a+b}(x) = omega_b(x) * omega_a(T^b x), level by level."""
    tower = data.draw(st.sampled_from([lam_tower, iii1_tower]))
    stage = data.draw(st.integers(1, 3))
    h = tower.spec.height(stage)
    j = data.draw(st.integers(0, h - 1))
    a = data.draw(st.integers(-6, 6))
    b = data.draw(st.integers(-6, 6))
    src = LevelSet(stage, (j,))
    depth = 6
    part_ab = rn_derivative(tower, src, a + b, depth)
    part_b = rn_derivative(tower, src, b, depth)
    image_b = shift(tower, src, b, depth).image
    stages = [part_ab.working_stage, part_b.working_stage]
    omega_a = {}
    if image_b.indices:
        part_a = rn_derivative(tower, image_b, a, depth)
        stages.append(part_a.working_stage)
        m = max(stages)
        omega_a = _value_map(tower, part_a, m)
    m = max(stages)
    omega_ab = _value_map(tower, part_ab, m)
    omega_b = _value_map(tower, part_b, m)
    for idx, v_ab in omega_ab.items():
        if idx in omega_b and idx + b in omega_a:
            assert v_ab == omega_b[idx] * omega_a[idx + b]


def _value_map(tower, part, m):
    out = {}
    for ls, cv in part.parts:
        for j in refine(tower, ls, m).indices:
            out[j] = cv.value
    return out


@settings(deadline=None, max_examples=60)
@given(st.data())
def test_power_of_lambda_law(lam_tower, data):
    """Every cocycle value of the uneven-cut tower is an exact power of 1/2."""
    stage = data.draw(st.integers(0, 4))
    h = lam_tower.spec.height(stage)
    idx = data.draw(st.sets(st.integers(0, h - 1), min_size=1, max_size=4))
    i = data.draw(st.integers(-30, 30))
    part = rn_derivative(lam_tower, LevelSet(stage, tuple(sorted(idx))), i, min(stage + 3, 9))
    for _, cv in part.parts:
        assert cv.exponents is not None
        (base, e), = cv.exponents
        assert base**e == cv.value


def test_cocycle_value_invariant():
    cv = CocycleValue(Fraction(1, 4), ((HALF, 2),))
    assert cv.exponent_map == {HALF: 2}
    value = Fraction(1)
    for b, e in cv.exponents:
        value *= b**e
    assert value == cv.value
