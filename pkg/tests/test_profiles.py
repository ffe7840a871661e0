import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zollsurf.profiles import (
    ZERO,
    BlaschkeSpec,
    BumpTerm,
    Combination,
    CubicRational,
    EllipticSpec,
    HyperbolicSpec,
    ParabolicSpec,
    PlateauTerm,
    SplineProfile,
    TermProfile,
    AmbientPoint,
    blaschke_region,
    bump,
    bumps,
    desitter,
    f_from_kappa,
    mobius_involution,
    mobius_quadruple,
    mobius_triple,
    odd_bump,
    profile_from_dict,
    sample_hyperboloid,
    smooth_step,
    validate,
)


def fd(func, t, step=1e-4):
    return (func(t - 2 * step) - 8 * func(t - step) + 8 * func(t + step) - func(t + 2 * step)) / (12 * step)


def test_bump_shape():
    u = np.linspace(-1.5, 1.5, 301)
    b = bump(u)
    assert b[150] == pytest.approx(1.0)
    assert np.all(b[np.abs(u) >= 1] == 0)
    assert np.all(b >= 0)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_bump_derivatives_match_differences(order):
    u = np.linspace(-0.8, 0.8, 17)
    num = fd(lambda v: bump(v, order - 1), u)
    assert np.max(np.abs(bump(u, order) - num)) < 1e-6


def test_smooth_step_limits():
    s = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    v = smooth_step(s)
    assert v[0] == 0 and v[1] == 0 and v[3] == 1 and v[4] == 1
    assert v[2] == pytest.approx(0.5)


profiles = [
    bumps((0.3, 1.0, 0.5), (-0.2, -2.0, 0.7)),
    TermProfile((PlateauTerm(1.0, -0.3, 0.3, 0.2, (0.0, 0.0, 1.0)), BumpTerm(0.1, 1.5, 0.5, (1.0, 0.5)))),
    CubicRational(0.4),
    SplineProfile([-2.0, 0.0, 2.0], [0.0, 0.3, 0.0], [0.0, 0.0, 0.0], [0.0, -0.5, 0.0]),
    Combination(((1.0, odd_bump(0.2, 1.0, 0.4), False), (0.5, bumps((0.3, 1.0, 0.5)), True))),
]


@pytest.mark.parametrize("prof", profiles, ids=lambda p: type(p).__name__)
def test_derivative_consistency(prof):
    t = np.linspace(-2.7, 2.7, 23) + 0.013
    for m in range(1, 3):
        num = fd(lambda s: prof.derivative(s, m - 1), t)
        assert np.max(np.abs(prof.derivative(t, m) - num)) < 1e-5


@pytest.mark.parametrize("prof", profiles, ids=lambda p: type(p).__name__)
def test_describe_round_trip(prof):
    again = profile_from_dict(prof.describe())
    t = np.linspace(-3, 3, 41)
    assert np.array_equal(again.value(t), prof.value(t))


@given(a=st.floats(-0.5, 0.5), c=st.floats(0.5, 3.0), r=st.floats(0.1, 1.0))
@settings(max_examples=30, deadline=None)
def test_odd_bump_is_odd(a, c, r):
    p = odd_bump(a, c, r)
    t = np.linspace(0, 5, 51)
    assert np.max(np.abs(p.value(t) + p.value(-t))) <= 1e-15


def test_reflected_and_negated():
    p = bumps((0.3, 1.0, 0.5))
    t = np.linspace(-2, 2, 9)
    assert np.allclose(p.reflected().value(t), p.value(-t))
    assert np.allclose((-p).value(t), -p.value(t))


def test_f_from_kappa_matches_definition_away_from_zero():
    p = bumps((0.3, 1.0, 0.5))
    y = np.array([0.7, 1.1, 2.5])
    want = (1 - (p.value(y) + 1) ** 2) / y**2
    assert np.allclose(f_from_kappa("parabolic", p, 1.0, y), want, rtol=1e-13)


def test_f_series_is_continuous_at_double_zero():
    p = TermProfile((PlateauTerm(1.0, -0.3, 0.3, 0.2, (0.0, 0.0, 1.0)),))
    left = f_from_kappa("parabolic", p, 1.0, np.array([-1.0001e-3, -0.9999e-3]))
    assert abs(left[0] - left[1]) < 1e-6
    assert f_from_kappa("parabolic", p, 1.0, np.array([0.0]))[0] == pytest.approx(-2.0)


@pytest.mark.parametrize("family", ["parabolic", "elliptic", "hyperbolic"])
def test_desitter_valid(family):
    assert validate(desitter(family)).ok


def test_even_parabolic_violates_oddness():
    spec = ParabolicSpec(1, 0.0, (bumps((0.3, 1.0, 0.5), (0.3, -1.0, 0.5)),))
    assert validate(spec).names() == ["parabolic.oddness"]


def test_parabolic_tau_and_lower_bound():
    spec = ParabolicSpec(1, 0.3, (bumps((-1.5, 1.0, 0.5), (1.5, -1.0, 0.5)),))
    names = validate(spec).names()
    assert "parabolic.tau" in names and "lower-bound" in names
    assert not validate(spec).admissible


def test_elliptic_winding_and_oddness():
    assert validate(EllipticSpec(2 * math.pi, 2, 1, ZERO)).names() == ["elliptic.winding"]
    assert "elliptic.oddness" in validate(EllipticSpec(2 * math.pi, 1, 1, bumps((0.2, 1.0, 0.5)))).names()


def test_hyperbolic_conditions():
    assert validate(HyperbolicSpec(2, 0.0, mobius_quadruple(bumps((0.5, 2.5, 0.5))))).ok
    bad = HyperbolicSpec(1, 0.0, (bumps((0.2, 2.0, 0.5)), ZERO))
    assert "hyperbolic.oddness-outer-even" in validate(bad).names()
    pinned = HyperbolicSpec(1, 0.0, (bumps((0.2, 1.0, 0.5)), bumps((-0.2, -1.0, 0.5))))
    assert "hyperbolic.zero-at-pm1" in validate(pinned).names()


def test_spec_shape_errors():
    with pytest.raises(ValueError):
        ParabolicSpec(2, 0.0, (ZERO,))
    with pytest.raises(ValueError):
        HyperbolicSpec(1, 0.0, (ZERO,))
    with pytest.raises(ValueError):
        EllipticSpec(-1.0, 1, 1, ZERO)


def test_mobius_specs_valid_and_involutive():
    k3 = ParabolicSpec(3, 0.0, mobius_triple(bumps((0.5, 1.5, 0.5))))
    k2 = HyperbolicSpec(2, 0.0, mobius_quadruple(bumps((0.5, 2.5, 0.5))))
    from zollsurf.atlas import ChartPoint

    for spec in (k3, k2):
        assert validate(spec).ok
        for ch in range(spec.n_charts):
            p = ChartPoint(ch, 0.3, 0.7)
            q = mobius_involution(spec, p)
            assert q.chart != ch
            assert mobius_involution(spec, q) == p


def test_blaschke_regions_disjoint_and_support():
    rng = np.random.default_rng(1)
    for X in sample_hyperboloid(rng, 2000):
        assert abs(-X[0] ** 2 + X[1] ** 2 + X[2] ** 2 - 1) < 1e-9
        assert blaschke_region(AmbientPoint(*X)) in ("V1", "V2", "outside")
    good = BlaschkeSpec(odd_bump(0.3, 0.5, 0.4), odd_bump(0.3, 4.5, 0.5))
    assert validate(good).ok
    wide = BlaschkeSpec(odd_bump(0.3, 0.5, 0.4), odd_bump(0.3, 2.5, 2.0))
    assert "blaschke.kappa2.support" in validate(wide).names()
