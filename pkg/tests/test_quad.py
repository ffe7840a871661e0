import math

import numpy as np
import pytest
from scipy import integrate

from zollsurf import quad
from zollsurf.profiles import EllipticSpec, HyperbolicSpec, ParabolicSpec, bumps, desitter, odd_bump


def test_panel_integral_polynomial_and_breaks():
    r = quad.panel_integral(lambda x: x**5 - 3 * x, 0.0, 2.0)
    assert r.value == pytest.approx(2.0**6 / 6 - 6.0, abs=1e-13)
    kink = quad.panel_integral(np.abs, -1.0, 2.0, n=16, breakpoints=[0.0])
    assert kink.value == pytest.approx(2.5, abs=1e-14)


def test_panel_integral_rejects_nonfinite():
    with pytest.raises(FloatingPointError), np.errstate(divide="ignore"):
        quad.panel_integral(lambda x: 1.0 / (x - x), 0.0, 1.0)


@pytest.mark.parametrize("c", [0.3, 1.0, 5.0])
def test_chebyshev_singular_against_scipy(c):
    phi = lambda y: np.exp(y / c) * np.cos(y)
    got = quad.chebyshev_singular(phi, c).value
    want, _ = integrate.quad(lambda y: math.exp(y / c) * math.cos(y), -c, c, weight="alg", wvar=(-0.5, -0.5),
                             epsabs=1e-14, epsrel=1e-14)
    assert got == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0, 4.0])
def test_parabolic_kernel(c):
    assert abs(quad.parabolic_kernel_integral(c).value - 2.0 / c) <= 1e-10


@pytest.mark.parametrize("c", [0.5, 2.0, 7.0])
def test_elliptic_kernel(c):
    assert abs(quad.elliptic_kernel_integral(c).value - math.pi) <= 1e-10


@pytest.mark.parametrize("c", [1.1, 2.0, 9.0])
def test_hyperbolic_kernel(c):
    assert quad.hyperbolic_kernel_integral(c).value == pytest.approx(math.log((c + 1) / (c - 1)), abs=1e-10)


@pytest.mark.parametrize("family", ["parabolic", "elliptic", "hyperbolic"])
def test_desitter_residual_vanishes(family):
    spec = desitter(family)
    assert max(abs(quad.closure_residual(spec, float(c))) for c in quad.c_grid(family)) <= 1e-10


def test_tau_shows_in_residual():
    spec = ParabolicSpec(1, 0.3, desitter("parabolic").kappas)
    for c in quad.c_grid("parabolic", 4):
        assert quad.closure_residual(spec, float(c)) == pytest.approx(0.3, abs=1e-12)


def test_hyperbolic_defect_adds_tau():
    spec = HyperbolicSpec(1, 0.25, desitter("hyperbolic").kappas)
    assert quad.closure_residual(spec, 2.0) == pytest.approx(0.0, abs=1e-12)
    assert quad.closure_defect(spec, 2.0) == pytest.approx(0.25, abs=1e-12)


def test_odd_profiles_close():
    p = ParabolicSpec(1, 0.0, (odd_bump(0.3, 1.2, 0.5),))
    e = EllipticSpec(2 * math.pi, 1, 1, odd_bump(0.3, 1.2, 0.5))
    for c in (0.4, 1.3, 3.0):
        assert abs(quad.closure_residual(p, c)) < 1e-12
        assert abs(quad.closure_residual(e, c)) < 1e-12


def test_even_profile_residual_sign():
    spec = ParabolicSpec(1, 0.0, (bumps((0.2, 1.0, 0.5), (0.2, -1.0, 0.5)),))
    assert quad.closure_residual(spec, 2.0) > 1e-3
    assert abs(quad.closure_residual(spec, 0.3)) < 1e-14  # the arc does not reach the bumps


def test_sigma_gamma():
    spec = desitter("hyperbolic", 2)
    assert quad.sigma_gamma(spec, 0) == [0, 3, 4, 7]
    with pytest.raises(ValueError):
        quad.sigma_gamma(spec, 1)


def test_c_grid():
    g = quad.c_grid("hyperbolic")
    assert len(g) == 16 and g[0] == pytest.approx(1.05) and g[-1] == pytest.approx(50.0)
    assert np.allclose(np.diff(quad.c_grid("parabolic", 5, 1.0, 5.0, "lin")), 1.0)
    with pytest.raises(ValueError):
        quad.c_grid("parabolic", spacing="cubic")


even = [lambda s: s**2, lambda s: s**4 / (1 + s**2), lambda s: s**2 * np.exp(-(s**2))]


@pytest.mark.parametrize("h", even)
@pytest.mark.parametrize("a", [1.0, 3.0])
def test_abel_I(h, a):
    assert abs(quad.abel_I(h, a) - quad.abel_I_identity_rhs(h, a)) <= 1e-7


def test_abel_H_odd_vanishes():
    h = lambda s: s**3 * np.exp(-(s**2))
    for c in (0.5, 2.0):
        assert abs(quad.abel_H(h, c)) <= 1e-10


def test_abel_H_rejects_simple_zero():
    with pytest.raises(ValueError):
        quad.abel_H(lambda s: s, 1.0)


@pytest.mark.parametrize("a", [1.2, 2.0, 5.0])
def test_abel_J_closed_form(a):
    h = lambda s: s**2
    assert abs(quad.abel_J_hyperbolic(h, a) - quad.abel_J_closed_form(h, a)) <= 1e-6


def test_abel_J_exact_for_square():
    # J(a) for h = s^2 by hand: (pi/6) a^3 - int_0^1 s^2 arctan(sqrt((1-s^2)/(a^2-1))) ds
    a = 2.0
    inner, _ = integrate.quad(lambda s: s * s * math.atan(math.sqrt((1 - s * s) / (a * a - 1))), 0, 1,
                              epsabs=1e-14)
    assert quad.abel_J_hyperbolic(lambda s: s**2, a) == pytest.approx(math.pi * a**3 / 6 - inner, abs=1e-9)
