"""Singular quadrature and the closure / Abel functionals.

All integrals over [-c, c] against the weight 1/sqrt(c^2 - y^2) are computed
after the substitution y = c sin(theta), which removes the endpoint
singularity exactly.  The resulting smooth theta-integrand is integrated by
composite Gauss-Legendre panels: breakpoints of the profiles (support edges,
spline knots, y = +-1) become panel edges, and a panel is bisected whenever
doubling its node count moves the value by more than the tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from scipy import integrate

from zollsurf.atlas import profile_index
from zollsurf.profiles import (
    SERIES_RADIUS,
    EllipticSpec,
    HyperbolicSpec,
    ParabolicSpec,
)

DEFAULT_NODES = 256
DEFAULT_TOL = 1e-13
MAX_DEPTH = 14


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int

    def __float__(self):
        return self.value


@lru_cache(maxsize=None)
def _legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@lru_cache(maxsize=None)
def _paired(n: int):
    """Nodes of the n- and 2n-point rules stacked, for one integrand call per panel."""
    x1, w1 = _legendre(n)
    x2, w2 = _legendre(2 * n)
    return np.concatenate([x1, x2]), w1, w2


def _panel_pair(G, a, b, n):
    """(Q_n, Q_2n, integral of |G| by Q_2n) on [a, b]."""
    x, w1, w2 = _paired(n)
    half = 0.5 * (b - a)
    vals = np.asarray(G(0.5 * (a + b) + half * x), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError(f"non-finite integrand on panel [{a:.6g}, {b:.6g}]")
    v1, v2 = vals[:n], vals[n:]
    return half * float(w1 @ v1), half * float(w2 @ v2), half * float(w2 @ np.abs(v2))


def panel_integral(G: Callable, a: float, b: float, n: int = DEFAULT_NODES, tol: float = DEFAULT_TOL,
                   breakpoints: Iterable[float] = ()) -> QuadratureResult:
    """Adaptive composite Gauss-Legendre integral of a vectorised G over [a, b].

    Each panel is evaluated with n and 2n nodes; the 2n value is kept and
    |Q_2n - Q_n| plus a rounding floor is the panel's error estimate.
    """
    if not b > a:
        return QuadratureResult(0.0, 0.0, 0)
    edges = [a, *sorted({p for p in breakpoints if a < p < b}), b]
    total_len = b - a
    value = 0.0
    error = 0.0
    evals = 0
    stack = [(lo, hi, 0) for lo, hi in zip(edges[:-1], edges[1:])]
    while stack:
        lo, hi, depth = stack.pop()
        q1, q2, mag = _panel_pair(G, lo, hi, n)
        evals += 3 * n
        err = abs(q2 - q1) + 1e-15 * mag
        if err <= max(tol * (hi - lo) / total_len, 1e-14 * mag) or depth >= MAX_DEPTH:
            value += q2
            error += err
        else:
            mid = 0.5 * (lo + hi)
            stack.append((lo, mid, depth + 1))
            stack.append((mid, hi, depth + 1))
    return QuadratureResult(value, error, evals)


def chebyshev_singular(phi: Callable, c: float, n: int = DEFAULT_NODES, breakpoints: Iterable[float] = (),
                       with_root: bool = False, tol: float = DEFAULT_TOL) -> QuadratureResult:
    """Integral of phi(y)/sqrt(c^2 - y^2) over [-c, c].

    With ``with_root=True`` phi is called as ``phi(y, w)`` where
    ``w = sqrt(c^2 - y^2)`` is computed as c cos(theta), without cancellation.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    thetas = [math.asin(b / c) for b in breakpoints if -c < b < c]

    def G(theta):
        y = c * np.sin(theta)
        if with_root:
            return phi(y, c * np.cos(theta))
        return phi(y)

    return panel_integral(G, -0.5 * math.pi, 0.5 * math.pi, n, tol, thetas)


def _breakpoints(profiles) -> list[float]:
    pts = set()
    for p in profiles:
        pts.update(p.breakpoints())
    return sorted(pts)


# ---------------------------------------------------------------------------
# proof identities

def parabolic_kernel_integral(c: float, n: int = DEFAULT_NODES) -> QuadratureResult:
    """Integral of (c - sqrt(c^2-y^2))/(y^2 sqrt(c^2-y^2)); equals 2/c."""
    # (c - w)/y^2 = 1/(c + w)
    return chebyshev_singular(lambda y, w: 1.0 / (c + w), c, n, with_root=True)


def elliptic_kernel_integral(c: float, n: int = DEFAULT_NODES) -> QuadratureResult:
    """Integral of sqrt(c^2+1)/((1+y^2) sqrt(c^2-y^2)); equals pi."""
    s = math.sqrt(c * c + 1.0)
    return chebyshev_singular(lambda y: s / (1.0 + y * y), c, n)


def hyperbolic_kernel_integral(c: float, n: int = DEFAULT_NODES) -> QuadratureResult:
    """Integral of (sqrt(c^2-1) - sqrt(c^2-y^2))/((y^2-1) sqrt(c^2-y^2)); equals log((c+1)/(c-1))."""
    a = math.sqrt(c * c - 1.0)
    return chebyshev_singular(lambda y, w: 1.0 / (a + w), c, n, with_root=True)


# ---------------------------------------------------------------------------
# closure residuals

def _series_quotient(func_derivs, r: float, e, double: bool):
    """S(y)/(y - r)^2 (double) or S(y)/((y-r)(y+r)) from Taylor data of S at r."""
    d = func_derivs
    if double:
        return d[2] / 2.0 + d[3] * e / 6.0 + d[4] * e * e / 24.0
    q = d[1] + d[2] * e / 2.0 + d[3] * e * e / 6.0 + d[4] * e**3 / 24.0
    return q / (e + 2.0 * r)


def _sum_derivs(profiles, point: float):
    return [sum(float(p.derivative(point, m)) for p in profiles) for m in range(5)]


def parabolic_sum(spec: ParabolicSpec, y):
    """Sum over all 2k charts of sqrt(1 - y^2 f_i) - 1, i.e. 2 * sum_j kappa_j."""
    return 2.0 * sum(np.asarray(k.value(y), dtype=float) for k in spec.kappas)


def closure_residual_parabolic(spec: ParabolicSpec, c: float, n: int = DEFAULT_NODES,
                               tol: float = DEFAULT_TOL) -> float:
    """Closure residual: integral of c * 2 sum_j kappa_j / (y^2 sqrt(c^2-y^2)) plus tau.

    Zero if and only if the unit spacelike geodesics with |g(gamma', K)| = c close.
    """
    if not c > 0:
        raise ValueError("parabolic Clairaut constant must be positive")
    d0 = [2.0 * v for v in _sum_derivs(spec.kappas, 0.0)]

    def phi(y):
        out = np.empty_like(y)
        near = np.abs(y) < SERIES_RADIUS
        far = ~near
        out[far] = parabolic_sum(spec, y[far]) / (y[far] ** 2)
        out[near] = _series_quotient(d0, 0.0, y[near], True)
        return c * out

    res = chebyshev_singular(phi, c, n, _breakpoints(spec.kappas), tol=tol)
    return res.value + spec.tau


def closure_residual_elliptic(spec: EllipticSpec, c: float, n: int = DEFAULT_NODES,
                              tol: float = DEFAULT_TOL) -> float:
    """Integral of sqrt(c^2+1) (sqrt(1 - f (y^2+1)) - p tau/(2 pi q)) / ((1+y^2) sqrt(c^2-y^2))."""
    if not c > 0:
        raise ValueError("elliptic Clairaut parameter must be positive")
    s = spec.shift
    a = math.sqrt(c * c + 1.0)

    def phi(y):
        # sqrt(1 - f (y^2+1)) = |kappa + shift|
        return a * (np.abs(np.asarray(spec.kappa.value(y)) + s) - s) / (1.0 + y * y)

    return chebyshev_singular(phi, c, n, _breakpoints([spec.kappa]), tol=tol).value


def sigma_gamma(spec: HyperbolicSpec, i0: int) -> list[int]:
    """Charts met by a geodesic tangent to K in U_{i0}: {2i + (1 + (-1)^{i+1})/2 + i0}."""
    if i0 % 2:
        raise ValueError("i0 must be even")
    n = 4 * spec.k
    return [(2 * i + (1 + (-1) ** (i + 1)) // 2 + i0) % n for i in range(2 * spec.k)]


def _region_profiles(spec: HyperbolicSpec, charts, probe: float):
    return [spec.kappas[profile_index(spec, ch, probe)] for ch in charts]


def hyperbolic_sum(spec: HyperbolicSpec, charts, y):
    """Sum over the given charts of sqrt(1 - (y^2-1) f_i) - 1 = kappa of the chart."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    for probe, sel in ((-2.0, y < -1.0), (0.0, np.abs(y) <= 1.0), (2.0, y > 1.0)):
        if np.any(sel):
            for p in _region_profiles(spec, charts, probe):
                out[sel] += p.value(y[sel])
    return out


def closure_residual_hyperbolic(spec: HyperbolicSpec, c: float, i0: int = 0, n: int = DEFAULT_NODES,
                                tol: float = DEFAULT_TOL) -> float:
    """Integral of sqrt(c^2-1) sum_{i in sigma} kappa_(i)(y) / ((y^2-1) sqrt(c^2-y^2)).

    Split at y = +-1 where the integrand has removable singularities; within
    SERIES_RADIUS of +-1 the quotient comes from one-sided Taylor data.
    """
    if not c > 1:
        raise ValueError("hyperbolic Clairaut parameter must exceed 1")
    charts = sigma_gamma(spec, i0)
    a = math.sqrt(c * c - 1.0)
    series = {}
    for r in (-1.0, 1.0):
        inner = _sum_derivs(_region_profiles(spec, charts, 0.0), r)
        outer = _sum_derivs(_region_profiles(spec, charts, 2.0 * r), r)
        series[r] = (inner, outer)

    def phi(y):
        out = hyperbolic_sum(spec, charts, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = out / (y * y - 1.0)
        for r, (inner, outer) in series.items():
            e = y - r
            near = np.abs(e) < SERIES_RADIUS
            if np.any(near):
                is_inner = np.abs(y) <= 1.0
                sel = near & is_inner
                out[sel] = _series_quotient(inner, r, e[sel], False)
                sel = near & ~is_inner
                out[sel] = _series_quotient(outer, r, e[sel], False)
        return a * out

    bps = _breakpoints(spec.kappas) + [-1.0, 1.0]
    return chebyshev_singular(phi, c, n, bps, tol=tol).value


def closure_residual(spec, c: float, i0: int = 0, n: int = DEFAULT_NODES) -> float:
    if isinstance(spec, ParabolicSpec):
        return closure_residual_parabolic(spec, c, n)
    if isinstance(spec, EllipticSpec):
        return closure_residual_elliptic(spec, c, n)
    if isinstance(spec, HyperbolicSpec):
        return closure_residual_hyperbolic(spec, c, i0, n)
    raise TypeError(f"no closure residual for {type(spec).__name__}")


def c_grid(family: str, count: int = 16, lo: float | None = None, hi: float = 50.0, spacing: str = "log"):
    """Default scan grid of Clairaut constants for a family."""
    if lo is None:
        lo = 1.05 if family == "hyperbolic" else 0.1
    if spacing == "log":
        return np.geomspace(lo, hi, count)
    if spacing == "lin":
        return np.linspace(lo, hi, count)
    raise ValueError(f"unknown grid spacing {spacing!r}")


# ---------------------------------------------------------------------------
# Abel-type transforms

def _regularised_over_square(h: Callable) -> Callable:
    eps = (1e-4, 1e-5)
    r1, r2 = (abs(float(h(np.array([e]))[0])) / (e * e) for e in eps)
    if not (math.isfinite(r1) and math.isfinite(r2)) or r2 > 3.0 * r1 + 1e-6:
        raise ValueError("h/y^2 is singular at 0: h needs a double zero at the origin")
    return lambda y: np.asarray(h(y), dtype=float) / (y * y)


def abel_H(h: Callable, c: float, n: int = DEFAULT_NODES) -> float:
    """H(c) = integral over [-c, c] of c h(y)/(y^2 sqrt(c^2 - y^2))."""
    g = _regularised_over_square(h)
    return chebyshev_singular(lambda y: c * g(y), c, n).value


def abel_I(h: Callable, a: float, n: int = 64) -> float:
    """I(a) = integral over [0, a] of H(t)/sqrt(a^2 - t^2), with t = a sin(phi)."""
    if not a > 0:
        raise ValueError("a must be positive")
    g = _regularised_over_square(h)

    def H_of(t):
        return chebyshev_singular(lambda y: t * g(y), t, 64).value

    def G(phi):
        return np.array([H_of(a * math.sin(p)) for p in np.atleast_1d(phi)])

    return panel_integral(G, 0.0, 0.5 * math.pi, n, tol=1e-12).value


def abel_I_identity_rhs(h: Callable, a: float) -> float:
    """pi times the integral over [0, a] of h(s)/s^2 (scipy adaptive quadrature)."""
    g = lambda s: float(h(np.array([s]))[0]) / (s * s) if s != 0.0 else 0.0
    val, _ = integrate.quad(g, 1e-300, a, epsabs=1e-13, epsrel=1e-13, limit=400)
    return math.pi * val


def abel_H_hyperbolic(h: Callable, c: float, n: int = 128) -> float:
    """H(c) = integral over [0, c] of sqrt(c^2-1) h(s)/sqrt(c^2 - s^2), for c >= 1."""
    def G(theta):
        return np.asarray(h(c * np.sin(theta)), dtype=float)

    return math.sqrt(max(c * c - 1.0, 0.0)) * panel_integral(G, 0.0, 0.5 * math.pi, n, tol=1e-14).value


def abel_J_hyperbolic(h: Callable, a: float, n: int = 64) -> float:
    """J(a) from its definition: integral over [1, a] of c H(c)/(sqrt(a^2-c^2) sqrt(c^2-1)).

    The substitution c^2 = 1 + (a^2 - 1) sin^2(phi) turns both endpoint
    singularities into the smooth integral of H(c(phi)) over [0, pi/2].
    """
    if not a > 1:
        raise ValueError("a must exceed 1")

    def G(phi):
        cs = np.sqrt(1.0 + (a * a - 1.0) * np.sin(np.atleast_1d(phi)) ** 2)
        return np.array([abel_H_hyperbolic(h, c) for c in cs])

    return panel_integral(G, 0.0, 0.5 * math.pi, n, tol=1e-12).value


def _quad(g, lo, hi):
    val, _ = integrate.quad(g, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=400)
    return val


def abel_J_printed_rhs(h: Callable, a: float) -> float:
    """pi int_0^a h - 2 int_0^1 h(s) arctan((1 - s^2)/(a^2 - 1)) ds, as printed in the source."""
    hs = lambda s: float(h(np.array([s]))[0])
    return math.pi * _quad(hs, 0.0, a) - 2.0 * _quad(lambda s: hs(s) * math.atan((1 - s * s) / (a * a - 1)), 0.0, 1.0)


def abel_J_closed_form(h: Callable, a: float) -> float:
    """(pi/2) int_0^a h - int_0^1 h(s) arctan(sqrt((1 - s^2)/(a^2 - 1))) ds.

    Obtained by exchanging the order of integration in J; the inner integral
    over c in [max(1, s), a] is pi/2 - arctan(sqrt((1 - s^2)/(a^2 - 1))) for s < 1.
    """
    hs = lambda s: float(h(np.array([s]))[0])
    inner = lambda s: hs(s) * math.atan(math.sqrt((1 - s * s) / (a * a - 1)))
    return 0.5 * math.pi * _quad(hs, 0.0, a) - _quad(inner, 0.0, 1.0)


def closure_defect(spec, c: float, i0: int = 0, n: int = DEFAULT_NODES) -> float:
    """Signed x-gap per residual unit of a geodesic tangent to K at +-c.

    For the hyperbolic family the tangency geodesics also cross the pair of
    charts whose transition carries the translation tau, so tau is added to
    the integral; for the other families this is the closure residual itself.
    """
    res = closure_residual(spec, c, i0, n)
    if isinstance(spec, HyperbolicSpec):
        res += spec.tau
    return res
