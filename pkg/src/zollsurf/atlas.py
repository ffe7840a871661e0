"""Chart atlases of the three families: transitions, metric, Killing norm, curvature.

In every chart the Killing field is ``K = d/dx`` and the metric reads
``h(y) dx^2 + 2 dx dy + f_i(y) dy^2``.  Chart indices live in Z/2k
(parabolic), Z/4k (hyperbolic) or {0} (elliptic, where the cylinder is the
quotient of one chart by ``x -> x + tau``).

Hyperbolic adjacency, reconstructed from the transition list and checked by
the involution/isometry tests:

* on P0 (|y| < 1): 2i <-> 2i+1
* on P- (y < -1):  2i <-> 2i+3, the pair {4k-2, 1} carries +tau
* on P+ (y > 1):   2i <-> 2i-1, the pair {4k-1, 0} carries -tau

so f_{2i+1} uses kappa_i on P0, kappa_{i-1} on P- and kappa_{i+1} on P+.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from zollsurf.profiles import (
    EllipticSpec,
    HyperbolicSpec,
    ParabolicSpec,
    alpha_poly,
    f_derivatives,
)


class ChartError(ValueError):
    """Invalid chart index, chart pair, or point outside a transition domain."""


class OnKillingOrbit(ValueError):
    """The point lies on a lightlike orbit of K, where a normalisation degenerates."""


@dataclass(frozen=True)
class ChartPoint:
    chart: int
    x: float
    y: float


@dataclass(frozen=True)
class MetricCoeffs:
    h: float
    m: float
    f: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.h, self.m], [self.m, self.f]])

    def norm(self, dx: float, dy: float) -> float:
        return self.h * dx * dx + 2 * self.m * dx * dy + self.f * dy * dy


@dataclass(frozen=True)
class TangentVector:
    base: ChartPoint
    dx: float
    dy: float


def _check_chart(spec, chart: int):
    if not (isinstance(chart, (int, np.integer)) and 0 <= chart < spec.n_charts):
        raise ChartError(f"chart {chart} is not a valid index for {spec.family} spec with {spec.n_charts} charts")


# ---------------------------------------------------------------------------
# which profile governs f in a chart

def hyperbolic_region(y: float) -> str:
    if y > 1.0:
        return "P+"
    if y < -1.0:
        return "P-"
    if -1.0 < y < 1.0:
        return "P0"
    return "boundary"


def profile_index(spec, chart: int, y: float) -> int:
    """Index of the kappa profile defining f_chart near y."""
    if isinstance(spec, ParabolicSpec):
        k = spec.k
        return (chart // 2) if y >= 0 else (-(-chart // 2)) % k
    if isinstance(spec, HyperbolicSpec):
        k2 = 2 * spec.k
        i = chart // 2
        if chart % 2 == 0 or abs(y) <= 1.0:
            return i
        return (i - 1) % k2 if y < -1.0 else (i + 1) % k2
    if isinstance(spec, EllipticSpec):
        return 0
    raise TypeError(f"no chart atlas for {type(spec).__name__}")


def profile_indices(spec, chart: int, y: np.ndarray) -> np.ndarray:
    """Vectorised ``profile_index``."""
    if isinstance(spec, ParabolicSpec):
        return np.where(y >= 0, chart // 2, (-(-chart // 2)) % spec.k)
    if isinstance(spec, HyperbolicSpec):
        k2 = 2 * spec.k
        i = chart // 2
        if chart % 2 == 0:
            return np.full(y.shape, i)
        return np.where(np.abs(y) <= 1.0, i, np.where(y < -1.0, (i - 1) % k2, (i + 1) % k2))
    if isinstance(spec, EllipticSpec):
        return np.zeros(y.shape, dtype=int)
    raise TypeError(f"no chart atlas for {type(spec).__name__}")


def _profiles(spec):
    return (spec.kappa,) if isinstance(spec, EllipticSpec) else spec.kappas


def _shift(spec) -> float:
    return spec.shift if isinstance(spec, EllipticSpec) else 1.0


def chart_f(spec, chart: int, y, order: int = 0):
    """f_chart and its derivatives up to ``order`` on an array of y."""
    y = np.asarray(y, dtype=float)
    flat = y.ravel()
    out = [np.empty_like(flat) for _ in range(order + 1)]
    idx = profile_indices(spec, chart, flat)
    profs = _profiles(spec)
    for j in np.unique(idx):
        sel = idx == j
        vals = f_derivatives(spec.family, profs[j], _shift(spec), flat[sel], order)
        for m in range(order + 1):
            out[m][sel] = vals[m]
    return [o.reshape(y.shape) for o in out]


def chart_kappa(spec, chart: int, y):
    """The kappa profile value governing f_chart at each y."""
    y = np.asarray(y, dtype=float)
    flat = y.ravel()
    out = np.empty_like(flat)
    profs = _profiles(spec)
    for n, v in enumerate(flat):
        out[n] = float(profs[profile_index(spec, chart, v)].value(v))
    return out.reshape(y.shape)


# ---------------------------------------------------------------------------
# transitions

def partner(spec, chart: int, y: float) -> tuple[int, float]:
    """(adjacent chart, translation term) of the transition defined at height y."""
    _check_chart(spec, chart)
    if isinstance(spec, ParabolicSpec):
        n = 2 * spec.k
        if y > 0:
            return (chart + 1 if chart % 2 == 0 else chart - 1), 0.0
        if y < 0:
            other = (chart - 1) % n if chart % 2 == 0 else (chart + 1) % n
            return other, (spec.tau if {chart, other} == {n - 1, 0} else 0.0)
        raise ChartError("parabolic transitions are not defined on y = 0")
    if isinstance(spec, HyperbolicSpec):
        n = 4 * spec.k
        region = hyperbolic_region(y)
        if region == "P0":
            return (chart + 1 if chart % 2 == 0 else chart - 1), 0.0
        if region == "P-":
            other = (chart + 3) % n if chart % 2 == 0 else (chart - 3) % n
            return other, (spec.tau if {chart, other} == {n - 2, 1} else 0.0)
        if region == "P+":
            other = (chart - 1) % n if chart % 2 == 0 else (chart + 1) % n
            return other, (-spec.tau if {chart, other} == {n - 1, 0} else 0.0)
        raise ChartError("hyperbolic transitions are not defined on y = +-1")
    raise ChartError(f"{spec.family} atlas has no transition maps")


def transition_offset(spec, y):
    """L(y) in x -> -x + L(y) (+ translation term)."""
    if isinstance(spec, ParabolicSpec):
        return 2.0 / y
    if abs(y) < 1.0:
        return math.log((1.0 + y) / (1.0 - y))
    return math.log((y + 1.0) / (y - 1.0))


def transition_offset_derivative(spec, y):
    if isinstance(spec, ParabolicSpec):
        return -2.0 / (y * y)
    return -2.0 / (y * y - 1.0)


def transition(spec, frm: int, to: int, p: ChartPoint) -> ChartPoint:
    """Image of p under Phi_{frm,to}; raises ChartError outside the domain."""
    _check_chart(spec, frm)
    _check_chart(spec, to)
    if p.chart != frm:
        raise ChartError(f"point is in chart {p.chart}, not {frm}")
    other, shift = partner(spec, frm, p.y)
    if other != to:
        raise ChartError(f"charts {frm} and {to} are not glued at y={p.y}")
    return ChartPoint(to, -p.x + transition_offset(spec, p.y) + shift, p.y)


def transition_vector(spec, frm: int, to: int, v: TangentVector) -> TangentVector:
    """Push a tangent vector through Phi_{frm,to} (the differential is exact)."""
    base = transition(spec, frm, to, v.base)
    dx = -v.dx + transition_offset_derivative(spec, v.base.y) * v.dy
    return TangentVector(base, dx, v.dy)


# ---------------------------------------------------------------------------
# metric data

def metric_at(spec, p: ChartPoint) -> MetricCoeffs:
    _check_chart(spec, p.chart)
    h = float(alpha_poly(spec.family)(p.y))
    f = float(chart_f(spec, p.chart, np.array([p.y]))[0][0])
    return MetricCoeffs(h, 1.0, f)


def alpha(spec, p: ChartPoint) -> float:
    """g(K, K) = h(y)."""
    _check_chart(spec, p.chart)
    return float(alpha_poly(spec.family)(p.y))


def brioschi_curvature(E, E1, E2, G, G1):
    """Gauss curvature of E(y)dx^2 + 2dxdy + G(y)dy^2 (all data depend on y only).

    Brioschi's determinant formula with F = 1 and no x-dependence; the sign is
    such that de Sitter space has curvature +1.
    """
    det = E * G - 1.0
    num = -0.5 * E2 * det + 0.25 * E * E1 * G1 + 0.25 * E1 * E1 * G
    return num / (det * det)


def curvature_at(spec, p: ChartPoint, method: str = "analytic") -> float:
    """Gauss curvature at p; ``method='fd'`` uses 5-point differences of f."""
    _check_chart(spec, p.chart)
    hp = alpha_poly(spec.family)
    y = p.y
    E, E1, E2 = hp(y), hp.deriv(1)(y), hp.deriv(2)(y)
    if method == "analytic":
        G, G1 = (float(v[0]) for v in chart_f(spec, p.chart, np.array([y]), 1))
    elif method == "fd":
        step = 1e-4
        ys = y + step * np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
        fs = chart_f(spec, p.chart, ys)[0]
        G = fs[2]
        G1 = (fs[0] - 8 * fs[1] + 8 * fs[3] - fs[4]) / (12 * step)
    else:
        raise ValueError(f"unknown curvature method {method!r}")
    return float(brioschi_curvature(E, E1, E2, G, G1))


def lightlike_directions(spec: ParabolicSpec, p: ChartPoint) -> tuple[TangentVector, TangentVector]:
    """The two null directions normalised by dy = 1."""
    if not isinstance(spec, ParabolicSpec):
        raise TypeError("lightlike directions in this normalisation are parabolic-only")
    _check_chart(spec, p.chart)
    if p.y == 0.0:
        raise OnKillingOrbit("y = 0 is a lightlike orbit of K; the dy = 1 normalisation degenerates")
    kap = float(chart_kappa(spec, p.chart, np.array([p.y]))[0])
    y2 = p.y * p.y
    return TangentVector(p, kap / y2, 1.0), TangentVector(p, -(2.0 + kap) / y2, 1.0)


# ---------------------------------------------------------------------------
# hole filling for the hyperbolic atlas

def filled_F(spec: HyperbolicSpec, u, v, order: int = 0):
    """F(u, v) = f_0(uv - 1) for u >= 0 and f_2(uv - 1) for u < 0, with derivatives in y."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    y = u * v - 1.0
    pos = chart_f(spec, 0, y, order)
    neg = chart_f(spec, 2 % spec.n_charts, y, order)
    return [np.where(u >= 0, a, b) for a, b in zip(pos, neg)]


def filled_metric_at(spec: HyperbolicSpec, u: float, v: float) -> np.ndarray:
    """Metric on the (u, v) plane that fills the zero of K between U_0 and U_2.

    The coefficient of du^2 is v^2 (1 + F): this is what the pullback of the
    chart metric by psi_0(u, v) = (log u, uv - 1) produces, and it makes the
    Killing norm of u d_u - v d_v equal to y^2 - 1.
    """
    F = float(filled_F(spec, u, v)[0])
    a = v * v * (1.0 + F)
    b = 1.0 + u * v * F
    c = u * u * F
    return np.array([[a, b], [b, c]])


def psi0(u, v):
    return math.log(u), u * v - 1.0


def psi2(spec: HyperbolicSpec, u, v):
    return math.log(-u) + spec.tau, u * v - 1.0


def pullback(metric: np.ndarray, jac: np.ndarray) -> np.ndarray:
    return jac.T @ metric @ jac
