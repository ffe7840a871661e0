"""Lightlike leaves, the reflexion map near a lightlike Killing orbit, and boundary graphs.

Null directions of y^2 dx^2 + 2 dx dy + f dy^2 (with dy = 1) are
dx/dy = kappa/y^2 and dx/dy = -(2 + kappa)/y^2, so every null leaf in a
parabolic chart is a graph x = h(y) + cst or x = 2/y - h(y) + cst, where h is
the primitive of kappa/s^2 vanishing at 0.  The transition x -> -x + 2/y swaps
the two graph types, so the foliation containing the Killing orbit {y = 0}
of U_0 has the 2/y - h form in even charts and the h form in odd charts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from zollsurf.atlas import ChartPoint, metric_at, partner, profile_index
from zollsurf.profiles import ParabolicSpec

SQRT2PI = math.sqrt(2.0) * math.pi
PPP_GRID = 1024
PROBE_STEPS = (1e-2, 5e-3, 2.5e-3)


# ---------------------------------------------------------------------------
# primitives

@dataclass(frozen=True)
class NullPrimitive:
    """h(y) = int_0^y kappa(s)/s^2 ds for one profile, with its limit delta at -infinity."""

    kappa: object

    def __call__(self, y):
        return self.kappa.primitive_over_square(y)

    @property
    def delta(self) -> float:
        return self.kappa.limit_at_minus_infinity()

    @property
    def delta_plus(self) -> float:
        return self.kappa.limit_at_plus_infinity()


def _require_parabolic(spec):
    if not isinstance(spec, ParabolicSpec):
        raise TypeError("null leaves in closed form are available for the parabolic family only")


def chart_primitive(spec: ParabolicSpec, chart: int, y: float) -> float:
    """Primitive of kappa/s^2 for the profile governing chart ``chart`` on the side of y."""
    return float(spec.kappas[profile_index(spec, chart, y)].primitive_over_square(float(y)))


def chart_limit(spec: ParabolicSpec, chart: int, side: int) -> float:
    prof = spec.kappas[profile_index(spec, chart, float(side))]
    return prof.limit_at_minus_infinity() if side < 0 else prof.limit_at_plus_infinity()


# ---------------------------------------------------------------------------
# null leaves

@dataclass(frozen=True)
class LeafPiece:
    """x = h(y) + const (kind 'h') or x = 2/y - h(y) + const (kind 'inv') on (y_lo, y_hi)."""

    chart: int
    kind: str
    const: float
    y_lo: float
    y_hi: float

    def x(self, spec, y: float) -> float:
        hv = chart_primitive(spec, self.chart, y)
        return hv + self.const if self.kind == "h" else 2.0 / y - hv + self.const

    def slope(self, spec, y: float) -> float:
        kap = float(spec.kappas[profile_index(spec, self.chart, y)].value(y))
        return kap / (y * y) if self.kind == "h" else -(2.0 + kap) / (y * y)

    def asymptote(self, spec, side: int) -> float:
        """Vertical asymptote x = const +- delta as y -> side * infinity."""
        lim = chart_limit(spec, self.chart, side)
        return self.const + lim if self.kind == "h" else self.const - lim


@dataclass(frozen=True)
class NullLeaf:
    foliation: int
    pieces: tuple
    killing_orbit: bool = False

    def asymptotes(self, spec) -> list[tuple[int, int, float]]:
        """(chart, side, x) for every end of a piece that reaches y = +-infinity."""
        out = []
        for p in self.pieces:
            for side, end in ((-1, p.y_lo), (1, p.y_hi)):
                if math.isinf(end):
                    out.append((p.chart, side, p.asymptote(spec, side)))
        return out

    def asymptote(self, spec, chart: int, side: int) -> float:
        for ch, sd, val in self.asymptotes(spec):
            if ch == chart and sd == side:
                return val
        raise ValueError(f"leaf has no asymptote in chart {chart} towards y = {side:+d} infinity")


def leaf_kind(chart: int, foliation: int) -> str:
    if foliation not in (1, 2):
        raise ValueError("foliation must be 1 or 2")
    inv = (chart % 2 == 0) == (foliation == 1)
    return "inv" if inv else "h"


def _piece_through(spec, chart, kind, x, y):
    hv = chart_primitive(spec, chart, y)
    const = x - hv if kind == "h" else x - 2.0 / y + hv
    if kind == "h":
        return LeafPiece(chart, kind, const, -math.inf, math.inf)
    return LeafPiece(chart, kind, const, *((0.0, math.inf) if y > 0 else (-math.inf, 0.0)))


def null_trace(spec: ParabolicSpec, p: ChartPoint, foliation: int, until: float | None = None) -> NullLeaf:
    """The null leaf through p, continued across one transition if needed to reach y = until.

    A leaf of 2/y - h type cannot cross y = 0 in its chart; it is moved to the
    partner chart over its own half-plane, where it has h type and crosses.
    """
    _require_parabolic(spec)
    kind = leaf_kind(p.chart, foliation)
    if p.y == 0.0:
        if kind == "inv":
            return NullLeaf(foliation, (LeafPiece(p.chart, "orbit", 0.0, 0.0, 0.0),), killing_orbit=True)
        return NullLeaf(foliation, (_piece_through(spec, p.chart, kind, p.x, 0.0),))
    first = _piece_through(spec, p.chart, kind, p.x, p.y)
    if until is None or first.y_lo <= until <= first.y_hi and until != 0.0 or kind == "h":
        return NullLeaf(foliation, (first,))
    if until == 0.0:
        raise ValueError("a 2/y - h leaf never reaches y = 0; it is asymptotic to the Killing orbit")
    other, shift = partner(spec, p.chart, p.y)
    x_other = -p.x + 2.0 / p.y + shift
    second = _piece_through(spec, other, leaf_kind(other, foliation), x_other, p.y)
    if not second.y_lo <= until <= second.y_hi:
        raise ValueError(f"y = {until} is unreachable along this leaf")
    return NullLeaf(foliation, (first, second))


def null_defect(spec: ParabolicSpec, leaf: NullLeaf, ys) -> float:
    """max |g(T, T)| / |T|^2 over sampled points, with T = (dx/dy, 1) the leaf tangent."""
    worst = 0.0
    for piece in leaf.pieces:
        for y in ys:
            if not piece.y_lo < y < piece.y_hi or y == 0.0:
                continue
            dx = piece.slope(spec, y)
            m = metric_at(spec, ChartPoint(piece.chart, piece.x(spec, y), y))
            worst = max(worst, abs(m.norm(dx, 1.0)) / (1.0 + dx * dx))
    return worst


# ---------------------------------------------------------------------------
# reflexion map near the Killing orbit {y = 0} of U_0

def _h(spec, j):
    return NullPrimitive(spec.kappas[j % spec.k])


def _solve_monotone(func, target, guess, sign_side):
    """Root of func(z) = target with z on the side sign_side of 0, starting near guess."""
    g = lambda z: func(z) - target
    lo = guess if guess * sign_side > 0 else sign_side * 1e-3
    a, b = lo / 2.0, lo * 2.0
    for _ in range(200):
        if g(a) * g(b) <= 0:
            return optimize.brentq(g, min(a, b), max(a, b), xtol=1e-300, rtol=1e-15, maxiter=200)
        a, b = a / 2.0, b * 2.0
    raise RuntimeError(f"no bracket for the reflexion equation near z={guess:.3g} (target {target:.6g})")


def reflexion_P(spec: ParabolicSpec, y: float) -> float:
    """P in the transversal coordinates (0, y) of U_0 and (0, z) of U_1, as stated in closed form.

    y > 0: F(z) = 2/y + delta_1 - h_0(y) with F(z) = -delta_1 + h_1(z) - 2/z, z < 0.
    y < 0: G(z) = -2/y - delta_0 + h_0(y) with G(z) = delta_0 + 2/z - h_0(z), z > 0.
    """
    _require_parabolic(spec)
    if y == 0.0:
        raise ValueError("y = 0 is the Killing orbit itself (P maps it to 0)")
    h0, h1 = _h(spec, 0), _h(spec, 1)
    d0, d1 = h0.delta, h1.delta
    if y > 0:
        target = 2.0 / y + d1 - h0(y)
        F = lambda z: -d1 + h1(z) - 2.0 / z
        return _solve_monotone(F, target, -2.0 / (target + d1) if target + d1 > 0 else -y, -1)
    target = -2.0 / y - d0 + h0(y)
    G = lambda z: d0 + 2.0 / z - h0(z)
    return _solve_monotone(G, target, 2.0 / (target - d0) if target - d0 > 0 else -y, 1)


def reflexion_P_proof_cut(spec: ParabolicSpec, y: float) -> float:
    """y < 0 branch using the cut point (h_1(z) + 2/z, 0) written in the proof; y > 0 as stated."""
    if y > 0:
        return reflexion_P(spec, y)
    h0, h1 = _h(spec, 0), _h(spec, 1)
    target = -2.0 * h0.delta + h0(y) - 2.0 / y
    G = lambda z: h1(z) + 2.0 / z
    return _solve_monotone(G, target, -y, 1)


def reflexion_P_geometric(spec: ParabolicSpec, y: float) -> float:
    """P from its definition: the leaf of the second foliation sharing the boundary asymptote.

    Both leaves are traced with null_trace and compared through their vertical
    asymptotes at y -> -infinity in a common chart.
    """
    _require_parabolic(spec)
    if y == 0.0:
        raise ValueError("y = 0 is the Killing orbit itself")
    eta = null_trace(spec, ChartPoint(0, 0.0, y), 1, until=-math.inf)
    common = 1 if y > 0 else 0
    target = eta.asymptote(spec, common, -1)

    def asym(z):
        bar = null_trace(spec, ChartPoint(1, 0.0, z), 2, until=-math.inf)
        return bar.asymptote(spec, common, -1)

    return _solve_monotone(asym, target, -y, -1 if y > 0 else 1)


def convention_report(spec: ParabolicSpec, ys, tol: float = 1e-9) -> dict:
    """Max deviation of each closed-form convention from the geometric P on the sample ys."""
    geo = np.array([reflexion_P_geometric(spec, y) for y in ys])
    out = {}
    for name, fn in (("statement", reflexion_P), ("proof_cut_point", reflexion_P_proof_cut)):
        dev = float(np.max(np.abs(np.array([fn(spec, y) for y in ys]) - geo)))
        out[name] = {"max_deviation": dev, "matches": dev <= tol}
    return out


def reflexion_closed_form(y: float, delta0: float, delta1: float, a: float = 1.0) -> float:
    """P for h_0(s) = h_1(s) = a s near 0 (kappa = a s^2); a = 1 is the quadratic-germ case.

    Written with the rationalised root so that a = 0 (flat germs) is included.
    """
    if y > 0:
        w = 2.0 / y + 2.0 * delta1 - a * y
        return -4.0 / (w + math.sqrt(w * w + 8.0 * a))
    if y < 0:
        w = 2.0 / y + 2.0 * delta0 - a * y
        return 4.0 / (math.sqrt(w * w + 8.0 * a) - w)
    return 0.0


def predicted_jump(delta0: float, delta1: float) -> float:
    """|P''(0+) - P''(0-)|: P(y) = -y + delta_1 y^2 + O(y^3) for y > 0 and -y + delta_0 y^2 for y < 0."""
    return 2.0 * abs(delta1 - delta0)


@dataclass(frozen=True)
class ProbeReport:
    d1_right: float
    d1_left: float
    d2_right: float
    d2_left: float

    @property
    def c1_match(self) -> float:
        return abs(self.d1_right - self.d1_left)

    @property
    def second_derivative_jump(self) -> float:
        return abs(self.d2_right - self.d2_left)


def _richardson(vals):
    """Two levels of Richardson extrapolation for step ratio 2 and error c1 h + c2 h^2."""
    r1 = [2.0 * vals[i + 1] - vals[i] for i in range(len(vals) - 1)]
    return (4.0 * r1[1] - r1[0]) / 3.0


def regularity_probe(P: Callable[[float], float], steps=PROBE_STEPS, p0: float = 0.0) -> ProbeReport:
    """One-sided first and second derivatives of P at 0, Richardson-extrapolated."""
    out = []
    for side in (1.0, -1.0):
        d1, d2 = [], []
        for h in steps:
            p1, p2 = P(side * h), P(2 * side * h)
            d1.append((p1 - p0) / (side * h))
            d2.append((p2 - 2.0 * p1 + p0) / (h * h))
        out.append((_richardson(d1), _richardson(d2)))
    (r1, r2), (l1, l2) = out
    return ProbeReport(r1, l1, r2, l2)


def monotone_defect(P: Callable[[float], float], ys) -> bool:
    """True iff P is strictly decreasing on each side of 0 over the sample."""
    ys = np.sort(np.asarray(ys, dtype=float))
    ok = True
    for side in (ys[ys > 0], ys[ys < 0]):
        vals = np.array([P(y) for y in side])
        ok &= bool(np.all(np.diff(vals) < 0)) and bool(np.all(np.sign(vals) == -np.sign(side)))
    return ok


# ---------------------------------------------------------------------------
# boundary graphs and the ping-pong property

def _invert_equivariant(theta, period, v):
    """Solve theta(x) = v for an increasing theta with theta(x + period) = theta(x) + period."""
    x0 = v - (theta(v) - v)
    a, b = x0 - period, x0 + period
    while theta(a) > v:
        a -= period
    while theta(b) < v:
        b += period
    return optimize.brentq(lambda x: theta(x) - v, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)


@dataclass(frozen=True)
class BoundaryGraph:
    """Lifted future/past conformal boundary: two increasing equivariant maps theta_+ > theta_-."""

    theta_plus: Callable[[float], float]
    theta_minus: Callable[[float], float]
    period: float = SQRT2PI
    theta_minus_inv: Callable[[float], float] | None = None

    def minus_inverse(self, v: float) -> float:
        if self.theta_minus_inv is not None:
            return self.theta_minus_inv(v)
        return _invert_equivariant(self.theta_minus, self.period, v)

    def T(self, x: float) -> float:
        return self.minus_inverse(self.theta_plus(x))

    def check(self, n: int = PPP_GRID) -> None:
        xs = np.linspace(0.0, self.period, n + 1)
        for name, th in (("theta_plus", self.theta_plus), ("theta_minus", self.theta_minus)):
            vals = np.array([th(x) for x in xs])
            if not np.all(np.diff(vals) > 0):
                raise ValueError(f"{name} is not strictly increasing")
            if abs(vals[-1] - vals[0] - self.period) > 1e-9 * max(1.0, abs(vals[-1])):
                raise ValueError(f"{name} is not equivariant under x -> x + period")
        if not all(self.theta_plus(x) > self.theta_minus(x) for x in xs):
            raise ValueError("theta_plus must lie above theta_minus")

    @staticmethod
    def translations(a_plus: float, a_minus: float, period: float = SQRT2PI) -> "BoundaryGraph":
        return BoundaryGraph(lambda s: s + a_plus, lambda s: s + a_minus, period, lambda v: v - a_minus)


def desitter_boundary(k: int = 1) -> BoundaryGraph:
    """theta_pm(s) = s +- pi/(k sqrt 2): de Sitter space (k = 1) or its k-fold cover."""
    a = math.pi / (k * math.sqrt(2.0))
    return BoundaryGraph.translations(a, -a)


def conjugated_boundary(b: BoundaryGraph, phi: Callable[[float], float]) -> BoundaryGraph:
    """theta_pm o phi, for an increasing equivariant phi."""
    return BoundaryGraph(lambda s: b.theta_plus(phi(s)), lambda s: b.theta_minus(phi(s)), b.period)


def ppp_check(b: BoundaryGraph, k: int, n: int = PPP_GRID) -> float:
    """sup over one period of |T^k(x) - x - period| with T = (theta_-)^{-1} o theta_+."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    b.check()
    worst = 0.0
    for x in np.linspace(0.0, b.period, n, endpoint=False):
        y = float(x)
        for _ in range(k):
            y = b.T(y)
        worst = max(worst, abs(y - x - b.period))
    return worst


@dataclass(frozen=True)
class Normalization:
    psi: Callable[[float], float]
    conjugation_residual: float
    translation: float
    boundary: BoundaryGraph


def normalize_boundary(b: BoundaryGraph, k: int, n: int = PPP_GRID, pre_tol: float = 1e-8) -> Normalization:
    """psi = (1/k) sum_j (T^j - j period/k) conjugates T to the translation by period/k."""
    res = ppp_check(b, k, n)
    if res > pre_tol:
        raise ValueError(f"boundary data fail the {k}-ping-pong property (residual {res:.3g})")
    step = b.period / k

    def psi(x):
        acc, y = 0.0, float(x)
        for j in range(k):
            acc += y - j * step
            y = b.T(y)
        return acc / k

    worst = 0.0
    for x in np.linspace(0.0, b.period, n, endpoint=False):
        worst = max(worst, abs(psi(b.T(float(x))) - psi(float(x)) - step))

    def psi_inv(v):
        return _invert_equivariant(psi, b.period, v)

    normalized = BoundaryGraph(lambda s: b.theta_plus(psi_inv(s)), lambda s: b.theta_minus(psi_inv(s)), b.period)
    return Normalization(psi, worst, step, normalized)


# ---------------------------------------------------------------------------
# de Sitter as a conformally flat strip

def desitter_conformal_profile(t: float) -> float:
    """The conformal coordinate 2 arctan(e^t) of de Sitter space, solving psi' = cosh psi inversely."""
    return 2.0 * math.atan(math.exp(t))


def desitter_conformal_height() -> float:
    """Height of the flat strip conformal to de Sitter space: the limit of the profile, pi."""
    return 2.0 * (math.pi / 2.0)


def desitter_profile_by_ode(t0: float, t1: float) -> float:
    """Oracle: integrate psi' = cosh(psi) from s0 = 2 arctan(e^t0), where psi = t0, to s1 = 2 arctan(e^t1).

    Returns psi(s1), which equals t1 when the profile is the inverse of psi.
    """
    s0, s1 = desitter_conformal_profile(t0), desitter_conformal_profile(t1)
    sol = integrate.solve_ivp(lambda s, p: [math.cosh(p[0])], (s0, s1), [t0], method="DOP853",
                              rtol=1e-13, atol=1e-13)
    return float(sol.y[0, -1])
