"""Spacelike geodesics: Clairaut shooting, direct ODE integration, ambient blend.

Along a unit spacelike geodesic the Clairaut quantity g(gamma', K) = C is
conserved.  In all three families C = sqrt(h(c)) where y = +-c are the lines
of tangency with K, and on an arc oriented by C > 0

    dx/dy = (C sqrt(1 - f h) - sqrt(c^2 - y^2)) / (h sqrt(c^2 - y^2)),
    dt/dy = sqrt(1 - f h) / sqrt(c^2 - y^2).

Multiplying numerator and denominator by the conjugate gives the regular form
dx/dy = (1 - C^2 f) / ((C sqrt(1 - f h) + w) w), w = sqrt(c^2 - y^2), which is
what the shooting quadrature evaluates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from zollsurf.atlas import (
    ChartPoint,
    TangentVector,
    chart_f,
    filled_F,
    metric_at,
    partner,
    profile_index,
    transition_vector,
)
from zollsurf.profiles import (
    ETA,
    N_NULL,
    AmbientPoint,
    BlaschkeSpec,
    EllipticSpec,
    HyperbolicSpec,
    ParabolicSpec,
    alpha_poly,
    blaschke_phi,
)
from zollsurf.quad import DEFAULT_NODES, chebyshev_singular

SHOOT_TOL = 1e-6
ODE_TOL = 1e-5
AMBIENT_TOL = 1e-5


class RepresentationError(ValueError):
    """A geodesic cannot be represented in the requested chart."""


class ConservationError(RuntimeError):
    """Unit speed or the Clairaut integral drifted beyond the allowed bound."""


@dataclass(frozen=True)
class GeodesicArc:
    chart: int
    c: float
    eps: int
    eps1: int
    y_from: float
    y_to: float
    x_start: float
    x_shift: float
    length: float


@dataclass(frozen=True)
class ClosureReport:
    family: str
    c: float
    start_chart: int
    arcs: tuple
    signed_gap: float
    terminal_gap: float
    total_length: float
    tolerance: float = SHOOT_TOL

    @property
    def closed(self) -> bool:
        return self.terminal_gap <= self.tolerance

    @property
    def residual_scale(self) -> int:
        """Number of closure residuals contained in the gap (2q for elliptic, else 1)."""
        if self.family == "elliptic":
            return len(self.arcs)
        return 1

    @property
    def tangencies(self) -> list[tuple[int, float]]:
        return [(a.chart, a.y_to) for a in self.arcs]


def clairaut_C(spec, c: float) -> float:
    """g(gamma', K) on geodesics tangent to K at y = +-c."""
    admissible(spec, c)
    return math.sqrt(float(alpha_poly(spec.family)(c)))


def admissible(spec, c: float):
    lo = 1.0 if isinstance(spec, HyperbolicSpec) else 0.0
    if not (math.isfinite(c) and c > lo):
        raise ValueError(f"inadmissible Clairaut constant c={c} for the {spec.family} family (need c > {lo:g})")


def _roots(spec):
    return {"parabolic": (0.0,), "hyperbolic": (-1.0, 1.0), "elliptic": ()}[spec.family]


def _breaks(spec):
    profs = (spec.kappa,) if isinstance(spec, EllipticSpec) else spec.kappas
    pts = set(_roots(spec))
    for p in profs:
        pts.update(p.breakpoints())
    return sorted(pts)


def _one_minus_fh(spec, chart, y):
    f = chart_f(spec, chart, y)[0]
    h = alpha_poly(spec.family)(y)
    return f, h, np.sqrt(np.maximum(1.0 - f * h, 0.0))


def arc_x_shift(spec, chart: int, c: float, descending_elliptic: bool = False, n: int = DEFAULT_NODES) -> float:
    """Integral of dx/dy over [-c, c] on the regular branch (C > 0) in a chart.

    For elliptic descending arcs the branch with the opposite sign of y' is
    used: dx/dy = -(C sqrt(1 - f h) + w)/(h w), integrated from c down to -c.
    """
    C = clairaut_C(spec, c)

    if descending_elliptic:
        def phi(y, w):
            _, h, s = _one_minus_fh(spec, chart, y)
            return (C * s + w) / h
    else:
        def phi(y, w):
            f, _, s = _one_minus_fh(spec, chart, y)
            return (1.0 - C * C * f) / (C * s + w)

    return chebyshev_singular(phi, c, n, _breaks(spec), with_root=True).value


def arc_length(spec, chart: int, c: float, n: int = DEFAULT_NODES) -> float:
    """Length of the arc between y = -c and y = c: integral of sqrt(1 - f h)/sqrt(c^2 - y^2)."""
    admissible(spec, c)
    return chebyshev_singular(lambda y: _one_minus_fh(spec, chart, y)[2], c, n, _breaks(spec)).value


def shoot(spec, c: float, start_chart: int = 0, x0: float = 0.0, n: int = DEFAULT_NODES,
          tol: float = SHOOT_TOL, lengths: bool = True) -> ClosureReport:
    """Follow the geodesic from the tangency point (x0, -c) of start_chart for one full turn.

    ``lengths=False`` skips the arc-length integrals (reported as nan).
    """
    admissible(spec, c)
    if isinstance(spec, HyperbolicSpec) and start_chart % 2:
        raise RepresentationError("hyperbolic shooting starts in an even chart")
    if not 0 <= start_chart < spec.n_charts:
        raise RepresentationError(f"chart {start_chart} does not exist")

    arcs = []
    if isinstance(spec, EllipticSpec):
        if start_chart != 0:
            raise RepresentationError("the elliptic atlas has a single chart")
        x = x0
        up = arc_x_shift(spec, 0, c, n=n)
        down = arc_x_shift(spec, 0, c, descending_elliptic=True, n=n)
        length = arc_length(spec, 0, c, n) if lengths else math.nan
        for _ in range(abs(spec.q)):
            arcs.append(GeodesicArc(0, c, 1, 1, -c, c, x, up, length))
            x += up
            arcs.append(GeodesicArc(0, c, -1, 1, c, -c, x, down, length))
            x += down
        # the geodesic closes when it has wound p times around the cylinder
        signed = x - x0 - spec.p * spec.tau
        return ClosureReport("elliptic", c, 0, tuple(arcs), signed, abs(signed), 2 * abs(spec.q) * length, tol)

    chart, x, eps = start_chart, x0, 1
    arc_lengths = {}
    shifts = {}
    for _ in range(2 * spec.k):
        if chart not in shifts:
            shifts[chart] = arc_x_shift(spec, chart, c, n=n)
            arc_lengths[chart] = arc_length(spec, chart, c, n) if lengths else math.nan
        dx = eps * shifts[chart]
        y_from, y_to = -eps * c, eps * c
        arcs.append(GeodesicArc(chart, c, eps, 1, y_from, y_to, x, dx, arc_lengths[chart]))
        x += dx
        v = transition_vector(spec, chart, partner(spec, chart, y_to)[0],
                              TangentVector(ChartPoint(chart, x, y_to), 0.0, 0.0))
        chart, x = v.base.chart, v.base.x
        eps = -eps
    if chart != start_chart:
        raise RepresentationError(f"geodesic returned to chart {chart}, not {start_chart}")
    signed = x - x0
    return ClosureReport(spec.family, c, start_chart, tuple(arcs), signed, abs(signed),
                         sum(a.length for a in arcs), tol)


def total_length(spec, c: float, start_chart: int = 0, n: int = DEFAULT_NODES) -> float:
    return shoot(spec, c, start_chart, n=n).total_length


def zoll_length(spec) -> float:
    """Common length expected for a Zoll spec: 2k pi, or p tau in the elliptic family."""
    if isinstance(spec, EllipticSpec):
        return abs(spec.p) * spec.tau
    return 2 * spec.k * math.pi


# ---------------------------------------------------------------------------
# direct integration of the geodesic equations

_H_CONST = {"parabolic": 0.0, "elliptic": 1.0, "hyperbolic": -1.0}


def _chart_data(spec, chart, y):
    """h, h', f, f' at a single height; direct formula away from the zeros of h."""
    h = y * y + _H_CONST[spec.family]
    if abs(h) < 1e-3:
        f, f1 = (float(a[0]) for a in chart_f(spec, chart, np.array([y]), 1))
        return h, 2.0 * y, f, f1
    prof = spec.kappa if isinstance(spec, EllipticSpec) else spec.kappas[profile_index(spec, chart, y)]
    shift = spec.shift if isinstance(spec, EllipticSpec) else 1.0
    arr = np.array([y])
    k = float(prof.derivative(arr, 0)[0]) + shift
    N = 1.0 - k * k
    N1 = -2.0 * k * float(prof.derivative(arr, 1)[0])
    return h, 2.0 * y, N / h, (N1 * h - 2.0 * y * N) / (h * h)


def geodesic_rhs(spec, chart):
    """First-order system for (x, y, x', y') in a chart with metric h dx^2 + 2 dx dy + f dy^2."""
    def rhs(t, s):
        _, y, dx, dy = s
        h, h1, f, f1 = _chart_data(spec, chart, y)
        ax = h1 * dx * dy
        ay = -0.5 * h1 * dx * dx + 0.5 * f1 * dy * dy
        det = h * f - 1.0
        return [dx, dy, -(f * ax - ay) / det, -(-ax + h * ay) / det]

    return rhs


@dataclass
class ODEPath:
    points: list = field(default_factory=list)  # (t, chart, x, y, dx, dy)
    switches: list = field(default_factory=list)
    max_unit_drift: float = 0.0
    max_clairaut_drift: float = 0.0

    def polyline(self):
        return [(p[1], p[2], p[3]) for p in self.points]


def _invariants(spec, chart, s):
    m = metric_at(spec, ChartPoint(chart, s[0], s[1]))
    return m.norm(s[2], s[3]), m.h * s[2] + s[3]


def ode_integrate(spec, v: TangentVector, t_max: float = math.inf, max_tangencies: int | None = None,
                  rtol: float = 1e-12, atol: float = 1e-12, drift_limit: float = 1e-6,
                  samples_per_arc: int = 64) -> ODEPath:
    """Integrate a unit spacelike geodesic with chart switches at tangencies to K.

    Transitions are applied exactly when y' = 0 (the geodesic touches a line
    y = +-c), which keeps every arc on the branch where dx/dy stays bounded.
    """
    if isinstance(spec, BlaschkeSpec):
        raise TypeError("use blaschke_geodesic for the ambient blend")
    if max_tangencies is None and not math.isfinite(t_max):
        raise ValueError("give t_max or max_tangencies")
    p = v.base
    m = metric_at(spec, p)
    nrm = m.norm(v.dx, v.dy)
    if nrm <= 0:
        raise ValueError("initial vector is not spacelike")
    s = np.array([p.x, p.y, v.dx, v.dy]) / np.array([1, 1, math.sqrt(nrm), math.sqrt(nrm)])
    chart, t = p.chart, 0.0
    C0 = abs(_invariants(spec, chart, s)[1])
    path = ODEPath()
    path.points.append((t, chart, *s))
    # start on a tangency: the first event to look for is the next turning point
    direction = -1.0 if s[3] > 0 or (s[3] == 0 and s[1] < 0) else 1.0
    count = 0
    while t < t_max and (max_tangencies is None or count < max_tangencies):
        def turn(_, st):
            return st[3]

        turn.terminal = True
        turn.direction = direction
        sol = integrate.solve_ivp(geodesic_rhs(spec, chart), (t, t_max if math.isfinite(t_max) else t + 100.0),
                                  s, method="DOP853", rtol=rtol, atol=atol, events=turn, dense_output=True)
        if sol.status == -1:
            raise RuntimeError(f"geodesic integration failed: {sol.message}")
        t_end = sol.t[-1]
        for tt in np.linspace(t, t_end, samples_per_arc + 1)[1:]:
            st = sol.sol(tt)
            path.points.append((float(tt), chart, *map(float, st)))
        s = sol.y[:, -1].copy()
        t = float(t_end)
        unit, cl = _invariants(spec, chart, s)
        path.max_unit_drift = max(path.max_unit_drift, abs(unit - 1.0))
        path.max_clairaut_drift = max(path.max_clairaut_drift, abs(abs(cl) - C0))
        if path.max_unit_drift > drift_limit or path.max_clairaut_drift > drift_limit:
            raise ConservationError(f"drift unit={path.max_unit_drift:.3g} clairaut={path.max_clairaut_drift:.3g}")
        if sol.status != 1:
            break
        count += 1
        s[3] = 0.0
        if not isinstance(spec, EllipticSpec):
            other = partner(spec, chart, s[1])[0]
            w = transition_vector(spec, chart, other, TangentVector(ChartPoint(chart, s[0], s[1]), s[2], 0.0))
            path.switches.append((t, chart, other, s[1]))
            chart, s = other, np.array([w.base.x, w.base.y, w.dx, 0.0])
            path.points.append((t, chart, *s))
        direction = -direction
    return path


def tangent_start(spec, c: float, chart: int = 0, x0: float = 0.0) -> TangentVector:
    """Unit vector tangent to K at (x0, -c), oriented so that g(v, K) = C > 0."""
    C = clairaut_C(spec, c)
    return TangentVector(ChartPoint(chart, x0, -c), 1.0 / C, 0.0)


@dataclass(frozen=True)
class ODEClosure:
    signed_gap: float
    terminal_gap: float
    period: float
    max_unit_drift: float
    max_clairaut_drift: float
    final_chart: int
    tolerance: float = ODE_TOL

    @property
    def closed(self) -> bool:
        return self.terminal_gap <= self.tolerance


def ode_closure(spec, c: float, start_chart: int = 0, x0: float = 0.0, **kw) -> ODEClosure:
    """Integrate through one full turn (2k or 2q tangencies) and measure the x-gap in the start chart."""
    turns = 2 * abs(spec.q) if isinstance(spec, EllipticSpec) else 2 * spec.k
    path = ode_integrate(spec, tangent_start(spec, c, start_chart, x0), max_tangencies=turns, **kw)
    t, chart, x, y = path.points[-1][:4]
    if chart != start_chart:
        raise RepresentationError(f"ODE path ended in chart {chart}")
    signed = x - x0 - (spec.p * spec.tau if isinstance(spec, EllipticSpec) else 0.0)
    return ODEClosure(signed, abs(signed), t, path.max_unit_drift, path.max_clairaut_drift, chart)


# ---------------------------------------------------------------------------
# geodesics orthogonal to K through a zero of K (hyperbolic family)

def _filled_christoffel(spec, u, v):
    F, F1 = (float(a) for a in filled_F(spec, np.array(u), np.array(v), 1))
    G = np.array([[v * v * (1 + F), 1 + u * v * F], [1 + u * v * F, u * u * F]])
    dG = np.empty((2, 2, 2))  # dG[l, i, j] = d_l G_ij
    dG[0] = [[v**3 * F1, v * F + u * v * v * F1], [v * F + u * v * v * F1, 2 * u * F + u * u * v * F1]]
    dG[1] = [[2 * v * (1 + F) + u * v * v * F1, u * F + u * u * v * F1], [u * F + u * u * v * F1, u**3 * F1]]
    Ginv = np.linalg.inv(G)
    first = 0.5 * (np.einsum("ilj->lij", dG) + np.einsum("jli->lij", dG) - dG)  # [l, i, j]
    return G, np.einsum("kl,lij->kij", Ginv, first)


@dataclass(frozen=True)
class PerpendicularReport:
    closes: bool
    tau: float
    measured_shift: float
    ode_consistent: bool


def perpendicular_closure_hyperbolic(spec: HyperbolicSpec, y_start: float = -0.5, x0: float = 0.0,
                                     tol: float = ODE_TOL) -> PerpendicularReport:
    """K-orthogonal geodesics close iff tau = 0; spot-checked through the zero of K between U_0 and U_2.

    A K-orthogonal geodesic satisfies dx/dy = -1/(y^2-1) in every chart, so its
    track is fixed by one constant.  Passing through the zero of K it leaves
    U_0 with constant x0 and enters U_2 with constant x0 + tau; the ODE in the
    filled (u, v) plane measures this shift.
    """
    closes = spec.tau == 0.0
    if not -1.0 < y_start < 0.0:
        raise ValueError("start height must lie in (-1, 0)")
    h = y_start * y_start - 1.0
    f = float(chart_f(spec, 0, np.array([y_start]))[0][0])
    dy = -math.sqrt(h / (f * h - 1.0))
    dx = -dy / h
    u = math.exp(x0)
    vv = (y_start + 1.0) / u
    du = u * dx
    dv = dy / u - (y_start + 1.0) * du / (u * u)

    def rhs(_, s):
        _, Gam = _filled_christoffel(spec, s[0], s[1])
        vel = s[2:]
        acc = -np.einsum("kij,i,j->k", Gam, vel, vel)
        return [vel[0], vel[1], acc[0], acc[1]]

    def back(_, s):
        return s[0] * s[1] - 1.0 - y_start

    back.terminal = True
    back.direction = 1.0
    sol = integrate.solve_ivp(rhs, (0.0, 50.0), [u, vv, du, dv], method="DOP853", rtol=1e-12, atol=1e-12,
                              events=back)
    if sol.status != 1:
        raise RuntimeError("orthogonal geodesic did not come back to the start height")
    uf = sol.y[0, -1]
    shift = math.log(-uf) + spec.tau - x0
    return PerpendicularReport(closes, spec.tau, shift, (abs(shift) <= tol) == closes)


# ---------------------------------------------------------------------------
# ambient integration of the blend

def _ambient_G(spec, X):
    p1, p2 = blaschke_phi(spec, X)
    ex = np.array([1.0, 0.0, 0.0])
    return ETA + p1 * np.outer(ex, ex) + p2 * np.outer(N_NULL, N_NULL)


def _ambient_rhs(spec):
    ex = np.array([1.0, 0.0, 0.0])

    def rhs(_, s):
        X, V = s[:3], s[3:]
        G = _ambient_G(spec, X)
        d1, d2 = blaschke_phi(spec, X, 1)
        wdot = V[0] + V[2]
        r0 = -0.5 * d1 * V[0] ** 2 * ex - 0.5 * d2 * wdot**2 * N_NULL
        grad = 2.0 * ETA @ X
        a0 = np.linalg.solve(G, r0)
        ag = np.linalg.solve(G, grad)
        # X^T eta V' = -V^T eta V keeps the constraint X^T eta X = 1
        lam = (-(V @ ETA @ V) - (ETA @ X) @ a0) / ((ETA @ X) @ ag)
        return np.concatenate([V, a0 + lam * ag])

    return rhs


def _project(s):
    X, V = s[:3], s[3:]
    X = X / math.sqrt(X @ ETA @ X)
    V = V - (X @ ETA @ V) * X
    return np.concatenate([X, V])


@dataclass(frozen=True)
class AmbientClosure:
    gap: float
    period: float
    max_constraint_drift: float
    x_range: tuple
    w_range: tuple
    tolerance: float = AMBIENT_TOL

    @property
    def closed(self) -> bool:
        return self.gap <= self.tolerance


def unit_tangent(spec: BlaschkeSpec, start: AmbientPoint, direction) -> np.ndarray:
    X = start.as_array()
    V = np.asarray(direction, dtype=float)
    V = V - (X @ ETA @ V) * X
    nrm = V @ _ambient_G(spec, X) @ V
    if nrm <= 0:
        raise ValueError("direction is not spacelike for the blended metric")
    return V / math.sqrt(nrm)


def blaschke_geodesic(spec: BlaschkeSpec, start: AmbientPoint, direction, t_max: float = 2.2 * math.pi,
                      segments: int = 32, drift_limit: float = 1e-8) -> AmbientClosure:
    """Integrate on the hyperboloid and locate the return to the start in phase space.

    The search window for the period is [0.9, 1.1] * 2 pi; the minimal
    Euclidean distance in (X, V) over that window is the reported gap.
    """
    X0 = start.as_array()
    s = np.concatenate([X0, unit_tangent(spec, start, direction)])
    s0 = s.copy()
    rhs = _ambient_rhs(spec)
    lo, hi = 0.9 * 2 * math.pi, 1.1 * 2 * math.pi
    t_max = max(t_max, hi)
    edges = np.linspace(0.0, t_max, segments + 1)
    pieces = []
    drift = 0.0
    xs, ws = [X0[0]], [X0[0] + X0[2]]
    for a, b in zip(edges[:-1], edges[1:]):
        sol = integrate.solve_ivp(rhs, (a, b), s, method="DOP853", rtol=1e-12, atol=1e-12, dense_output=True)
        if sol.status != 0:
            raise RuntimeError(f"ambient integration failed: {sol.message}")
        end = sol.y[:, -1]
        drift = max(drift, abs(end[:3] @ ETA @ end[:3] - 1.0), abs(end[:3] @ ETA @ end[3:]))
        if drift > drift_limit:
            raise ConservationError(f"hyperboloid constraint drift {drift:.3g}")
        xs.extend(sol.y[0])
        ws.extend(sol.y[0] + sol.y[2])
        pieces.append((a, b, sol.sol))
        s = _project(end)

    def dist(t):
        for a, b, f in pieces:
            if a <= t <= b:
                return float(np.linalg.norm(f(t) - s0))
        raise ValueError(t)

    grid = np.linspace(lo, hi, 401)
    vals = [dist(t) for t in grid]
    i = int(np.argmin(vals))
    res = optimize.minimize_scalar(dist, bounds=(grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]),
                                   method="bounded", options={"xatol": 1e-12})
    return AmbientClosure(float(res.fun), float(res.x), drift, (min(xs), max(xs)), (min(ws), max(ws)))


def blaschke_starts(count: int = 20):
    """Deterministic start grid: points (a, 0, sqrt(1+a^2)) with directions e_y + beta n_perp."""
    out = []
    amps = np.linspace(0.3, 2.4, count // 2)
    for j in range(count):
        a = float(amps[j % len(amps)])
        beta = 0.0 if j < len(amps) else 0.35
        r = math.sqrt(1.0 + a * a)
        P = AmbientPoint(a, 0.0, r)
        V = np.array([0.0, 1.0, 0.0]) + beta * np.array([r, 0.0, a])
        out.append((P, V))
    return out
