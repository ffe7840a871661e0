"""Deformation profiles, family specifications and their validation.

A profile ``kappa`` is a smooth real function of one variable.  Every metric in
the package is of the form ``h(y) dx^2 + 2 dx dy + f(y) dy^2`` with ``f``
obtained from a profile through

    f(y) = (1 - (kappa(y) + shift)^2) / h(y)

where ``h`` is ``y^2`` (parabolic), ``y^2 + 1`` (elliptic) or ``y^2 - 1``
(hyperbolic).  Profiles expose derivatives up to order four so that the
removable singularities of ``f`` and the curvature can be handled from series
data.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy import integrate
from scipy.interpolate import BPoly

MAX_ORDER = 4
SERIES_RADIUS = 1e-3
ODD_TOL = 1e-10
TAYLOR_TOL = 1e-10
ODD_GRID = 2001


def _as_array(t):
    return np.asarray(t, dtype=float)


def _restore(t, out):
    return float(out) if np.ndim(t) == 0 else out


# ---------------------------------------------------------------------------
# elementary smooth building blocks

@lru_cache(maxsize=None)
def _bump_kernels() -> tuple[Callable, ...]:
    u = sp.Symbol("u", real=True)
    expr = sp.exp(1 - 1 / (1 - u**2))
    return tuple(sp.lambdify(u, sp.diff(expr, u, n), "numpy") for n in range(MAX_ORDER + 1))


@lru_cache(maxsize=None)
def _step_kernels() -> tuple[Callable, ...]:
    s = sp.Symbol("s", real=True)
    a = sp.exp(-1 / s)
    b = sp.exp(-1 / (1 - s))
    expr = a / (a + b)
    return tuple(sp.lambdify(s, sp.diff(expr, s, n), "numpy") for n in range(MAX_ORDER + 1))


def bump(u, order: int = 0):
    """C-infinity bump ``exp(1 - 1/(1-u^2))`` on (-1, 1), equal to 1 at 0.

    Values within 1e-2 of the support edge are set to zero: the function is
    below 1e-40 there together with all its derivatives up to order four.
    """
    u = _as_array(u)
    out = np.zeros_like(u)
    inside = 1.0 - u * u > 1e-2
    if np.any(inside):
        with np.errstate(all="ignore"):
            out[inside] = _bump_kernels()[order](u[inside])
    return out


def smooth_step(s, order: int = 0):
    """C-infinity step equal to 0 for s <= 0 and 1 for s >= 1."""
    s = _as_array(s)
    out = np.zeros_like(s)
    if order == 0:
        out[s >= 1.0 - 1e-2] = 1.0
    mid = (s > 1e-2) & (s < 1.0 - 1e-2)
    if np.any(mid):
        with np.errstate(all="ignore"):
            out[mid] = _step_kernels()[order](s[mid])
    return out


@lru_cache(maxsize=256)
def _poly_coeffs(coeffs: tuple, order: int):
    c = np.asarray(coeffs if len(coeffs) else (0.0,), dtype=float)
    return [np.polynomial.polynomial.polyder(c, m) if m else c for m in range(order + 1)]


def _poly_derivs(coeffs: Sequence[float], t, order: int):
    """Derivatives 0..order of the polynomial sum(coeffs[i] t^i)."""
    if tuple(coeffs) == (1.0,):
        return [np.ones_like(t)] + [np.zeros_like(t)] * order
    return [np.polynomial.polynomial.polyval(t, c) for c in _poly_coeffs(tuple(coeffs), order)]


# ---------------------------------------------------------------------------
# profiles

class KappaProfile(ABC):
    """A smooth deformation function with derivative and primitive queries."""

    @abstractmethod
    def derivative(self, t, order: int = 0):
        """Derivative of the given order (0..4) at ``t`` (scalar or array)."""

    @abstractmethod
    def support(self) -> tuple[float, float]:
        """Closed interval outside which the profile vanishes (may be infinite)."""

    @abstractmethod
    def describe(self) -> dict:
        """JSON-serialisable descriptor, accepted back by ``profile_from_dict``."""

    def value(self, t):
        return self.derivative(t, 0)

    def __call__(self, t):
        return self.derivative(t, 0)

    def breakpoints(self) -> tuple[float, ...]:
        """Points where the profile is only finitely smooth or changes formula."""
        lo, hi = self.support()
        return tuple(b for b in (lo, hi) if math.isfinite(b))

    def declared_minimum(self) -> float | None:
        return None

    def radius(self) -> float:
        lo, hi = self.support()
        r = max(abs(lo), abs(hi))
        return r if math.isfinite(r) else math.inf

    # -- primitive of kappa / s^2 ---------------------------------------

    def _over_square(self, s: float) -> float:
        if abs(s) < SERIES_RADIUS:
            d2, d3, d4 = (float(self.derivative(0.0, m)) for m in (2, 3, 4))
            return d2 / 2.0 + d3 * s / 6.0 + d4 * s * s / 24.0
        return float(self.derivative(s, 0)) / (s * s)

    def _primitive_scalar(self, t: float) -> float:
        if t == 0.0:
            return 0.0
        lo, hi = (0.0, t) if t > 0 else (t, 0.0)
        sign = 1.0 if t > 0 else -1.0
        if math.isinf(lo) or math.isinf(hi):
            val, _ = integrate.quad(self._over_square, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=400)
            return sign * val
        pts = sorted({b for b in self.breakpoints() if lo < b < hi})
        edges = [lo, *pts, hi]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(self._over_square, a, b, epsabs=1e-15, epsrel=1e-13, limit=400)
            total += val
        return sign * total

    def primitive_over_square(self, t):
        """The primitive vanishing at 0 of ``s -> kappa(s)/s^2``.

        Requires ``kappa(0) = kappa'(0) = 0``; near the origin the integrand is
        replaced by its second-order Taylor polynomial.
        """
        arr = _as_array(t)
        out = np.array([self._primitive_scalar(float(v)) for v in arr.ravel()]).reshape(arr.shape)
        return _restore(t, out)

    def limit_at_minus_infinity(self) -> float:
        """delta = lim_{s -> -inf} of the primitive of kappa/s^2."""
        if not hasattr(self, "_delta_minus"):
            lo, _ = self.support()
            target = -math.inf if math.isinf(lo) else min(lo, 0.0)
            object.__setattr__(self, "_delta_minus", self._primitive_scalar(target))
        return self._delta_minus

    def limit_at_plus_infinity(self) -> float:
        if not hasattr(self, "_delta_plus"):
            _, hi = self.support()
            target = math.inf if math.isinf(hi) else max(hi, 0.0)
            object.__setattr__(self, "_delta_plus", self._primitive_scalar(target))
        return self._delta_plus

    # -- algebra ------------------------------------------------------------

    def reflected(self) -> "KappaProfile":
        """The profile ``t -> kappa(-t)``."""
        return Combination(((1.0, self, True),))

    def __neg__(self):
        return Combination(((-1.0, self, False),))

    def __add__(self, other: "KappaProfile"):
        return Combination(((1.0, self, False), (1.0, other, False)))

    def __sub__(self, other: "KappaProfile"):
        return Combination(((1.0, self, False), (-1.0, other, False)))

    def scaled(self, coef: float) -> "KappaProfile":
        return Combination(((coef, self, False),))

    def even_part(self) -> "KappaProfile":
        return Combination(((0.5, self, False), (0.5, self, True)))

    def odd_part(self) -> "KappaProfile":
        return Combination(((0.5, self, False), (-0.5, self, True)))


class ZeroProfile(KappaProfile):
    def derivative(self, t, order: int = 0):
        return _restore(t, np.zeros_like(_as_array(t)))

    def support(self):
        return (0.0, 0.0)

    def breakpoints(self):
        return ()

    def declared_minimum(self):
        return 0.0

    def primitive_over_square(self, t):
        return _restore(t, np.zeros_like(_as_array(t)))

    def describe(self):
        return {"type": "zero"}


@lru_cache(maxsize=None)
def _cubic_rational_kernels() -> tuple[Callable, ...]:
    t = sp.Symbol("t", real=True)
    expr = t**3 / (1 + t**4)
    return tuple(sp.lambdify(t, sp.diff(expr, t, n), "numpy") for n in range(MAX_ORDER + 1))


@dataclass(frozen=True)
class CubicRational(KappaProfile):
    """Odd analytic profile ``a t^3 / (1 + t^4)``; not compactly supported."""

    amplitude: float

    def derivative(self, t, order: int = 0):
        arr = _as_array(t)
        out = self.amplitude * _cubic_rational_kernels()[order](arr) * np.ones_like(arr)
        return _restore(t, out)

    def support(self):
        return (-math.inf, math.inf)

    def breakpoints(self):
        return ()

    def declared_minimum(self):
        return -abs(self.amplitude) * 3 ** 0.75 / 4.0

    def primitive_over_square(self, t):
        arr = _as_array(t)
        return _restore(t, 0.5 * self.amplitude * np.arctan(arr * arr))

    def limit_at_minus_infinity(self):
        return self.amplitude * math.pi / 4.0

    def limit_at_plus_infinity(self):
        return self.amplitude * math.pi / 4.0

    def describe(self):
        return {"type": "cubic_rational", "amplitude": self.amplitude}


@dataclass(frozen=True)
class BumpTerm:
    """``amplitude * P(t) * bump((t - center)/radius)``."""

    amplitude: float
    center: float
    radius: float
    poly: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("bump radius must be positive")

    def support(self):
        return (self.center - self.radius, self.center + self.radius)

    def derivative(self, t, order):
        u = (t - self.center) / self.radius
        out = np.zeros_like(t)
        sel = np.abs(u) < 1.0
        if not np.any(sel):
            return out
        us, ts = u[sel], t[sel]
        pd = _poly_derivs(self.poly, ts, order)
        acc = np.zeros_like(ts)
        for j in range(order + 1):
            acc = acc + math.comb(order, j) * pd[order - j] * bump(us, j) / self.radius**j
        out[sel] = self.amplitude * acc
        return out

    def describe(self):
        return {"shape": "bump", "amplitude": self.amplitude, "center": self.center,
                "radius": self.radius, "poly": list(self.poly)}


@dataclass(frozen=True)
class PlateauTerm:
    """``amplitude * P(t) * chi(t)`` with chi = 1 on [left, right].

    chi rises smoothly on [left - width, left] and falls on [right, right + width].
    """

    amplitude: float
    left: float
    right: float
    width: float
    poly: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if self.width <= 0 or self.right < self.left:
            raise ValueError("plateau needs width > 0 and left <= right")

    def support(self):
        return (self.left - self.width, self.right + self.width)

    def _chi(self, t, order):
        rise = smooth_step((t - (self.left - self.width)) / self.width, order) / self.width**order
        fall = smooth_step((self.right + self.width - t) / self.width, order)
        fall = fall * (-1.0 / self.width) ** order
        if order == 0:
            return np.where(t <= self.left, rise, np.where(t >= self.right, fall, 1.0))
        return np.where(t <= self.left, rise, np.where(t >= self.right, fall, 0.0))

    def derivative(self, t, order):
        pd = _poly_derivs(self.poly, t, order)
        out = np.zeros_like(t)
        for j in range(order + 1):
            out = out + math.comb(order, j) * pd[order - j] * self._chi(t, j)
        return self.amplitude * out

    def describe(self):
        return {"shape": "plateau", "amplitude": self.amplitude, "left": self.left,
                "right": self.right, "width": self.width, "poly": list(self.poly)}


@dataclass(frozen=True)
class TermProfile(KappaProfile):
    """Sum of compactly supported bump and plateau terms (closed form)."""

    terms: tuple

    def derivative(self, t, order: int = 0):
        if order > MAX_ORDER:
            raise ValueError(f"derivative order {order} > {MAX_ORDER}")
        arr = _as_array(t)
        out = np.zeros_like(arr)
        for term in self.terms:
            out = out + term.derivative(arr, order)
        return _restore(t, out)

    def support(self):
        if not self.terms:
            return (0.0, 0.0)
        sups = [term.support() for term in self.terms]
        return (min(s[0] for s in sups), max(s[1] for s in sups))

    def breakpoints(self):
        pts = set()
        for term in self.terms:
            pts.update(term.support())
            if isinstance(term, PlateauTerm):
                pts.update((term.left, term.right))
        return tuple(sorted(pts))

    def describe(self):
        return {"type": "terms", "terms": [term.describe() for term in self.terms]}


class SplineProfile(KappaProfile):
    """Piecewise quintic Hermite spline from knot values and two derivatives.

    Outside the knot range the profile is continued by its end values with
    zero derivatives, so end data ``(v, 0, 0)`` gives a C2 continuation.
    """

    def __init__(self, knots, values, d1, d2):
        knots = np.asarray(knots, dtype=float)
        if knots.ndim != 1 or len(knots) < 2 or np.any(np.diff(knots) <= 0):
            raise ValueError("spline knots must be strictly increasing, at least two")
        data = np.column_stack([values, d1, d2]).astype(float)
        if data.shape[0] != len(knots):
            raise ValueError("spline tables must match the knot count")
        self._knots = knots
        self._data = data
        self._poly = BPoly.from_derivatives(knots, data)
        self._derivs = [self._poly] + [self._poly.derivative(m) for m in range(1, MAX_ORDER + 1)]

    def derivative(self, t, order: int = 0):
        arr = _as_array(t)
        lo, hi = self._knots[0], self._knots[-1]
        out = np.where((arr >= lo) & (arr <= hi), self._derivs[order](np.clip(arr, lo, hi)), 0.0)
        if order == 0:
            out = np.where(arr < lo, self._data[0, 0], np.where(arr > hi, self._data[-1, 0], out))
        return _restore(t, out)

    def support(self):
        lo = self._knots[0] if self._data[0, 0] == 0.0 else -math.inf
        hi = self._knots[-1] if self._data[-1, 0] == 0.0 else math.inf
        return (lo, hi)

    def breakpoints(self):
        return tuple(float(k) for k in self._knots)

    def describe(self):
        return {"type": "spline", "knots": self._knots.tolist(), "values": self._data[:, 0].tolist(),
                "d1": self._data[:, 1].tolist(), "d2": self._data[:, 2].tolist()}


@dataclass(frozen=True)
class Combination(KappaProfile):
    """Linear combination ``sum coef * kappa(+-t)`` of other profiles."""

    parts: tuple  # (coef, profile, reflect)

    def derivative(self, t, order: int = 0):
        arr = _as_array(t)
        out = np.zeros_like(arr)
        for coef, prof, reflect in self.parts:
            if reflect:
                out = out + coef * (-1) ** order * _as_array(prof.derivative(-arr, order))
            else:
                out = out + coef * _as_array(prof.derivative(arr, order))
        return _restore(t, out)

    def support(self):
        los, his = [], []
        for _, prof, reflect in self.parts:
            lo, hi = prof.support()
            if reflect:
                lo, hi = -hi, -lo
            los.append(lo)
            his.append(hi)
        if not los:
            return (0.0, 0.0)
        return (min(los), max(his))

    def breakpoints(self):
        pts = set()
        for _, prof, reflect in self.parts:
            pts.update(-b if reflect else b for b in prof.breakpoints())
        return tuple(sorted(pts))

    def primitive_over_square(self, t):
        arr = _as_array(t)
        out = np.zeros_like(arr)
        for coef, prof, reflect in self.parts:
            if reflect:
                # int_0^t k(-s)/s^2 ds = -int_0^{-t} k(u)/u^2 du
                out = out - coef * _as_array(prof.primitive_over_square(-arr))
            else:
                out = out + coef * _as_array(prof.primitive_over_square(arr))
        return _restore(t, out)

    def limit_at_minus_infinity(self):
        total = 0.0
        for coef, prof, reflect in self.parts:
            total += -coef * prof.limit_at_plus_infinity() if reflect else coef * prof.limit_at_minus_infinity()
        return total

    def limit_at_plus_infinity(self):
        total = 0.0
        for coef, prof, reflect in self.parts:
            total += -coef * prof.limit_at_minus_infinity() if reflect else coef * prof.limit_at_plus_infinity()
        return total

    def describe(self):
        return {"type": "combination",
                "parts": [{"coef": c, "reflect": r, "profile": p.describe()} for c, p, r in self.parts]}


ZERO = ZeroProfile()


def bumps(*terms) -> TermProfile:
    """Shorthand: ``bumps((amp, center, radius), ...)`` or BumpTerm/PlateauTerm objects."""
    built = []
    for term in terms:
        if isinstance(term, (BumpTerm, PlateauTerm)):
            built.append(term)
        else:
            built.append(BumpTerm(*term))
    return TermProfile(tuple(built))


def odd_bump(amplitude: float, center: float, radius: float) -> TermProfile:
    """``a*bump((t-c)/r) - a*bump((t+c)/r)``: odd, supported in +-[c-r, c+r]."""
    return bumps((amplitude, center, radius), (-amplitude, -center, radius))


def profile_from_dict(doc: dict) -> KappaProfile:
    """Inverse of ``KappaProfile.describe``."""
    kind = doc["type"]
    if kind == "zero":
        return ZERO
    if kind == "cubic_rational":
        return CubicRational(float(doc["amplitude"]))
    if kind == "terms":
        terms = []
        for term in doc["terms"]:
            poly = tuple(float(c) for c in term.get("poly", (1.0,)))
            if term["shape"] == "bump":
                terms.append(BumpTerm(float(term["amplitude"]), float(term["center"]), float(term["radius"]), poly))
            elif term["shape"] == "plateau":
                terms.append(PlateauTerm(float(term["amplitude"]), float(term["left"]), float(term["right"]),
                                         float(term["width"]), poly))
            else:
                raise ValueError(f"unknown term shape {term['shape']!r}")
        return TermProfile(tuple(terms))
    if kind == "spline":
        return SplineProfile(doc["knots"], doc["values"], doc["d1"], doc["d2"])
    if kind == "combination":
        return Combination(tuple((float(p["coef"]), profile_from_dict(p["profile"]), bool(p.get("reflect", False)))
                                 for p in doc["parts"]))
    raise ValueError(f"unknown profile type {kind!r}")


# ---------------------------------------------------------------------------
# family specifications

@dataclass(frozen=True)
class ParabolicSpec:
    k: int
    tau: float
    kappas: tuple
    name: str = ""

    family = "parabolic"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if len(self.kappas) != self.k:
            raise ValueError(f"parabolic spec needs k={self.k} profiles, got {len(self.kappas)}")

    @property
    def n_charts(self) -> int:
        return 2 * self.k


@dataclass(frozen=True)
class EllipticSpec:
    tau: float
    p: int
    q: int
    kappa: KappaProfile
    name: str = ""

    family = "elliptic"

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("elliptic tau must be positive")
        if self.p == 0 or self.q == 0:
            raise ValueError("p and q must be nonzero integers")

    @property
    def shift(self) -> float:
        return self.p * self.tau / (2.0 * self.q * math.pi)

    @property
    def n_charts(self) -> int:
        return 1


@dataclass(frozen=True)
class HyperbolicSpec:
    k: int
    tau: float
    kappas: tuple
    name: str = ""

    family = "hyperbolic"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if len(self.kappas) != 2 * self.k:
            raise ValueError(f"hyperbolic spec needs 2k={2 * self.k} profiles, got {len(self.kappas)}")

    @property
    def n_charts(self) -> int:
        return 4 * self.k


@dataclass(frozen=True)
class BlaschkeSpec:
    kappa1: KappaProfile
    kappa2: KappaProfile
    name: str = ""

    family = "blaschke"


FamilySpec = ParabolicSpec | EllipticSpec | HyperbolicSpec | BlaschkeSpec


def desitter(family: str, k: int = 1) -> FamilySpec:
    """The undeformed (de Sitter or k-cover) spec of a family."""
    if family == "parabolic":
        return ParabolicSpec(k, 0.0, (ZERO,) * k, name=f"desitter-parabolic-k{k}")
    if family == "elliptic":
        return EllipticSpec(2 * math.pi, 1, 1, ZERO, name="desitter-elliptic")
    if family == "hyperbolic":
        return HyperbolicSpec(k, 0.0, (ZERO,) * (2 * k), name=f"desitter-hyperbolic-k{k}")
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# f from kappa

def _root_of(family: str) -> tuple[float, ...]:
    return {"parabolic": (0.0,), "hyperbolic": (-1.0, 1.0), "elliptic": ()}[family]


@lru_cache(maxsize=None)
def alpha_poly(family: str) -> np.polynomial.Polynomial:
    """The Killing norm h(y) as a polynomial."""
    const = {"parabolic": 0.0, "elliptic": 1.0, "hyperbolic": -1.0}[family]
    return np.polynomial.Polynomial([const, 0.0, 1.0])


def _numerator_derivs(kappa: KappaProfile, shift: float, y, order: int):
    """Derivatives 0..order of N = 1 - (kappa + shift)^2."""
    kd = [_as_array(kappa.derivative(y, m)) for m in range(order + 1)]
    kd[0] = kd[0] + shift
    out = []
    for n in range(order + 1):
        sq = sum(math.comb(n, j) * kd[j] * kd[n - j] for j in range(n + 1))
        out.append((1.0 if n == 0 else 0.0) - sq)
    return out


def f_derivatives(family: str, kappa: KappaProfile, shift: float, y, order: int = 2):
    """``f`` and its y-derivatives up to ``order`` (<= 2) as a list of arrays.

    Within ``SERIES_RADIUS`` of a zero of h the quotient is evaluated from the
    Taylor data of the numerator (orders up to four), which is exact in the
    limit and keeps the quotient continuous.
    """
    if order > 2:
        raise ValueError("f derivatives are provided up to order 2")
    y = _as_array(y)
    const = {"parabolic": 0.0, "elliptic": 1.0, "hyperbolic": -1.0}[family]
    D = [y * y + const, 2.0 * y, 2.0]
    near = np.zeros(y.shape, dtype=bool)
    for r in _root_of(family):
        near |= np.abs(y - r) < SERIES_RADIUS
    with np.errstate(divide="ignore", invalid="ignore"):
        N = _numerator_derivs(kappa, shift, y, order)
        out = [N[0] / D[0]]
        if order >= 1:
            out.append((N[1] - out[0] * D[1]) / D[0])
        if order >= 2:
            out.append((N[2] - 2 * out[1] * D[1] - out[0] * D[2]) / D[0])
    if np.any(near):
        for r in _root_of(family):
            sel = np.abs(y - r) < SERIES_RADIUS
            if not np.any(sel):
                continue
            ser = _series_f(family, kappa, shift, r, y[sel] - r)
            for m in range(order + 1):
                out[m][sel] = ser[m]
    return out


def _series_f(family: str, kappa: KappaProfile, shift: float, r: float, e):
    """f, f', f'' near a zero r of h from the numerator's Taylor data at r."""
    Nr = [float(v) for v in _numerator_derivs(kappa, shift, np.array(r), MAX_ORDER)]
    if family == "parabolic":
        # f = sum_{n>=2} N_n e^{n-2}/n!
        c0, c1, c2 = Nr[2] / 2.0, Nr[3] / 6.0, Nr[4] / 24.0
        return [c0 + c1 * e + c2 * e * e, c1 + 2 * c2 * e, 2 * c2 + 0 * e]
    # hyperbolic: h = e (e + 2r); f = Q(e)/(e + 2r), Q = sum_{n>=1} N_n e^{n-1}/n!
    q = np.polynomial.Polynomial([Nr[1], Nr[2] / 2.0, Nr[3] / 6.0, Nr[4] / 24.0])
    Q = [q(e), q.deriv(1)(e), q.deriv(2)(e)]
    den = e + 2 * r
    f0 = Q[0] / den
    f1 = (Q[1] - f0) / den
    f2 = (Q[2] - 2 * f1) / den
    return [f0, f1, f2]


def f_from_kappa(family: str, kappa: KappaProfile, shift: float, y):
    """The metric coefficient f(y) = (1 - (kappa + shift)^2)/h(y)."""
    return _restore(y, f_derivatives(family, kappa, shift, y, 0)[0])


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Violation:
    name: str
    kind: str  # "zoll" or "admissibility"
    magnitude: float
    detail: str


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def zoll(self) -> bool:
        return self.ok

    @property
    def admissible(self) -> bool:
        return not any(v.kind == "admissibility" for v in self.violations)

    def add(self, name, kind, magnitude, detail):
        self.violations.append(Violation(name, kind, float(magnitude), detail))

    def names(self) -> list[str]:
        return [v.name for v in self.violations]


def _grid_radius(profiles) -> float:
    r = max((p.radius() for p in profiles), default=0.0)
    return 10.0 if not math.isfinite(r) or r == 0.0 else r


def _check_lower_bound(report, label, kappa, bound, radius):
    grid = np.linspace(-radius - 1.0, radius + 1.0, 8001)
    low = float(np.min(kappa.value(grid)))
    dm = kappa.declared_minimum()
    if dm is not None:
        low = min(low, dm)
    if low < bound - 1e-14:
        report.add("lower-bound", "admissibility", bound - low,
                   f"{label} reaches {low:.6g} below the admissible bound {bound:.6g}")


def oddness_defect(func: Callable, lo: float, hi: float, n: int = ODD_GRID) -> float:
    """sup over a symmetric grid of |S(t) + S(-t)| for t in [lo, hi], lo >= 0."""
    t = np.linspace(lo, hi, n)
    return float(np.max(np.abs(func(t) + func(-t))))


def _taylor_defect(kappas, point: float, orders) -> float:
    worst = 0.0
    for m in orders:
        vals = [float(k.derivative(point, m)) for k in kappas]
        worst = max(worst, max(vals) - min(vals))
    return worst


def validate(spec: FamilySpec) -> ValidationReport:
    """Check every Zoll condition and admissibility bound of a spec."""
    report = ValidationReport()
    if isinstance(spec, ParabolicSpec):
        _validate_parabolic(spec, report)
    elif isinstance(spec, EllipticSpec):
        _validate_elliptic(spec, report)
    elif isinstance(spec, HyperbolicSpec):
        _validate_hyperbolic(spec, report)
    elif isinstance(spec, BlaschkeSpec):
        _validate_blaschke(spec, report)
    else:
        raise TypeError(f"not a family spec: {type(spec).__name__}")
    return report


def _validate_parabolic(spec: ParabolicSpec, report: ValidationReport):
    R = _grid_radius(spec.kappas)
    for j, kap in enumerate(spec.kappas):
        _check_lower_bound(report, f"kappa_{j}", kap, -1.0, R)
        z = max(abs(float(kap.value(0.0))), abs(float(kap.derivative(0.0, 1))))
        if z > TAYLOR_TOL:
            report.add("parabolic.double-zero", "admissibility", z,
                       f"kappa_{j} must vanish to second order at 0")
    if spec.tau != 0.0:
        report.add("parabolic.tau", "zoll", abs(spec.tau), "translation parameter tau must vanish")
    d = _taylor_defect(spec.kappas, 0.0, range(MAX_ORDER + 1))
    if d > TAYLOR_TOL:
        report.add("parabolic.taylor", "zoll", d, "profiles must share Taylor data at 0 (orders <= 4)")
    total = lambda t: sum(_as_array(k.value(t)) for k in spec.kappas)
    odd = oddness_defect(total, 0.0, R)
    if odd > ODD_TOL:
        report.add("parabolic.oddness", "zoll", odd, "the sum of the profiles must be odd")


def _validate_elliptic(spec: EllipticSpec, report: ValidationReport):
    R = _grid_radius([spec.kappa])
    _check_lower_bound(report, "kappa", spec.kappa, -spec.shift, R)
    odd = oddness_defect(spec.kappa.value, 0.0, R)
    if odd > ODD_TOL:
        report.add("elliptic.oddness", "zoll", odd, "kappa must be odd")
    if spec.p != 1:
        report.add("elliptic.winding", "zoll", abs(spec.p - 1),
                   f"p={spec.p}: geodesics close only after winding p times")


def _validate_hyperbolic(spec: HyperbolicSpec, report: ValidationReport):
    R = max(_grid_radius(spec.kappas), 1.0)
    for j, kap in enumerate(spec.kappas):
        _check_lower_bound(report, f"kappa_{j}", kap, -1.0, R)
        z = max(abs(float(kap.value(1.0))), abs(float(kap.value(-1.0))))
        if z > TAYLOR_TOL:
            report.add("hyperbolic.zero-at-pm1", "admissibility", z, f"kappa_{j} must vanish at -1 and 1")
    if spec.tau != 0.0:
        report.add("hyperbolic.tau", "zoll", abs(spec.tau), "translation parameter tau must vanish")
    d = max(_taylor_defect(spec.kappas, 1.0, range(MAX_ORDER + 1)),
            _taylor_defect(spec.kappas, -1.0, range(MAX_ORDER + 1)))
    if d > TAYLOR_TOL:
        report.add("hyperbolic.taylor", "zoll", d, "profiles must share Taylor data at -1 and 1 (orders <= 4)")
    total = lambda t: sum(_as_array(k.value(t)) for k in spec.kappas)
    odd = oddness_defect(total, 0.0, 1.0)
    if odd > ODD_TOL:
        report.add("hyperbolic.oddness-inner", "zoll", odd, "the sum of all profiles must be odd on [-1, 1]")
    for parity, label in ((0, "even"), (1, "odd")):
        group = spec.kappas[parity::2]
        s = lambda t, g=group: sum(_as_array(k.value(t)) for k in g)
        odd = oddness_defect(s, 1.0, R + 1.0)
        if odd > ODD_TOL:
            report.add(f"hyperbolic.oddness-outer-{label}", "zoll", odd,
                       f"the sum of {label}-indexed profiles must be odd on |t| >= 1")


def _validate_blaschke(spec: BlaschkeSpec, report: ValidationReport):
    for label, kap, allowed in (("kappa1", spec.kappa1, [(-1.0, 1.0)]),
                                ("kappa2", spec.kappa2, [(-5.0, -4.0), (4.0, 5.0)])):
        _check_lower_bound(report, label, kap, -1.0, 6.0)
        odd = oddness_defect(kap.value, 0.0, 8.0)
        if odd > ODD_TOL:
            report.add(f"blaschke.{label}.oddness", "zoll", odd, f"{label} must be odd")
        t = np.linspace(-8.0, 8.0, 16001)
        outside = np.ones_like(t, dtype=bool)
        for lo, hi in allowed:
            outside &= ~((t >= lo) & (t <= hi))
        leak = float(np.max(np.abs(kap.value(t[outside]))))
        if leak > 1e-12:
            report.add(f"blaschke.{label}.support", "admissibility", leak,
                       f"{label} must vanish outside {allowed}")


# ---------------------------------------------------------------------------
# Moebius involutions

def mobius_triple(kappa: KappaProfile) -> tuple:
    """Parabolic k=3 triple (kappa, -kappa(-t), -kappa + kappa(-t))."""
    return (kappa, -kappa.reflected(), Combination(((-1.0, kappa, False), (1.0, kappa, True))))


def mobius_quadruple(kappa: KappaProfile) -> tuple:
    """Hyperbolic k=2 quadruple (kappa, -kappa + kappa(-t), -kappa(-t), 0)."""
    return (kappa, Combination(((-1.0, kappa, False), (1.0, kappa, True))), -kappa.reflected(), ZERO)


def mobius_image_chart(spec, chart: int) -> int:
    if isinstance(spec, ParabolicSpec) and spec.k == 3:
        return (chart + 3) % 6
    if isinstance(spec, HyperbolicSpec) and spec.k == 2:
        return (chart + 5) % 8 if chart % 2 == 0 else (chart - 5) % 8
    raise ValueError("Moebius involution is defined for parabolic k=3 and hyperbolic k=2 specs")


def mobius_involution(spec, p):
    """The fixed-point-free involution: chart shift and (x, y) -> (-x, -y)."""
    from zollsurf.atlas import ChartPoint

    return ChartPoint(mobius_image_chart(spec, p.chart), -p.x, -p.y)


# ---------------------------------------------------------------------------
# Blaschke blend on the hyperboloid

@dataclass(frozen=True)
class AmbientPoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if abs(-self.x**2 + self.y**2 + self.z**2 - 1.0) > 1e-12 * max(1.0, self.x**2):
            raise ValueError("point is not on the hyperboloid -x^2 + y^2 + z^2 = 1")

    def as_array(self):
        return np.array([self.x, self.y, self.z])


ETA = np.diag([-1.0, 1.0, 1.0])
N_NULL = np.array([1.0, 0.0, 1.0])


def killing_fields(X):
    x, y, z = X
    return np.array([0.0, -z, y]), np.array([y, x + z, -y])


def blaschke_region(p: AmbientPoint) -> str:
    """'V1' if g0(K1,K1) <= 2, 'V2' if 16 <= g0(K2,K2) <= 25, else 'outside'."""
    k1 = p.y**2 + p.z**2
    k2 = (p.x + p.z) ** 2
    in1 = k1 <= 2.0
    in2 = 16.0 <= k2 <= 25.0
    if in1 and in2:
        raise AssertionError("V1 and V2 overlap")  # excluded: |x| <= 1 forces (x+z)^2 <= 9
    return "V1" if in1 else ("V2" if in2 else "outside")


def _phi_scalar(family: str, kappa: KappaProfile, t: float, order: int):
    lo, hi = kappa.support()
    if not lo < t < hi:
        return 0.0  # f vanishes with kappa
    h = t * t + (1.0 if family == "elliptic" else 0.0)
    if h < SERIES_RADIUS:
        return float(f_derivatives(family, kappa, 1.0, np.array([t]), order)[order][0])
    arr = np.array([t])
    k0 = float(kappa.derivative(arr, 0)[0]) + 1.0
    N = 1.0 - k0 * k0
    if order == 0:
        return N / h
    N1 = -2.0 * k0 * float(kappa.derivative(arr, 1)[0])
    return (N1 * h - N * 2.0 * t) / (h * h)


def blaschke_phi(spec: BlaschkeSpec, X, order: int = 0):
    """Coefficients (phi1(x), phi2(x+z)) of dx^2 and dw^2, or their derivatives."""
    x = float(X[0])
    w = float(X[0] + X[2])
    return _phi_scalar("elliptic", spec.kappa1, x, order), _phi_scalar("parabolic", spec.kappa2, w, order)


def blaschke_metric_ambient(spec: BlaschkeSpec, p: AmbientPoint) -> np.ndarray:
    """3x3 ambient form whose restriction to the tangent plane is the blend.

    g = g0 + phi1(x) dx (x) dx + phi2(w) dw (x) dw with w = x + z, where
    phi1 = (1 - (kappa1 + 1)^2)/(x^2 + 1) and phi2 = (1 - (kappa2 + 1)^2)/w^2.
    The transverse coordinates are fixed as v = x on V1 and v = x + z on V2.
    """
    X = p.as_array()
    p1, p2 = blaschke_phi(spec, X)
    ex = np.array([1.0, 0.0, 0.0])
    return ETA + p1 * np.outer(ex, ex) + p2 * np.outer(N_NULL, N_NULL)


def sample_hyperboloid(rng: np.random.Generator, n: int, scale: float = 3.0) -> np.ndarray:
    """n points on -x^2+y^2+z^2=1 with x ~ N(0, scale) and uniform angle."""
    x = rng.normal(0.0, scale, n)
    th = rng.uniform(0.0, 2 * math.pi, n)
    r = np.sqrt(1.0 + x * x)
    return np.column_stack([x, r * np.cos(th), r * np.sin(th)])
