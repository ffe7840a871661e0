"""Acceptance criteria 1-9, one PASS/FAIL line each.

Runnable under pytest or directly: ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

import specgen  # noqa: E402
from acceptance_log import record  # noqa: E402

from zollsurf import cli, conformal, geodesics, quad  # noqa: E402
from zollsurf.atlas import ChartPoint, curvature_at, metric_at  # noqa: E402
from zollsurf.profiles import (  # noqa: E402
    AmbientPoint,
    HyperbolicSpec,
    blaschke_phi,
    blaschke_region,
    desitter,
    mobius_involution,
    sample_hyperboloid,
    validate,
)

FAMILIES = ("parabolic", "elliptic", "hyperbolic")


def spec(name):
    return cli.load_spec(name)[0]


def test_criterion_1_desitter_baselines():
    t0 = time.perf_counter()
    res = gap = length_err = curv = 0.0
    for fam in FAMILIES:
        s = desitter(fam)
        for c in quad.c_grid(fam):
            res = max(res, abs(quad.closure_residual(s, float(c))))
            r = geodesics.shoot(s, float(c))
            gap = max(gap, r.terminal_gap)
            if fam == "parabolic":
                length_err = max(length_err, abs(r.total_length - 2 * math.pi))
        for x in np.linspace(-3, 3, 30):
            for y in np.linspace(-3, 3, 30):
                curv = max(curv, abs(curvature_at(s, ChartPoint(0, float(x), float(y))) - 1.0))
    dt = time.perf_counter() - t0
    ok = res <= 1e-10 and gap <= 1e-8 and length_err <= 1e-9 and curv <= 1e-8 and dt < 2.0
    assert record(1, ok, f"residual {res:.1e}, gap {gap:.1e}, length error {length_err:.1e}, "
                         f"curvature error {curv:.1e}, {dt:.2f} s")


def test_criterion_2_proof_identities():
    t0 = time.perf_counter()
    par = max(abs(quad.parabolic_kernel_integral(c).value - 2.0 / c) for c in (0.5, 1.0, 2.0, 4.0))
    ell = max(abs(quad.elliptic_kernel_integral(c).value - math.pi) for c in (0.5, 2.0, 7.0))
    dt = time.perf_counter() - t0
    ok = par <= 1e-10 and ell <= 1e-10 and dt < 0.1
    assert record(2, ok, f"2/c identity {par:.1e}, pi identity {ell:.1e}, {dt:.3f} s")


ABEL_EVEN = [
    lambda s: s**2,
    lambda s: s**4 / (1 + s**2),
    lambda s: s**2 * np.exp(-(s**2)),
    lambda s: s**2 / (1 + s**2) ** 2,
    lambda s: s**2 * (2 + np.cos(s)),
]


def test_criterion_3_abel_lemmas():
    t0 = time.perf_counter()
    i_err = max(abs(quad.abel_I(h, a) - quad.abel_I_identity_rhs(h, a)) for h in ABEL_EVEN for a in (1.0, 2.0, 5.0))
    odd = lambda s: s**3 * np.exp(-(s**2))
    h_odd = max(abs(quad.abel_H(odd, c)) for c in (0.3, 1.0, 2.0, 5.0))
    sq = lambda s: s**2
    j_printed = max(abs(quad.abel_J_hyperbolic(sq, a) - quad.abel_J_printed_rhs(sq, a)) for a in (1.2, 2.0, 5.0))
    j_closed = max(abs(quad.abel_J_hyperbolic(sq, a) - quad.abel_J_closed_form(sq, a)) for a in (1.2, 2.0, 5.0))
    dt = time.perf_counter() - t0
    ok = i_err <= 1e-7 and h_odd <= 1e-10 and j_printed <= 1e-6 and dt < 1.0
    assert record(3, ok, f"I {i_err:.1e}, odd H {h_odd:.1e}, J vs printed form {j_printed:.3g} "
                         f"(vs exchanged-order form {j_closed:.1e}), {dt:.2f} s")


def test_criterion_4_certification_iff_closure():
    t0 = time.perf_counter()
    disagree = []
    cross = 0.0
    for n, fam in enumerate(FAMILIES):
        for s, valid in specgen.batch(fam, 100 + n):
            starts = (0, 2) if isinstance(s, HyperbolicSpec) else (0,)
            worst = 0.0
            for i0 in starts:
                for c in quad.c_grid(fam):
                    d = quad.closure_defect(s, float(c), i0)
                    r = geodesics.shoot(s, float(c), i0, lengths=False)
                    worst = max(worst, abs(d))
                    cross = max(cross, abs(r.terminal_gap / r.residual_scale - abs(d)))
            if validate(s).ok != (worst <= 1e-6) or validate(s).ok != valid:
                disagree.append((fam, s.name, worst))
    dt = time.perf_counter() - t0
    ok = not disagree and cross <= 1e-6 and dt < 30.0
    assert record(4, ok, f"30 specs, {len(disagree)} verdict disagreements, quadrature vs shooting {cross:.1e}, "
                         f"{dt:.1f} s")


CERTIFIED = ("desitter-parabolic", "desitter-elliptic", "desitter-hyperbolic", "mobius-parabolic-k3",
             "mobius-hyperbolic-k2", "nonsmooth-k3-zoll", "nonsmooth-control")


def test_criterion_5_length_constancy():
    t0 = time.perf_counter()
    worst = 0.0
    for name in CERTIFIED:
        s = spec(name)
        assert validate(s).ok
        target = geodesics.zoll_length(s)
        for c in quad.c_grid(s.family):
            worst = max(worst, abs(geodesics.shoot(s, float(c)).total_length - target))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 5.0
    assert record(5, ok, f"{len(CERTIFIED)} certified specs, max length deviation {worst:.1e}, {dt:.2f} s")


def test_criterion_6_mobius():
    rng = np.random.default_rng(6)
    verify = inv = metric = 0.0
    spreads = []
    codes = []
    for name in ("mobius-parabolic-k3", "mobius-hyperbolic-k2"):
        s = spec(name)
        codes.append(cli.main(["zoll-verify", name]))
        involution_ok = True
        for _ in range(1000):
            p = ChartPoint(int(rng.integers(s.n_charts)), float(rng.uniform(-3, 3)), float(rng.uniform(-3, 3)))
            q = mobius_involution(s, p)
            involution_ok &= q != p and q.chart != p.chart and mobius_involution(s, q) == p
            # sigma acts as (x, y) -> (-x, -y): its differential is -I, so the metric matrices must agree
            metric = max(metric, float(np.max(np.abs(metric_at(s, q).matrix() - metric_at(s, p).matrix()))))
        inv += not involution_ok
        ks = [curvature_at(s, ChartPoint(0, 0.0, float(y))) for y in np.linspace(-3.2, 3.2, 161)]
        spreads.append(max(ks) - min(ks))
    ok = codes == [0, 0] and inv == 0 and metric <= 1e-12 and min(spreads) > 0.01
    assert record(6, ok, f"zoll-verify exits {codes}, involution failures {int(inv)}, metric invariance {metric:.1e}, "
                         f"curvature spread {min(spreads):.3f}")


def test_criterion_7_nonsmooth_conformality():
    s = spec("nonsmooth-k3")
    d0 = conformal.NullPrimitive(s.kappas[0]).delta
    d1 = conformal.NullPrimitive(s.kappas[1]).delta
    ys = np.concatenate([np.geomspace(1e-3, 1e-1, 25), -np.geomspace(1e-3, 1e-1, 25)])
    closed = max(abs(conformal.reflexion_P(s, y) - conformal.reflexion_closed_form(y, d0, d1)) for y in ys)
    probe = conformal.regularity_probe(lambda y: conformal.reflexion_P(s, y))
    want = conformal.predicted_jump(d0, d1)
    rel = abs(probe.second_derivative_jump - want) / want
    control = spec("nonsmooth-control")
    jump0 = conformal.regularity_probe(lambda y: conformal.reflexion_P(control, y)).second_derivative_jump
    ok = closed <= 1e-8 and probe.c1_match <= 1e-6 and rel <= 0.1 and jump0 <= 1e-6
    assert record(7, ok, f"closed form {closed:.1e}, C1 mismatch {probe.c1_match:.1e}, jump "
                         f"{probe.second_derivative_jump:.6f} vs {want:.6f} ({100 * rel:.3f}%), control jump {jump0:.1e}")


def test_criterion_8_ppp_and_normalization():
    d1, d3 = conformal.desitter_boundary(1), conformal.desitter_boundary(3)
    right = max(conformal.ppp_check(d1, 1), conformal.ppp_check(d3, 3))
    wrong = min(conformal.ppp_check(d1, 2), conformal.ppp_check(d3, 2), conformal.ppp_check(d3, 1))
    phi = lambda x: x + 0.2 * math.sin(math.sqrt(2.0) * x)
    norm = max(conformal.normalize_boundary(conformal.conjugated_boundary(b, phi), k).conjugation_residual
               for b, k in ((d1, 1), (d3, 3)))
    height = abs(conformal.desitter_conformal_height() - math.pi)
    ok = right <= 1e-12 and wrong > 0.1 and norm <= 1e-8 and height <= 1e-10
    assert record(8, ok, f"correct k {right:.1e}, wrong k {wrong:.3f}, normalization {norm:.1e}, height {height:.1e}")


def test_criterion_9_blaschke():
    t0 = time.perf_counter()
    s = spec("blaschke")
    rng = np.random.default_rng(9)
    overlap = 0
    for X in sample_hyperboloid(rng, 10_000):
        blaschke_region(AmbientPoint(*X))  # raises if both region inequalities hold
        p1, p2 = blaschke_phi(s, X)
        overlap += p1 != 0.0 and p2 != 0.0
    gaps, both = [], 0
    for P, V in geodesics.blaschke_starts(20):
        r = geodesics.blaschke_geodesic(s, P, V)
        gaps.append(r.gap)
        in_v1 = r.x_range[0] <= 1.0 and r.x_range[1] >= -1.0
        in_v2 = r.w_range[1] >= 4.0 or r.w_range[0] <= -4.0
        both += in_v1 and in_v2
    dt = time.perf_counter() - t0
    ok = overlap == 0 and max(gaps) <= 1e-5 and both >= 5 and dt < 60.0
    assert record(9, ok, f"overlaps {overlap}/10000, max gap {max(gaps):.1e}, {both} of 20 cross both regions, "
                         f"{dt:.1f} s")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
