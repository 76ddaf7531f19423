"""Acceptance gate: twelve end-to-end criteria, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
"""

import math

import numpy as np
import pytest
from conftest import random_graph, random_point, random_warped_space

from warpcmc import graph as G
from warpcmc.geometry import Chart, GraphMap, MetricField, ScalarField
from warpcmc.radial import RadialSpace, c_zero, cmc_profile, lift_to_graph, psi_builtin
from warpcmc.spectral import cheeger_scan, drift_eigenvalue, heinz_margin, setti_margin
from warpcmc.warped import WarpedSpace, omega_closedness_residual, omega_eval

PROBE_RADII = (0.5, 1.0, 2.0)


def probe(m, t):
    return np.array([t] + [0.7] * (m - 1))


def cmc_lift(m, c):
    rs = RadialSpace.hyperbolic(m)
    prof = cmc_profile(rs, c, 0.0, np.linspace(0.0, 3.0, 31))
    return lift_to_graph(rs, prof)


def slice_lift(m, d=0.7):
    rs = RadialSpace.hyperbolic(m)
    return lift_to_graph(rs, cmc_profile(rs, 0.0, d, np.linspace(0.0, 3.0, 7)))


def geodesic_examples(seed=1):
    rng = np.random.default_rng(seed)
    out = []
    for m, n in [(2, 1), (3, 2), (2, 3)]:
        ws = random_warped_space(rng, m, n)
        f = GraphMap.constant(ws.base_metric.chart, ws.fiber_metric.chart, rng.normal(size=n))
        out.append((ws, f, random_point(rng, m)))
    for m in (2, 3):
        ws, f = slice_lift(m)
        out += [(ws, f, probe(m, t)) for t in PROBE_RADII]
    return out


def cmc_examples():
    out = []
    for m, c in [(2, 0.5), (3, 1.0)]:
        ws, f = cmc_lift(m, c)
        out += [(ws, f, probe(m, t)) for t in PROBE_RADII]
    return out


def criterion_1():
    vals = {m: c_zero(RadialSpace.hyperbolic(m)).value for m in (2, 3, 4)}
    err = max(abs(v - (m - 1)) for m, v in vals.items())
    return err <= 1e-5, f"max |C0 - (m-1)| = {err:.2e} (tol 1e-5)"


def criterion_2():
    err, count = 0.0, 0
    for m, c in [(2, 0.5), (3, 1.0)]:
        ws, f = cmc_lift(m, c)
        for t in PROBE_RADII:
            err = max(err, abs(G.curvature_bundle(ws, f, probe(m, t)).norm_H - abs(c) / m))
            count += 1
    return err <= 1e-4, f"max ||H| - |c|/m| = {err:.2e} over {count} probes (tol 1e-4)"


def criterion_3():
    cmc = max(G.heinz_divergence_residual(ws, f, x) for ws, f, x in cmc_examples())
    geo = max(G.heinz_divergence_residual(ws, f, x) for ws, f, x in geodesic_examples())
    ok = cmc <= 1e-4 and geo <= 1e-8
    return ok, f"CMC residual {cmc:.2e} (tol 1e-4), totally geodesic {geo:.2e} (tol 1e-8)"


def criterion_4():
    suite = cmc_examples() + geodesic_examples()
    key = max(G.key_identity_residual(ws, f, x) for ws, f, x in suite)
    div = max(G.calibration_divergence_residual(ws, f, x) for ws, f, x in suite)
    z = max(G.calibration_z_mismatch(ws, f, x) for ws, f, x in suite)
    ok = max(key, div) <= 1e-4 and z <= 1e-6
    return ok, f"key identity {key:.2e}, divergence {div:.2e} (tol 1e-4); Z mismatch {z:.2e} (tol 1e-6)"


def criterion_5():
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(100):
        m, n = int(rng.integers(2, 4)), int(rng.integers(1, 4))
        ws = random_warped_space(rng, m, n)
        f = random_graph(rng, ws, curved=bool(i % 2))
        fr = G.eigenframe(ws, f, random_point(rng, m), rng=rng)
        worst = max(worst, max(G.all_eigen_residuals(fr).values()))
    return worst <= 1e-8, f"max relation residual over 100 graphs = {worst:.2e} (tol 1e-8)"


def criterion_6():
    spaces = [RadialSpace.hyperbolic(2), RadialSpace.hyperbolic(3),
              RadialSpace.hyperbolic(2, 15.0, *psi_builtin("log-cosh"))]
    worst_gap, worst_margin = math.inf, math.inf
    for rs in spaces:
        c0 = c_zero(rs)
        radii = np.linspace(0.2, 0.95 * rs.t_max, 60)
        for frac in (0.0, -0.3, 0.5, 0.9, 0.99):
            c = frac * c0.value
            hm = heinz_margin(rs, c, radii, c0)
            worst_gap = min(worst_gap, float(np.min(hm - (c0.value - abs(c) - 1e-6))))
            worst_margin = min(worst_margin, float(np.min(hm)))
    rs = spaces[0]
    c0 = c_zero(rs)
    sharp = float(np.min(heinz_margin(rs, 0.99 * c0.value, np.linspace(0.2, 0.95 * rs.t_max, 60), c0)))
    ok = worst_gap >= 0 and worst_margin > 0 and sharp <= 0.011 * c0.value
    return ok, (f"bound slack {worst_gap:.2e} >= 0, min margin {worst_margin:.3e} > 0, "
                f"sharpness margin at 0.99 C0 = {sharp:.4f} (<= {0.011 * c0.value:.4f})")


def criterion_7():
    suites = [(RadialSpace.hyperbolic(2), (1.0, 2.0, 5.0, 10.0, 20.0)),
              (RadialSpace.hyperbolic(3), (1.0, 5.0, 10.0)),
              (RadialSpace.hyperbolic(2, 15.0, *psi_builtin("log-cosh")), (1.0, 5.0, 10.0))]
    worst = math.inf
    for rs, radii in suites:
        c0 = c_zero(rs).value
        for r in radii:
            worst = min(worst, drift_eigenvalue(rs, r, 2048).lambda1 - c0 ** 2 / 4)
    lam20 = drift_eigenvalue(RadialSpace.hyperbolic(2), 20.0, 4096).lambda1
    ineq = worst >= -1e-6
    sharp = 0.25 <= lam20 <= 0.26
    return ineq and sharp, (f"inequality margin {worst:.3e} >= -1e-6 [{'ok' if ineq else 'violated'}]; "
                            f"lambda1(B_20) = {lam20:.5f} in [0.25, 0.26] [{'ok' if sharp else 'outside'}]")


def criterion_8():
    rs = RadialSpace.euclidean(2)
    lam = drift_eigenvalue(rs, 1.0, 4096).lambda1
    lams = [drift_eigenvalue(rs, 1.0, n).lambda1 for n in (512, 1024, 2048, 4096)]
    d = np.abs(np.diff(lams))
    ratios = d[:-1] / d[1:]
    ok = abs(lam - 5.7832) <= 5e-3 and np.all(ratios >= 3.5)
    return ok, f"lambda1 = {lam:.7f} (5.7832 +- 5e-3), refinement ratios {np.round(ratios, 2).tolist()} (>= 3.5)"


def criterion_9():
    cases = [
        (RadialSpace.euclidean(2), 0.0, 0.0, (0.5, 1.0, 2.0)),
        (RadialSpace.spherical(2), 1.0, 0.0, (0.5, 1.0, 2.0)),
        (RadialSpace.euclidean(2, 5.0, *psi_builtin("series", [0.0, 0.0, -0.25])), 0.5, 0.25, (0.5, 1.0)),
    ]
    worst, certified = math.inf, True
    for rs, a, d, radii in cases:
        for r in radii:
            s = setti_margin(rs, r, a, d, grid_size=1024)
            certified &= s.certified
            worst = min(worst, s.value)
    return certified and worst >= -1e-6, f"min model-minus-weighted margin {worst:.3e} (>= -1e-6), certified={certified}"


def criterion_10():
    radii = np.geomspace(1e-2, 9.0, 50)
    err = max(float(np.max(np.abs(cheeger_scan(RadialSpace.euclidean(m), radii).quotients * radii - m)))
              for m in (2, 3, 4))
    return err <= 1e-9, f"max |r * quotient - m| = {err:.2e} (tol 1e-9)"


def _flat_affine():
    base = Chart((-3.0, -3.0), (3.0, 3.0))
    fiber = Chart((-100.0, -100.0), (100.0, 100.0))
    ws = WarpedSpace(MetricField.euclidean(base), MetricField.euclidean(fiber), ScalarField.constant(base, 0.0))
    f = GraphMap.affine(base, fiber, [[0.4, -1.1], [0.3, 0.2]], [0.5, 0.0])
    return [(ws, f, np.array([0.3, -0.2])), (ws, f, np.array([-1.0, 1.5]))]


def criterion_11():
    rng = np.random.default_rng(11)
    suite = cmc_examples() + geodesic_examples() + _flat_affine()
    for m in (2, 3):
        rs = RadialSpace.hyperbolic(m)
        ws, f = lift_to_graph(rs, cmc_profile(rs, 0.0, -1.0, np.linspace(0.0, 3.0, 7)))
        suite.append((ws, f, probe(m, 1.5)))
    for _ in range(10):
        ws = random_warped_space(rng, 2, 2)
        suite.append((ws, random_graph(rng, ws), random_point(rng, 2)))
    bad, minimal = 0, 0
    for ws, f, x in suite:
        b = G.curvature_bundle(ws, f, x)
        h0, w0 = b.norm_H <= 1e-8, b.norm_W_star <= 1e-7
        bad += h0 != w0
        minimal += h0
    return bad == 0, f"{bad} mismatches over {len(suite)} graphs ({minimal} minimal, {len(suite) - minimal} not)"


def criterion_12():
    rng = np.random.default_rng(12)
    closed, slice_err, angle_err = 0.0, 0.0, 0.0
    for m, n in [(2, 1), (2, 2), (3, 1), (3, 2)]:
        ws = random_warped_space(rng, m, n)
        for _ in range(3):
            x = random_point(rng, m)
            p = np.concatenate([x, rng.uniform(-1, 1, n)])
            for route in ("components", "covariant"):
                closed = max(closed, omega_closedness_residual(ws, p, route=route))
            frame = np.zeros((m, m + n))
            frame[:, :m] = np.linalg.inv(np.linalg.cholesky(ws.base_metric(x)))
            slice_err = max(slice_err, abs(omega_eval(ws, p, frame) - 1.0))
            f = random_graph(rng, ws)
            b = G.curvature_bundle(ws, f, x)
            ratio = math.sqrt(np.linalg.det(b.frame.g_star) / np.linalg.det(b.frame.g))
            angle_err = max(angle_err, abs(b.cos_theta * ratio - 1.0))
    ok = closed <= 1e-5 and slice_err <= 1e-10 and angle_err <= 1e-10
    return ok, f"closedness {closed:.2e} (tol 1e-5), slice |Omega - 1| {slice_err:.2e}, cos*sqrt(det) {angle_err:.2e} (tol 1e-10)"


CRITERIA = [
    (1, "C0 of hyperbolic space", criterion_1),
    (2, "CMC radial graphs", criterion_2),
    (3, "divergence identity", criterion_3),
    (4, "calibration identity", criterion_4),
    (5, "eigenframe relations", criterion_5),
    (6, "Heinz bound and sharpness", criterion_6),
    (7, "weighted Cheeger inequality and sharpness", criterion_7),
    (8, "spectral solver oracle", criterion_8),
    (9, "model-space eigenvalue comparison", criterion_9),
    (10, "ball quotient rate", criterion_10),
    (11, "minimality equivalence", criterion_11),
    (12, "calibration form properties", criterion_12),
]


def report_line(number, title, ok, detail):
    return f"ACCEPTANCE {number:>2} {title}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("number, title, fn", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_acceptance(number, title, fn, capsys):
    ok, detail = fn()
    with capsys.disabled():
        print("\n" + report_line(number, title, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    for number, title, fn in CRITERIA:
        print(report_line(number, title, *fn()))
