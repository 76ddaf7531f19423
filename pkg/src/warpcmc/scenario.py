"""Run a validated scenario: build the space and graph, evaluate every check, collect a report."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import graph as G
from .config import ScenarioConfig
from .geometry import Chart, GraphMap, MetricField
from .radial import (
    AdmissibilityError,
    c_zero,
    cmc_profile,
    lift_to_graph,
    phi_ode_residual,
    phi_value,
    radial_base,
    write_profile_csv,
    xi_ode_residual,
)
from .spectral import (
    cheeger_scan,
    drift_eigenvalue,
    heinz_margin,
    rate_constant,
    setti_margin,
    write_scan_csv,
)
from .warped import WarpedSpace, omega_closedness_residual, omega_eval

__all__ = ["DEFAULT_TOLERANCES", "Check", "Report", "run_scenario", "build_graph", "probe_points"]

DEFAULT_TOLERANCES = {
    "norm_H": 1e-4,          # |H| = |c|/m through the full tensor pipeline
    "identity": 1e-4,        # divergence identities on curved graphs (nested differences)
    "identity_exact": 1e-8,  # same identities on totally geodesic graphs
    "z_mismatch": 1e-6,
    "eigen": 1e-8,
    "pointwise": 1e-8,       # algebraic identities at a point
    "ambient_H": 1e-5,       # H against second differences of the ambient connection
    "omega_derivative": 1e-5,
    "closedness": 1e-5,
    "slice": 1e-10,
    "angle_det": 1e-10,
    "minimal_H": 1e-8,
    "minimal_W": 1e-7,
    "phi_ode": 1e-6,
    "xi_ode": 1e-5,
    "quotient_phi": 1e-9,
    "spectral": 1e-6,
    "heinz": 1e-6,
}

# fiber charts for affine/constant graphs
FIBER_HALF_WIDTH = 1e3


@dataclass
class Check:
    name: str
    anchor: str                  # the identity or bound this check exercises
    value: float
    bound: float
    tolerance: float
    status: str                  # PASS | FAIL | FLAGGED
    detail: str = ""
    sense: str = "<="            # value <= bound, or value >= bound

    @property
    def margin(self) -> float:
        return self.bound - self.value if self.sense == "<=" else self.value - self.bound

    def as_dict(self) -> dict:
        out = asdict(self)
        out["margin"] = self.margin
        return out


def _le(name, anchor, value, bound, tol, detail="") -> Check:
    """Check ``value <= bound``; ``tol`` is the slack already folded into ``bound``."""
    ok = bool(np.isfinite(value)) and value <= bound
    return Check(name, anchor, float(value), float(bound), float(tol), "PASS" if ok else "FAIL", detail)


def _ge(name, anchor, value, bound, tol, detail="") -> Check:
    """Check ``value >= bound``."""
    ok = bool(np.isfinite(value)) and value >= bound
    return Check(name, anchor, float(value), float(bound), float(tol), "PASS" if ok else "FAIL", detail, ">=")


@dataclass
class Report:
    scenario: str
    checks: list = field(default_factory=list)
    observables: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return any(c.status == "FAIL" for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "checks": [c.as_dict() for c in self.checks],
            "observables": self.observables,
            "provenance": self.provenance,
            "summary": {s: sum(c.status == s for c in self.checks) for s in ("PASS", "FAIL", "FLAGGED")},
        }


def _fiber_metric(cfg: ScenarioConfig) -> MetricField:
    n = cfg.fiber.dim
    chart = Chart((-FIBER_HALF_WIDTH,) * n, (FIBER_HALF_WIDTH,) * n, label=f"fiber-{cfg.fiber.metric}")
    if cfg.fiber.metric == "flat":
        return MetricField.euclidean(chart)

    def stereo(y):
        return 4.0 / (1.0 + float(y @ y)) ** 2 * np.eye(n)

    return MetricField(chart, stereo)


def build_graph(cfg: ScenarioConfig, rs, c0=None):
    """``(WarpedSpace, GraphMap, profile or None)`` for the configured graph."""
    if cfg.graph.kind == "cmc-radial":
        c0 = c_zero(rs) if c0 is None else c0
        grid = np.linspace(0.0, max(cfg.probes.radii) * 1.25 if cfg.probes.radii else 1.0, 41)
        grid = grid[grid <= rs.t_max]
        prof = cmc_profile(rs, cfg.graph.c, cfg.graph.d, grid, c0)
        ws, f = lift_to_graph(rs, prof)
        return ws, f, prof
    g, weight = radial_base(rs)
    ws = WarpedSpace(g, _fiber_metric(cfg), weight)
    if cfg.graph.kind == "affine":
        f = GraphMap.affine(g.chart, ws.fiber_metric.chart, cfg.graph.matrix, cfg.graph.offset)
    else:
        f = GraphMap.constant(g.chart, ws.fiber_metric.chart, cfg.graph.value)
    return ws, f, None


def probe_points(cfg: ScenarioConfig) -> list:
    m = cfg.space.m
    return [np.array([r] + [cfg.probes.angle] * (m - 1)) for r in cfg.probes.radii]


def _probe_checks(cfg: ScenarioConfig, ws, f, x, tol: dict, fd) -> list:
    """All tensor checks at one base point."""
    kind, m = cfg.graph.kind, cfg.space.m
    tag = f"[t={x[0]:g}]"
    out = []
    b = G.curvature_bundle(ws, f, x, fd)
    fr = b.frame
    p = np.concatenate([x, f(x)])

    if kind == "cmc-radial":
        target = abs(cfg.graph.c) / m
        out.append(_le(f"norm-H {tag}", "constant-mean-curvature-|c|/m",
                       abs(b.norm_H - target), tol["norm_H"], tol["norm_H"], f"|H| = {b.norm_H!r}"))

    res = G.all_eigen_residuals(fr)
    out.append(_le(f"eigenframe-relations {tag}", "eigenframe-identities",
                   max(res.values()), tol["eigen"], tol["eigen"]))
    H_amb = G.ambient_mean_curvature(ws, f, x, fd)
    out.append(_le(f"ambient-mean-curvature {tag}", "mean-curvature-decomposition",
                   float(np.max(np.abs(H_amb - b.H))), tol["ambient_H"], tol["ambient_H"]))
    r1, r2 = G.q_psi_residuals(ws, f, x, fd)
    out.append(_le(f"q-psi-identities {tag}", "q-psi-of-mean-curvature", max(r1, r2),
                   tol["pointwise"], tol["pointwise"]))
    direct, eig = G.q_psi_of_psi_star(ws, f, x, fd)
    out.append(_le(f"q-psi-of-psi-star {tag}", "q-psi-nonnegative-eigen-sum",
                   abs(direct - eig), tol["pointwise"] * max(1.0, abs(eig)), tol["pointwise"]))
    out.append(_le(f"two-angles {tag}", "tangential-drift-orthogonal-to-H",
                   G.two_angles_residual(ws, f, x, fd), tol["pointwise"], tol["pointwise"]))
    minimal_H = b.norm_H <= tol["minimal_H"]
    minimal_W = b.norm_W_star <= tol["minimal_W"]
    out.append(Check(f"minimality-equivalence {tag}", "minimal-iff-W-plus-Psi-star-vanishes",
                     float(minimal_H != minimal_W), 0.0, 0.0,
                     "PASS" if minimal_H == minimal_W else "FAIL",
                     f"|H| = {b.norm_H!r}, |W*| = {b.norm_W_star!r}"))
    out.append(_le(f"omega-closedness {tag}", "calibration-closed",
                   omega_closedness_residual(ws, p, fd), tol["closedness"], tol["closedness"]))
    out.append(_le(f"omega-angle {tag}", "calibration-angle-cos-theta",
                   abs(G.omega_angle(ws, f, x, fd) - b.cos_theta), tol["pointwise"], tol["pointwise"]))
    det_ratio = math.sqrt(np.linalg.det(fr.g_star) / np.linalg.det(fr.g))
    out.append(_le(f"cos-theta-volume {tag}", "cos-theta-times-volume-ratio",
                   abs(b.cos_theta * det_ratio - 1.0), tol["angle_det"], tol["angle_det"]))
    out.append(_le(f"calibration-Z {tag}", "Z-equals-cos-theta-H_M",
                   G.calibration_z_mismatch(ws, f, x, fd), tol["z_mismatch"], tol["z_mismatch"]))
    out.append(_le(f"omega-derivative {tag}", "covariant-derivative-of-calibration",
                   G.omega_derivative_residual(ws, f, x, fd), tol["omega_derivative"], tol["omega_derivative"]))

    if kind in ("cmc-radial", "constant"):
        # parallel mean curvature: the divergence identities apply
        t_id = tol["identity"] if kind == "cmc-radial" else tol["identity_exact"]
        out.append(_le(f"heinz-divergence {tag}", "heinz-divergence-identity",
                       G.heinz_divergence_residual(ws, f, x, fd), t_id, t_id))
        out.append(_le(f"calibration-divergence {tag}", "calibration-divergence-identity",
                       G.calibration_divergence_residual(ws, f, x, fd), t_id, t_id))
        out.append(_le(f"key-calibration-identity {tag}", "key-calibration-identity",
                       G.key_identity_residual(ws, f, x, fd), t_id, t_id))
    return out


def _slice_check(ws, x, tol) -> Check:
    m, n = ws.m, ws.n
    g = ws.base_metric(x)
    L = np.linalg.cholesky(g)
    frame = np.zeros((m, m + n))
    frame[:, :m] = np.linalg.inv(L)           # rows: g-orthonormal, positively oriented
    val = omega_eval(ws, np.concatenate([x, np.zeros(n)]), frame)
    return _le(f"omega-slice [t={x[0]:g}]", "calibration-equals-one-on-slices",
               abs(val - 1.0), tol["slice"], tol["slice"])


def run_scenario(cfg: ScenarioConfig, tolerances: Optional[dict] = None, grid_size: Optional[int] = None,
                 parallel: bool = True, out_dir=None) -> Report:
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    fd = cfg.probes.fd()
    N = grid_size or cfg.probes.grid_size
    rs = cfg.space.build()
    c0 = c_zero(rs)
    if cfg.graph.kind == "cmc-radial" and abs(cfg.graph.c) >= c0.value:
        raise AdmissibilityError(
            f"graph.c = {cfg.graph.c} is not admissible: need |c| < C0 = {c0.value:.10g} for {rs.label} (m={rs.m})")

    report = Report(cfg.name)
    report.checks.append(Check("c-zero", "admissibility-ceiling-C0", c0.value, c0.value, 1e-10,
                               "FLAGGED" if c0.boundary else "PASS",
                               "infimum reached at t_max; true value may be lower" if c0.boundary else
                               f"minimizer t* = {c0.t_star!r}"))
    grid = np.geomspace(2e-3, rs.t_max * 0.999, 64)
    report.checks.append(_le("phi-ode", "phi-linear-ode", phi_ode_residual(rs, grid),
                             tol["phi_ode"], tol["phi_ode"]))
    if c0.value > 0:
        t0 = 2e-3
        report.checks.append(_ge("phi-origin-blowup", "inverse-phi-diverges-at-origin",
                                 1.0 / phi_value(rs, t0), 10.0 * c0.value, 0.0))

    ws, f, prof = build_graph(cfg, rs, c0)
    if prof is not None:
        report.checks.append(_le("xi-ode", "xi-linear-ode", xi_ode_residual(rs, prof),
                                 tol["xi_ode"], tol["xi_ode"]))

    pts = probe_points(cfg)
    tasks: list[Callable] = [lambda x=x: _probe_checks(cfg, ws, f, x, tol, fd) for x in pts]
    radii = list(cfg.spectral.radii)
    tasks += [lambda r=r: drift_eigenvalue(rs, r, N) for r in radii]
    if parallel:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(lambda t: t(), tasks))
    else:
        results = [t() for t in tasks]
    for chunk in results[: len(pts)]:
        report.checks.extend(chunk)
    report.checks.extend(_slice_check(ws, x, tol) for x in pts)
    bundles = [G.curvature_bundle(ws, f, x, fd) for x in pts]
    report.observables["mean_curvature"] = {
        "t": [float(x[0]) for x in pts],
        "norm_H": [float(b.norm_H) for b in bundles],
        "norm_W_star": [float(b.norm_W_star) for b in bundles],
    }
    if cfg.graph.kind == "cmc-radial":
        report.observables["mean_curvature"]["target"] = abs(cfg.graph.c) / cfg.space.m

    spectra = results[len(pts):]
    scan = cheeger_scan(rs, radii)
    if radii:
        qphi = max(abs(q * phi_value(rs, r) - 1.0) for r, q in zip(scan.radii, scan.quotients))
        report.checks.append(_le("quotient-times-phi", "ball-quotient-equals-inverse-phi", qphi,
                                 tol["quotient_phi"], tol["quotient_phi"]))
        report.checks.append(_ge("quotient-above-C0", "C0-bounds-ball-quotients",
                                 float(np.min(scan.quotients)), c0.value - tol["quotient_phi"], tol["quotient_phi"]))
        c = cfg.graph.c if cfg.graph.kind == "cmc-radial" else 0.0
        hm = heinz_margin(rs, c, radii, c0)
        report.checks.append(_ge("heinz-margin", "heinz-mean-curvature-bound", float(np.min(hm)),
                                 c0.value - abs(c) - tol["heinz"], tol["heinz"]))
        for r, sr in zip(radii, spectra):
            report.checks.append(_ge(f"cheeger-inequality [r={r:g}]", "weighted-cheeger-inequality",
                                     sr.lambda1 - 0.25 * c0.value ** 2, -tol["spectral"], tol["spectral"],
                                     f"lambda1 = {sr.lambda1!r} +- {sr.discretization_estimate:.2e}"))
        order = np.argsort(radii)
        lams = np.array([spectra[i].lambda1 for i in order])
        if len(lams) > 1:
            rs_sorted = np.asarray(radii)[order]
            distinct = np.diff(rs_sorted) > 0
            worst = float(np.max(np.diff(lams)[distinct])) if distinct.any() else -math.inf
            report.checks.append(_le("eigenvalue-domain-monotone", "dirichlet-domain-monotonicity",
                                     worst, 0.0, 0.0))
        if cfg.spectral.setti:
            a, d = cfg.spectral.setti["alpha"], cfg.spectral.setti["delta"]
            for r in radii:
                s = setti_margin(rs, r, a, d, N)
                detail = (f"kappa = {s.kappa!r}, min Ricci_psi = {s.min_ricci_psi!r}, "
                          f"max |grad psi|^2 = {s.max_grad_psi_sq!r}")
                chk = _ge(f"setti-comparison [r={r:g}]", "model-space-eigenvalue-comparison",
                          s.value, -tol["spectral"], tol["spectral"], detail)
                if not s.certified:
                    chk.status = "FAIL"
                    chk.detail = "hypotheses not certified: " + detail
                report.checks.append(chk)
        report.observables["ball_scan"] = {
            "radii": [float(r) for r in scan.radii],
            "quotients": [float(q) for q in scan.quotients],
            "lambda1": [float(s.lambda1) for s in spectra],
            "discretization_estimate": [float(s.discretization_estimate) for s in spectra],
            "best": list(scan.best),
        }
        report.observables["rate_constant_sup_r_quotient"] = rate_constant(rs, radii)
    report.observables["C0"] = {"value": c0.value, "t_star": c0.t_star, "boundary": c0.boundary}
    if cfg.graph.kind == "cmc-radial":
        report.observables["admissible_c_range"] = [-c0.value, c0.value]

    report.provenance = {
        "config_sha256": cfg.sha256,
        "tolerances": tol,
        "grid_size": N,
        "fd_steps": {"first": fd.first, "second": fd.second},
        "space": {"tau": cfg.space.tau, "Psi": cfg.space.Psi, "m": cfg.space.m, "t_max": cfg.space.t_max},
        "graph": {"kind": cfg.graph.kind},
    }

    if out_dir is not None and "csv" in cfg.outputs.formats:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if radii:
            write_scan_csv(out / f"{cfg.name}-scan.csv", rs, radii,
                           cfg.graph.c if cfg.graph.kind == "cmc-radial" else 0.0, N, c0)
        if prof is not None:
            write_profile_csv(out / f"{cfg.name}-profile.csv", rs, prof)
    return report
