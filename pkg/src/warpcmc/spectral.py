"""Weighted Cheeger quotients of centered balls and the radial drift-Laplacian eigenproblem.

For a radial space the first Dirichlet eigenfunction of ``-Delta - <grad psi, grad .>``
on ``B_r`` is radial and solves ``-(X u')' = lambda X u`` on ``(0, r)`` with
``u'(0) = 0`` and ``u(r) = 0``.  The problem is discretized by finite volumes on a
uniform grid: node ``j`` owns the cell ``[t_j - h/2, t_j + h/2] cap [0, r]``, fluxes
use ``X`` at the half nodes, and cell masses are exact integrals of ``X``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .geometry import DEFAULT_FD, FDSteps, bakry_emery_ricci
from .radial import CZero, RadialSpace, c_zero, phi_value, radial_base

__all__ = [
    "SpectralError",
    "sphere_area",
    "weighted_ball_measures",
    "CheegerScan",
    "cheeger_scan",
    "SpectralResult",
    "drift_eigenvalue",
    "sturm_count",
    "cheeger_inequality_margin",
    "space_form",
    "SettiResult",
    "setti_margin",
    "heinz_margin",
    "rate_constant",
    "write_scan_csv",
]

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(5)


class SpectralError(RuntimeError):
    pass


def sphere_area(m: int) -> float:
    """Area of the unit sphere ``S^{m-1}``: ``2 pi^{m/2} / Gamma(m/2)``."""
    return 2.0 * math.pi ** (m / 2) / math.gamma(m / 2)


def weighted_ball_measures(rs: RadialSpace, r: float):
    """``(V_psi(B_r), A_psi(dB_r))``."""
    if not 0.0 < r <= rs.t_max * (1 + 1e-12):
        raise ValueError(f"radius {r} outside (0, {rs.t_max}]")
    w = sphere_area(rs.m)
    return w * rs.integral_x(r), w * float(rs.X(r))


@dataclass
class CheegerScan:
    radii: np.ndarray
    quotients: np.ndarray
    volumes: np.ndarray = field(repr=False)
    areas: np.ndarray = field(repr=False)

    @property
    def best(self):
        """``(r*, q*)`` at the smallest quotient."""
        i = int(np.argmin(self.quotients))
        return float(self.radii[i]), float(self.quotients[i])


def cheeger_scan(rs: RadialSpace, radii: Sequence[float]) -> CheegerScan:
    """Quotients ``A_psi / V_psi`` of centered balls; each is an upper bound for the Cheeger constant."""
    radii = np.asarray(radii, dtype=float)
    vols, areas = zip(*(weighted_ball_measures(rs, r) for r in radii)) if radii.size else ((), ())
    vols, areas = np.array(vols), np.array(areas)
    return CheegerScan(radii, areas / vols, vols, areas)


@dataclass
class SpectralResult:
    lambda1: float
    radius: float
    grid_size: int
    eigenfunction: np.ndarray = field(repr=False)   # nodal values at t_j = j r / N, j = 0..N
    discretization_estimate: float
    rayleigh: float

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.radius, self.grid_size + 1)


def _pencil(rs: RadialSpace, r: float, N: int):
    """Stiffness diagonal and off-diagonal, cell masses and flux weights ``X_{j+1/2} / h``."""
    h = r / N
    t = np.arange(N) * h
    Xh = rs.X((np.arange(N) + 0.5) * h)
    if np.any(~np.isfinite(Xh)) or np.any(Xh <= 0):
        raise SpectralError("X <= 0 at a half node: pencil is not positive definite")
    lo = np.maximum(t - 0.5 * h, 0.0)
    hi = t + 0.5 * h
    half = 0.5 * (hi - lo)
    nodes = (lo + hi)[:, None] * 0.5 + half[:, None] * _GAUSS_X[None, :]
    mass = half * (rs.X(nodes.ravel()).reshape(N, -1) @ _GAUSS_W)
    diag = Xh / h
    diag[1:] += Xh[:-1] / h
    off = -Xh[:-1] / h           # coupling of u_j and u_{j+1}; u_N = 0 is eliminated
    return diag, off, mass, Xh / h


def sturm_count(d: Sequence[float], e2: Sequence[float], x: float) -> int:
    """Number of eigenvalues below ``x`` of the symmetric tridiagonal matrix (diag ``d``, squared offdiag ``e2``)."""
    count = 0
    q = d[0] - x
    tiny = 1e-300
    if q < 0:
        count += 1
    for k in range(1, len(d)):
        if q == 0.0:
            q = tiny
        q = d[k] - x - e2[k - 1] / q
        if q < 0:
            count += 1
    return count


def _smallest_singular(a: np.ndarray, b: np.ndarray) -> float:
    """Smallest singular value of the bidiagonal matrix with diagonal ``a`` and superdiagonal ``b``.

    Bisection with Sturm counts on the zero-diagonal Golub-Kahan form
    ``[[0, C^T], [C, 0]]``, which resolves small singular values to
    relative precision even when ``C`` is badly graded.
    """
    n = len(a)
    off = np.empty(2 * n - 1)
    off[0::2] = np.abs(a)
    off[1::2] = np.abs(b)
    e2 = (off * off).tolist()
    zero = [0.0] * (2 * n)
    lo, hi = 0.0, float(2.0 * np.max(off))
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            return hi
        # eigenvalues are +-sigma: n of them lie below any positive x
        if sturm_count(zero, e2, mid) > n:
            hi = mid
        else:
            lo = mid
    raise SpectralError("Sturm bisection did not reach machine resolution")


def _lowest(rs: RadialSpace, r: float, N: int):
    diag, off, mass, flux = _pencil(rs, r, N)
    s = 1.0 / np.sqrt(mass)
    d = diag * s * s
    e = off * s[:-1] * s[1:]
    # K = B^T B with (B u)_j = sqrt(X_{j+1/2} / h) (u_{j+1} - u_j), so T = C^T C, C = B D^{-1/2}
    w = np.sqrt(flux)
    sigma = _smallest_singular(w * s, w[:-1] * s[1:])
    return sigma * sigma, d, e, s, flux, mass


def drift_eigenvalue(rs: RadialSpace, r: float, grid_size: int = 1024) -> SpectralResult:
    """First Dirichlet eigenvalue of the drift Laplacian on the centered ball ``B_r``."""
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    if not 0.0 < r <= rs.t_max * (1 + 1e-12):
        raise ValueError(f"radius {r} outside (0, {rs.t_max}]")
    N = int(grid_size)
    lam, d, e, s, flux, mass = _lowest(rs, r, N)

    # one inverse-iteration pass with the converged shift
    shift = lam * (1.0 - 1e-14) if lam != 0 else -1e-14
    ab = np.zeros((3, N))
    ab[0, 1:] = e
    ab[1] = d - shift
    ab[2, :-1] = e
    y = solve_banded((1, 1), ab, np.ones(N))
    u = s * y
    u = u / u[np.argmax(np.abs(u))]
    if np.any(u <= 0):
        raise SpectralError("first eigenfunction is not positive; inverse iteration failed")

    # energy in flux form avoids the cancellation in u.K.u
    energy = float(np.sum(flux * np.diff(np.append(u, 0.0)) ** 2))
    rayleigh = energy / float(u @ (mass * u))
    if abs(rayleigh - lam) > 1e-10 * abs(lam):
        raise SpectralError(f"Rayleigh quotient {rayleigh} disagrees with eigenvalue {lam}")

    coarse = _lowest(rs, r, N // 2)[0]
    return SpectralResult(
        lambda1=lam, radius=float(r), grid_size=N,
        eigenfunction=np.append(u, 0.0),
        discretization_estimate=abs(lam - coarse) / 3.0,
        rayleigh=rayleigh,
    )


def cheeger_inequality_margin(rs: RadialSpace, r: float, grid_size: int = 1024,
                              c0: Optional[CZero] = None) -> float:
    """``lambda_1(B_r) - C0^2 / 4``; nonnegative whenever C0 bounds the Cheeger constant."""
    c0 = c_zero(rs) if c0 is None else c0
    return drift_eigenvalue(rs, r, grid_size).lambda1 - 0.25 * c0.value ** 2


def space_form(m: int, kappa: float, t_max: float) -> RadialSpace:
    """Unweighted model of dimension ``m`` and constant curvature ``kappa``."""
    if kappa > 0:
        k = math.sqrt(kappa)
        if t_max >= math.pi / k:
            raise ValueError(f"radius {t_max} reaches the antipode of the curvature-{kappa} sphere")
        return RadialSpace(m, lambda t: np.sin(k * t) / k, lambda t: np.cos(k * t),
                           lambda t: np.zeros_like(t), lambda t: np.zeros_like(t), t_max,
                           f"space-form(k={kappa:g})")
    if kappa < 0:
        k = math.sqrt(-kappa)
        return RadialSpace(m, lambda t: np.sinh(k * t) / k, lambda t: np.cosh(k * t),
                           lambda t: np.zeros_like(t), lambda t: np.zeros_like(t), t_max,
                           f"space-form(k={kappa:g})")
    return RadialSpace.euclidean(m, t_max, label="space-form(k=0)")


@dataclass
class SettiResult:
    value: float                 # lambda_1(B0_r) - lambda_psi,1(B_r)
    status: str                  # "certified" or "hypotheses-failed"
    kappa: float
    lambda_model: float
    lambda_weighted: float
    min_ricci_psi: float
    max_grad_psi_sq: float

    @property
    def certified(self) -> bool:
        return self.status == "certified"


def setti_margin(rs: RadialSpace, r: float, alpha: float, delta: float, grid_size: int = 1024,
                 samples: int = 8, tol: float = 1e-4, fd: FDSteps = DEFAULT_FD) -> SettiResult:
    """Compare with the ``(m+1)``-dimensional space form of curvature ``(alpha - delta) / m``.

    The hypotheses ``Ricci_psi >= alpha`` and ``|grad psi|^2 <= delta`` are
    sampled on ``B_r`` (up to ``tol``); if either fails the status says so and
    the margin is still reported.
    """
    if not alpha >= delta >= 0:
        raise ValueError("need alpha >= delta >= 0")
    m = rs.m
    kappa = (alpha - delta) / m
    model = space_form(m + 1, kappa, r)
    lam0 = drift_eigenvalue(model, r, grid_size).lambda1
    lam = drift_eigenvalue(rs, r, grid_size).lambda1

    ts = np.linspace(r, 0.0, samples, endpoint=False)[::-1]
    grad_sq = float(np.max(rs.Psi_prime(np.linspace(0.0, r, 4 * samples + 1)) ** 2))
    min_ric = math.inf
    if m in (2, 3):
        g, weight = radial_base(rs)
        margin = 4.0 * float(np.max(fd.h2(np.array([r]))))
        for t in ts:
            t = min(max(t, margin), rs.t_max - margin)
            x = np.array([t] + [0.5 * math.pi] * (m - 1))
            R = bakry_emery_ricci(g, weight, x, fd)
            G = g(x)
            min_ric = min(min_ric, float(np.min(np.linalg.eigvals(np.linalg.solve(G, R)).real)))
    else:
        # no explicit chart: use the radial formulas for the model metric
        for t in ts:
            tau = float(rs.tau(t))
            h = 1e-4 * max(1.0, t)
            tpp = float((rs.tau_prime(t + h) - rs.tau_prime(t - h)) / (2 * h))
            Ppp = float((rs.Psi_prime(t + h) - rs.Psi_prime(t - h)) / (2 * h))
            tp, Pp = float(rs.tau_prime(t)), float(rs.Psi_prime(t))
            radial = -(m - 1) * tpp / tau - Ppp
            tangential = -tpp / tau + (m - 2) * (1 - tp * tp) / tau ** 2 - Pp * tp / tau
            min_ric = min(min_ric, radial, tangential)
    ok = min_ric >= alpha - tol and grad_sq <= delta + tol
    return SettiResult(lam0 - lam, "certified" if ok else "hypotheses-failed",
                       kappa, lam0, lam, min_ric, grad_sq)


def heinz_margin(rs: RadialSpace, c: float, radii: Sequence[float],
                 c0: Optional[CZero] = None) -> np.ndarray:
    """``quotient(r) - |c|`` per radius; positive whenever ``|c| < C0``."""
    c0 = c_zero(rs) if c0 is None else c0
    if abs(c) >= c0.value:
        raise ValueError(f"|c| = {abs(c)} is not below C0 = {c0.value:.10g}")
    return cheeger_scan(rs, radii).quotients - abs(c)


def rate_constant(rs: RadialSpace, radii: Sequence[float]) -> float:
    """``sup_r r * quotient(r)`` over the scanned radii."""
    scan = cheeger_scan(rs, radii)
    return float(np.max(scan.radii * scan.quotients))


def write_scan_csv(path, rs: RadialSpace, radii: Sequence[float], c: float = 0.0,
                   grid_size: int = 1024, c0: Optional[CZero] = None) -> None:
    """Columns: r, V_psi, A_psi, quotient, lambda1, cheeger_margin, heinz_margin."""
    c0 = c_zero(rs) if c0 is None else c0
    scan = cheeger_scan(rs, radii)
    heinz = heinz_margin(rs, c, scan.radii, c0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "V_psi", "A_psi", "quotient", "lambda1", "cheeger_margin", "heinz_margin"])
        for k, r in enumerate(scan.radii):
            lam = drift_eigenvalue(rs, r, grid_size).lambda1
            w.writerow([repr(float(r)), repr(float(scan.volumes[k])), repr(float(scan.areas[k])),
                        repr(float(scan.quotients[k])), repr(lam),
                        repr(lam - 0.25 * c0.value ** 2), repr(float(heinz[k]))])
