"""Spherically symmetric bases ``dt^2 + tau(t)^2 dsigma^2`` with a radial density.

With ``X(t) = e^{Psi(t)} tau(t)^{m-1}`` and ``phi(t) = int_0^t X / X(t)``, the
infimum ``C0`` of ``1/phi`` bounds the mean curvature of entire radial graphs,
and for every ``|c| < C0`` the profile

    F(t) = d + int_0^t e^{-Psi} c phi / sqrt(1 - c^2 phi^2)

gives a graph ``f(x) = F(r(x))`` in ``M x_{e^psi} R`` whose mean curvature has
constant norm ``|c| / m``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import Chart, GraphMap, MetricField, ScalarField
from .quadrature import CumulativeIntegral, QuadratureError
from .warped import WarpedSpace

__all__ = [
    "T_SERIES",
    "RadialSpace",
    "RadialRangeError",
    "InvalidSpaceError",
    "AdmissibilityError",
    "CZero",
    "CmcProfile",
    "psi_builtin",
    "big_x",
    "log_x_prime",
    "phi_value",
    "phi_profile",
    "phi_ode_residual",
    "c_zero",
    "cmc_profile",
    "xi_ode_residual",
    "radial_base",
    "lift_to_graph",
    "write_profile_csv",
    "POLAR_MARGIN",
]

# below this radius phi is replaced by its leading term t/m (X vanishes to order m-1 at 0)
T_SERIES = 1e-3
# polar-angle margin of the spherical chart used for m = 3
POLAR_MARGIN = 0.1


class RadialRangeError(ValueError):
    pass


class InvalidSpaceError(ValueError):
    pass


class AdmissibilityError(ValueError):
    pass


def _vec(fn: Callable) -> Callable:
    """Wrap a scalar-or-array callable so it always returns a float array."""
    def wrapped(t):
        return np.asarray(fn(np.asarray(t, dtype=float)), dtype=float) + np.zeros(np.shape(t))
    return wrapped


@dataclass(eq=False)
class RadialSpace:
    """``M_tau`` of dimension ``m`` with radial weight ``Psi``; callables must accept arrays."""

    m: int
    tau: Callable
    tau_prime: Callable
    Psi: Callable
    Psi_prime: Callable
    t_max: float
    label: str = "custom"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise InvalidSpaceError(f"dimension m must be an integer >= 2, got {self.m}")
        self.m = int(self.m)
        if not self.t_max > 0:
            raise InvalidSpaceError("t_max must be positive")
        self.tau = _vec(self.tau)
        self.tau_prime = _vec(self.tau_prime)
        self.Psi = _vec(self.Psi)
        self.Psi_prime = _vec(self.Psi_prime)

    # -- builtins ---------------------------------------------------------
    @classmethod
    def euclidean(cls, m: int, t_max: float = 10.0, Psi=None, Psi_prime=None, label="euclidean"):
        return cls(m, lambda t: t, lambda t: np.ones_like(t), *_psi_pair(Psi, Psi_prime), t_max, label)

    @classmethod
    def hyperbolic(cls, m: int, t_max: float = 30.0, Psi=None, Psi_prime=None, label="hyperbolic"):
        return cls(m, np.sinh, np.cosh, *_psi_pair(Psi, Psi_prime), t_max, label)

    @classmethod
    def spherical(cls, m: int, t_max: float = 2.5, Psi=None, Psi_prime=None, label="spherical"):
        if t_max >= math.pi:
            raise InvalidSpaceError("spherical t_max must stay below pi")
        return cls(m, np.sin, np.cos, *_psi_pair(Psi, Psi_prime), t_max, label)

    @classmethod
    def custom_series(cls, m: int, coefficients: Sequence[float], t_max: float,
                      Psi=None, Psi_prime=None, label="custom-series"):
        """``tau(t) = sum a_k t^k``; requires ``a0 = 0, a1 = 1, a2 = 0``."""
        a = np.asarray(coefficients, dtype=float)
        if a.size < 2 or a[0] != 0.0 or a[1] != 1.0 or (a.size > 2 and a[2] != 0.0):
            raise InvalidSpaceError("series coefficients must start 0, 1, 0")
        p = np.polynomial.Polynomial(a)
        dp = p.deriv()
        return cls(m, p, dp, *_psi_pair(Psi, Psi_prime), t_max, label)

    # -- derived ----------------------------------------------------------
    def X(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(self.Psi(t)) * self.tau(t) ** (self.m - 1)

    @cached_property
    def integral_x(self) -> CumulativeIntegral:
        return CumulativeIntegral(self.X, self.t_max)

    def check_range(self, t) -> None:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_max * (1 + 1e-12)):
            raise RadialRangeError(f"radius outside [0, {self.t_max}]")

    def validate(self, samples: int = 16, tol: float = 1e-7) -> None:
        """Check boundary conditions at 0, positivity and the supplied derivatives."""
        h = 1e-4
        tau0 = float(self.tau(0.0))
        d1 = float(self.tau_prime(0.0))
        d2 = float((self.tau(2 * h) - 2 * self.tau(h) + tau0) / h ** 2)
        if abs(tau0) > 1e-12 or abs(d1 - 1.0) > 1e-9:
            raise InvalidSpaceError(f"need tau(0)=0, tau'(0)=1; got {tau0}, {d1}")
        if abs(d2) > 1e-3:
            raise InvalidSpaceError(f"need tau''(0)=0; got about {d2}")
        if abs(float(self.Psi_prime(0.0))) > 1e-9:
            raise InvalidSpaceError("need Psi'(0)=0")
        ts = np.linspace(self.t_max / samples, self.t_max, samples)
        if np.any(self.tau(ts) <= 0):
            raise InvalidSpaceError("tau must be positive on (0, t_max]")
        hs = 1e-5 * np.maximum(1.0, ts)
        inner = ts - 2 * hs
        for name, fn, dfn in (("tau", self.tau, self.tau_prime), ("Psi", self.Psi, self.Psi_prime)):
            fd = (fn(inner + hs) - fn(inner - hs)) / (2 * hs)
            scale = np.maximum(1.0, np.abs(dfn(inner)))
            if np.max(np.abs(fd - dfn(inner)) / scale) > tol:
                raise InvalidSpaceError(f"{name}' does not match finite differences of {name}")


def _psi_pair(Psi, Psi_prime):
    if Psi is None:
        return (lambda t: np.zeros_like(t)), (lambda t: np.zeros_like(t))
    if Psi_prime is None:
        raise InvalidSpaceError("a weight Psi needs its derivative Psi_prime")
    return Psi, Psi_prime


def psi_builtin(name: str, coefficients: Optional[Sequence[float]] = None):
    """``(Psi, Psi')`` for ``"zero"``, ``"log-cosh"`` or ``"series"`` (``sum b_k t^k``, ``b1 = 0``)."""
    if name == "zero":
        return (lambda t: np.zeros_like(t)), (lambda t: np.zeros_like(t))
    if name == "log-cosh":
        return (lambda t: np.log(np.cosh(t))), np.tanh
    if name == "series":
        b = np.asarray(coefficients if coefficients is not None else [0.0], dtype=float)
        if b.size > 1 and b[1] != 0.0:
            raise InvalidSpaceError("weight series needs b1 = 0 so that Psi'(0) = 0")
        p = np.polynomial.Polynomial(b)
        return p, p.deriv()
    raise InvalidSpaceError(f"unknown weight builtin {name!r}")


def big_x(rs: RadialSpace, t: float) -> float:
    """``X(t) = e^{Psi} tau^{m-1}``."""
    rs.check_range(t)
    return float(rs.X(t))


def log_x_prime(rs: RadialSpace, t):
    """``(ln X)' = Psi' + (m-1) tau'/tau``."""
    t = np.asarray(t, dtype=float)
    return rs.Psi_prime(t) + (rs.m - 1) * rs.tau_prime(t) / rs.tau(t)


def phi_value(rs: RadialSpace, t: float) -> float:
    t = float(t)
    rs.check_range(t)
    if t < T_SERIES:
        return t / rs.m
    try:
        return rs.integral_x(t) / float(rs.X(t))
    except QuadratureError as exc:
        raise QuadratureError(f"phi({t}) on {rs.label}: {exc}") from exc


def phi_profile(rs: RadialSpace, grid: Sequence[float]) -> np.ndarray:
    return np.array([phi_value(rs, t) for t in np.asarray(grid, dtype=float)])


def phi_ode_residual(rs: RadialSpace, grid: Sequence[float]) -> float:
    """Max ``|phi' - 1 + (ln X)' phi|`` at grid points whose stencil avoids the series zone."""
    worst = 0.0
    for t in np.asarray(grid, dtype=float):
        # fourth-order stencil: phi can grow fast enough to spoil a two-point difference
        h = 2e-4 * max(1.0, t)
        if t - 2 * h < 2 * T_SERIES or t + 2 * h > rs.t_max:
            continue
        f = [phi_value(rs, t + k * h) for k in (-2, -1, 1, 2)]
        dphi = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        worst = max(worst, abs(dphi - 1.0 + float(log_x_prime(rs, t)) * phi_value(rs, t)))
    return worst


@dataclass(frozen=True)
class CZero:
    value: float
    t_star: float
    boundary: bool          # infimum sits at t_max: the true value may be lower

    def __float__(self) -> float:
        return self.value


def c_zero(rs: RadialSpace, points: int = 2048) -> CZero:
    """``inf 1/phi`` over ``(0, t_max]``: log-grid scan, then golden-section refinement."""
    grid = np.geomspace(T_SERIES, rs.t_max, points)
    phis = phi_profile(rs, grid)
    if np.any(phis <= 0):
        raise InvalidSpaceError(f"phi <= 0 on {rs.label}")
    inv = 1.0 / phis
    i = int(np.argmin(inv))
    # a tail that is flat to round-off counts as reaching t_max
    if i == points - 1 or inv[-1] - inv[i] <= 1e-10 * abs(inv[i]):
        return CZero(float(inv[i]), float(grid[-1]), True)
    if i == 0:
        raise InvalidSpaceError("1/phi is minimal at the inner edge of the scan")
    a, b = grid[i - 1], grid[i + 1]
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = 1.0 / phi_value(rs, c), 1.0 / phi_value(rs, d)
    while b - a > 1e-10 * max(1.0, b):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = 1.0 / phi_value(rs, c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = 1.0 / phi_value(rs, d)
    t_star = 0.5 * (a + b)
    value = min(1.0 / phi_value(rs, t_star), float(inv[i]))
    return CZero(value, float(t_star), False)


@dataclass(eq=False)
class CmcProfile:
    """Radial CMC profile ``F_{c,d}`` sampled on ``grid`` and evaluable anywhere in range."""

    space: RadialSpace
    c: float
    d: float
    c_zero: float
    grid: np.ndarray = field(repr=False)
    phi_values: np.ndarray = field(repr=False)
    phi_c_values: np.ndarray = field(repr=False)
    F_values: np.ndarray = field(repr=False)

    def phi_c(self, t: float) -> float:
        return self.c * phi_value(self.space, t)

    def F_prime(self, t: float) -> float:
        pc = self.phi_c(t)
        return float(np.exp(-self.space.Psi(t))) * pc / math.sqrt(1.0 - pc * pc)

    def F_second(self, t: float) -> float:
        rs = self.space
        phi = phi_value(rs, t)
        pc = self.c * phi
        if t < T_SERIES:
            dpc = self.c / rs.m
        else:
            dpc = self.c * (1.0 - float(log_x_prime(rs, t)) * phi)
        w = 1.0 - pc * pc
        return float(np.exp(-rs.Psi(t))) * (-float(rs.Psi_prime(t)) * pc / math.sqrt(w) + dpc / w ** 1.5)

    @property
    def t_end(self) -> float:
        """Right end of the profile's domain (last grid point)."""
        return float(self.grid[-1])

    @cached_property
    def _integral(self) -> CumulativeIntegral:
        vec = np.vectorize(self.F_prime, otypes=[float])
        return CumulativeIntegral(vec, self.t_end, anchors=64, reltol=1e-13)

    def F(self, t: float) -> float:
        if self.c == 0.0:
            return self.d
        return self.d + self._integral(t)

    def xi(self, t: float) -> float:
        Fp = self.F_prime(t)
        return Fp / math.sqrt(float(np.exp(-2.0 * self.space.Psi(t))) + Fp * Fp)


def cmc_profile(rs: RadialSpace, c: float, d: float, grid: Sequence[float],
                c0: Optional[CZero] = None) -> CmcProfile:
    """Build ``F_{c,d}`` on ``grid``; refuses ``|c| >= C0``."""
    grid = np.asarray(grid, dtype=float)
    rs.check_range(grid)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    c0 = c_zero(rs) if c0 is None else c0
    if abs(c) >= c0.value:
        raise AdmissibilityError(
            f"|c| = {abs(c)} is not below C0 = {c0.value:.10g} for {rs.label} (m={rs.m})")
    phis = phi_profile(rs, grid)
    if np.any(np.abs(c * phis) >= 1.0):
        raise AdmissibilityError(f"c * phi leaves (-1, 1) on the grid (C0 = {c0.value:.10g})")
    prof = CmcProfile(rs, float(c), float(d), c0.value, grid, phis, c * phis, np.empty(0))
    prof.F_values = np.array([prof.F(t) for t in grid])
    return prof


def _xi_residual_at(rs: RadialSpace, profile: CmcProfile, t: float) -> Optional[float]:
    """Pointwise ``|xi' - c + (ln X)' xi|``; ``None`` when the nested stencil does not fit."""
    h = 1e-3 * max(1.0, t)
    if t - 2 * h < 2 * T_SERIES or t + 2 * h > profile.t_end:
        return None

    def xi_fd(s):
        k = 1e-4 * max(1.0, s)
        Fp = (profile.F(s + k) - profile.F(s - k)) / (2 * k)
        return Fp / math.sqrt(float(np.exp(-2.0 * rs.Psi(s))) + Fp * Fp)

    dxi = (xi_fd(t + h) - xi_fd(t - h)) / (2 * h)
    return abs(dxi - profile.c + float(log_x_prime(rs, t)) * xi_fd(t))


def xi_ode_residual(rs: RadialSpace, profile: CmcProfile, grid: Optional[Sequence[float]] = None) -> float:
    """Max ``|xi' - c + (ln X)' xi|`` with ``xi`` rebuilt from finite differences of ``F``."""
    grid = profile.grid if grid is None else np.asarray(grid, dtype=float)
    vals = [_xi_residual_at(rs, profile, float(t)) for t in grid]
    return max([v for v in vals if v is not None], default=0.0)


def radial_base(rs: RadialSpace, t_end: Optional[float] = None):
    """Polar (m=2) or spherical (m=3) chart with metric ``dt^2 + tau^2 dsigma^2`` and weight ``Psi(t)``.

    The radial coordinate runs over ``[0, t_end]`` (default ``t_max``).
    """
    m = rs.m
    t_end = rs.t_max if t_end is None else min(float(t_end), rs.t_max)
    if m == 2:
        base = Chart((0.0, -math.pi), (t_end, math.pi), label=f"{rs.label}-polar")

        def gmat(x):
            return np.diag([1.0, float(rs.tau(x[0])) ** 2])
    elif m == 3:
        base = Chart((0.0, POLAR_MARGIN, -math.pi), (t_end, math.pi - POLAR_MARGIN, math.pi),
                     label=f"{rs.label}-spherical")

        def gmat(x):
            s = float(rs.tau(x[0])) ** 2
            return np.diag([1.0, s, s * math.sin(x[1]) ** 2])
    else:
        raise ValueError(f"explicit charts exist for m in (2, 3), got {m}")

    def grad_psi(x):
        out = np.zeros(m)
        out[0] = float(rs.Psi_prime(x[0]))
        return out

    return MetricField(base, gmat), ScalarField(base, lambda x: float(rs.Psi(x[0])), grad_psi)


def lift_to_graph(rs: RadialSpace, profile: CmcProfile, analytic: bool = True):
    """Radial chart over the profile's domain, fiber ``R`` and ``f(t, angles) = F(t)``.

    With ``analytic=False`` the map carries no derivatives and everything
    downstream goes through finite differences of ``F``.
    """
    m = rs.m
    g, weight = radial_base(rs, profile.t_end)
    base = g.chart
    top = abs(profile.F(profile.t_end) - profile.d) + abs(profile.d) + 10.0
    fiber = Chart((-top,), (top,), label="R")
    ws = WarpedSpace(g, MetricField.euclidean(fiber), weight)

    def F_eval(x):
        return np.array([profile.F(x[0])])

    if not analytic:
        return ws, GraphMap(base, fiber, F_eval)

    def jac(x):
        J = np.zeros((1, m))
        J[0, 0] = profile.F_prime(x[0])
        return J

    def hess(x):
        B = np.zeros((1, m, m))
        B[0, 0, 0] = profile.F_second(x[0])
        return B

    return ws, GraphMap(base, fiber, F_eval, jac, hess)


def write_profile_csv(path, rs: RadialSpace, profile: CmcProfile) -> None:
    """Columns: t, phi, phi_c, F, xi, residual (pointwise xi-equation residual)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "phi", "phi_c", "F", "xi", "residual"])
        for t, phi, pc, F in zip(profile.grid, profile.phi_values, profile.phi_c_values, profile.F_values):
            res = _xi_residual_at(rs, profile, float(t))
            res = float("nan") if res is None else res
            w.writerow([repr(float(t)), repr(float(phi)), repr(float(pc)), repr(float(F)),
                        repr(profile.xi(t)), repr(res)])
