"""Chart-based Riemannian calculus by central finite differences.

Every operator here acts at one explicit point. Fields are plain evaluators
(callables wrapped in small dataclasses), so operators compose freely and can
be evaluated concurrently across points.

Index conventions: ``christoffel(...)[k, i, j]`` is the symbol with upper
index ``k``; map Hessians are stored as ``[alpha, i, j]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "Chart",
    "ScalarField",
    "VectorField",
    "MetricField",
    "GraphMap",
    "FDSteps",
    "GeometryError",
    "ChartMarginError",
    "ChartError",
    "SingularMetricError",
    "christoffel",
    "coordinate_gradient",
    "gradient",
    "divergence",
    "weighted_divergence",
    "hessian_scalar",
    "ricci",
    "bakry_emery_ricci",
    "map_jacobian",
    "map_hessian",
]

_EPS = np.finfo(float).eps


class GeometryError(ValueError):
    """Base class for errors raised by the differential operators."""


class ChartMarginError(GeometryError):
    """The FD stencil would leave the chart domain."""


class ChartError(GeometryError):
    """A map sends a point outside the interior of its target chart."""


class SingularMetricError(GeometryError):
    """The metric matrix is not invertible (or not positive) at a point."""


@dataclass(frozen=True)
class FDSteps:
    """Relative step sizes for first and second central differences.

    The actual step along axis ``i`` at point ``p`` is
    ``scale * max(1, |p_i|)``.
    """

    first: float = _EPS ** (1.0 / 3.0)
    second: float = _EPS ** 0.25

    def h1(self, p: np.ndarray) -> np.ndarray:
        return self.first * np.maximum(1.0, np.abs(p))

    def h2(self, p: np.ndarray) -> np.ndarray:
        return self.second * np.maximum(1.0, np.abs(p))


DEFAULT_FD = FDSteps()


@dataclass(frozen=True)
class Chart:
    """Axis-aligned coordinate box ``[lo_i, hi_i]``."""

    lo: tuple
    hi: tuple
    label: str = ""

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or len(lo) < 1:
            raise ValueError("chart bounds must be non-empty and of equal length")
        if any(not (b > a) for a, b in zip(lo, hi)):
            raise ValueError(f"chart {self.label!r} has a degenerate axis: {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def margin(self, p) -> float:
        """Distance from ``p`` to the nearest face (negative outside)."""
        p = np.asarray(p, dtype=float)
        return float(min(np.min(p - np.array(self.lo)), np.min(np.array(self.hi) - p)))

    def contains(self, p, margin: float = 0.0) -> bool:
        return self.margin(p) > margin

    def require(self, p, margin: float, what: str = "stencil") -> None:
        got = self.margin(p)
        if not got >= margin:
            raise ChartMarginError(
                f"point {np.asarray(p).tolist()} is {got:.3g} from the boundary of chart "
                f"{self.label!r}; the {what} needs {margin:.3g}"
            )

    @staticmethod
    def product(a: "Chart", b: "Chart") -> "Chart":
        return Chart(a.lo + b.lo, a.hi + b.hi, label=f"{a.label}x{b.label}")


@dataclass(frozen=True)
class ScalarField:
    chart: Chart
    eval: Callable[[np.ndarray], float]
    analytic_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, p) -> float:
        return float(self.eval(np.asarray(p, dtype=float)))

    @classmethod
    def constant(cls, chart: Chart, value: float = 0.0) -> "ScalarField":
        return cls(chart, lambda p: value, lambda p: np.zeros(chart.dim))


@dataclass(frozen=True)
class VectorField:
    chart: Chart
    components: Callable[[np.ndarray], np.ndarray]

    def __call__(self, p) -> np.ndarray:
        return np.asarray(self.components(np.asarray(p, dtype=float)), dtype=float)


@dataclass(frozen=True)
class MetricField:
    chart: Chart
    matrix: Callable[[np.ndarray], np.ndarray]

    def __call__(self, p) -> np.ndarray:
        g = np.asarray(self.matrix(np.asarray(p, dtype=float)), dtype=float)
        return g.reshape(self.chart.dim, self.chart.dim)

    @property
    def dim(self) -> int:
        return self.chart.dim

    @classmethod
    def euclidean(cls, chart: Chart, scale: float = 1.0) -> "MetricField":
        eye = scale * np.eye(chart.dim)
        return cls(chart, lambda p: eye)


@dataclass(frozen=True)
class GraphMap:
    """A smooth map between charts, optionally with analytic derivatives.

    ``jacobian(x)`` has shape ``(n, m)``; ``hessian(x)`` has shape
    ``(n, m, m)`` and holds plain coordinate second derivatives.
    """

    source: Chart
    target: Chart
    eval: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.eval(np.asarray(x, dtype=float)), dtype=float))

    @classmethod
    def constant(cls, source: Chart, target: Chart, value) -> "GraphMap":
        q = np.atleast_1d(np.asarray(value, dtype=float))
        m, n = source.dim, target.dim
        return cls(source, target, lambda x: q,
                   lambda x: np.zeros((n, m)), lambda x: np.zeros((n, m, m)))

    @classmethod
    def affine(cls, source: Chart, target: Chart, matrix, offset=None) -> "GraphMap":
        A = np.atleast_2d(np.asarray(matrix, dtype=float))
        n, m = A.shape
        if (m, n) != (source.dim, target.dim):
            raise ValueError(f"affine matrix shape {A.shape} does not match charts ({n}, {m})")
        b = np.zeros(n) if offset is None else np.atleast_1d(np.asarray(offset, dtype=float))
        return cls(source, target, lambda x: A @ x + b,
                   lambda x: A, lambda x: np.zeros((n, m, m)))


# ---------------------------------------------------------------------------
# finite-difference helpers
# ---------------------------------------------------------------------------

def _pt(p) -> np.ndarray:
    return np.array(p, dtype=float, copy=True).reshape(-1)


def _metric_inverse(g: np.ndarray, p) -> np.ndarray:
    try:
        c = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise SingularMetricError(f"metric is not positive definite at {np.asarray(p).tolist()}")
    ci = np.linalg.inv(c)
    return ci.T @ ci


def _d_metric(metric: MetricField, p: np.ndarray, fd: FDSteps) -> np.ndarray:
    """``dg[k, i, j] = d_k g_ij`` by central differences."""
    d = metric.dim
    h = fd.h1(p)
    out = np.empty((d, d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h[k]
        out[k] = (metric(p + e) - metric(p - e)) / (2.0 * h[k])
    return out


def _christoffel_from(ginv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    # Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
    t = dg.transpose(1, 2, 0)            # t[i, j, l] = d_l g_ij
    lower = 0.5 * (dg.transpose(0, 2, 1) + dg.transpose(2, 0, 1) - t)
    # lower[i, j, l] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    gam = np.einsum("kl,ijl->kij", ginv, lower)
    return 0.5 * (gam + gam.transpose(0, 2, 1))


def christoffel(metric: MetricField, p, fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """Christoffel symbols ``G[k, i, j]`` of ``metric`` at ``p``."""
    p = _pt(p)
    metric.chart.require(p, 2.0 * float(np.max(fd.h1(p))), "christoffel stencil")
    ginv = _metric_inverse(metric(p), p)
    return _christoffel_from(ginv, _d_metric(metric, p, fd))


def coordinate_gradient(s: ScalarField, p, fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """Coordinate differential ``ds`` by central differences (ignores any analytic gradient)."""
    p = _pt(p)
    h = fd.h1(p)
    out = np.empty(p.size)
    for k in range(p.size):
        e = np.zeros(p.size)
        e[k] = h[k]
        out[k] = (s(p + e) - s(p - e)) / (2.0 * h[k])
    return out


def _differential(s: ScalarField, p: np.ndarray, fd: FDSteps) -> np.ndarray:
    if s.analytic_gradient is not None:
        return np.asarray(s.analytic_gradient(p), dtype=float).reshape(-1)
    return coordinate_gradient(s, p, fd)


def gradient(metric: MetricField, s: ScalarField, p, fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """Riemannian gradient ``g^{ij} d_j s``."""
    p = _pt(p)
    metric.chart.require(p, 2.0 * float(np.max(fd.h1(p))), "gradient stencil")
    return _metric_inverse(metric(p), p) @ _differential(s, p, fd)


def divergence(metric: MetricField, V: VectorField, p, fd: FDSteps = DEFAULT_FD,
               step: Optional[float] = None) -> float:
    """``(1/sqrt det g) d_i (sqrt det g V^i)`` by central differences.

    ``step`` overrides the relative FD step; callers whose vector field is
    itself built from finite differences pass a coarser one.
    """
    p = _pt(p)
    d = p.size
    rel = fd.first if step is None else step
    h = rel * np.maximum(1.0, np.abs(p))
    metric.chart.require(p, 2.0 * float(np.max(h)), "divergence stencil")

    def density(q):
        g = metric(q)
        det = np.linalg.det(g)
        if not det > 0:
            raise SingularMetricError(f"metric determinant {det} at {q.tolist()}")
        return np.sqrt(det)

    total = 0.0
    for k in range(d):
        e = np.zeros(d)
        e[k] = h[k]
        plus = density(p + e) * V(p + e)[k]
        minus = density(p - e) * V(p - e)[k]
        total += (plus - minus) / (2.0 * h[k])
    return float(total / density(p))


def weighted_divergence(metric: MetricField, psi: ScalarField, V: VectorField, p,
                        fd: FDSteps = DEFAULT_FD, step: Optional[float] = None) -> float:
    """``div_g V + dpsi(V)``, i.e. ``e^{-psi} div_g(e^psi V)``."""
    p = _pt(p)
    return divergence(metric, V, p, fd, step) + float(_differential(psi, p, fd) @ V(p))


def _coordinate_hessian(s: ScalarField, p: np.ndarray, fd: FDSteps) -> np.ndarray:
    d = p.size
    if s.analytic_gradient is not None:
        h = fd.h1(p)
        out = np.empty((d, d))
        for k in range(d):
            e = np.zeros(d)
            e[k] = h[k]
            out[k] = (np.asarray(s.analytic_gradient(p + e)) -
                      np.asarray(s.analytic_gradient(p - e))) / (2.0 * h[k])
        return 0.5 * (out + out.T)
    h = fd.h2(p)
    out = np.empty((d, d))
    s0 = s(p)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h[i]
        out[i, i] = (s(p + ei) - 2.0 * s0 + s(p - ei)) / h[i] ** 2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h[j]
            v = (s(p + ei + ej) - s(p + ei - ej) - s(p - ei + ej) + s(p - ei - ej)) / (4 * h[i] * h[j])
            out[i, j] = out[j, i] = v
    return out


def hessian_scalar(metric: MetricField, s: ScalarField, p, fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """Covariant Hessian ``d_i d_j s - G^k_ij d_k s``."""
    p = _pt(p)
    metric.chart.require(p, 2.0 * float(np.max(fd.h2(p))), "hessian stencil")
    gam = christoffel(metric, p, fd)
    hess = _coordinate_hessian(s, p, fd) - np.einsum("kij,k->ij", gam, _differential(s, p, fd))
    return 0.5 * (hess + hess.T)


def ricci(metric: MetricField, p, fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """Ricci tensor from finite differences of the Christoffel symbols."""
    p = _pt(p)
    d = p.size
    h = fd.h2(p)
    metric.chart.require(p, 3.0 * float(np.max(h)), "ricci stencil")
    gam = christoffel(metric, p, fd)
    dgam = np.empty((d, d, d, d))            # dgam[l, a, b, c] = d_l G^a_bc
    for l in range(d):
        e = np.zeros(d)
        e[l] = h[l]
        dgam[l] = (christoffel(metric, p + e, fd) - christoffel(metric, p - e, fd)) / (2.0 * h[l])
    # R_bd = d_a G^a_db - d_d G^a_ab + G^a_ae G^e_db - G^a_de G^e_ab
    ric = (np.einsum("aadb->bd", dgam)
           - np.einsum("daab->bd", dgam)
           + np.einsum("aae,edb->bd", gam, gam)
           - np.einsum("ade,eab->bd", gam, gam))
    return 0.5 * (ric + ric.T)


def bakry_emery_ricci(metric: MetricField, psi: ScalarField, p, fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """Weighted Ricci tensor ``Ricci - Hess(psi)``."""
    return ricci(metric, p, fd) - hessian_scalar(metric, psi, p, fd)


def map_jacobian(f: GraphMap, x, fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """``J[alpha, i] = d_i f^alpha``; analytic when the map provides it."""
    x = _pt(x)
    if f.jacobian is not None:
        return np.atleast_2d(np.asarray(f.jacobian(x), dtype=float)).reshape(f.target.dim, f.source.dim)
    h = fd.h1(x)
    m = x.size
    J = np.empty((f.target.dim, m))
    for i in range(m):
        e = np.zeros(m)
        e[i] = h[i]
        J[:, i] = (f(x + e) - f(x - e)) / (2.0 * h[i])
    return J


def _map_second_derivatives(f: GraphMap, x: np.ndarray, fd: FDSteps) -> np.ndarray:
    m, n = f.source.dim, f.target.dim
    if f.hessian is not None:
        return np.asarray(f.hessian(x), dtype=float).reshape(n, m, m)
    out = np.empty((n, m, m))
    if f.jacobian is not None:
        h = fd.h1(x)
        for i in range(m):
            e = np.zeros(m)
            e[i] = h[i]
            out[:, i, :] = (map_jacobian(f, x + e) - map_jacobian(f, x - e)) / (2.0 * h[i])
        return 0.5 * (out + out.transpose(0, 2, 1))
    h = fd.h2(x)
    f0 = f(x)
    for i in range(m):
        ei = np.zeros(m)
        ei[i] = h[i]
        out[:, i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i + 1, m):
            ej = np.zeros(m)
            ej[j] = h[j]
            v = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
            out[:, i, j] = out[:, j, i] = v
    return out


def _require_map(f: GraphMap, x: np.ndarray, fd: FDSteps) -> np.ndarray:
    f.source.require(x, 2.0 * float(np.max(fd.h2(x))), "map stencil")
    q = f(x)
    if not f.target.contains(q):
        raise ChartError(f"f({x.tolist()}) = {q.tolist()} leaves target chart {f.target.label!r}")
    return q


def map_hessian(gM: MetricField, hN: MetricField, f: GraphMap, x, fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """Second fundamental form of ``f`` as a map ``(M, g) -> (N, h)``.

    Returns ``B[alpha, i, j] = d_i d_j f^a + G_N^a_bc(f) d_i f^b d_j f^c - G_M^k_ij d_k f^a``.
    """
    x = _pt(x)
    q = _require_map(f, x, fd)
    J = map_jacobian(f, x, fd)
    B = _map_second_derivatives(f, x, fd)
    B = B - np.einsum("kij,ak->aij", christoffel(gM, x, fd), J)
    if np.any(J):
        hN.chart.require(q, 2.0 * float(np.max(fd.h1(q))), "target christoffel stencil")
        B = B + np.einsum("abc,bi,cj->aij", christoffel(hN, q, fd), J, J)
    return 0.5 * (B + B.transpose(0, 2, 1))
