"""Warped products ``g + e^{2 psi} h`` and the base-volume calibration form.

Product coordinates are ``(x^1..x^m, y^1..y^n)``: base first, fiber second.
The calibration ``Omega`` is the pullback of the base volume form, so on
ambient vectors it only sees their base components.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import (
    DEFAULT_FD,
    Chart,
    FDSteps,
    GeometryError,
    MetricField,
    ScalarField,
    christoffel,
    gradient,
    _differential,
    _pt,
)

__all__ = [
    "WarpedSpace",
    "FrameError",
    "warped_metric",
    "warped_christoffel_rules",
    "warped_connection_residual",
    "omega_eval",
    "omega_components",
    "omega_exterior_derivative",
    "omega_covariant_derivative",
    "omega_closedness_residual",
    "phi_morphism",
]


class FrameError(GeometryError):
    """A frame handed to a calibration operation is not orthonormal."""


@dataclass(frozen=True)
class WarpedSpace:
    base_metric: MetricField
    fiber_metric: MetricField
    weight: ScalarField

    def __post_init__(self):
        if self.weight.chart.dim != self.base_metric.dim:
            raise ValueError("weight must live on the base chart")

    @property
    def m(self) -> int:
        return self.base_metric.dim

    @property
    def n(self) -> int:
        return self.fiber_metric.dim

    @property
    def chart(self) -> Chart:
        return Chart.product(self.base_metric.chart, self.fiber_metric.chart)

    def split(self, p):
        p = _pt(p)
        return p[: self.m], p[self.m:]

    def ambient_matrix(self, x, q) -> np.ndarray:
        """Block-diagonal warped metric at base point ``x`` and fiber point ``q``."""
        m, n = self.m, self.n
        G = np.zeros((m + n, m + n))
        G[:m, :m] = self.base_metric(x)
        G[m:, m:] = np.exp(2.0 * self.weight(x)) * self.fiber_metric(q)
        return G


def warped_metric(ws: WarpedSpace) -> MetricField:
    return MetricField(ws.chart, lambda p: ws.ambient_matrix(*ws.split(p)))


def warped_christoffel_rules(ws: WarpedSpace, p, fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """Christoffel symbols of the warped metric assembled from the factor connections.

    Uses ``D_X Y = D^M_X Y``, ``D_X U = D_U X = dpsi(X) U`` and
    ``D_U W = D^N_U W - <U, W> grad psi``.
    """
    x, q = ws.split(p)
    m, n = ws.m, ws.n
    out = np.zeros((m + n,) * 3)
    out[:m, :m, :m] = christoffel(ws.base_metric, x, fd)
    out[m:, m:, m:] = christoffel(ws.fiber_metric, q, fd)
    dpsi = _differential(ws.weight, x, fd)
    grad = gradient(ws.base_metric, ws.weight, x, fd)
    eye = np.eye(n)
    for i in range(m):
        out[m:, i, m:] = dpsi[i] * eye
        out[m:, m:, i] = dpsi[i] * eye
    h = np.exp(2.0 * ws.weight(x)) * ws.fiber_metric(q)
    out[:m, m:, m:] = -np.einsum("k,ab->kab", grad, h)
    return out


def warped_connection_residual(ws: WarpedSpace, p, fd: FDSteps = DEFAULT_FD) -> float:
    """Max deviation between FD Christoffels of the warped metric and the product rules."""
    p = _pt(p)
    direct = christoffel(warped_metric(ws), p, fd)
    return float(np.max(np.abs(direct - warped_christoffel_rules(ws, p, fd))))


def omega_eval(ws: WarpedSpace, p, vectors: Sequence) -> float:
    """``Omega(v_1..v_m) = Vol_g`` of the base components, with the coordinate orientation."""
    x, _ = ws.split(p)
    V = np.asarray(vectors, dtype=float).reshape(ws.m, ws.m + ws.n)
    base = V[:, : ws.m].T                     # columns are base components
    return float(np.sqrt(np.linalg.det(ws.base_metric(x))) * np.linalg.det(base))


def omega_components(ws: WarpedSpace, p) -> np.ndarray:
    """Full component array ``Omega[A_1..A_m]`` in product coordinates."""
    D = ws.m + ws.n
    basis = np.eye(D)
    out = np.zeros((D,) * ws.m)
    for idx in itertools.permutations(range(D), ws.m):
        out[idx] = omega_eval(ws, p, basis[list(idx)])
    return out


def omega_exterior_derivative(ws: WarpedSpace, p, fd: FDSteps = DEFAULT_FD) -> dict:
    """``dOmega`` on every increasing coordinate (m+1)-tuple, by FD of components."""
    p = _pt(p)
    D, m = ws.m + ws.n, ws.m
    h = fd.h1(p)
    ws.chart.require(p, 2.0 * float(np.max(h)), "d(Omega) stencil")
    basis = np.eye(D)
    out = {}
    for tup in itertools.combinations(range(D), m + 1):
        total = 0.0
        for k, a in enumerate(tup):
            rest = basis[[b for b in tup if b != a]]
            e = np.zeros(D)
            e[a] = h[a]
            deriv = (omega_eval(ws, p + e, rest) - omega_eval(ws, p - e, rest)) / (2.0 * h[a])
            total += (-1) ** k * deriv
        out[tup] = total
    return out


def omega_covariant_derivative(ws: WarpedSpace, p, fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """``N[A, B_1..B_m] = (D_A Omega)(e_B1..e_Bm)`` using FD Christoffels of the warped metric."""
    p = _pt(p)
    D, m = ws.m + ws.n, ws.m
    h = fd.h1(p)
    ws.chart.require(p, 2.0 * float(np.max(h)), "covariant derivative stencil")
    om = omega_components(ws, p)
    dom = np.empty((D,) + om.shape)
    for a in range(D):
        e = np.zeros(D)
        e[a] = h[a]
        dom[a] = (omega_components(ws, p + e) - omega_components(ws, p - e)) / (2.0 * h[a])
    gam = christoffel(warped_metric(ws), p, fd)
    out = dom.copy()
    letters = "bcdefghijk"[:m]
    for k in range(m):
        # subtract G^c_{A B_k} Omega[..., c at slot k, ...]
        src = letters[:k] + "z" + letters[k + 1:]
        out -= np.einsum(f"zA{letters[k]},{src}->A{letters}", gam, om)
    return out


def omega_closedness_residual(ws: WarpedSpace, p, fd: FDSteps = DEFAULT_FD,
                              route: str = "components") -> float:
    """Max ``|dOmega|`` over coordinate (m+1)-tuples.

    ``route="components"`` differentiates components directly;
    ``route="covariant"`` antisymmetrizes the covariant derivative instead.
    """
    if route == "components":
        vals = omega_exterior_derivative(ws, p, fd).values()
        return float(max(abs(v) for v in vals))
    if route != "covariant":
        raise ValueError(f"unknown route {route!r}")
    nab = omega_covariant_derivative(ws, p, fd)
    D, m = ws.m + ws.n, ws.m
    worst = 0.0
    for tup in itertools.combinations(range(D), m + 1):
        total = sum((-1) ** k * nab[(a,) + tuple(b for b in tup if b != a)]
                    for k, a in enumerate(tup))
        worst = max(worst, abs(total))
    return float(worst)


def phi_morphism(ws: WarpedSpace, p, frame, X, normal_basis, tol: float = 1e-8) -> np.ndarray:
    """Coefficients ``c_a = Omega(N_a, *X)`` of the normal-valued morphism.

    ``frame`` holds the ambient images of a direct orthonormal tangent frame
    (rows), ``normal_basis`` an orthonormal normal frame (rows) and ``X`` an
    ambient tangent vector. ``*X`` is the contraction of ``X`` with the
    frame's volume element.
    """
    x, q = ws.split(p)
    G = ws.ambient_matrix(x, q)
    T = np.atleast_2d(np.asarray(frame, dtype=float))
    N = np.atleast_2d(np.asarray(normal_basis, dtype=float)) if len(normal_basis) else np.zeros((0, G.shape[0]))
    m = T.shape[0]
    if m != ws.m:
        raise FrameError(f"tangent frame has {m} vectors, expected {ws.m}")
    gram_t = T @ G @ T.T
    if np.max(np.abs(gram_t - np.eye(m))) > tol:
        raise FrameError("tangent frame is not orthonormal")
    if N.shape[0]:
        if np.max(np.abs(N @ G @ N.T - np.eye(N.shape[0]))) > tol:
            raise FrameError("normal frame is not orthonormal")
        if np.max(np.abs(N @ G @ T.T)) > tol:
            raise FrameError("normal frame is not orthogonal to the tangent frame")
    a = T @ G @ np.asarray(X, dtype=float)
    coeffs = np.zeros(N.shape[0])
    for alpha in range(N.shape[0]):
        for i in range(m):
            rest = [T[j] for j in range(m) if j != i]
            coeffs[alpha] += a[i] * (-1) ** i * omega_eval(ws, p, [N[alpha]] + rest)
    return coeffs
