"""Graph submanifolds ``x -> (x, f(x))`` of a warped product.

Everything is computed pointwise at a base point ``x``. Vectors on the base
are coordinate component arrays of length ``m``; fiber vectors have length
``n``; ambient vectors along the graph have length ``m + n`` (base block
first). Frames store vectors as *columns*.

Divergence-type identities need a curvature field, not a value; those
re-run :func:`curvature_bundle` on the finite-difference stencil.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .geometry import (
    DEFAULT_FD,
    ChartError,
    FDSteps,
    GeometryError,
    GraphMap,
    MetricField,
    ScalarField,
    VectorField,
    _differential,
    _map_second_derivatives,
    _metric_inverse,
    _pt,
    _require_map,
    christoffel,
    map_hessian,
    map_jacobian,
    weighted_divergence,
)
from .warped import (
    WarpedSpace,
    omega_covariant_derivative,
    omega_eval,
    phi_morphism,
    warped_metric,
)

__all__ = [
    "GraphPointFrame",
    "CurvatureBundle",
    "RANK_THRESHOLD",
    "FIELD_STEP",
    "graph_metric",
    "graph_metric_field",
    "eigenframe",
    "df_adjoint",
    "df_adjoint_matrix",
    "all_eigen_residuals",
    "curvature_bundle",
    "normal_projection",
    "normal_frame",
    "second_fundamental_form",
    "ambient_second_fundamental_form",
    "ambient_mean_curvature",
    "q_psi",
    "q_psi_residuals",
    "q_psi_of_psi_star",
    "m_minus_indicator",
    "two_angles_residual",
    "heinz_divergence_residual",
    "calibration_divergence_residual",
    "calibration_z_field",
    "calibration_z_mismatch",
    "omega_angle",
    "omega_derivative_residual",
    "key_identity_residual",
]

# lambda_i^2 below this fraction of lambda_1^2 is treated as zero (FD noise floor)
RANK_THRESHOLD = 1e-10
# relative outer step for divergences of curvature fields
FIELD_STEP = 1e-3


@dataclass(frozen=True)
class GraphPointFrame:
    """Simultaneous diagonalization of ``f^* h~`` against ``g`` at one point."""

    lambdas_sq: np.ndarray        # descending
    rank: int
    X: np.ndarray                 # (m, m) g-orthonormal eigenvectors as columns
    X_star: np.ndarray            # (m, m) g*-orthonormal: X_i / sqrt(1 + lambda_i^2)
    U: np.ndarray                 # (n, n) h~-orthonormal fiber frame
    g: np.ndarray
    h_tilde: np.ndarray
    jacobian: np.ndarray          # (n, m)
    g_star: np.ndarray

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def lambdas(self) -> np.ndarray:
        return np.sqrt(self.lambdas_sq)

    @property
    def ambient_metric(self) -> np.ndarray:
        return scipy.linalg.block_diag(self.g, self.h_tilde)

    def lift(self, X) -> np.ndarray:
        """``dGamma(X) = (X, df(X))`` as an ambient vector."""
        X = np.asarray(X, dtype=float)
        return np.concatenate([X, self.jacobian @ X])

    def tangent_frame(self) -> np.ndarray:
        """Rows ``dGamma(X*_i)``: a direct orthonormal frame of the graph."""
        return np.array([self.lift(self.X_star[:, i]) for i in range(self.m)])


@dataclass(frozen=True)
class CurvatureBundle:
    W: np.ndarray
    Psi_star: np.ndarray
    W_star: np.ndarray
    Z1: np.ndarray
    W1: np.ndarray
    H_M: np.ndarray
    H_N: np.ndarray
    cos_theta: float
    norm_H: float
    grad_psi: np.ndarray          # gradient of psi for g
    grad_star_psi: np.ndarray     # gradient of psi for g*
    frame: GraphPointFrame

    @property
    def H(self) -> np.ndarray:
        return np.concatenate([self.H_M, self.H_N])

    @property
    def norm_W_star(self) -> float:
        return float(np.sqrt(max(self.W_star @ self.frame.h_tilde @ self.W_star, 0.0)))

    @property
    def norm_Z1(self) -> float:
        return float(np.sqrt(max(self.Z1 @ self.frame.g @ self.Z1, 0.0)))


# ---------------------------------------------------------------------------
# pointwise linear algebra
# ---------------------------------------------------------------------------

def _point_data(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps):
    x = _pt(x)
    q = f(x)
    if not f.target.contains(q):
        raise ChartError(f"f({x.tolist()}) = {q.tolist()} leaves target chart {f.target.label!r}")
    J = map_jacobian(f, x, fd)
    g = ws.base_metric(x)
    h_tilde = np.exp(2.0 * ws.weight(x)) * ws.fiber_metric(q)
    return x, q, J, g, h_tilde


def graph_metric(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """Induced metric ``g + e^{2 psi} J^T h J`` on the base."""
    _, _, J, g, h_tilde = _point_data(ws, f, x, fd)
    return g + J.T @ h_tilde @ J


def graph_metric_field(ws: WarpedSpace, f: GraphMap, fd: FDSteps = DEFAULT_FD) -> MetricField:
    return MetricField(ws.base_metric.chart, lambda x: graph_metric(ws, f, x, fd))


def _random_rotation(k: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((k, k)))
    return Q * np.sign(np.diag(R))


def _complete_orthonormal(h_tilde: np.ndarray, U_k: np.ndarray, rng=None) -> np.ndarray:
    """Extend h~-orthonormal columns ``U_k`` to an h~-orthonormal basis."""
    n = h_tilde.shape[0]
    k = U_k.shape[1]
    if k == n:
        return U_k
    L = np.linalg.cholesky(h_tilde)            # h~ = L L^T
    Y = L.T @ U_k                              # Euclidean-orthonormal
    fill = np.eye(n) if rng is None else rng.standard_normal((n, n))
    Q, _ = np.linalg.qr(np.hstack([Y, fill]))
    rest = Q[:, k:n]
    # remove any leakage onto Y before mapping back
    rest = rest - Y @ (Y.T @ rest)
    rest, _ = np.linalg.qr(rest)
    return np.hstack([U_k, np.linalg.solve(L.T, rest)])


def eigenframe(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD,
               rng: Optional[np.random.Generator] = None) -> GraphPointFrame:
    """Solve ``(J^T h~ J) v = lambda^2 g v`` and build the frames ``X, X*, U``.

    With ``rng`` the frame is re-drawn inside degenerate eigenspaces and the
    completion of ``U`` is randomized; frame-independent outputs must not move.
    """
    x, q, J, g, h_tilde = _point_data(ws, f, x, fd)
    m, n = g.shape[0], h_tilde.shape[0]
    A = J.T @ h_tilde @ J
    A = 0.5 * (A + A.T)
    try:
        w, V = scipy.linalg.eigh(A, g)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise GeometryError(f"generalized eigenproblem failed at {x.tolist()}: {exc}")
    order = np.argsort(-w, kind="stable")
    lam2 = np.clip(w[order], 0.0, None)
    X = V[:, order]
    top = lam2[0] if m else 0.0
    rank = int(np.sum(lam2 > RANK_THRESHOLD * top)) if top > 0 else 0
    rank = min(rank, n)
    if rng is not None:
        scale = max(1.0, top)
        i = 0
        while i < m:
            j = i + 1
            while j < m and abs(lam2[j] - lam2[i]) <= 1e-10 * scale:
                j += 1
            block = j - i
            X[:, i:j] = X[:, i:j] @ _random_rotation(block, rng)
            i = j
        X = X * rng.choice([-1.0, 1.0], size=m)
    if m and np.linalg.det(X) < 0:
        X[:, -1] = -X[:, -1]
    X_star = X / np.sqrt(1.0 + lam2)
    U_k = J @ X[:, :rank] / np.sqrt(lam2[:rank])
    U = _complete_orthonormal(h_tilde, U_k, rng)
    return GraphPointFrame(lam2, rank, X, X_star, U, g, h_tilde, J, g + A)


def df_adjoint(frame: GraphPointFrame, Uvec) -> np.ndarray:
    """Adjoint of ``df`` for ``g*`` and ``h~``, expanded in the eigenframe."""
    Uvec = np.asarray(Uvec, dtype=float)
    k = frame.rank
    lam = frame.lambdas[:k]
    coeff = frame.U[:, :k].T @ frame.h_tilde @ Uvec
    return frame.X_star[:, :k] @ (coeff * lam / np.sqrt(1.0 + lam ** 2))


def df_adjoint_matrix(frame: GraphPointFrame) -> np.ndarray:
    """``g*^{-1} J^T h~``: the same adjoint straight from its definition."""
    return np.linalg.solve(frame.g_star, frame.jacobian.T @ frame.h_tilde)


def all_eigen_residuals(frame: GraphPointFrame) -> dict:
    """Max residual of each of the six eigenframe relations."""
    m, n = frame.m, frame.n
    J = frame.jacobian
    D = df_adjoint_matrix(frame)
    lam2 = np.zeros(max(m, n))
    lam2[:m] = frame.lambdas_sq
    lam = np.sqrt(lam2)
    X, Xs, U = frame.X, frame.X_star, frame.U
    r = {k: 0.0 for k in ("df_Xstar", "dfstar_df", "id_minus_dfstar_df",
                          "dfstar_U", "df_dfstar", "id_minus_df_dfstar")}

    def upd(key, v):
        r[key] = max(r[key], float(np.max(np.abs(v))) if np.size(v) else 0.0)

    for i in range(m):
        s = lam[i] / np.sqrt(1.0 + lam2[i])
        Ui = U[:, i] if i < n else np.zeros(n)
        upd("df_Xstar", J @ Xs[:, i] - s * Ui)
        upd("dfstar_df", D @ J @ X[:, i] - lam2[i] / (1.0 + lam2[i]) * X[:, i])
        upd("id_minus_dfstar_df", X[:, i] - D @ J @ X[:, i] - X[:, i] / (1.0 + lam2[i]))
    for i in range(n):
        s = lam[i] / np.sqrt(1.0 + lam2[i])
        Xi = Xs[:, i] if i < m else np.zeros(m)
        upd("dfstar_U", D @ U[:, i] - s * Xi)
        upd("df_dfstar", J @ D @ U[:, i] - lam2[i] / (1.0 + lam2[i]) * U[:, i])
        upd("id_minus_df_dfstar", U[:, i] - J @ D @ U[:, i] - U[:, i] / (1.0 + lam2[i]))
    return r


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

def curvature_bundle(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD,
                     frame_rng: Optional[np.random.Generator] = None) -> CurvatureBundle:
    """All pointwise curvature fields of the graph at ``x``."""
    x = _pt(x)
    _require_map(f, x, fd)
    frame = eigenframe(ws, f, x, fd, frame_rng)
    m = frame.m
    J, g, g_star = frame.jacobian, frame.g, frame.g_star
    B = map_hessian(ws.base_metric, ws.fiber_metric, f, x, fd)
    g_star_inv = _metric_inverse(g_star, x)
    W = np.einsum("aij,ij->a", B, g_star_inv)
    dpsi = _differential(ws.weight, x, fd)
    grad_psi = _metric_inverse(g, x) @ dpsi
    grad_star_psi = g_star_inv @ dpsi
    lam2 = frame.lambdas_sq
    df_norm_star = float(np.sum(lam2 / (1.0 + lam2)))
    Psi_star = J @ (df_norm_star * grad_psi + 2.0 * grad_star_psi)
    W_star = W + Psi_star
    Z1 = df_adjoint(frame, W_star)
    W1 = W_star - J @ Z1
    cos_theta = float(np.prod(1.0 / np.sqrt(1.0 + lam2)))
    norm_sq = Z1 @ g @ Z1 + W1 @ frame.h_tilde @ W1
    return CurvatureBundle(
        W=W, Psi_star=Psi_star, W_star=W_star, Z1=Z1, W1=W1,
        H_M=-Z1 / m, H_N=W1 / m, cos_theta=cos_theta,
        norm_H=float(np.sqrt(max(norm_sq, 0.0))) / m,
        grad_psi=grad_psi, grad_star_psi=grad_star_psi, frame=frame,
    )


def normal_projection(ws: WarpedSpace, frame: GraphPointFrame, vec) -> np.ndarray:
    """Orthogonal projection of an ambient vector onto the normal space of the graph."""
    vec = np.asarray(vec, dtype=float)
    G = frame.ambient_metric
    T = np.vstack([np.eye(frame.m), frame.jacobian])   # columns: dGamma(e_i)
    coeff = np.linalg.solve(T.T @ G @ T, T.T @ G @ vec)
    return vec - T @ coeff


def normal_frame(ws: WarpedSpace, frame: GraphPointFrame,
                 rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Rows: an orthonormal basis of the normal space."""
    m, n = frame.m, frame.n
    G = frame.ambient_metric
    seeds = np.vstack([np.zeros((m, n)), np.eye(n)])
    if rng is not None:
        seeds = seeds @ rng.standard_normal((n, n))
    P = np.column_stack([normal_projection(ws, frame, seeds[:, a]) for a in range(n)])
    L = np.linalg.cholesky(P.T @ G @ P)
    return np.linalg.solve(L, P.T)


def _xi_form(frame: GraphPointFrame, grad_psi: np.ndarray, X, Y) -> np.ndarray:
    g, J, ht = frame.g, frame.jacobian, frame.h_tilde
    return ((J @ X) @ ht @ (J @ Y)) * grad_psi + (grad_psi @ g @ X) * Y + (grad_psi @ g @ Y) * X


def second_fundamental_form(ws: WarpedSpace, f: GraphMap, x, Xvec, Yvec,
                            fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """``(0, Hess f(X, Y) + df(Xi(X, Y)))`` projected to the normal space."""
    x = _pt(x)
    frame = eigenframe(ws, f, x, fd)
    B = map_hessian(ws.base_metric, ws.fiber_metric, f, x, fd)
    X, Y = np.asarray(Xvec, dtype=float), np.asarray(Yvec, dtype=float)
    grad_psi = _metric_inverse(frame.g, x) @ _differential(ws.weight, x, fd)
    fib = np.einsum("aij,i,j->a", B, X, Y) + frame.jacobian @ _xi_form(frame, grad_psi, X, Y)
    return normal_projection(ws, frame, np.concatenate([np.zeros(frame.m), fib]))


def ambient_second_fundamental_form(ws: WarpedSpace, f: GraphMap, x, Xvec, Yvec,
                                    fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """Same form, computed from FD Christoffels of the ambient warped metric."""
    x = _pt(x)
    frame = eigenframe(ws, f, x, fd)
    m = frame.m
    p = np.concatenate([x, f(x)])
    gam = christoffel(warped_metric(ws), p, fd)
    T = np.vstack([np.eye(m), frame.jacobian])         # d_i Gamma as columns
    X, Y = np.asarray(Xvec, dtype=float), np.asarray(Yvec, dtype=float)
    second = np.concatenate([np.zeros(m),
                             np.einsum("aij,i,j->a", _map_second_derivatives(f, x, fd), X, Y)])
    vec = second + np.einsum("abc,b,c->a", gam, T @ X, T @ Y)
    return normal_projection(ws, frame, vec)


def ambient_mean_curvature(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD) -> np.ndarray:
    """``H`` as the g*-trace of the ambient-route second fundamental form over ``m``."""
    x = _pt(x)
    frame = eigenframe(ws, f, x, fd)
    Xs = frame.X_star
    tot = sum(ambient_second_fundamental_form(ws, f, x, Xs[:, i], Xs[:, i], fd) for i in range(frame.m))
    return tot / frame.m


def q_psi(bundle: CurvatureBundle, Uvec) -> float:
    """``Q_psi(U) = h~(U, df(grad* psi))``."""
    fr = bundle.frame
    return float(np.asarray(Uvec) @ fr.h_tilde @ (fr.jacobian @ bundle.grad_star_psi))


def q_psi_residuals(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD):
    """``(|Q(W*) - g(Z1, grad psi)|, |Q(W*) - h~(W1, df grad psi)|)``."""
    b = curvature_bundle(ws, f, x, fd)
    fr = b.frame
    qw = q_psi(b, b.W_star)
    r1 = abs(qw - float(b.Z1 @ fr.g @ b.grad_psi))
    r2 = abs(qw - float(b.W1 @ fr.h_tilde @ (fr.jacobian @ b.grad_psi)))
    return r1, r2


def q_psi_of_psi_star(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD):
    """``Q(Psi*)`` directly and through its eigenframe sum of squares (both >= 0)."""
    b = curvature_bundle(ws, f, x, fd)
    fr = b.frame
    lam2 = fr.lambdas_sq
    dfn = float(np.sum(lam2 / (1.0 + lam2)))
    proj = fr.X.T @ fr.g @ b.grad_psi                  # g(grad psi, X_j)
    eig = float(np.sum(lam2 / (1.0 + lam2) * (dfn + 2.0 / (1.0 + lam2)) * proj ** 2))
    return q_psi(b, b.Psi_star), eig


def m_minus_indicator(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD,
                      deadband: float = 1e-10) -> int:
    """Sign of ``g(H_M, grad psi)``; ``-1`` marks a point of the negative set."""
    b = curvature_bundle(ws, f, x, fd)
    val = float(b.H_M @ b.frame.g @ b.grad_psi)
    if abs(val) <= deadband:
        return 0
    return 1 if val > 0 else -1


def two_angles_residual(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD) -> float:
    """``|g(H_M, grad psi) + h~(H_N, df grad psi)|``."""
    b = curvature_bundle(ws, f, x, fd)
    fr = b.frame
    return abs(float(b.H_M @ fr.g @ b.grad_psi + b.H_N @ fr.h_tilde @ (fr.jacobian @ b.grad_psi)))


def heinz_divergence_residual(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD,
                              step: float = FIELD_STEP) -> float:
    """``|div_g Z1 + g(Z1, grad psi) - m^2 |H|^2|`` for a graph with parallel ``H``."""
    x = _pt(x)
    b = curvature_bundle(ws, f, x, fd)
    Z1 = VectorField(ws.base_metric.chart, lambda y: curvature_bundle(ws, f, y, fd).Z1)
    lhs = weighted_divergence(ws.base_metric, ws.weight, Z1, x, fd, step=step)
    return abs(lhs - (b.frame.m * b.norm_H) ** 2)


def calibration_divergence_residual(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD,
                                    step: float = FIELD_STEP) -> float:
    """``|div_{g*}(cos H_M) + g*(cos H_M, grad* psi) + m cos |H|^2|`` for parallel ``H``."""
    x = _pt(x)
    b = curvature_bundle(ws, f, x, fd)
    V = VectorField(ws.base_metric.chart,
                    lambda y: (lambda c: c.cos_theta * c.H_M)(curvature_bundle(ws, f, y, fd)))
    lhs = weighted_divergence(graph_metric_field(ws, f, fd), ws.weight, V, x, fd, step=step)
    return abs(lhs + b.frame.m * b.cos_theta * b.norm_H ** 2)


def omega_angle(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD) -> float:
    """``Omega`` on the image of the direct g*-orthonormal frame."""
    x = _pt(x)
    frame = eigenframe(ws, f, x, fd)
    return omega_eval(ws, np.concatenate([x, f(x)]), frame.tangent_frame())


def calibration_z_field(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD,
                        rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """``Z`` defined by ``g*(Z, X) = <Phi(X), H>``, assembled through ``phi_morphism``."""
    x = _pt(x)
    b = curvature_bundle(ws, f, x, fd, frame_rng=rng)
    fr = b.frame
    p = np.concatenate([x, f(x)])
    T = fr.tangent_frame()
    N = normal_frame(ws, fr, rng)
    G = fr.ambient_metric
    H_coeffs = N @ G @ b.H
    Z = np.zeros(fr.m)
    for i in range(fr.m):
        c = phi_morphism(ws, p, T, T[i], N)
        Z += float(c @ H_coeffs) * fr.X_star[:, i]
    return Z


def calibration_z_mismatch(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD) -> float:
    """``|Z - cos(theta) H_M|`` in the norm of g."""
    b = curvature_bundle(ws, f, x, fd)
    d = calibration_z_field(ws, f, x, fd) - b.cos_theta * b.H_M
    return float(np.sqrt(max(d @ b.frame.g @ d, 0.0)))


def omega_derivative_residual(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD) -> float:
    """``(D_H Omega)(frame)`` against ``-cos(theta) g(H_M, grad psi)``."""
    x = _pt(x)
    b = curvature_bundle(ws, f, x, fd)
    p = np.concatenate([x, f(x)])
    nab = omega_covariant_derivative(ws, p, fd)
    val = np.tensordot(b.H, nab, axes=(0, 0))
    for row in b.frame.tangent_frame():
        val = np.tensordot(row, val, axes=(0, 0))
    expected = -b.cos_theta * float(b.H_M @ b.frame.g @ b.grad_psi)
    return abs(float(val) - expected)


def key_identity_residual(ws: WarpedSpace, f: GraphMap, x, fd: FDSteps = DEFAULT_FD,
                          step: float = FIELD_STEP) -> float:
    """``|sum_i <dGamma(X*_i), D_{X*_i} H> + m |H|^2|`` with ``H`` differentiated along the graph."""
    x = _pt(x)
    b = curvature_bundle(ws, f, x, fd)
    fr = b.frame
    m = fr.m
    h = step * np.maximum(1.0, np.abs(x))
    ws.base_metric.chart.require(x, 2.0 * float(np.max(h)), "field stencil")
    dH = np.empty((m + fr.n, m))
    for j in range(m):
        e = np.zeros(m)
        e[j] = h[j]
        dH[:, j] = (curvature_bundle(ws, f, x + e, fd).H - curvature_bundle(ws, f, x - e, fd).H) / (2 * h[j])
    gam = christoffel(warped_metric(ws), np.concatenate([x, f(x)]), fd)
    G = fr.ambient_metric
    total = 0.0
    for i in range(m):
        Xi = fr.X_star[:, i]
        T = fr.lift(Xi)
        nabla = dH @ Xi + np.einsum("abc,b,c->a", gam, T, b.H)
        total += float(T @ G @ nabla)
    return abs(total + m * b.norm_H ** 2)
