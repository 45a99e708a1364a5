"""Dense square-matrix kernels for small d (everything here targets d <= ~16,
with the analysis dimensions being 2..6).

All functions are pure and accept plain ``numpy`` arrays.  Batched variants
take a stack of shape ``(n, d, d)`` and are what the Monte Carlo layers call;
the scalar entry points wrap them or specialize.

Conventions
-----------
* ``det`` is exact-by-formula for d <= 3 (cofactor expansions) and LU with
  partial pivoting (LAPACK) for larger d.
* ``adjugate`` is the transpose of the cofactor matrix, so
  ``x @ adjugate(x) == det(x) * I`` and ``grad det = adjugate(x).T``.
* ``gram_schmidt_qr`` is the *classical* Gram-Schmidt procedure
  (u_j = x_j - sum_{i<j} <q_i, x_j> q_i), not Householder, because the
  perturbation checker in :mod:`besmlab.muckenhoupt` analyzes exactly this
  procedure.  The factor has a strictly positive diagonal.
* ``singular_values`` runs a one-sided Jacobi iteration with a deterministic
  sweep order and threshold 1e-12 * ||x||, so results are reproducible and
  do not depend on a LAPACK build.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    IndexOutOfRangeError,
    NotPSDError,
    NotSymmetricError,
    SingularInputError,
)

ORTHO_TOL = 1e-10          # ||Q^T Q - I|| <= ORTHO_TOL * d
RECONSTRUCT_TOL = 1e-10    # ||QR - x||   <= RECONSTRUCT_TOL * (1 + ||x||)
GS_RANK_TOL = 1e-12        # |u_j| < GS_RANK_TOL * ||x||  -> rank deficient
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 60


@dataclass(frozen=True)
class QRFactors:
    """Orthogonal factor and upper-triangular factor with positive diagonal."""

    q: np.ndarray
    r: np.ndarray

    @property
    def d(self) -> int:
        return self.q.shape[-1]


def frobenius(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def _as_square(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("matrix entries must be finite")
    return x


# ---------------------------------------------------------------------------
# determinant / adjugate
# ---------------------------------------------------------------------------

def batch_det(xs: np.ndarray) -> np.ndarray:
    """Determinants of a stack ``(n, d, d)``; closed formulas for d <= 3."""
    xs = np.asarray(xs, dtype=float)
    d = xs.shape[-1]
    if d == 1:
        return xs[..., 0, 0].copy()
    if d == 2:
        return xs[..., 0, 0] * xs[..., 1, 1] - xs[..., 0, 1] * xs[..., 1, 0]
    if d == 3:
        a, b, c = xs[..., 0, 0], xs[..., 0, 1], xs[..., 0, 2]
        e, f, g = xs[..., 1, 0], xs[..., 1, 1], xs[..., 1, 2]
        h, i, j = xs[..., 2, 0], xs[..., 2, 1], xs[..., 2, 2]
        return a * (f * j - g * i) - b * (e * j - g * h) + c * (e * i - f * h)
    return np.linalg.det(xs)


def det(x) -> float:
    """Determinant; cofactor formulas for d <= 3, pivoted LU otherwise."""
    x = _as_square(x)
    return float(batch_det(x[None])[0])


def _cofactor_matrix(x: np.ndarray) -> np.ndarray:
    d = x.shape[0]
    if d == 1:
        return np.ones((1, 1))
    rows = np.arange(d)
    cof = np.empty((d, d))
    for i in range(d):
        ri = rows != i
        for j in range(d):
            minor = x[np.ix_(ri, rows != j)]
            cof[i, j] = (-1.0) ** (i + j) * det(minor)
    return cof


def adjugate(x) -> np.ndarray:
    """Adjugate adj(x): transpose of the cofactor matrix.

    Satisfies x @ adj(x) = det(x) I, and adj(x) = 0 exactly when the rank of
    x is at most d-2 (every (d-1)-minor is singular then).
    """
    x = _as_square(x)
    d = x.shape[0]
    if d == 1:
        return np.ones((1, 1))
    if d == 2:
        return np.array([[x[1, 1], -x[0, 1]], [-x[1, 0], x[0, 0]]])
    return _cofactor_matrix(x).T


def batch_adjugate(xs: np.ndarray) -> np.ndarray:
    """Adjugates of a stack; closed form for d <= 2, cofactors otherwise.

    For d >= 3 this computes all d^2 cofactors with batched LU determinants,
    which stays exact at rank-deficient inputs (unlike det * inv).
    """
    xs = np.asarray(xs, dtype=float)
    d = xs.shape[-1]
    if d == 1:
        return np.ones_like(xs)
    if d == 2:
        out = np.empty_like(xs)
        out[..., 0, 0] = xs[..., 1, 1]
        out[..., 0, 1] = -xs[..., 0, 1]
        out[..., 1, 0] = -xs[..., 1, 0]
        out[..., 1, 1] = xs[..., 0, 0]
        return out
    n = xs.shape[0]
    rows = np.arange(d)
    cof = np.empty((n, d, d))
    for i in range(d):
        ri = rows != i
        for j in range(d):
            minor = xs[:, ri][:, :, rows != j]
            cof[:, i, j] = (-1.0) ** (i + j) * batch_det(minor)
    return np.swapaxes(cof, -1, -2)


# ---------------------------------------------------------------------------
# Gram-Schmidt QR
# ---------------------------------------------------------------------------

def batch_gram_schmidt_qr(xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Classical Gram-Schmidt on a stack of nonsingular matrices.

    Returns ``(q, r)`` with q orthogonal and r upper triangular with positive
    diagonal (R_jj = |u_j|, R_ij = <q_i, x_j> for i < j).  Raises
    :class:`SingularInputError` if any pivot |u_j| falls below
    ``GS_RANK_TOL * ||x||``.
    """
    xs = np.asarray(xs, dtype=float)
    n, d, _ = xs.shape
    norms = np.linalg.norm(xs, axis=(1, 2))
    q = np.zeros_like(xs)
    r = np.zeros_like(xs)
    for j in range(d):
        u = xs[:, :, j].copy()
        for i in range(j):
            rij = np.einsum("nk,nk->n", q[:, :, i], xs[:, :, j])
            r[:, i, j] = rij
            u -= rij[:, None] * q[:, :, i]
        lu = np.linalg.norm(u, axis=1)
        bad = lu < GS_RANK_TOL * norms
        if np.any(bad):
            raise SingularInputError(
                f"column {j + 1}: {int(bad.sum())} of {n} inputs are rank "
                f"deficient beyond tolerance"
            )
        r[:, j, j] = lu
        q[:, :, j] = u / lu[:, None]
    return q, r


def gram_schmidt_qr(x) -> QRFactors:
    """QR factorization by classical Gram-Schmidt; det(x) != 0 required."""
    x = _as_square(x)
    q, r = batch_gram_schmidt_qr(x[None])
    return QRFactors(q=q[0], r=r[0])


def check_qr_invariants(x: np.ndarray, factors: QRFactors) -> None:
    """Assert the QRFactors contract; raises AssertionError with context."""
    q, r = factors.q, factors.r
    d = q.shape[0]
    ortho = frobenius(q.T @ q - np.eye(d))
    assert ortho <= ORTHO_TOL * d, f"orthogonality defect {ortho}"
    assert np.all(np.diag(r) > 0), "non-positive diagonal in R"
    assert np.allclose(r, np.triu(r)), "R not upper triangular"
    recon = frobenius(q @ r - x)
    assert recon <= RECONSTRUCT_TOL * (1.0 + frobenius(x)), f"||QR-x|| = {recon}"


# ---------------------------------------------------------------------------
# singular values (one-sided Jacobi)
# ---------------------------------------------------------------------------

def batch_singular_values(xs: np.ndarray) -> np.ndarray:
    """Nonincreasing singular values of a stack, by one-sided Jacobi.

    Columns are rotated pairwise (lexicographic sweep order) until every
    off-diagonal Gram entry satisfies |<u_p, u_q>| <= (1e-12 ||x||) ||x||.
    """
    a = np.array(xs, dtype=float)
    n, d, _ = a.shape
    if d == 1:
        return np.abs(a[:, 0, 0])[:, None]
    thresh = JACOBI_TOL * np.maximum(
        np.linalg.norm(a, axis=(1, 2)) ** 2, np.finfo(float).tiny
    )
    for _ in range(JACOBI_MAX_SWEEPS):
        converged = np.ones(n, dtype=bool)
        for p in range(d - 1):
            for q_ in range(p + 1, d):
                up = a[:, :, p]
                uq = a[:, :, q_]
                app = np.einsum("nk,nk->n", up, up)
                aqq = np.einsum("nk,nk->n", uq, uq)
                apq = np.einsum("nk,nk->n", up, uq)
                active = np.abs(apq) > thresh
                if not np.any(active):
                    continue
                converged &= ~active
                # Jacobi rotation zeroing the (p,q) Gram entry.
                tau = (aqq[active] - app[active]) / (2.0 * apq[active])
                t = np.sign(tau) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                t = np.where(tau == 0.0, 1.0, t)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                up_a = up[active]
                uq_a = uq[active]
                a[active, :, p] = c[:, None] * up_a - s[:, None] * uq_a
                a[active, :, q_] = s[:, None] * up_a + c[:, None] * uq_a
        if np.all(converged):
            break
    sigma = np.linalg.norm(a, axis=1)
    sigma.sort(axis=1)
    return sigma[:, ::-1]


def singular_values(x) -> np.ndarray:
    """Vector of singular values, sorted nonincreasing."""
    x = _as_square(x)
    return batch_singular_values(x[None])[0]


# ---------------------------------------------------------------------------
# elementary symmetric polynomials / rank strata
# ---------------------------------------------------------------------------

def elementary_symmetric_all(sigma) -> np.ndarray:
    """All elementary symmetric polynomials [p_0, ..., p_d] of a vector.

    Computed from the coefficient recurrence for prod_i (t + sigma_i).
    """
    sigma = np.asarray(sigma, dtype=float).ravel()
    p = np.zeros(sigma.size + 1)
    p[0] = 1.0
    for s in sigma:
        p[1:] = p[1:] + s * p[:-1]
    return p


def elementary_symmetric(sigma, i: int) -> float:
    """i-th elementary symmetric polynomial p_i(sigma); p_0 = 1."""
    sigma = np.asarray(sigma, dtype=float).ravel()
    d = sigma.size
    if not 0 <= i <= d:
        raise IndexOutOfRangeError(f"index {i} outside [0, {d}]")
    return float(elementary_symmetric_all(sigma)[i])


def batch_distance_to_rank(xs: np.ndarray, k: int) -> np.ndarray:
    """Frobenius distance from each matrix to the rank <= k set."""
    xs = np.asarray(xs, dtype=float)
    d = xs.shape[-1]
    if not 0 <= k <= d - 1:
        raise IndexOutOfRangeError(f"rank {k} outside [0, {d - 1}]")
    sigma = batch_singular_values(xs)
    return np.sqrt(np.sum(sigma[:, k:] ** 2, axis=1))


def distance_to_rank_stratum(x, k: int) -> float:
    """sqrt(sigma_{k+1}^2 + ... + sigma_d^2): Eckart-Young distance to rank k."""
    x = _as_square(x)
    return float(batch_distance_to_rank(x[None], k)[0])


# ---------------------------------------------------------------------------
# symmetric PSD square root
# ---------------------------------------------------------------------------

PSD_SYM_TOL = 1e-10
PSD_CLAMP_TOL = 1e-10
PSD_FAIL_TOL = 1e-6


def psd_sqrt(z) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    The input must be symmetric up to ``PSD_SYM_TOL * (1 + ||z||)`` and have
    eigenvalues >= -PSD_FAIL_TOL * ||z||; eigenvalues in the small negative
    band are clamped to zero.
    """
    z = _as_square(z)
    nz = frobenius(z)
    if frobenius(z - z.T) > PSD_SYM_TOL * (1.0 + nz):
        raise NotSymmetricError("input is not symmetric within tolerance")
    w, v = np.linalg.eigh(0.5 * (z + z.T))
    if w.min(initial=0.0) < -PSD_FAIL_TOL * max(nz, 1e-300):
        raise NotPSDError(f"eigenvalue {w.min()} below PSD tolerance")
    w = np.clip(w, 0.0, None)
    s = (v * np.sqrt(w)) @ v.T
    return 0.5 * (s + s.T)


def batch_psd_sqrt(zs: np.ndarray) -> np.ndarray:
    """PSD square roots of a symmetric stack, clamping tiny negative modes.

    No symmetry/PSD validation: this is the fast path for simulators that
    construct symmetric matrices and project each step.
    """
    zs = np.asarray(zs, dtype=float)
    d = zs.shape[-1]
    if d == 1:
        return np.sqrt(np.clip(zs, 0.0, None))
    w, v = np.linalg.eigh(zs)
    w = np.clip(w, 0.0, None)
    s = (v * np.sqrt(w)[:, None, :]) @ np.swapaxes(v, -1, -2)
    return 0.5 * (s + np.swapaxes(s, -1, -2))
