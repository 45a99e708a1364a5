"""Tour of the dense-matrix kernels: determinants, adjugates, classical
Gram-Schmidt QR, Jacobi singular values, and distances to the rank strata.

Run:  python demos/01_matrix_kernels.py
"""

import numpy as np

import besmlab as bl

rng = np.random.default_rng(0)

# --- determinant and adjugate -------------------------------------------
x = rng.standard_normal((3, 3))
print("det(x)                 =", bl.det(x))
print("x @ adj(x) - det(x) I  =", np.abs(x @ bl.adjugate(x) - bl.det(x) * np.eye(3)).max())

# rank d-2 kills the adjugate entirely
low = np.diag([1.0, 1.0, 0.0, 0.0])
print("adjugate at rank d-2   =", np.abs(bl.adjugate(low)).max())

# --- classical Gram-Schmidt QR ------------------------------------------
factors = bl.gram_schmidt_qr(x)
print("||Q^T Q - I||          =", np.linalg.norm(factors.q.T @ factors.q - np.eye(3)))
print("||QR - x||             =", np.linalg.norm(factors.q @ factors.r - x))
print("diag(R) > 0            =", bool(np.all(np.diag(factors.r) > 0)))

# an upper-triangular input with positive diagonal is a fixed point
t = np.triu(rng.standard_normal((3, 3)))
np.fill_diagonal(t, np.abs(np.diag(t)) + 0.5)
fp = bl.gram_schmidt_qr(t)
print("fixed point: Q == I    =", np.allclose(fp.q, np.eye(3), atol=1e-12))

# --- singular values without LAPACK --------------------------------------
sigma = bl.singular_values(x)
print("jacobi sigma           =", sigma)
print("lapack sigma           =", np.linalg.svd(x, compute_uv=False))
print("prod sigma vs |det|    =", np.prod(sigma), abs(bl.det(x)))

# --- rank strata ----------------------------------------------------------
y = np.diag([5.0, 3.0, 1.0])
print("dist(y, rank<=1)       =", bl.distance_to_rank_stratum(y, 1), "= sqrt(10)")
print("elementary p_2(1,2,3)  =", bl.elementary_symmetric([1.0, 2.0, 3.0], 2))
