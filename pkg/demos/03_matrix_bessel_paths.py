"""Simulating the matrix Bessel SDE and checking its exact scalar laws.

The ensemble norm must follow a squared Bessel process of dimension
d (d - 1 + delta); the Gram matrix X^T X must match an independently
simulated Wishart ensemble; and the determinant, run on the clock
A_t = int ||adj X||^2 ds, must be a Bessel(delta) process.

Run:  python demos/03_matrix_bessel_paths.py        (about a minute)
"""

import numpy as np

import besmlab as bl
from besmlab import processes

d, delta = 2, 2.0
cfg = bl.SimConfig(d=d, delta=delta, x0=np.eye(d), horizon=1.0, dt=1e-3,
                   seed=42, n_paths=4_000)

# --- a small ensemble, plus one path in detail ----------------------------
paths = bl.simulate_besm(bl.SimConfig(d=d, delta=delta, x0=np.eye(d),
                                      horizon=1.0, dt=1e-2, seed=0, n_paths=3))
one = paths[0]
print("grid points            =", one.times.size)
print("det stays positive     =", bool(np.all(one.dets() > 0)), "blowup =", one.blowup)

tc = bl.time_change_det(one)
print("clock A_T              =", tc.total)
print("xi at u=0.5            =", tc.xi(0.5), "(det at C(u) =", tc.inverse(0.5), ")")

# --- norm law: ||X_T||^2 ~ squared Bessel of dimension d(d-1+delta) --------
term, blowups = processes.besm_terminal_states(cfg)
norm2 = np.einsum("nij,nij->n", term, term)
dim = d * (d - 1.0 + delta)
print(f"mean ||X_T||^2         = {norm2.mean():.3f}  (exact {2 + dim * 1.0:.3f})")
ks = bl.ks_one_sample(norm2, lambda q: bl.besq_transition_cdf(dim, 2.0, 1.0, q))
print(f"norm-law KS            : D = {ks.statistic:.4f}, p = {ks.p_value:.3f}")

# --- Wishart coupling ------------------------------------------------------
rep = processes.coupling_check(delta, d, np.eye(d), 1.0, 1e-3, seed=7, n_paths=4_000)
print("coupling trace/det p   =",
      rep.estimates["ks_trace_p_value"]["value"],
      rep.estimates["ks_det_p_value"]["value"])

# --- determinant time change ----------------------------------------------
rep = processes.det_timechange_check(delta, d, np.eye(d), 1.0, 1e-3,
                                     seed=11, n_paths=4_000, u=0.5)
print("time-changed det KS p  =", rep.estimates["ks_p_value"]["value"])

# --- the martingale that starts it all -------------------------------------
rep = bl.girsanov_det_martingale(d, 1.0, 5e-3, seed=13, n_paths=20_000)
for label, est in rep.estimates.items():
    print(f"{label:26s} = {est['value']:.4f} +- {est['stderr']:.4f}")
