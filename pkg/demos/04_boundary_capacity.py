"""Geometry of the boundary strata: determinant growth bounds, the capacity
test profile, and the scaling of weighted tube masses.

Run:  python demos/04_boundary_capacity.py
"""

import numpy as np

import besmlab as bl
from besmlab.boundary import StratumSpec, det_growth_check, phi_eps_energy

# --- determinant growth around a rank-k point ------------------------------
x = np.diag([2.0, 0.0, 0.0])  # rank 1 in d = 3
v = np.full((3, 3), 0.1)
g = bl.det_growth_bound(x, v, k=1)
print("growth bound / actual  =", g.bound, "/", g.actual)

rep = det_growth_check(3, 1, seed=1, n_trials=50_000)
print("randomized violations  =", rep.estimates["violations"]["value"],
      "max actual/bound =", rep.estimates["max_actual_over_bound"]["value"])

# --- zero-capacity condition ------------------------------------------------
print("cap condition (d,k,delta):")
for d, k, delta in [(2, 0, 1.0), (2, 1, 2.0), (2, 1, 3.0), (3, 1, 0.5)]:
    print(f"   ({d},{k},{delta}) ->", bl.cap_zero_condition(d, k, delta))

# --- the capacity profile and its vanishing energy --------------------------
for eps in (0.25, 0.1, 0.05):
    e = phi_eps_energy(eps)
    print(f"eps={eps}: smooth-piece energy {e.g_energy:.4f} (= eps/2), "
          f"ramp energy {e.h_middle_energy:.5f} (= 1.5 eps^2), total {e.total:.4f}")
print("phi is 1 near 0, 0 past eps:", bl.phi_eps(0.0, 0.25), bl.phi_eps(0.3, 0.25))

# --- tube-mass scaling -------------------------------------------------------
# mass(eps) ~ eps^(n2 + (d-k)(delta-1)) around a rank-k base point
for d, k, delta in [(2, 1, 1.0), (2, 1, 2.0), (2, 0, 1.0)]:
    res = bl.capacity_scaling_experiment(StratumSpec(d, k), delta,
                                         seed=3, n_samples=300_000)
    print(f"(d={d}, k={k}, delta={delta}): slope {res.fitted_slope:.3f} "
          f"(predicted {res.predicted_slope:.0f}), "
          f"eps^-2 mass decreasing = {res.eps2_mass_decreasing}")
