"""Geometry and measure near the boundary stratification of the
nonnegative-determinant matrices: the set of rank-k matrices is a smooth
stratum of dimension d^2 - (d-k)^2, and the determinant weight interacts
with the tubular neighborhoods of each stratum.

Three verifiable pieces live here:

* the determinant growth bound |det(x + v)| <= c_k(x) ||v||^(d-k) around a
  rank-k point, with c_k the sum of the first k+1 elementary symmetric
  polynomials of the singular values;
* the explicit capacity test profile phi_eps (zero beyond eps, one near
  zero) whose radial energies int |phi'|^2 t dt admit closed forms and
  vanish with eps - the mechanism that kills the capacity of the top
  stratum at delta = 2;
* a Monte Carlo scaling experiment for the weighted mass of the
  eps-neighborhood of a stratum, realized as a singular-value distance
  sublevel set around a diagonal base point, whose log-log slope must be
  n2 + (d - k)(delta - 1).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad

from . import sampling, stats
from .errors import (
    DegenerateGridError,
    DomainError,
    NormTooLargeError,
    RankMismatchError,
)
from .linalg import (
    batch_det,
    batch_distance_to_rank,
    det,
    elementary_symmetric_all,
    singular_values,
)
from .weights import batch_weight

RANK_TOL = 1e-10
PHI_EPS_MAX = 0.5  # the two-piece profile vanishes on [eps, inf) iff
                   # 2 eps^(1 + 1/eps) <= eps, true for all eps <= 0.5


@dataclass(frozen=True)
class StratumSpec:
    """Rank-k stratum inside d x d matrices."""

    d: int
    k: int

    def __post_init__(self):
        if not 0 <= self.k <= self.d - 1:
            raise DomainError(f"rank {self.k} outside {{0, ..., {self.d - 1}}}")

    @property
    def n1(self) -> int:
        return self.d**2 - (self.d - self.k) ** 2

    @property
    def n2(self) -> int:
        return (self.d - self.k) ** 2

    def base_point(self) -> np.ndarray:
        """diag(1, ..., 1, 0, ..., 0) with k ones."""
        return np.diag(np.r_[np.ones(self.k), np.zeros(self.d - self.k)])


# ---------------------------------------------------------------------------
# determinant growth near a stratum
# ---------------------------------------------------------------------------

class DetGrowth(NamedTuple):
    bound: float
    actual: float


def growth_coefficient(sigma, k: int) -> float:
    """c_k = p_0 + ... + p_k of the singular values (nonzero terms only
    survive at a rank-k point)."""
    p = elementary_symmetric_all(sigma)
    return float(np.sum(p[: k + 1]))


def det_growth_bound(x, v, k: int) -> DetGrowth:
    """Bound/actual pair for |det(x + v)| <= c_k(x) ||v||^(d-k).

    x must be rank k up to sigma_{k+1} <= 1e-10 sigma_1 (it is projected to
    exact rank k by truncating its singular values) and ||v|| <= 1.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    d = x.shape[0]
    if not 0 <= k <= d - 1:
        raise DomainError(f"rank {k} outside {{0, ..., {d - 1}}}")
    sigma = singular_values(x)
    if sigma[k] > RANK_TOL * max(sigma[0], 1e-300):
        raise RankMismatchError(
            f"sigma_{k + 1} = {sigma[k]} is not negligible against sigma_1"
        )
    vnorm = float(np.linalg.norm(v))
    if vnorm > 1.0 + 1e-12:
        raise NormTooLargeError(f"||v|| = {vnorm} exceeds 1")
    # exact rank-k projection via truncated SVD
    u, s, vt = np.linalg.svd(x)
    s[k:] = 0.0
    x_proj = (u * s) @ vt
    c_k = growth_coefficient(s, k)
    bound = c_k * vnorm ** (d - k)
    actual = abs(det(x_proj + v))
    return DetGrowth(bound, actual)


def det_growth_check(
    d: int, k: int, seed: int, n_trials: int, sigma_scale: float = 2.0
) -> stats.VerificationReport:
    """Randomized sweep of the growth bound: zero violations required.

    Rank-k points are built as U diag(s) V^T with k positive singular
    values; perturbations are uniform in the unit Frobenius ball.
    """
    t0 = time.perf_counter()
    violations = 0
    max_ratio = 0.0
    for rng, m in sampling.batched_streams(seed, n_trials, "det-growth", d, k):
        u = sampling.haar_orthogonal(rng, d, m)
        vt = sampling.haar_orthogonal(rng, d, m)
        s = np.zeros((m, d))
        if k > 0:
            s[:, :k] = np.sort(rng.uniform(0.1, sigma_scale, (m, k)), axis=1)[:, ::-1]
        x = (u * s[:, None, :]) @ vt
        v = sampling.uniform_ball_matrices(rng, np.zeros((d, d)), 1.0, m)
        vnorm = np.linalg.norm(v, axis=(1, 2))
        p = np.zeros((m, d + 1))
        p[:, 0] = 1.0
        for col in range(d):
            p[:, 1:] = p[:, 1:] + s[:, col][:, None] * p[:, :-1]
        c_k = np.sum(p[:, : k + 1], axis=1)
        bound = c_k * vnorm ** (d - k)
        actual = np.abs(batch_det(x + v))
        violations += int(np.sum(actual > bound * (1.0 + 1e-12)))
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(bound > 0.0, actual / bound, 0.0)
        max_ratio = max(max_ratio, float(ratio.max()))
    passed = violations == 0
    report = stats.VerificationReport(
        verifier_id="det-growth",
        inputs_digest=stats.digest_inputs(d=d, k=k, n_trials=n_trials),
        estimates={
            "violations": stats.estimate(violations),
            "max_actual_over_bound": stats.estimate(max_ratio),
        },
        bound_or_target=0.0,
        tolerance=0.0,
        passed=bool(passed),
        n_samples=n_trials,
        seed=seed,
    )
    report.wall_time = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# condition for zero capacity
# ---------------------------------------------------------------------------

def cap_zero_condition(d: int, k: int, delta: float) -> bool:
    """(d - k)(d - k - 1 + delta) > 2: the eps^-2-mass of the stratum tube
    vanishes, so the stratum has zero capacity.  Holds for every k <= d - 2
    once delta > 0; at k = d - 1 it needs delta > 2."""
    StratumSpec(d, k)  # validates the pair
    if delta <= 0.0:
        raise DomainError("delta must be positive")
    return (d - k) * (d - k - 1.0 + delta) > 2.0


# ---------------------------------------------------------------------------
# the capacity test profile and its radial energies
# ---------------------------------------------------------------------------

def _check_eps(eps: float) -> None:
    if not 0.0 < eps <= PHI_EPS_MAX:
        raise DomainError(f"eps must lie in (0, {PHI_EPS_MAX}]")


def phi_g(t, eps: float):
    _check_eps(eps)
    t = np.asarray(t, dtype=float)
    return np.clip(1.0 - (t / eps) ** eps, 0.0, None)


def phi_h(t, eps: float):
    _check_eps(eps)
    t = np.asarray(t, dtype=float)
    knot = eps ** (1.0 + 1.0 / eps)
    ramp = (t / eps) ** eps
    linear = 2.0 * eps - eps ** (-1.0 / eps) * t
    out = np.where(t < knot, ramp, np.where(t < 2.0 * knot, linear, 0.0))
    return out


def phi_eps(t, eps: float):
    """The capacity profile: 1 on [0, eps^(1+1/eps)), 0 on [eps, inf),
    valued in [0, 1] and Lipschitz in between."""
    _check_eps(eps)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("t must be nonnegative")
    out = phi_g(t, eps) + phi_h(t, eps)
    return out if out.shape else float(out)


class PhiEnergy(NamedTuple):
    g_energy: float
    h_middle_energy: float
    total: float


def phi_eps_energy(eps: float) -> PhiEnergy:
    """Radial Dirichlet energies int |.'|^2 t dt of the profile pieces.

    Closed forms satisfied by the quadratures: the smooth piece carries
    eps/2 and the middle linear ramp (3/2) eps^2, so the total energy of
    the profile vanishes as eps -> 0.
    """
    _check_eps(eps)
    knot = eps ** (1.0 + 1.0 / eps)
    c_g = eps ** (2.0 - 2.0 * eps)  # |g'(t)|^2 = c_g t^(2 eps - 2)
    slope = eps ** (-1.0 / eps)

    # weight='alg' integrates f(t) (t-a)^w exactly through the t=0 singularity
    g_energy, _ = quad(lambda t: c_g, 0.0, eps, weight="alg", wvar=(2.0 * eps - 1.0, 0.0))
    h_middle, _ = quad(lambda t: slope**2 * t, knot, 2.0 * knot)

    # total profile energy: the two derivatives cancel below the knot,
    # interact on (knot, 2 knot), and only the smooth piece survives beyond.
    cross, _ = quad(
        lambda t: (c_g ** 0.5 * t ** (eps - 1.0) + slope) ** 2 * t, knot, 2.0 * knot
    )
    g_head, _ = quad(
        lambda t: c_g, 0.0, 2.0 * knot, weight="alg", wvar=(2.0 * eps - 1.0, 0.0)
    )
    total = g_energy - g_head + cross
    return PhiEnergy(float(g_energy), float(h_middle), float(total))


def phi_energy_check(eps: float) -> stats.VerificationReport:
    """Quadrature energies against the closed forms, at 1e-6 relative."""
    t0 = time.perf_counter()
    e = phi_eps_energy(eps)
    g_target = eps / 2.0
    h_target = 1.5 * eps**2
    rel_g = abs(e.g_energy - g_target) / g_target
    rel_h = abs(e.h_middle_energy - h_target) / h_target
    passed = rel_g <= 1e-6 and rel_h <= 1e-6
    report = stats.VerificationReport(
        verifier_id="phi-energy",
        inputs_digest=stats.digest_inputs(eps=eps),
        estimates={
            "g_energy": stats.estimate(e.g_energy),
            "g_energy_target": stats.estimate(g_target),
            "h_middle_energy": stats.estimate(e.h_middle_energy),
            "h_middle_energy_target": stats.estimate(h_target),
            "total_energy": stats.estimate(e.total),
            "max_relative_error": stats.estimate(max(rel_g, rel_h)),
        },
        bound_or_target=None,
        tolerance=1e-6,
        passed=bool(passed),
        n_samples=0,
        seed=None,
    )
    report.wall_time = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# tube-mass scaling experiment
# ---------------------------------------------------------------------------

BOX_HALF_WIDTH = 0.25
DEFAULT_EPS_GRID = (0.2, 0.1, 0.05, 0.025)


@dataclass
class CapacityScalingResult:
    epsilons: np.ndarray
    masses: np.ndarray
    mass_stderrs: np.ndarray
    fitted_slope: float
    slope_stderr: float
    predicted_slope: float
    eps2_mass_decreasing: bool
    condition_requires_decrease: bool

    @property
    def deviation(self) -> float:
        return self.fitted_slope - self.predicted_slope

    @property
    def deviation_upward(self) -> bool:
        """Faster decay than predicted: consistent with the one-sided mass
        upper bound, so worth flagging but not a scaling violation."""
        return self.deviation > 0.0

    @property
    def passed(self) -> bool:
        ok = abs(self.deviation) <= 0.15
        if self.condition_requires_decrease:
            ok = ok and self.eps2_mass_decreasing
        return ok


def capacity_scaling_experiment(
    stratum: StratumSpec,
    delta: float,
    eps_grid=DEFAULT_EPS_GRID,
    seed: int = 0,
    n_samples: int = 400_000,
) -> CapacityScalingResult:
    """Weighted mass of {distance to the rank-k set < eps} near a stratum
    point, against the predicted scaling exponent n2 + (d - k)(delta - 1).

    The neighborhood is realized inside the entrywise box of half-width
    0.25 around diag(1, ..., 1, 0, ..., 0) as a singular-value distance
    sublevel set; masses are shared-sample Monte Carlo integrals of
    |det|^(delta - 1), and the slope is a variance-weighted log-log fit.
    """
    if delta <= 0.0:
        raise DomainError("delta must be positive")
    eps_grid = np.asarray(sorted(eps_grid, reverse=True), dtype=float)
    if eps_grid.size < 4 or eps_grid[0] >= 0.5 or eps_grid[-1] <= 0.0:
        raise DegenerateGridError("need >= 4 epsilons inside (0, 0.5)")
    if np.unique(eps_grid).size != eps_grid.size:
        raise DegenerateGridError("epsilons must be distinct")
    d, k = stratum.d, stratum.k
    base = stratum.base_point()
    volume = (2.0 * BOX_HALF_WIDTH) ** (d * d)
    batch_means = []
    counts = []
    for rng, m in sampling.batched_streams(seed, n_samples, "capacity", d, k):
        y = sampling.uniform_box_matrices(rng, base, BOX_HALF_WIDTH, m)
        dist = batch_distance_to_rank(y, k)
        w = batch_weight(y, delta - 1.0)
        inside = dist[None, :] < eps_grid[:, None]
        batch_means.append(volume * np.where(inside, w[None, :], 0.0).mean(axis=1))
        counts.append(m)
    batch_means = np.asarray(batch_means)
    counts = np.asarray(counts, dtype=float)
    masses = np.sum(batch_means * counts[:, None], axis=0) / counts.sum()
    stderrs = batch_means.std(axis=0, ddof=1) / math.sqrt(len(counts))
    if np.any(masses <= 0.0):
        raise DegenerateGridError(
            "empty neighborhood at the smallest eps; increase n_samples"
        )
    slope, slope_se = stats.loglog_slope(eps_grid, masses, np.maximum(stderrs, 1e-300))
    predicted = stratum.n2 + (d - k) * (delta - 1.0)
    requires = cap_zero_condition(d, k, delta)
    ratio = masses / eps_grid**2
    decreasing = bool(np.all(np.diff(ratio) < 0.0))
    return CapacityScalingResult(
        epsilons=eps_grid,
        masses=masses,
        mass_stderrs=stderrs,
        fitted_slope=float(slope),
        slope_stderr=float(slope_se),
        predicted_slope=float(predicted),
        eps2_mass_decreasing=decreasing,
        condition_requires_decrease=requires,
    )


def capacity_scaling_check(
    d: int, k: int, delta: float, eps_grid=DEFAULT_EPS_GRID,
    seed: int = 0, n_samples: int = 400_000,
) -> stats.VerificationReport:
    t0 = time.perf_counter()
    result = capacity_scaling_experiment(StratumSpec(d, k), delta, eps_grid, seed, n_samples)
    estimates = {
        "fitted_slope": stats.estimate(result.fitted_slope, result.slope_stderr),
        "predicted_slope": stats.estimate(result.predicted_slope),
        "deviation": stats.estimate(result.deviation),
        "deviation_upward": stats.estimate(1.0 if result.deviation_upward else 0.0),
        "eps2_mass_decreasing": stats.estimate(1.0 if result.eps2_mass_decreasing else 0.0),
        "condition_requires_decrease": stats.estimate(
            1.0 if result.condition_requires_decrease else 0.0
        ),
    }
    for e, mhat, se in zip(result.epsilons, result.masses, result.mass_stderrs):
        estimates[f"mass_eps_{e:g}"] = stats.estimate(mhat, se)
    report = stats.VerificationReport(
        verifier_id="capacity-scaling",
        inputs_digest=stats.digest_inputs(
            d=d, k=k, delta=delta, eps_grid=list(map(float, eps_grid)), n_samples=n_samples
        ),
        estimates=estimates,
        bound_or_target=result.predicted_slope,
        tolerance=0.15,
        passed=bool(result.passed),
        n_samples=n_samples,
        seed=seed,
    )
    report.wall_time = time.perf_counter() - t0
    return report
