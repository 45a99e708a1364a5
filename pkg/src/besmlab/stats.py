"""Statistical verdict machinery: KS tests, weighted log-log slope fits, and
the VerificationReport record emitted by every verifier.

The KS statistic and the Kolmogorov tail series are implemented here (they
are a dozen lines and keep report bytes independent of the SciPy build);
the unit tests cross-check them against ``scipy.stats``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateInputError, TooFewSamplesError

P_VALUE_FLOOR = 1e-16
_KOLMOGOROV_TERM_TOL = 1e-10


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float
    n: int


def kolmogorov_sf(lam: float) -> float:
    """Asymptotic Kolmogorov survival function 2 sum (-1)^{k-1} e^{-2 k^2 lam^2}.

    Below the crossover the alternating series cancels catastrophically, so
    the theta-transformed CDF series (fast-converging for small lam) is used
    there instead.
    """
    if lam <= 0.0:
        return 1.0
    if lam < 1.18:
        cdf = 0.0
        k = 1
        factor = math.sqrt(2.0 * math.pi) / lam
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * lam * lam))
            cdf += term
            if term < _KOLMOGOROV_TERM_TOL or k > 1000:
                break
            k += 1
        return min(1.0, max(P_VALUE_FLOOR, 1.0 - factor * cdf))
    total = 0.0
    sign = 1.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * lam * lam)
        total += sign * term
        if term < _KOLMOGOROV_TERM_TOL:
            break
        sign = -sign
        k += 1
        if k > 100000:
            break
    return min(1.0, max(P_VALUE_FLOOR, 2.0 * total))


def ks_one_sample(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> KSResult:
    """Exact one-sample KS statistic against a reference CDF, asymptotic p."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 50:
        raise TooFewSamplesError(f"need at least 50 samples, got {n}")
    f = np.asarray(cdf(x), dtype=float)
    grid = np.arange(1, n + 1) / n
    d_plus = np.max(grid - f)
    d_minus = np.max(f - (grid - 1.0 / n))
    stat = float(max(d_plus, d_minus))
    return KSResult(stat, kolmogorov_sf(math.sqrt(n) * stat), n)


def ks_two_sample(a, b) -> KSResult:
    """Two-sample KS with the effective-n asymptotic p-value."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    n, m = a.size, b.size
    if min(n, m) < 50:
        raise TooFewSamplesError(f"need at least 50 samples per side, got {n}, {m}")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / n
    cdf_b = np.searchsorted(b, pooled, side="right") / m
    stat = float(np.max(np.abs(cdf_a - cdf_b)))
    n_eff = n * m / (n + m)
    return KSResult(stat, kolmogorov_sf(math.sqrt(n_eff) * stat), min(n, m))


# ---------------------------------------------------------------------------
# weighted log-log slope
# ---------------------------------------------------------------------------

def loglog_slope(xs, ys, ys_stderr=None) -> tuple[float, float]:
    """Variance-weighted least-squares slope of log y against log x.

    Weights are 1/sigma_i^2 with sigma_i = stderr_i / y_i (delta method); if
    no standard errors are given the fit is unweighted and the slope error
    comes from the residuals (0 for a two-point fit).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size or xs.size < 2:
        raise DegenerateInputError("need >= 2 matching (x, y) points")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise DegenerateInputError("log-log fit needs strictly positive data")
    lx = np.log(xs)
    ly = np.log(ys)
    if np.ptp(lx) == 0.0:
        raise DegenerateInputError("all x equal")
    if ys_stderr is not None:
        sig = np.asarray(ys_stderr, dtype=float) / ys
        if np.any(sig <= 0.0):
            raise DegenerateInputError("standard errors must be positive")
        w = 1.0 / sig**2
    else:
        w = np.ones_like(lx)
    sw = w.sum()
    mx = np.sum(w * lx) / sw
    my = np.sum(w * ly) / sw
    sxx = np.sum(w * (lx - mx) ** 2)
    slope = float(np.sum(w * (lx - mx) * (ly - my)) / sxx)
    if ys_stderr is not None:
        stderr = float(np.sqrt(1.0 / sxx))
    else:
        resid = ly - my - slope * (lx - mx)
        dof = lx.size - 2
        s2 = float(np.sum(resid**2) / dof) if dof > 0 else 0.0
        stderr = float(np.sqrt(s2 / sxx))
    return slope, stderr


# ---------------------------------------------------------------------------
# verification reports
# ---------------------------------------------------------------------------

def digest_inputs(**inputs) -> str:
    """Stable hex digest of a verifier's configuration."""
    blob = json.dumps(inputs, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass
class VerificationReport:
    """Machine-readable outcome of one verifier run.

    ``estimates`` maps labels to {"value": float, "stderr": float | None};
    ``passed`` is always a pure function of (estimates, bound_or_target,
    tolerance).  The canonical serialization used for run logs, digests and
    reproducibility checks excludes ``wall_time``, which is the one
    non-deterministic field.
    """

    verifier_id: str
    inputs_digest: str
    estimates: dict
    bound_or_target: float | None
    tolerance: float | None
    passed: bool
    n_samples: int
    seed: int | None
    wall_time: float = 0.0
    schema: str = field(default="besm-report-v1")

    def canonical_dict(self) -> dict:
        return {
            "schema": self.schema,
            "verifier_id": self.verifier_id,
            "inputs_digest": self.inputs_digest,
            "estimates": self.estimates,
            "bound_or_target": self.bound_or_target,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }

    def canonical_json(self) -> str:
        return json.dumps(
            self.canonical_dict(), sort_keys=True, separators=(",", ":")
        )

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        out = self.canonical_dict()
        out["wall_time"] = self.wall_time
        return out


def estimate(value: float, stderr: float | None = None) -> dict:
    ent = {"value": float(value)}
    ent["stderr"] = None if stderr is None else float(stderr)
    return ent
