"""Deterministic RNG streams and the shared Monte Carlo samplers.

Every estimator in the library draws from streams keyed by
``(master_seed, *key)`` so that results are bit-identical no matter how work
is split across workers.  Standard errors come from 32 batch means, with the
batches aligned to the stream partition.
"""

from __future__ import annotations

import hashlib
from typing import Callable, Iterator

import numpy as np

N_BATCHES = 32


def _key_to_ints(key) -> tuple[int, ...]:
    out = []
    for part in key:
        if isinstance(part, (int, np.integer)):
            out.append(int(part) & 0xFFFFFFFFFFFFFFFF)
        elif isinstance(part, str):
            digest = hashlib.sha256(part.encode("utf-8")).digest()
            out.append(int.from_bytes(digest[:8], "big"))
        else:
            raise TypeError(f"stream key parts must be int or str, got {part!r}")
    return tuple(out)


def substream(master_seed: int, *key) -> np.random.Generator:
    """Independent generator for (master_seed, *key); stable across runs."""
    entropy = (int(master_seed),) + _key_to_ints(key)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def batch_sizes(n_samples: int, n_batches: int = N_BATCHES) -> np.ndarray:
    """Split n_samples into n_batches near-equal positive chunks."""
    n_batches = min(n_batches, n_samples)
    base = n_samples // n_batches
    sizes = np.full(n_batches, base, dtype=int)
    sizes[: n_samples - base * n_batches] += 1
    return sizes


def batched_streams(
    master_seed: int, n_samples: int, *key, n_batches: int = N_BATCHES
) -> Iterator[tuple[np.random.Generator, int]]:
    for idx, size in enumerate(batch_sizes(n_samples, n_batches)):
        yield substream(master_seed, *key, idx), int(size)


def mc_estimate(
    master_seed: int,
    n_samples: int,
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    *key,
    n_batches: int = N_BATCHES,
) -> tuple[float, float]:
    """Mean and batch-means standard error of ``sampler(rng, m)`` values.

    ``sampler`` must return one value per requested sample; the estimate is
    the sample-count weighted mean of the batch means, and the standard error
    is std(batch means)/sqrt(#batches) (0 for a single batch).
    """
    means = []
    counts = []
    for rng, size in batched_streams(master_seed, n_samples, *key, n_batches=n_batches):
        values = np.asarray(sampler(rng, size), dtype=float)
        if values.shape != (size,):
            raise ValueError("sampler must return one value per sample")
        means.append(values.mean())
        counts.append(size)
    means = np.asarray(means)
    counts = np.asarray(counts, dtype=float)
    mean = float(np.sum(means * counts) / counts.sum())
    if len(means) < 2:
        return mean, 0.0
    stderr = float(means.std(ddof=1) / np.sqrt(len(means)))
    return mean, stderr


# ---------------------------------------------------------------------------
# geometric samplers
# ---------------------------------------------------------------------------

def haar_orthogonal(rng: np.random.Generator, d: int, size: int) -> np.ndarray:
    """Haar-distributed O(d) matrices: QR of a Gaussian with sign correction."""
    g = rng.standard_normal((size, d, d))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.einsum("nii->ni", r))
    signs[signs == 0.0] = 1.0
    return q * signs[:, None, :]


def haar_special_orthogonal(rng: np.random.Generator, d: int, size: int) -> np.ndarray:
    """Haar on SO(d): reflect the last column of det = -1 Haar O(d) draws."""
    q = haar_orthogonal(rng, d, size)
    dets = np.linalg.det(q)
    flip = dets < 0.0
    q[flip, :, -1] *= -1.0
    return q


def uniform_ball_matrices(
    rng: np.random.Generator, center: np.ndarray, radius: float, size: int
) -> np.ndarray:
    """Uniform draws from the Frobenius ball B(center, radius) in M^d."""
    center = np.asarray(center, dtype=float)
    d = center.shape[0]
    n = d * d
    g = rng.standard_normal((size, n))
    g /= np.linalg.norm(g, axis=1)[:, None]
    radii = radius * rng.random(size) ** (1.0 / n)
    return center[None] + (g * radii[:, None]).reshape(size, d, d)


def uniform_box_matrices(
    rng: np.random.Generator, center: np.ndarray, half_width: float, size: int
) -> np.ndarray:
    """Uniform draws from the entrywise box of given half width."""
    center = np.asarray(center, dtype=float)
    d = center.shape[0]
    u = rng.uniform(-half_width, half_width, (size, d, d))
    return center[None] + u
