"""Classical field side: the free Gaussian measure on mode coefficients and
its reweighting by the quartic interaction ``exp(-F_NL)``.

A field configuration is the coefficient vector ``alpha`` of
``u = sum_j alpha_j u_j``.  Under the free measure the ``alpha_j`` are
independent circular complex Gaussians with ``E|alpha_j|^2 = 1/lambda_j``.

Random numbers come from counter-based Philox generators keyed by
``(seed, stream, batch)``, so any batch can be regenerated on its own and
results do not depend on the order in which batches are evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Optional

import numpy as np

from .errors import DegenerateWeights
from .model import SpectralModel, TwoBodyOperator
from .qgibbs import wick_moment

DEFAULT_BATCHES = 100
MIN_ESS = 10.0


def rng_stream(seed: int, stream: int = 0, batch: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(batch)))
    return np.random.Generator(np.random.Philox(seq))


def sample_free(model: SpectralModel, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Draw coefficient vectors from the free measure, shape ``(K,)`` or ``(size, K)``."""
    shape = (model.K,) if size is None else (size, model.K)
    scale = np.sqrt(0.5 / model.eigenvalues)
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * scale


def _tensor_power(u: np.ndarray, k: int) -> np.ndarray:
    u = np.atleast_2d(u)
    out = np.ones((u.shape[0], 1), dtype=complex)
    for _ in range(k):
        out = (out[:, :, None] * u[:, None, :]).reshape(u.shape[0], -1)
    return out


def interaction_energy(u: np.ndarray, w: TwoBodyOperator) -> np.ndarray:
    """``F_NL[u] = 1/2 <u (x) u | w | u (x) u>``; vectorized over leading axes."""
    u = np.asarray(u)
    single = u.ndim == 1
    uu = _tensor_power(u, 2)
    val = 0.5 * np.real(np.einsum("si,ij,sj->s", uu.conj(), w.matrix, uu))
    return float(val[0]) if single else val


def quadratic_energy(u: np.ndarray, model: SpectralModel):
    u = np.asarray(u)
    val = np.abs(u) ** 2 @ model.eigenvalues
    return float(val) if u.ndim == 1 else val


def mean_field_energy(u: np.ndarray, model: SpectralModel, w: TwoBodyOperator):
    """``<u|h|u> + F_NL[u]``."""
    return quadratic_energy(u, model) + interaction_energy(u, w)


@dataclass(frozen=True)
class PartitionEstimate:
    value: float
    stderr: float
    samples: int

    @property
    def minus_log(self) -> float:
        return -float(np.log(self.value))

    @property
    def minus_log_stderr(self) -> float:
        return self.stderr / self.value


@dataclass(frozen=True)
class MomentEstimate:
    order: int
    matrix: np.ndarray
    stderr_matrix: np.ndarray
    samples: int
    effective_samples: float
    replicates: np.ndarray  # leave-one-batch-out estimates, shape (B, D, D)


@dataclass(frozen=True)
class WeightSums:
    """Per-batch sufficient statistics of the importance weights.

    ``moments`` is ``None`` when only the partition function is tracked.
    """

    counts: np.ndarray
    weights: np.ndarray
    squares: np.ndarray
    moments: Optional[np.ndarray] = None
    order: int = 0

    def merge(self, other: "WeightSums") -> "WeightSums":
        if (self.moments is None) != (other.moments is None) or self.order != other.order:
            raise ValueError("incompatible accumulators")
        cat = np.concatenate
        mom = None if self.moments is None else cat([self.moments, other.moments])
        return WeightSums(
            cat([self.counts, other.counts]),
            cat([self.weights, other.weights]),
            cat([self.squares, other.squares]),
            mom,
            self.order,
        )

    @property
    def samples(self) -> int:
        return int(self.counts.sum())


def _batch_sizes(n: int, batches: int) -> np.ndarray:
    b = min(batches, n)
    sizes = np.full(b, n // b)
    sizes[: n % b] += 1
    return sizes


def accumulate(
    model: SpectralModel,
    w: TwoBodyOperator,
    sizes: Iterable[int],
    seed: int,
    stream: int = 0,
    order: int = 0,
    batch_ids: Optional[Iterable[int]] = None,
) -> WeightSums:
    """Weight sums (and ``order``-th moment sums when ``order > 0``) per batch."""
    sizes = list(sizes)
    ids = list(range(len(sizes))) if batch_ids is None else list(batch_ids)
    if len(ids) != len(sizes):
        raise ValueError("one batch id per batch size is required")
    D = model.K**order
    counts = np.asarray(sizes, dtype=np.int64)
    wsum = np.zeros(len(sizes))
    w2sum = np.zeros(len(sizes))
    msum = np.zeros((len(sizes), D, D), dtype=complex) if order > 0 else None
    for b, (size, bid) in enumerate(zip(sizes, ids)):
        u = sample_free(model, rng_stream(seed, stream, bid), size)
        wt = np.exp(-interaction_energy(u, w))
        wsum[b] = wt.sum()
        w2sum[b] = (wt**2).sum()
        if order > 0:
            X = _tensor_power(u, order)
            msum[b] = (X * wt[:, None]).T @ X.conj()
    return WeightSums(counts, wsum, w2sum, msum, order)


def partition_from_sums(sums: WeightSums) -> PartitionEstimate:
    n = sums.samples
    value = sums.weights.sum() / n
    B = sums.counts.size
    if B < 2:
        return PartitionEstimate(float(value), float("nan"), n)
    means = sums.weights / sums.counts
    stderr = np.sqrt(np.sum((means - value) ** 2) / (B * (B - 1)))
    return PartitionEstimate(float(value), float(stderr), n)


def moments_from_sums(sums: WeightSums) -> MomentEstimate:
    if sums.moments is None:
        raise ValueError("accumulator carries no moment sums")
    W = sums.weights.sum()
    ess = W**2 / sums.squares.sum() if sums.squares.sum() > 0 else 0.0
    if ess < MIN_ESS:
        raise DegenerateWeights(f"effective sample size {ess:.3g} < {MIN_ESS}")
    M = sums.moments.sum(axis=0)
    value = M / W
    B = sums.counts.size
    reps = (M[None] - sums.moments) / (W - sums.weights)[:, None, None]
    centre = reps.mean(axis=0)
    stderr = np.sqrt((B - 1) / B * np.sum(np.abs(reps - centre) ** 2, axis=0))
    return MomentEstimate(sums.order, value, stderr, sums.samples, float(ess), reps)


def estimate_partition(
    model: SpectralModel,
    w: TwoBodyOperator,
    n: int,
    seed: int,
    stream: int = 0,
    batches: int = DEFAULT_BATCHES,
) -> PartitionEstimate:
    """Monte Carlo estimate of ``Z_r = E_free[exp(-F_NL)]`` with batch-means error."""
    if n < 2:
        raise ValueError("need at least two samples")
    sums = accumulate(model, w, _batch_sizes(n, batches), seed, stream)
    return partition_from_sums(sums)


def estimate_moments(
    model: SpectralModel,
    w: TwoBodyOperator,
    k: int,
    n: int,
    seed: int,
    stream: int = 0,
    batches: int = DEFAULT_BATCHES,
) -> MomentEstimate:
    """Self-normalized estimate of ``int |u^k><u^k| dmu`` with jackknife errors."""
    if k < 1:
        raise ValueError("order must be at least 1")
    if n < 2:
        raise ValueError("need at least two samples")
    sums = accumulate(model, w, _batch_sizes(n, batches), seed, stream, order=k)
    return moments_from_sums(sums)


def estimate_both(
    model: SpectralModel,
    w: TwoBodyOperator,
    k: int,
    n: int,
    seed: int,
    stream: int = 0,
    batches: int = DEFAULT_BATCHES,
):
    """Partition function and ``k``-th moment from one shared set of draws."""
    sums = accumulate(model, w, _batch_sizes(n, batches), seed, stream, order=k)
    return partition_from_sums(sums), moments_from_sums(sums)


def free_moment_exact(model: SpectralModel, k: int) -> np.ndarray:
    """``k``-th moment of the free measure, entries ``perm(C[I, J])`` with ``C = h^{-1}``."""
    if k < 0:
        raise ValueError("order must be nonnegative")
    if k == 0:
        return np.ones((1, 1))
    C = np.diag(1.0 / model.eigenvalues)
    idx = list(product(range(model.K), repeat=k))
    out = np.empty((len(idx), len(idx)))
    for a, I in enumerate(idx):
        for b, J in enumerate(idx):
            out[a, b] = np.real(wick_moment(C, I, J))
    return out
