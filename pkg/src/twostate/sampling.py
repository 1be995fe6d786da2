"""Backward-state distributions and the seeded Monte Carlo estimator.

Randomness is counter-based: sample ``i`` of a stream ``(seed, stream_index)``
is a pure function of ``(seed, stream_index, i)``. Each sample owns a fixed
block of Philox counter ticks and every variate is produced with a fixed
word consumption (Box-Muller, no rejection), so estimates are bitwise
reproducible no matter how the index range is chunked or how many workers
run the chunks. Reduction across chunks is exact integer addition.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.random import Philox

from .assignment import MultipleOutcomesError
from .qcore import OrthonormalBasis, StateVector

__all__ = [
    "RngStream",
    "UniformOverlap",
    "HaarPure",
    "Fixed",
    "BornEstimate",
    "BasisMcResult",
    "haar_state",
    "haar_states",
    "haar_unitary",
    "backward_uniform_overlap",
    "uniform_overlap_states",
    "born_mc",
    "basis_mc",
    "born_oracle",
]

_MASK64 = (1 << 64) - 1
_U53 = 2.0**-53
DEFAULT_CHUNK_SIZE = 16384


@dataclass(frozen=True)
class RngStream:
    """A deterministic stream of per-sample randomness blocks."""

    seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if not 0 <= self.stream_index <= _MASK64:
            raise ValueError(f"stream index must be a 64-bit unsigned integer, got {self.stream_index!r}")

    def key(self) -> int:
        return self.seed | (self.stream_index << 64)


@dataclass(frozen=True, eq=False)
class UniformOverlap:
    """Backward states whose squared overlap with the target is U(0,1)."""

    target: StateVector


@dataclass(frozen=True)
class HaarPure:
    """Backward states drawn from the unitarily invariant pure-state measure."""


@dataclass(frozen=True, eq=False)
class Fixed:
    """A single fixed backward state; the estimator becomes deterministic."""

    state: StateVector


BackwardDistribution = UniformOverlap | HaarPure | Fixed


@dataclass(frozen=True)
class BornEstimate:
    """Monte Carlo frequency with its binomial standard error."""

    frequency: float
    std_err: float
    samples: int
    no_assign_rate: float | None = None


@dataclass(frozen=True)
class BasisMcResult:
    """Per-outcome estimates plus the fraction of samples assigning nothing."""

    estimates: tuple
    no_assign_rate: float
    samples: int

    def frequencies(self) -> np.ndarray:
        return np.array([e.frequency for e in self.estimates])

    def conditional_frequencies(self) -> np.ndarray:
        """Frequencies renormalized over the samples that assigned an outcome."""
        assigned = 1.0 - self.no_assign_rate
        if assigned <= 0.0:
            return np.full(len(self.estimates), np.nan)
        return self.frequencies() / assigned


# --- raw counter-based draws ----------------------------------------------


def _raw_words(stream: RngStream, first_sample: int, count: int, words_per_sample: int) -> np.ndarray:
    """uint64 words, one row per sample; row i depends only on (stream, first_sample + i)."""
    ticks = (words_per_sample + 3) // 4
    bit_gen = Philox(key=stream.key(), counter=(first_sample * ticks))
    raw = bit_gen.random_raw(count * ticks * 4)
    return raw.reshape(count, ticks * 4)[:, :words_per_sample]


def _u01(words: np.ndarray) -> np.ndarray:
    """Uniform [0, 1) from the top 53 bits of each word."""
    return (words >> np.uint64(11)) * _U53


def _complex_normals(words: np.ndarray) -> np.ndarray:
    """One standard complex normal per pair of words (Box-Muller, fixed cost)."""
    u1 = ((words[..., 0::2] >> np.uint64(11)) + np.uint64(1)) * _U53  # (0, 1]
    u2 = _u01(words[..., 1::2])
    radius = np.sqrt(-2.0 * np.log(u1))
    return radius * np.exp(2j * np.pi * u2)


def _haar_block(dim: int, stream: RngStream, first_sample: int, count: int) -> np.ndarray:
    gauss = _complex_normals(_raw_words(stream, first_sample, count, 2 * dim))
    norms = np.linalg.norm(gauss, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return gauss / norms


def _uniform_overlap_block(
    target: np.ndarray, stream: RngStream, first_sample: int, count: int
) -> np.ndarray:
    dim = target.shape[0]
    words = _raw_words(stream, first_sample, count, 2 * dim + 2)
    gauss = _complex_normals(words[:, : 2 * dim])
    overlap_sq = _u01(words[:, 2 * dim])
    phase = np.exp(2j * np.pi * _u01(words[:, 2 * dim + 1]))

    # Haar direction in the orthogonal complement of the target.
    coeff = gauss @ target.conj()
    perp = gauss - coeff[:, None] * target[None, :]
    norms = np.linalg.norm(perp, axis=1)
    norms[norms == 0.0] = 1.0
    perp /= norms[:, None]

    amp_target = np.sqrt(overlap_sq)
    amp_perp = np.sqrt(1.0 - overlap_sq) * phase
    return amp_target[:, None] * target[None, :] + amp_perp[:, None] * perp


def _backward_block(dist: BackwardDistribution, dim: int, stream: RngStream, first_sample: int, count: int):
    if isinstance(dist, HaarPure):
        return _haar_block(dim, stream, first_sample, count)
    if isinstance(dist, UniformOverlap):
        if dist.target.dim != dim:
            raise ValueError(f"dimension mismatch: target {dist.target.dim} vs {dim}")
        return _uniform_overlap_block(dist.target.entries, stream, first_sample, count)
    if isinstance(dist, Fixed):
        if dist.state.dim != dim:
            raise ValueError(f"dimension mismatch: fixed state {dist.state.dim} vs {dim}")
        return None  # deterministic; handled by callers without consuming the stream
    raise TypeError(f"unknown backward distribution: {type(dist).__name__}")


# --- public single-draw and batch samplers --------------------------------


def haar_state(dim: int, rng: RngStream, index: int = 0) -> StateVector:
    """Draw sample ``index`` of the Haar pure-state stream."""
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    return StateVector(_haar_block(dim, rng, index, 1)[0])


def haar_states(dim: int, rng: RngStream, start: int, count: int) -> np.ndarray:
    """Rows are Haar states for sample indices start..start+count-1."""
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    return _haar_block(dim, rng, start, count)


def backward_uniform_overlap(a: StateVector, rng: RngStream, index: int = 0) -> StateVector:
    """Draw a state whose squared overlap with ``a`` is uniform on [0, 1)."""
    return StateVector(_uniform_overlap_block(a.entries, rng, index, 1)[0])


def uniform_overlap_states(a: StateVector, rng: RngStream, start: int, count: int) -> np.ndarray:
    return _uniform_overlap_block(a.entries, rng, start, count)


def haar_unitary(dim: int, rng: RngStream, index: int = 0) -> np.ndarray:
    """Haar-distributed unitary; sample ``index`` of the stream."""
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    gauss = _complex_normals(_raw_words(rng, index, 1, 2 * dim * dim))[0].reshape(dim, dim)
    q, r = np.linalg.qr(gauss)
    diag = np.diagonal(r).copy()
    diag[diag == 0.0] = 1.0
    return q * (diag / np.abs(diag))


# --- Monte Carlo estimators ------------------------------------------------


def _iter_chunks(n_samples: int, chunk_size: int):
    for lo in range(0, n_samples, chunk_size):
        yield lo, min(lo + chunk_size, n_samples)


def _map_reduce(fn, n_samples: int, workers: int, chunk_size: int, zero):
    """Sum ``fn(lo, hi)`` over fixed chunk boundaries; integer-exact reduction."""
    total = zero
    if workers <= 1:
        for lo, hi in _iter_chunks(n_samples, chunk_size):
            total = total + fn(lo, hi)
        return total
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(lambda bounds: fn(*bounds), _iter_chunks(n_samples, chunk_size)):
            total = total + part
    return total


def _binomial_estimate(count: int, n_samples: int, no_assign_rate: float | None = None) -> BornEstimate:
    freq = count / n_samples
    std_err = math.sqrt(freq * (1.0 - freq) / n_samples)
    return BornEstimate(freq, std_err, n_samples, no_assign_rate)


def born_mc(
    forward: StateVector,
    a: StateVector,
    dist: BackwardDistribution,
    n_samples: int,
    seed: int,
    tie_tol: float = 0.0,
    *,
    stream_index: int = 0,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> BornEstimate:
    """Frequency with which sampled backward states make the rule fire for ``a``."""
    if forward.dim != a.dim:
        raise ValueError(f"dimension mismatch: {forward.dim} vs {a.dim}")
    if n_samples < 1:
        raise ValueError(f"sample count must be >= 1, got {n_samples}")
    if tie_tol < 0.0:
        raise ValueError(f"tie tolerance must be >= 0, got {tie_tol!r}")

    dim = forward.dim
    p = abs(complex(np.vdot(forward.entries, a.entries))) ** 2
    threshold = 1.0 + tie_tol

    if isinstance(dist, Fixed):
        if dist.state.dim != dim:
            raise ValueError(f"dimension mismatch: fixed state {dist.state.dim} vs {dim}")
        q = abs(complex(np.vdot(dist.state.entries, a.entries))) ** 2
        count = n_samples if p + q > threshold else 0
        return _binomial_estimate(count, n_samples)

    stream = RngStream(seed, stream_index)
    target = a.entries

    def chunk_count(lo: int, hi: int) -> int:
        states = _backward_block(dist, dim, stream, lo, hi - lo)
        q = np.abs(states.conj() @ target) ** 2
        return int(np.count_nonzero(p + q > threshold))

    count = _map_reduce(chunk_count, n_samples, workers, chunk_size, 0)
    return _binomial_estimate(count, n_samples)


def basis_mc(
    forward: StateVector,
    basis: OrthonormalBasis,
    dist: BackwardDistribution,
    n_samples: int,
    seed: int,
    tie_tol: float = 0.0,
    *,
    stream_index: int = 0,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> BasisMcResult:
    """Per-outcome rule frequencies over a full basis, plus the no-assignment rate.

    Raises MultipleOutcomesError if any sample satisfies the rule for two
    outcomes; for an orthonormal basis this must never happen.
    """
    if forward.dim != basis.dim:
        raise ValueError(f"dimension mismatch: {forward.dim} vs {basis.dim}")
    if n_samples < 1:
        raise ValueError(f"sample count must be >= 1, got {n_samples}")
    if tie_tol < 0.0:
        raise ValueError(f"tie tolerance must be >= 0, got {tie_tol!r}")

    dim = forward.dim
    bmat = basis.as_matrix()
    p_vec = np.abs(bmat.conj() @ forward.entries) ** 2
    threshold = 1.0 + tie_tol

    def classify(states: np.ndarray) -> np.ndarray:
        """Counts per outcome plus a trailing no-assignment count."""
        q = np.abs(states.conj() @ bmat.T) ** 2
        fired = p_vec[None, :] + q > threshold
        per_sample = fired.sum(axis=1)
        if np.any(per_sample > 1):
            bad = int(np.flatnonzero(per_sample > 1)[0])
            raise MultipleOutcomesError(
                f"sample fired outcomes {np.flatnonzero(fired[bad]).tolist()}; basis is not orthonormal"
            )
        counts = fired.sum(axis=0, dtype=np.int64)
        return np.append(counts, np.int64(np.count_nonzero(per_sample == 0)))

    if isinstance(dist, Fixed):
        if dist.state.dim != dim:
            raise ValueError(f"dimension mismatch: fixed state {dist.state.dim} vs {dim}")
        counts = classify(dist.state.entries[None, :]) * n_samples
    else:
        stream = RngStream(seed, stream_index)

        def chunk_counts(lo: int, hi: int) -> np.ndarray:
            return classify(_backward_block(dist, dim, stream, lo, hi - lo))

        counts = _map_reduce(chunk_counts, n_samples, workers, chunk_size, np.zeros(dim + 1, dtype=np.int64))

    no_assign_rate = int(counts[-1]) / n_samples
    estimates = tuple(
        _binomial_estimate(int(c), n_samples, no_assign_rate) for c in counts[:-1]
    )
    return BasisMcResult(estimates, no_assign_rate, n_samples)


def born_oracle(dist: BackwardDistribution, p: float, d: int) -> float:
    """Analytic firing probability for a forward overlap of ``p``.

    Uniform-overlap sampling reproduces ``p`` itself; Haar sampling gives the
    tail of the Beta(1, d-1) overlap marginal, ``p**(d-1)``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if isinstance(dist, UniformOverlap):
        return p
    if isinstance(dist, HaarPure):
        return p ** (d - 1)
    if isinstance(dist, Fixed):
        raise ValueError("no analytic oracle for a fixed backward state")
    raise TypeError(f"unknown backward distribution: {type(dist).__name__}")
