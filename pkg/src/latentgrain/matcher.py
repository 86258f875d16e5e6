"""Grain matching: cosine distance, temperature softmax, seeded sampling.

For a target grain A and codebook grains B_i the selection distribution is

    P(select B_i) = exp(-d(A, B_i) / tau) / sum_j exp(-d(A, B_j) / tau)

with d the cosine distance 1 - <a,b>/(|a||b|). tau -> 0 recovers the greedy
nearest grain (implemented exactly at tau == 0); larger tau trades timbral
fidelity for diversity. Draws use a counter-based Philox stream keyed by
(seed, grain_index), so every grain's outcome is independent of evaluation
order: batch, streaming, and parallel schedules all make identical choices.

All distance and probability arithmetic runs in float64 regardless of the
stored grain dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Grain, GrainCodebook
from .errors import DimensionMismatch, LengthMismatch, NonPositiveTemperature

ZERO_NORM_EPS = 1e-12  # below this a vector is "silent": distance defined as 1.0


@dataclass(frozen=True)
class MatchParams:
    """Creative controls: temperature, RNG seed, optional top-k restriction."""

    temperature: float = 0.0
    seed: int = 0
    top_k: int | None = None

    def __post_init__(self) -> None:
        if not self.temperature >= 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError(f"top_k must be positive when set, got {self.top_k}")


@dataclass(frozen=True)
class GrainSelection:
    """One matching decision: chosen row, its distance, realized probability."""

    codebook_index: int
    distance: float
    probability: float


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - <a,b>/(|a||b|), in [0, 2]; 1.0 if either vector is near zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 1:
        raise LengthMismatch(f"need equal-length 1-D vectors, got {a.shape} and {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        return 1.0
    return float(np.clip(1.0 - (a @ b) / (na * nb), 0.0, 2.0))


def _target_vector(t: Grain, cb: GrainCodebook) -> np.ndarray:
    v = np.asarray(t.vector, dtype=np.float64)
    expected = cb.params.grain_size * cb.latent_dim
    if v.ndim != 1 or v.size != expected:
        raise DimensionMismatch(
            f"target grain has {v.size} values, codebook needs g*D = {expected}"
        )
    return v


def distances_to_codebook(t: Grain, cb: GrainCodebook) -> np.ndarray:
    """Cosine distance from one target grain to every codebook row."""
    v = _target_vector(t, cb)
    nv = np.linalg.norm(v)
    if nv < ZERO_NORM_EPS:
        return np.ones(cb.num_grains, dtype=np.float64)
    silent = cb.norms < ZERO_NORM_EPS
    d = 1.0 - (cb.grains64 @ v) / np.where(silent, 1.0, cb.norms * nv)
    d[silent] = 1.0
    return np.clip(d, 0.0, 2.0)


def softmax_over_distances(d: np.ndarray, temperature: float) -> np.ndarray:
    """Normalized exp(-d/tau), max-shifted for numerical stability."""
    if not temperature > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temperature}")
    x = -np.asarray(d, dtype=np.float64) / temperature
    x -= x.max()
    e = np.exp(x)
    return e / e.sum()


def match_distribution(t: Grain, cb: GrainCodebook, temperature: float) -> np.ndarray:
    """Selection probabilities over all M codebook grains; sums to 1."""
    return softmax_over_distances(distances_to_codebook(t, cb), temperature)


def match_greedy(t: Grain, cb: GrainCodebook) -> GrainSelection:
    """Minimum-distance grain, ties broken by lowest index."""
    d = distances_to_codebook(t, cb)
    idx = int(np.argmin(d))  # argmin returns the first (lowest-index) minimum
    return GrainSelection(codebook_index=idx, distance=float(d[idx]), probability=1.0)


def _substream(seed: int, grain_index: int) -> np.random.Generator:
    # Counter-style keying: each (seed, grain_index) pair owns an
    # independent Philox stream, so draws never depend on call order.
    return np.random.Generator(np.random.Philox(key=[seed, grain_index]))


def sample_grain(
    t: Grain, cb: GrainCodebook, params: MatchParams, grain_index: int
) -> GrainSelection:
    """Select a codebook grain for one target grain.

    tau == 0 is exactly match_greedy. Otherwise one inverse-CDF draw from the
    softmax distribution, restricted and renormalized over the top_k nearest
    rows when configured (ties at the k-th boundary keep the lowest index).
    """
    if params.temperature == 0:
        return match_greedy(t, cb)
    d = distances_to_codebook(t, cb)

    if params.top_k is not None:
        if params.top_k > cb.num_grains:
            raise ValueError(
                f"top_k = {params.top_k} exceeds codebook size M = {cb.num_grains}"
            )
        # stable sort keeps equal distances in index order
        candidates = np.argsort(d, kind="stable")[: params.top_k]
        p = softmax_over_distances(d[candidates], params.temperature)
    else:
        candidates = None
        p = softmax_over_distances(d, params.temperature)

    u = _substream(params.seed, grain_index).random()
    cum = np.cumsum(p)
    pick = int(np.searchsorted(cum, u, side="right"))
    pick = min(pick, len(p) - 1)
    while p[pick] == 0.0 and pick > 0:  # float-edge guard: never land on mass 0
        pick -= 1

    idx = int(candidates[pick]) if candidates is not None else pick
    return GrainSelection(
        codebook_index=idx, distance=float(d[idx]), probability=float(p[pick])
    )
