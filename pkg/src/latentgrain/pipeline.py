"""End-to-end resynthesis: encode target, match every grain, decode.

The target is tiled into consecutive non-overlapping grains (stride fixed to
the grain size), each grain is matched independently against the codebook,
and the selected rows are concatenated in target order. Because no selection
depends on any other, the same operation runs batch or streaming with
bit-identical results; streaming latency is exactly one grain of frames.
Boundary smoothing is left entirely to the decoding codec.

A target whose frame count is not a multiple of g has its tail handled by
policy: "pad" zero-fills the last grain for matching and keeps only the
leading frames of the selection (output length == target length), "truncate"
drops the tail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codebook import Grain, GrainCodebook, GrainParams
from .codec import Codec, LatentSequence
from .errors import CodecMismatch, ConfigMismatch, DimensionMismatch, TargetTooShort
from .matcher import GrainSelection, MatchParams, sample_grain
from .tensor_io import AudioBuffer

TAIL_POLICIES = ("pad", "truncate")


@dataclass(frozen=True)
class ResynthConfig:
    """Grain geometry (must equal the codebook's), matching params, tail policy."""

    grain: GrainParams
    match: MatchParams = MatchParams()
    tail_policy: str = "pad"

    def __post_init__(self) -> None:
        if self.tail_policy not in TAIL_POLICIES:
            raise ValueError(
                f"tail_policy must be one of {TAIL_POLICIES}, got {self.tail_policy!r}"
            )


def _check_compatible(cb: GrainCodebook, cfg: ResynthConfig, latent_dim: int, codec_id: str) -> None:
    if codec_id != cb.codec_id:
        raise CodecMismatch(f"target tagged {codec_id!r}, codebook is {cb.codec_id!r}")
    if latent_dim != cb.latent_dim:
        raise DimensionMismatch(
            f"target has D = {latent_dim}, codebook has D = {cb.latent_dim}"
        )
    if cfg.grain != cb.params:
        raise ConfigMismatch(
            f"config grain params {cfg.grain} differ from codebook's {cb.params}"
        )


def _match_one(
    flat: np.ndarray, cb: GrainCodebook, match: MatchParams, grain_index: int
) -> GrainSelection:
    return sample_grain(Grain.from_vector(flat), cb, match, grain_index)


def resynthesize_latent(
    target: LatentSequence, cb: GrainCodebook, cfg: ResynthConfig
) -> tuple[LatentSequence, list[GrainSelection]]:
    """Replace every target grain by its matched codebook grain.

    Returns the hybrid latent sequence and the per-grain selection trace.
    Output frame count: T under "pad", g*floor(T/g) under "truncate".
    """
    _check_compatible(cb, cfg, target.latent_dim, target.codec_id)
    g = cb.params.grain_size
    t = target.num_frames
    full, tail = divmod(t, g)
    if full == 0 and cfg.tail_policy == "truncate":
        raise TargetTooShort(f"target has {t} frames, needs at least g = {g}")

    out_rows: list[np.ndarray] = []
    selections: list[GrainSelection] = []
    for i in range(full):
        flat = target.frames[i * g : (i + 1) * g].reshape(-1)
        sel = _match_one(flat, cb, cfg.match, i)
        selections.append(sel)
        out_rows.append(cb.grain_frames(sel.codebook_index))
    if tail and cfg.tail_policy == "pad":
        padded = np.zeros((g, target.latent_dim), dtype=np.float32)
        padded[:tail] = target.frames[full * g :]
        sel = _match_one(padded.reshape(-1), cb, cfg.match, full)
        selections.append(sel)
        out_rows.append(cb.grain_frames(sel.codebook_index)[:tail])

    frames = np.concatenate(out_rows, axis=0)
    return (
        LatentSequence(frames=frames, frame_rate=cb.frame_rate, codec_id=cb.codec_id),
        selections,
    )


@dataclass
class GrainStream:
    """Incremental resynthesis with one-grain latency.

    Frames are buffered until a full grain is available, then matched and
    emitted during that same push. Fewer than g frames are ever pending
    between calls. flush() applies the tail policy to any remainder.
    Emissions across pushes + flush are bit-identical to the batch path for
    the same concatenated input and seed.
    """

    cb: GrainCodebook
    cfg: ResynthConfig
    _pending: np.ndarray = field(init=False)
    _next_grain: int = field(default=0, init=False)
    frames_pushed: int = field(default=0, init=False)
    selections: list[GrainSelection] = field(default_factory=list, init=False)

    def __post_init__(self) -> None:
        if self.cfg.grain != self.cb.params:
            raise ConfigMismatch(
                f"config grain params {self.cfg.grain} differ from codebook's {self.cb.params}"
            )
        self._pending = np.empty((0, self.cb.latent_dim), dtype=np.float32)

    def push(self, frames: np.ndarray) -> np.ndarray:
        """Feed rows of latent frames; returns all frames emitted by this push."""
        frames = np.asarray(frames, dtype=np.float32)
        if frames.ndim != 2 or frames.shape[1] != self.cb.latent_dim:
            raise DimensionMismatch(
                f"pushed frames have shape {frames.shape}, need (*, {self.cb.latent_dim})"
            )
        self.frames_pushed += len(frames)
        self._pending = np.concatenate([self._pending, frames], axis=0)
        g = self.cb.params.grain_size
        emitted = []
        while len(self._pending) >= g:
            flat = self._pending[:g].reshape(-1)
            sel = _match_one(flat, self.cb, self.cfg.match, self._next_grain)
            self.selections.append(sel)
            emitted.append(self.cb.grain_frames(sel.codebook_index))
            self._next_grain += 1
            self._pending = self._pending[g:]
        if not emitted:
            return np.empty((0, self.cb.latent_dim), dtype=np.float32)
        return np.concatenate(emitted, axis=0)

    def flush(self) -> np.ndarray:
        """Resolve any pending tail per the tail policy; empties the buffer."""
        g = self.cb.params.grain_size
        tail = len(self._pending)
        out = np.empty((0, self.cb.latent_dim), dtype=np.float32)
        if tail and self.cfg.tail_policy == "pad":
            padded = np.zeros((g, self.cb.latent_dim), dtype=np.float32)
            padded[:tail] = self._pending
            sel = _match_one(padded.reshape(-1), self.cb, self.cfg.match, self._next_grain)
            self.selections.append(sel)
            self._next_grain += 1
            out = self.cb.grain_frames(sel.codebook_index)[:tail]
        self._pending = np.empty((0, self.cb.latent_dim), dtype=np.float32)
        return out


def resynthesize_audio(
    target: AudioBuffer, cb: GrainCodebook, cfg: ResynthConfig, codec: Codec
) -> AudioBuffer:
    """Full chain: encode target, match grains, decode the hybrid sequence."""
    if codec.codec_id != cb.codec_id:
        raise CodecMismatch(
            f"codec is {codec.codec_id!r}, codebook was built with {cb.codec_id!r}"
        )
    latents, _ = resynthesize_latent(codec.encode(target), cb, cfg)
    return codec.decode(latents)


def selections_trace(
    selections: list[GrainSelection], cb: GrainCodebook
) -> list[dict]:
    """JSON-ready trace: one record per target grain, with provenance."""
    out = []
    for i, sel in enumerate(selections):
        prov = cb.provenance[sel.codebook_index]
        out.append(
            {
                "grain_index": i,
                "codebook_index": sel.codebook_index,
                "distance": sel.distance,
                "probability": sel.probability,
                "source_id": prov.source_id,
                "start_frame": prov.start_frame,
            }
        )
    return out
