"""Deterministic invertible audio codec: windowed DCT analysis, overlap-add synthesis.

Stands in for a neural codec so the encode -> match -> decode chain is testable
end to end with no model. Analysis multiplies each frame by a periodic Hann
window and keeps the first D orthonormal DCT-II coefficients; synthesis windows
again and divides by the accumulated squared window, which makes the round
trip exact (up to float32 storage) whenever D == frame_size. Truncating to
D < frame_size mimics a real codec's lossy bottleneck, and the overlapped
windowed synthesis smooths grain boundaries the same way a neural decoder's
upsampling does.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
import scipy.fft

from .errors import (
    CodecMismatch,
    DimensionMismatch,
    EmptyBuffer,
    NonFiniteData,
    SampleRateMismatch,
)
from .tensor_io import AudioBuffer

_WSUM_FLOOR = 1e-8  # below this the squared-window sum is treated as silence


@dataclass(frozen=True)
class CodecConfig:
    """Analysis/synthesis geometry: frame size, hop, kept dims, sample rate."""

    frame_size: int = 512
    hop: int = 256
    kept_dims: int = 64
    sample_rate: int = 16000

    def __post_init__(self) -> None:
        f, h, d = self.frame_size, self.hop, self.kept_dims
        if f < 2 or (f & (f - 1)) != 0:
            raise ValueError(f"frame_size must be a power of two >= 2, got {f}")
        if h < 1 or f % h != 0 or h >= f:
            # hop must divide the frame and overlap at least 2x so the
            # periodic Hann window satisfies constant-overlap-add
            raise ValueError(f"hop must divide frame_size with frame_size/hop >= 2, got {h}")
        if not 1 <= d <= f:
            raise ValueError(f"kept_dims must be in [1, frame_size], got {d}")
        if self.sample_rate < 1:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def codec_id(self) -> str:
        return f"ref-dct/F{self.frame_size}/H{self.hop}/D{self.kept_dims}/sr{self.sample_rate}"

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop


@dataclass
class LatentSequence:
    """T x D matrix of latent frames plus frame rate and codec identity."""

    frames: np.ndarray
    frame_rate: float
    codec_id: str

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1 or self.frames.shape[1] < 1:
            raise ValueError(f"frames must be a non-empty 2-D matrix, got {self.frames.shape}")
        if not np.all(np.isfinite(self.frames)):
            raise NonFiniteData("latent frames contain NaN or Inf")
        if not self.frame_rate > 0:
            raise ValueError(f"frame_rate must be positive, got {self.frame_rate}")
        if not self.codec_id:
            raise ValueError("codec_id must be non-empty")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.frames.shape[1]


@runtime_checkable
class Codec(Protocol):
    """Anything that maps AudioBuffer <-> LatentSequence under a stable tag."""

    @property
    def codec_id(self) -> str: ...

    def encode(self, audio: AudioBuffer) -> LatentSequence: ...

    def decode(self, latents: LatentSequence) -> AudioBuffer: ...


def _hann_periodic(size: int) -> np.ndarray:
    n = np.arange(size, dtype=np.float64)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / size)


def num_frames_for(num_samples: int, cfg: CodecConfig) -> int:
    """Frame count law: T = ceil(max(len - F, 0) / H) + 1."""
    over = max(num_samples - cfg.frame_size, 0)
    return int(-(-over // cfg.hop)) + 1


class DctCodec:
    """The reference codec. Pure function of (input, config); stateless."""

    def __init__(self, config: CodecConfig | None = None):
        self.config = config or CodecConfig()
        self._window = _hann_periodic(self.config.frame_size)

    @property
    def codec_id(self) -> str:
        return self.config.codec_id

    @classmethod
    def from_codec_id(cls, codec_id: str) -> "DctCodec":
        """Rebuild the codec from its tag, e.g. 'ref-dct/F512/H256/D64/sr16000'."""
        parts = codec_id.split("/")
        if len(parts) != 5 or parts[0] != "ref-dct":
            raise CodecMismatch(f"not a reference-codec tag: {codec_id!r}")
        try:
            f = int(parts[1].removeprefix("F"))
            h = int(parts[2].removeprefix("H"))
            d = int(parts[3].removeprefix("D"))
            sr = int(parts[4].removeprefix("sr"))
        except ValueError as exc:
            raise CodecMismatch(f"unparseable codec tag: {codec_id!r}") from exc
        return cls(CodecConfig(frame_size=f, hop=h, kept_dims=d, sample_rate=sr))

    def encode(self, audio: AudioBuffer) -> LatentSequence:
        cfg = self.config
        if len(audio.samples) == 0:
            raise EmptyBuffer("cannot encode an empty buffer")
        if audio.sample_rate != cfg.sample_rate:
            raise SampleRateMismatch(
                f"audio is {audio.sample_rate} Hz, codec expects {cfg.sample_rate} Hz"
            )
        f, h = cfg.frame_size, cfg.hop
        t = num_frames_for(len(audio.samples), cfg)
        padded_len = (t - 1) * h + f
        x = np.zeros(padded_len, dtype=np.float64)
        x[: len(audio.samples)] = audio.samples
        frames = np.lib.stride_tricks.sliding_window_view(x, f)[::h] * self._window
        coeffs = scipy.fft.dct(frames, type=2, norm="ortho", axis=1)
        return LatentSequence(
            frames=coeffs[:, : cfg.kept_dims].astype(np.float32),
            frame_rate=cfg.frame_rate,
            codec_id=cfg.codec_id,
        )

    def decode(self, latents: LatentSequence) -> AudioBuffer:
        cfg = self.config
        if latents.codec_id != cfg.codec_id:
            raise CodecMismatch(
                f"latents tagged {latents.codec_id!r}, codec is {cfg.codec_id!r}"
            )
        if latents.latent_dim != cfg.kept_dims:
            raise DimensionMismatch(
                f"latents have {latents.latent_dim} dims, codec keeps {cfg.kept_dims}"
            )
        f, h = cfg.frame_size, cfg.hop
        t = latents.num_frames
        coeffs = np.zeros((t, f), dtype=np.float64)
        coeffs[:, : cfg.kept_dims] = latents.frames
        frames = scipy.fft.idct(coeffs, type=2, norm="ortho", axis=1) * self._window

        out_len = (t - 1) * h + f
        out = np.zeros(out_len, dtype=np.float64)
        wsum = np.zeros(out_len, dtype=np.float64)
        wsq = self._window * self._window
        for i in range(t):
            start = i * h
            out[start : start + f] += frames[i]
            wsum[start : start + f] += wsq
        covered = wsum >= _WSUM_FLOOR
        out[covered] /= wsum[covered]
        out[~covered] = 0.0
        return AudioBuffer(out.astype(np.float32), cfg.sample_rate)
