"""Granular codebook: segment latent sequences into grains and index them.

A grain is g consecutive latent frames flattened row-major into one vector of
length g*D; matching happens on that flattened vector. Grains are extracted at
stride s (start frames 0, s, 2s, ... while start + g <= T), so stride controls
overlap and coverage. Each grain keeps provenance (source id, start frame,
augmentation tag) so any output can be audited back to its source segment.
Duplicate grains are kept deliberately: under stochastic sampling they raise
the selection probability of timbres that are common in the corpus.

On-disk format (.lgcb, little-endian throughout):

    magic "LGCB" | u32 version=1 | u32 header_len | UTF-8 JSON header
    | M*g*D float32 grain payload | u32 CRC32(payload)

The JSON header carries grain_size, stride, latent_dim, num_grains,
frame_rate, codec_id, and the provenance array as
[source_id, start_frame, augmentation_tag] triples.
"""

from __future__ import annotations

import json
import logging
import os
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .codec import LatentSequence
from .errors import (
    BadMagic,
    ChecksumMismatch,
    EmptyCorpus,
    EmptyGainList,
    IncompatibleCodebooks,
    InconsistentLatents,
    MalformedHeader,
    NoGrains,
    NonFiniteData,
    NonPositiveGain,
    SequenceTooShort,
    TruncatedData,
    VersionUnsupported,
)
from .tensor_io import AudioBuffer, _atomic_write

logger = logging.getLogger(__name__)

LGCB_MAGIC = b"LGCB"
LGCB_VERSION = 1


@dataclass(frozen=True)
class GrainParams:
    """Grain geometry: size in frames (typically 1-5) and extraction stride."""

    grain_size: int
    stride: int

    def __post_init__(self) -> None:
        if self.grain_size < 1:
            raise ValueError(f"grain_size must be >= 1, got {self.grain_size}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")


@dataclass
class Grain:
    """A flattened run of g consecutive latent frames with its L2 norm."""

    vector: np.ndarray
    norm: float

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "Grain":
        v = np.asarray(vector)
        if v.ndim != 1:
            raise ValueError(f"grain vector must be 1-D, got shape {v.shape}")
        return cls(vector=v, norm=float(np.linalg.norm(v.astype(np.float64))))


@dataclass(frozen=True)
class Provenance:
    """Where a grain came from: source id, start frame, augmentation tag."""

    source_id: str
    start_frame: int
    augmentation_tag: str = ""


@dataclass(eq=False)
class GrainCodebook:
    """M flattened grains with provenance, norms, and codec identity."""

    grains: np.ndarray  # M x (g*D), float32
    norms: np.ndarray  # M, float64
    provenance: list[Provenance]
    params: GrainParams
    latent_dim: int
    frame_rate: float
    codec_id: str
    _grains64: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.grains = np.ascontiguousarray(self.grains, dtype=np.float32)
        if self.grains.ndim != 2 or self.grains.shape[0] < 1:
            raise ValueError(f"grain matrix must be non-empty 2-D, got {self.grains.shape}")
        expected = self.params.grain_size * self.latent_dim
        if self.grains.shape[1] != expected:
            raise ValueError(
                f"grain rows have {self.grains.shape[1]} values, expected g*D = {expected}"
            )
        if len(self.provenance) != self.num_grains:
            raise ValueError("provenance must have one entry per grain")
        if not np.all(np.isfinite(self.grains)):
            raise NonFiniteData("codebook grains contain NaN or Inf")
        self.norms = np.asarray(self.norms, dtype=np.float64)

    @property
    def num_grains(self) -> int:
        return self.grains.shape[0]

    @property
    def grains64(self) -> np.ndarray:
        """float64 view of the grain matrix, cached for precise matching."""
        if self._grains64 is None:
            self._grains64 = self.grains.astype(np.float64)
        return self._grains64

    def grain_frames(self, index: int) -> np.ndarray:
        """Codebook row `index` reshaped back to g x D frames."""
        return self.grains[index].reshape(self.params.grain_size, self.latent_dim)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GrainCodebook):
            return NotImplemented
        return (
            np.array_equal(self.grains, other.grains)
            and self.provenance == other.provenance
            and self.params == other.params
            and self.latent_dim == other.latent_dim
            and self.frame_rate == other.frame_rate
            and self.codec_id == other.codec_id
        )


def extract_grains(
    z: LatentSequence,
    params: GrainParams,
    source_id: str = "",
    augmentation_tag: str = "",
) -> list[tuple[Grain, Provenance]]:
    """Cut a latent sequence into grains at starts 0, s, 2s, ...

    Yields floor((T - g)/s) + 1 grains; raises SequenceTooShort when T < g.
    """
    g, s = params.grain_size, params.stride
    t = z.num_frames
    if t < g:
        raise SequenceTooShort(f"sequence has {t} frames, need at least g = {g}")
    out = []
    for start in range(0, t - g + 1, s):
        vector = z.frames[start : start + g].reshape(-1).copy()
        out.append(
            (
                Grain.from_vector(vector),
                Provenance(source_id=source_id, start_frame=start, augmentation_tag=augmentation_tag),
            )
        )
    return out


def build_codebook(
    corpus: list[tuple],
    params: GrainParams,
) -> GrainCodebook:
    """Extract and index grains from every corpus sequence, in input order.

    Corpus entries are (source_id, LatentSequence) pairs, optionally extended
    with an augmentation tag: (source_id, LatentSequence, tag). All sequences
    must agree on latent dim, frame rate, and codec_id. Sequences shorter
    than one grain are skipped with a logged warning so heterogeneous corpora
    build cleanly.
    """
    if not corpus:
        raise EmptyCorpus("corpus has no sources")
    entries = [(e[0], e[1], e[2] if len(e) > 2 else "") for e in corpus]
    first = entries[0][1]
    dim, rate, codec_id = first.latent_dim, first.frame_rate, first.codec_id
    for sid, z, _ in entries:
        if (z.latent_dim, z.frame_rate, z.codec_id) != (dim, rate, codec_id):
            raise InconsistentLatents(
                f"source {sid!r} has (D={z.latent_dim}, rate={z.frame_rate}, "
                f"codec={z.codec_id!r}); expected (D={dim}, rate={rate}, codec={codec_id!r})"
            )

    vectors: list[np.ndarray] = []
    provenance: list[Provenance] = []
    skipped = 0
    for sid, z, tag in entries:
        if z.num_frames < params.grain_size:
            skipped += 1
            logger.warning(
                "skipping source %r: %d frames < grain size %d",
                sid, z.num_frames, params.grain_size,
            )
            continue
        for grain, prov in extract_grains(z, params, source_id=sid, augmentation_tag=tag):
            vectors.append(grain.vector)
            provenance.append(prov)
    if not vectors:
        raise NoGrains(f"all {skipped} sources shorter than one grain")

    matrix = np.stack(vectors).astype(np.float32)
    return GrainCodebook(
        grains=matrix,
        norms=np.linalg.norm(matrix.astype(np.float64), axis=1),
        provenance=provenance,
        params=params,
        latent_dim=dim,
        frame_rate=rate,
        codec_id=codec_id,
    )


def merge_codebooks(a: GrainCodebook, b: GrainCodebook) -> GrainCodebook:
    """Row-wise concatenation, a then b; provenance preserved.

    Compatible codebooks share params, latent dim, frame rate, and codec_id.
    Duplicate grains across the inputs are allowed and kept.
    """
    if (a.params, a.latent_dim, a.frame_rate, a.codec_id) != (
        b.params, b.latent_dim, b.frame_rate, b.codec_id,
    ):
        raise IncompatibleCodebooks(
            f"cannot merge (params={a.params}, D={a.latent_dim}, rate={a.frame_rate}, "
            f"codec={a.codec_id!r}) with (params={b.params}, D={b.latent_dim}, "
            f"rate={b.frame_rate}, codec={b.codec_id!r})"
        )
    grains = np.concatenate([a.grains, b.grains], axis=0)
    return GrainCodebook(
        grains=grains,
        norms=np.concatenate([a.norms, b.norms]),
        provenance=list(a.provenance) + list(b.provenance),
        params=a.params,
        latent_dim=a.latent_dim,
        frame_rate=a.frame_rate,
        codec_id=a.codec_id,
    )


def gain_augment(
    audio: AudioBuffer, gains: list[float]
) -> list[tuple[AudioBuffer, str]]:
    """One scaled copy of the input per gain, tagged "gain={value}".

    No clamping: the reference codec is linear, and file-based codecs own
    their headroom policy.
    """
    if not gains:
        raise EmptyGainList("need at least one gain value")
    out = []
    for gain in gains:
        if not gain > 0:
            raise NonPositiveGain(f"gains must be > 0, got {gain}")
        scaled = AudioBuffer(audio.samples * np.float32(gain), audio.sample_rate)
        out.append((scaled, f"gain={gain}"))
    return out


def codebook_bytes(cb: GrainCodebook) -> bytes:
    header = json.dumps(
        {
            "grain_size": cb.params.grain_size,
            "stride": cb.params.stride,
            "latent_dim": cb.latent_dim,
            "num_grains": cb.num_grains,
            "frame_rate": cb.frame_rate,
            "codec_id": cb.codec_id,
            "provenance": [[p.source_id, p.start_frame, p.augmentation_tag] for p in cb.provenance],
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    payload = np.ascontiguousarray(cb.grains, dtype="<f4").tobytes()
    return (
        LGCB_MAGIC
        + struct.pack("<II", LGCB_VERSION, len(header))
        + header
        + payload
        + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    )


def save_codebook(path: str | os.PathLike, cb: GrainCodebook) -> None:
    """Persist a codebook as .lgcb, atomically."""
    _atomic_write(path, codebook_bytes(cb))


def load_codebook(path: str | os.PathLike) -> GrainCodebook:
    """Load an .lgcb file; grain data round-trips bit-exactly.

    Raises BadMagic / VersionUnsupported / TruncatedData / ChecksumMismatch
    on structural damage; the CRC covers the grain payload.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12:
        raise TruncatedData(f"file has only {len(blob)} bytes")
    if blob[:4] != LGCB_MAGIC:
        raise BadMagic(f"bad magic {blob[:4]!r}, expected {LGCB_MAGIC!r}")
    version, header_len = struct.unpack("<II", blob[4:12])
    if version != LGCB_VERSION:
        raise VersionUnsupported(f"codebook version {version}, reader supports {LGCB_VERSION}")
    if len(blob) < 12 + header_len:
        raise TruncatedData("header extends past end of file")
    try:
        meta = json.loads(blob[12 : 12 + header_len].decode("utf-8"))
        g = int(meta["grain_size"])
        s = int(meta["stride"])
        dim = int(meta["latent_dim"])
        m = int(meta["num_grains"])
        rate = float(meta["frame_rate"])
        codec_id = str(meta["codec_id"])
        provenance = [
            Provenance(source_id=str(p[0]), start_frame=int(p[1]), augmentation_tag=str(p[2]))
            for p in meta["provenance"]
        ]
    except (ValueError, KeyError, IndexError, TypeError, UnicodeDecodeError) as exc:
        raise MalformedHeader(f"bad codebook header: {exc}") from exc

    body = blob[12 + header_len :]
    payload_len = m * g * dim * 4
    if len(body) < payload_len + 4:
        raise TruncatedData(
            f"payload+crc need {payload_len + 4} bytes, file has {len(body)}"
        )
    if len(body) > payload_len + 4:
        raise MalformedHeader(f"{len(body) - payload_len - 4} trailing bytes")
    payload = body[:payload_len]
    (stored_crc,) = struct.unpack("<I", body[payload_len:])
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise ChecksumMismatch("payload CRC32 does not match stored checksum")

    grains = np.frombuffer(payload, dtype="<f4").reshape(m, g * dim).astype(np.float32, copy=True)
    return GrainCodebook(
        grains=grains,
        norms=np.linalg.norm(grains.astype(np.float64), axis=1),
        provenance=provenance,
        params=GrainParams(grain_size=g, stride=s),
        latent_dim=dim,
        frame_rate=rate,
        codec_id=codec_id,
    )
