"""Bit-exact file interchange: a strict npy v1.0 subset and RIFF/WAVE audio.

The npy subset is deliberately tiny: version 1.0, little-endian float32,
C order, exactly two dimensions, header space-padded to 64-byte alignment.
Anything else is rejected loudly rather than coerced, so latents written by
any conforming producer round-trip bit-for-bit.

WAV support covers PCM16 and IEEE float32, any channel count on read
(downmixed to mono by arithmetic mean), mono on write.
"""

from __future__ import annotations

import ast
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyBuffer,
    EmptyMatrix,
    MalformedHeader,
    MalformedRiff,
    NonFiniteData,
    TruncatedData,
    UnsupportedDtype,
    UnsupportedEncoding,
    UnsupportedRank,
)

NPY_MAGIC = b"\x93NUMPY"
_NPY_ALIGN = 64
_PCM16_SCALE = 32768.0
_PCM16_MAX = 1.0 - 2.0**-15


@dataclass
class AudioBuffer:
    """Mono audio: float32 samples (nominal range [-1, 1]) at a fixed rate.

    Samples may exceed [-1, 1] in memory; clamping happens only on 16-bit
    write. An empty buffer is representable but rejected by every consumer
    that needs audio (writers, encoders).
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {self.samples.shape}")
        if not isinstance(self.sample_rate, (int, np.integer)) or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        self.sample_rate = int(self.sample_rate)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def _atomic_write(path: str | os.PathLike, data: bytes) -> None:
    """Write bytes to a temp file in the destination directory, then rename.

    Guarantees no partial file is ever visible at `path`.
    """
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


# --- npy subset ---------------------------------------------------------------


def npy_bytes(m: np.ndarray) -> bytes:
    """Serialize a 2-D float32 matrix to npy v1.0 bytes (the strict subset)."""
    arr = np.asarray(m)
    if arr.ndim != 2:
        raise UnsupportedRank(f"matrix must be 2-D, got {arr.ndim}-D")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise EmptyMatrix(f"matrix must be non-empty, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype="<f4")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteData("matrix contains NaN or Inf")

    header = "{'descr': '<f4', 'fortran_order': False, 'shape': (%d, %d), }" % arr.shape
    # Pad with spaces so magic+version+length+header is 64-byte aligned,
    # with a final newline (matches the reference npy writer byte-for-byte).
    unpadded = len(NPY_MAGIC) + 2 + 2 + len(header) + 1
    pad = _NPY_ALIGN - (unpadded % _NPY_ALIGN)
    if pad == _NPY_ALIGN:
        pad = 0
    header_bytes = header.encode("ascii") + b" " * pad + b"\n"
    return (
        NPY_MAGIC
        + b"\x01\x00"
        + struct.pack("<H", len(header_bytes))
        + header_bytes
        + arr.tobytes()
    )


def write_npy(path: str | os.PathLike, m: np.ndarray) -> None:
    """Write a 2-D float32 matrix as npy v1.0, atomically."""
    _atomic_write(path, npy_bytes(m))


def read_npy(path: str | os.PathLike) -> np.ndarray:
    """Read an npy file conforming to the strict subset.

    Returns a fresh C-ordered float32 array with the exact stored values.
    Raises MalformedHeader / UnsupportedDtype / UnsupportedRank /
    TruncatedData / EmptyMatrix / NonFiniteData on any deviation.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    return npy_from_bytes(blob)


def npy_from_bytes(blob: bytes) -> np.ndarray:
    if len(blob) < 10 or blob[:6] != NPY_MAGIC:
        raise MalformedHeader("not an npy file (bad magic)")
    if blob[6:8] != b"\x01\x00":
        raise MalformedHeader(f"unsupported npy version {blob[6]}.{blob[7]} (need 1.0)")
    (hlen,) = struct.unpack("<H", blob[8:10])
    if len(blob) < 10 + hlen:
        raise MalformedHeader("header extends past end of file")
    if (10 + hlen) % _NPY_ALIGN != 0:
        raise MalformedHeader("header is not 64-byte aligned")
    raw = blob[10 : 10 + hlen]
    if not raw.endswith(b"\n"):
        raise MalformedHeader("header not newline-terminated")
    try:
        info = ast.literal_eval(raw.decode("ascii").strip())
    except (ValueError, SyntaxError, UnicodeDecodeError) as exc:
        raise MalformedHeader(f"unparseable header: {exc}") from exc
    if not isinstance(info, dict) or set(info) != {"descr", "fortran_order", "shape"}:
        raise MalformedHeader(f"unexpected header keys: {info!r}")
    if info["descr"] != "<f4":
        raise UnsupportedDtype(f"dtype {info['descr']!r} not supported (need '<f4')")
    if info["fortran_order"] is not False:
        raise MalformedHeader("fortran_order must be False (C order only)")
    shape = info["shape"]
    if not (isinstance(shape, tuple) and all(isinstance(d, int) for d in shape)):
        raise MalformedHeader(f"bad shape entry: {shape!r}")
    if len(shape) != 2:
        raise UnsupportedRank(f"need a 2-D matrix, got shape {shape}")
    rows, cols = shape
    if rows < 1 or cols < 1:
        raise EmptyMatrix(f"empty matrix shape {shape}")

    payload = blob[10 + hlen :]
    expected = rows * cols * 4
    if len(payload) < expected:
        raise TruncatedData(f"payload has {len(payload)} bytes, need {expected}")
    if len(payload) > expected:
        raise MalformedHeader(f"{len(payload) - expected} trailing bytes after payload")
    out = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    out = out.astype(np.float32, copy=True)
    if not np.all(np.isfinite(out)):
        raise NonFiniteData("latent file contains NaN or Inf")
    return out


# --- WAV ----------------------------------------------------------------------


def read_wav(path: str | os.PathLike) -> AudioBuffer:
    """Read a PCM16 or float32 RIFF/WAVE file as mono audio.

    Multichannel input is downmixed by the arithmetic mean of the channels.
    16-bit samples map to [-1, 1) by division by 32768.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise MalformedRiff("not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos : pos + 4]
        (size,) = struct.unpack("<I", blob[pos + 4 : pos + 8])
        body = blob[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise MalformedRiff(f"chunk {cid!r} truncated ({len(body)} of {size} bytes)")
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += 8 + size
        if (size & 1) and pos < len(blob):
            pos += 1  # word-alignment pad byte (may be absent at EOF)
    if pos != len(blob):
        raise MalformedRiff("trailing bytes after last chunk")
    if fmt is None or data is None:
        raise MalformedRiff("missing fmt or data chunk")
    if len(fmt) < 16:
        raise MalformedRiff(f"fmt chunk too small ({len(fmt)} bytes)")

    tag, channels, rate, _byte_rate, _block, bits = struct.unpack("<HHIIHH", fmt[:16])
    if channels < 1 or rate < 1:
        raise MalformedRiff(f"bad fmt fields: channels={channels} rate={rate}")
    if tag == 1 and bits == 16:
        dtype, width = "<i2", 2
    elif tag == 3 and bits == 32:
        dtype, width = "<f4", 4
    else:
        raise UnsupportedEncoding(f"fmt tag {tag} at {bits} bits (need PCM16 or float32)")

    frame_bytes = channels * width
    if len(data) % frame_bytes != 0:
        raise MalformedRiff(f"data size {len(data)} not a multiple of frame size {frame_bytes}")
    raw = np.frombuffer(data, dtype=dtype).reshape(-1, channels)
    mono = raw.astype(np.float64).mean(axis=1)
    if width == 2:
        mono = mono / _PCM16_SCALE
    return AudioBuffer(mono.astype(np.float32), rate)


def wav_bytes(a: AudioBuffer, encoding: str = "pcm16") -> bytes:
    """Serialize mono audio to WAV bytes ('pcm16' or 'float32').

    pcm16 clamps to [-1, 1 - 2^-15] then quantizes round-half-away-from-zero.
    """
    if len(a.samples) == 0:
        raise EmptyBuffer("cannot write an empty audio buffer")
    if encoding == "pcm16":
        x = np.clip(a.samples.astype(np.float64), -1.0, _PCM16_MAX) * _PCM16_SCALE
        q = (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype("<i2")
        payload = q.tobytes()
        fmt = struct.pack("<HHIIHH", 1, 1, a.sample_rate, a.sample_rate * 2, 2, 16)
        chunks = [(b"fmt ", fmt), (b"data", payload)]
    elif encoding == "float32":
        payload = a.samples.astype("<f4").tobytes()
        fmt = struct.pack("<HHIIHHH", 3, 1, a.sample_rate, a.sample_rate * 4, 4, 32, 0)
        fact = struct.pack("<I", len(a.samples))
        chunks = [(b"fmt ", fmt), (b"fact", fact), (b"data", payload)]
    else:
        raise ValueError(f"encoding must be 'pcm16' or 'float32', got {encoding!r}")

    body = b"".join(cid + struct.pack("<I", len(c)) + c for cid, c in chunks)
    return b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body


def write_wav(path: str | os.PathLike, a: AudioBuffer, encoding: str = "pcm16") -> None:
    """Write mono audio as a WAV file, atomically."""
    _atomic_write(path, wav_bytes(a, encoding))
