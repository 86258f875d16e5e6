"""File operations: WAV -> continuous latents -> WAV.

Latents are the encoder's pre-quantization output (cosine matching wants the
continuous vectors, not RVQ codes), stored as T x D float32 npy. A JSON
manifest (codec_id, frame_rate, latent_dim, sample_rate) sits next to every
npy so consumers can verify codec identity without touching any model.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np
import scipy.io.wavfile
import scipy.signal
import torch

from .models import BridgeError, LoadedCodec

_INT_SCALES = {np.dtype(np.int16): 32768.0, np.dtype(np.int32): 2147483648.0}


def _read_wav_mono(path: str | os.PathLike, target_rate: int) -> np.ndarray:
    try:
        rate, data = scipy.io.wavfile.read(os.fspath(path))
    except ValueError as exc:
        raise BridgeError(f"cannot read WAV {path}: {exc}") from exc
    if data.ndim == 2:
        x = data.astype(np.float64).mean(axis=1)
    else:
        x = data.astype(np.float64)
    if data.dtype in _INT_SCALES:
        x = x / _INT_SCALES[data.dtype]
    elif data.dtype == np.uint8:
        x = (x - 128.0) / 128.0
    if len(x) == 0:
        raise BridgeError(f"{path}: no samples")
    if rate != target_rate:
        g = math.gcd(target_rate, rate)
        try:
            x = scipy.signal.resample_poly(x, target_rate // g, rate // g)
        except Exception as exc:
            raise BridgeError(f"resampling {rate} -> {target_rate} Hz failed: {exc}") from exc
    return x.astype(np.float32)


def _validate_latents(latents: np.ndarray, path: str | os.PathLike) -> np.ndarray:
    if latents.dtype != np.float32:
        raise BridgeError(f"{path}: latents must be float32, got {latents.dtype}")
    if latents.ndim != 2 or latents.shape[0] < 1 or latents.shape[1] < 1:
        raise BridgeError(f"{path}: latents must be a non-empty T x D matrix, got {latents.shape}")
    if not np.all(np.isfinite(latents)):
        raise BridgeError(f"{path}: latents contain NaN or Inf")
    return np.ascontiguousarray(latents)


def manifest_for(codec: LoadedCodec) -> dict:
    return {
        "codec_id": codec.codec_id,
        "frame_rate": codec.frame_rate,
        "latent_dim": codec.latent_dim,
        "sample_rate": codec.sample_rate,
    }


def bridge_encode(
    wav_path: str | os.PathLike,
    out_npy_path: str | os.PathLike,
    codec: LoadedCodec,
    meta_path: str | os.PathLike | None = None,
) -> dict:
    """Encode audio to continuous latents; writes npy + manifest, returns the manifest."""
    x = _read_wav_mono(wav_path, codec.sample_rate)
    with torch.no_grad():
        emb = codec.model.encoder(torch.from_numpy(x).reshape(1, 1, -1))
    latents = np.ascontiguousarray(emb[0].T.numpy(), dtype=np.float32)  # T x D
    if latents.shape[1] != codec.latent_dim:
        raise BridgeError(
            f"model produced D={latents.shape[1]}, expected {codec.latent_dim}"
        )
    np.save(os.fspath(out_npy_path), _validate_latents(latents, out_npy_path))

    manifest = manifest_for(codec)
    meta = os.fspath(meta_path) if meta_path else os.fspath(out_npy_path) + ".json"
    with open(meta, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def bridge_decode(
    npy_path: str | os.PathLike,
    out_wav_path: str | os.PathLike,
    codec: LoadedCodec,
    meta_path: str | os.PathLike | None = None,
) -> None:
    """Decode latents to a WAV at the codec's native sample rate.

    When a manifest is given (or found next to the npy), its codec_id must
    match the selected model.
    """
    meta = os.fspath(meta_path) if meta_path else os.fspath(npy_path) + ".json"
    if meta_path is not None or os.path.exists(meta):
        with open(meta, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("codec_id") != codec.codec_id:
            raise BridgeError(
                f"manifest says codec_id={doc.get('codec_id')!r}, selected model is "
                f"{codec.codec_id!r}"
            )
    try:
        latents = np.load(os.fspath(npy_path))
    except ValueError as exc:
        raise BridgeError(f"cannot read npy {npy_path}: {exc}") from exc
    latents = _validate_latents(latents, npy_path)
    if latents.shape[1] != codec.latent_dim:
        raise BridgeError(
            f"{npy_path}: latents have D={latents.shape[1]}, model {codec.codec_id} "
            f"needs D={codec.latent_dim}"
        )
    with torch.no_grad():
        audio = codec.model.decoder(torch.from_numpy(latents.T).unsqueeze(0))
    samples = audio[0, 0].numpy().astype(np.float32)
    scipy.io.wavfile.write(os.fspath(out_wav_path), codec.sample_rate, samples)
