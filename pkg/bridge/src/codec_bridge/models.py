"""Codec selectors: map a name to a loaded model plus its geometry.

Selectors pin an exact checkpoint (or an exact seeded architecture), so a
selector string doubles as the codec identity written into every manifest.
The "encodec-untrained-tiny" selector instantiates a small EnCodec with a
fixed seed and no downloaded weights; it produces noise-quality audio but
runs the same inference path as the pretrained models, so format and
contract tests work fully offline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch


class BridgeError(Exception):
    """Any bridge failure that should surface as a nonzero exit."""


@dataclass
class LoadedCodec:
    model: torch.nn.Module
    codec_id: str
    sample_rate: int
    hop: int  # encoder stride: samples per latent frame
    latent_dim: int

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop


_TINY_SEED = 0x517A


def _load_encodec_pretrained(checkpoint: str, codec_id: str) -> LoadedCodec:
    from transformers import EncodecModel

    try:
        model = EncodecModel.from_pretrained(checkpoint)
    except Exception as exc:
        raise BridgeError(
            f"cannot load checkpoint {checkpoint!r} (not cached locally and/or "
            f"no network): {exc}"
        ) from exc
    cfg = model.config
    if cfg.audio_channels != 1:
        raise BridgeError(f"{codec_id}: only mono codecs are supported")
    return LoadedCodec(
        model=model.eval(),
        codec_id=codec_id,
        sample_rate=int(cfg.sampling_rate),
        hop=int(np.prod(cfg.upsampling_ratios)),
        latent_dim=int(cfg.hidden_size),
    )


def _load_encodec_untrained_tiny() -> LoadedCodec:
    from transformers import EncodecConfig, EncodecModel

    cfg = EncodecConfig(
        audio_channels=1,
        sampling_rate=24000,
        upsampling_ratios=[8, 5, 4, 2],
        num_filters=8,
        hidden_size=16,
        codebook_size=64,
        codebook_dim=16,
    )
    torch.manual_seed(_TINY_SEED)  # fixed seed: the selector IS the checkpoint
    model = EncodecModel(cfg)
    return LoadedCodec(
        model=model.eval(),
        codec_id="encodec-untrained-tiny",
        sample_rate=24000,
        hop=320,
        latent_dim=16,
    )


_SELECTORS = {
    "encodec-24khz": lambda: _load_encodec_pretrained("facebook/encodec_24khz", "encodec-24khz"),
    "encodec-untrained-tiny": _load_encodec_untrained_tiny,
}


def available_selectors() -> list[str]:
    return sorted(_SELECTORS)


def load_codec(selector: str) -> LoadedCodec:
    try:
        factory = _SELECTORS[selector]
    except KeyError:
        raise BridgeError(
            f"unknown model selector {selector!r}; available: {', '.join(available_selectors())}"
        ) from None
    return factory()
