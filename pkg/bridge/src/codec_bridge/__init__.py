"""Neural audio codec bridge.

Runs a pretrained (or deterministically seeded) neural codec to turn WAV
audio into continuous latent matrices in the npy interchange subset, and
latents back into WAV. The bridge is a leaf process: it only speaks files
(npy + JSON manifest + WAV) and never links against any consumer.
"""

from .bridge import BridgeError, bridge_decode, bridge_encode
from .models import LoadedCodec, available_selectors, load_codec

__version__ = "0.1.0"

__all__ = [
    "BridgeError",
    "LoadedCodec",
    "available_selectors",
    "bridge_decode",
    "bridge_encode",
    "load_codec",
]
