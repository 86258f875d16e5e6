"""Granular resynthesis in codec latent space.

Build a codebook of latent grains from source audio, match each grain of a
target's latent sequence by cosine similarity with temperature-controlled
sampling, and decode the concatenated selection back to audio. No training:
any invertible codec that maps audio to a frame sequence works, including
the bundled DCT reference codec and file-based neural codec bridges.
"""

from .codebook import (
    Grain,
    GrainCodebook,
    GrainParams,
    Provenance,
    build_codebook,
    extract_grains,
    gain_augment,
    load_codebook,
    merge_codebooks,
    save_codebook,
)
from .codec import Codec, CodecConfig, DctCodec, LatentSequence, num_frames_for
from .errors import LatentGrainError
from .matcher import (
    GrainSelection,
    MatchParams,
    cosine_distance,
    distances_to_codebook,
    match_distribution,
    match_greedy,
    sample_grain,
    softmax_over_distances,
)
from .pipeline import (
    GrainStream,
    ResynthConfig,
    resynthesize_audio,
    resynthesize_latent,
    selections_trace,
)
from .tensor_io import AudioBuffer, read_npy, read_wav, write_npy, write_wav

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer",
    "Codec",
    "CodecConfig",
    "DctCodec",
    "Grain",
    "GrainCodebook",
    "GrainParams",
    "GrainSelection",
    "GrainStream",
    "LatentGrainError",
    "LatentSequence",
    "MatchParams",
    "Provenance",
    "ResynthConfig",
    "build_codebook",
    "cosine_distance",
    "distances_to_codebook",
    "extract_grains",
    "gain_augment",
    "load_codebook",
    "match_distribution",
    "match_greedy",
    "merge_codebooks",
    "num_frames_for",
    "read_npy",
    "read_wav",
    "resynthesize_audio",
    "resynthesize_latent",
    "sample_grain",
    "save_codebook",
    "selections_trace",
    "softmax_over_distances",
    "write_npy",
    "write_wav",
    "__version__",
]
