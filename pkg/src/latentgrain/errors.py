"""Exception hierarchy for the engine.

Every data-level failure raises a subclass of :class:`LatentGrainError` so
callers (notably the CLI) can distinguish bad data (exit code 2) from usage
mistakes (exit code 1). Plain I/O failures are left to the OS: an unreadable
or unwritable path raises the usual ``OSError``.
"""


class LatentGrainError(Exception):
    """Base class for all engine errors."""


# --- tensor_io ---------------------------------------------------------------


class MalformedHeader(LatentGrainError):
    """npy magic/version/header dict violates the interchange subset."""


class UnsupportedDtype(LatentGrainError):
    """npy descr is anything other than little-endian float32 ('<f4')."""


class UnsupportedRank(LatentGrainError):
    """npy shape is not exactly 2-dimensional."""


class TruncatedData(LatentGrainError):
    """A payload ended before the size implied by its header."""


class EmptyMatrix(LatentGrainError):
    """A matrix with zero rows or zero columns where data is required."""


class NonFiniteData(LatentGrainError):
    """NaN or Inf encountered where only finite values are legal."""


class MalformedRiff(LatentGrainError):
    """WAV container structure is broken or inconsistent."""


class UnsupportedEncoding(LatentGrainError):
    """WAV encoding other than PCM16 or IEEE float32."""


class EmptyBuffer(LatentGrainError):
    """An audio buffer with zero samples where audio is required."""


# --- reference_codec ----------------------------------------------------------


class SampleRateMismatch(LatentGrainError):
    """Audio sample rate differs from the codec configuration."""


class DimensionMismatch(LatentGrainError):
    """Latent/grain dimensionality does not line up."""


class CodecMismatch(LatentGrainError):
    """codec_id tags disagree; latents from one codec fed to another."""


# --- codebook -----------------------------------------------------------------


class SequenceTooShort(LatentGrainError):
    """Latent sequence has fewer frames than one grain."""


class EmptyCorpus(LatentGrainError):
    """Codebook build requested over zero sources."""


class InconsistentLatents(LatentGrainError):
    """Corpus sequences disagree on latent dim, frame rate, or codec."""


class NoGrains(LatentGrainError):
    """Every corpus sequence was too short; nothing to index."""


class IncompatibleCodebooks(LatentGrainError):
    """Merge attempted across differing grain params, dims, or codecs."""


class EmptyGainList(LatentGrainError):
    """Gain augmentation requested with no gain values."""


class NonPositiveGain(LatentGrainError):
    """Gain augmentation value must be strictly positive."""


class BadMagic(LatentGrainError):
    """Codebook file does not start with the LGCB magic."""


class VersionUnsupported(LatentGrainError):
    """Codebook file version is newer than this reader understands."""


class ChecksumMismatch(LatentGrainError):
    """Codebook payload CRC does not match its stored checksum."""


# --- matcher ------------------------------------------------------------------


class LengthMismatch(LatentGrainError):
    """Vectors of different lengths passed to a pairwise operation."""


class NonPositiveTemperature(LatentGrainError):
    """match_distribution requires a strictly positive temperature."""


# --- pipeline -----------------------------------------------------------------


class TargetTooShort(LatentGrainError):
    """Target has no full grain and the tail policy discards the rest."""


class ConfigMismatch(LatentGrainError):
    """Resynthesis config disagrees with the codebook it is used with."""
