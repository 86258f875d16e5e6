import numpy as np
import pytest

from latentgrain import GrainParams, LatentSequence, build_codebook

TEST_CODEC_ID = "ref-dct/F512/H256/D64/sr16000"


def make_latents(rng: np.random.Generator, t: int, d: int, codec_id: str = TEST_CODEC_ID,
                 frame_rate: float = 62.5) -> LatentSequence:
    return LatentSequence(
        frames=rng.standard_normal((t, d)).astype(np.float32),
        frame_rate=frame_rate,
        codec_id=codec_id,
    )


def make_codebook(rng: np.random.Generator, m: int, g: int, d: int, stride: int | None = None,
                  codec_id: str = TEST_CODEC_ID):
    """Codebook of m random grains (duplicate-free w.p. 1) with grain size g."""
    s = stride if stride is not None else g
    t = (m - 1) * s + g
    z = make_latents(rng, t, d, codec_id=codec_id)
    cb = build_codebook([("corpus", z)], GrainParams(grain_size=g, stride=s))
    assert cb.num_grains == m
    return cb


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0xC0FFEE)
