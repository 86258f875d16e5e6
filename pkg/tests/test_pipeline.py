import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentgrain import (
    AudioBuffer,
    CodecConfig,
    DctCodec,
    GrainParams,
    GrainStream,
    LatentSequence,
    MatchParams,
    ResynthConfig,
    build_codebook,
    resynthesize_audio,
    resynthesize_latent,
    selections_trace,
)
from latentgrain.errors import (
    CodecMismatch,
    ConfigMismatch,
    DimensionMismatch,
    TargetTooShort,
)

from conftest import make_codebook, make_latents


def greedy_cfg(params: GrainParams) -> ResynthConfig:
    return ResynthConfig(grain=params, match=MatchParams(temperature=0.0, seed=0))


def test_self_resynthesis_identity(rng):
    params = GrainParams(3, 3)
    z = make_latents(rng, 60, 8)
    cb = build_codebook([("self", z)], params)
    out, sels = resynthesize_latent(z, cb, greedy_cfg(params))
    assert np.array_equal(out.frames, z.frames)
    assert out.frames.tobytes() == z.frames.tobytes()
    assert all(s.distance <= 1e-6 for s in sels)


def test_tail_truncate_t7_g3(rng):
    params = GrainParams(3, 3)
    cb = make_codebook(rng, 10, 3, 4)
    target = make_latents(rng, 7, 4)
    cfg = ResynthConfig(grain=params, match=MatchParams(0.0, 0), tail_policy="truncate")
    out, sels = resynthesize_latent(target, cb, cfg)
    assert out.num_frames == 6
    assert len(sels) == 2


def test_tail_pad_t7_g3(rng):
    params = GrainParams(3, 3)
    cb = make_codebook(rng, 10, 3, 4)
    target = make_latents(rng, 7, 4)
    cfg = ResynthConfig(grain=params, match=MatchParams(0.0, 0), tail_policy="pad")
    out, sels = resynthesize_latent(target, cb, cfg)
    assert out.num_frames == 7
    assert len(sels) == 3
    # the last selection was matched on the zero-padded final grain
    from latentgrain.matcher import Grain, match_greedy

    padded = np.zeros((3, 4), dtype=np.float32)
    padded[:1] = target.frames[6:]
    expect = match_greedy(Grain.from_vector(padded.reshape(-1)), cb)
    assert sels[-1] == expect
    assert np.array_equal(out.frames[6:], cb.grain_frames(expect.codebook_index)[:1])


def test_short_target_pad_works(rng):
    params = GrainParams(3, 3)
    cb = make_codebook(rng, 10, 3, 4)
    target = make_latents(rng, 2, 4)
    out, sels = resynthesize_latent(
        target, cb, ResynthConfig(params, MatchParams(0.0, 0), tail_policy="pad")
    )
    assert out.num_frames == 2
    assert len(sels) == 1


def test_short_target_truncate_rejected(rng):
    params = GrainParams(3, 3)
    cb = make_codebook(rng, 10, 3, 4)
    target = make_latents(rng, 2, 4)
    with pytest.raises(TargetTooShort):
        resynthesize_latent(
            target, cb, ResynthConfig(params, MatchParams(0.0, 0), tail_policy="truncate")
        )


def test_mismatch_errors(rng):
    cb = make_codebook(rng, 8, 2, 4)
    cfg = greedy_cfg(cb.params)
    with pytest.raises(DimensionMismatch):
        resynthesize_latent(make_latents(rng, 10, 5), cb, cfg)
    with pytest.raises(CodecMismatch):
        resynthesize_latent(make_latents(rng, 10, 4, codec_id="other/v9"), cb, cfg)
    with pytest.raises(ConfigMismatch):
        resynthesize_latent(
            make_latents(rng, 10, 4), cb, greedy_cfg(GrainParams(2, 1))
        )


def test_output_frames_come_from_codebook_rows(rng):
    cb = make_codebook(rng, 15, 2, 4)
    target = make_latents(rng, 11, 4)
    cfg = ResynthConfig(cb.params, MatchParams(temperature=1.0, seed=5), tail_policy="pad")
    out, sels = resynthesize_latent(target, cb, cfg)
    g = cb.params.grain_size
    for i, sel in enumerate(sels):
        chosen = cb.grain_frames(sel.codebook_index)
        got = out.frames[i * g : (i + 1) * g]
        assert np.array_equal(got, chosen[: len(got)])  # tail grain is a prefix


@settings(max_examples=60, deadline=None)
@given(
    t=st.integers(1, 40),
    g=st.integers(1, 5),
    policy=st.sampled_from(["pad", "truncate"]),
    seed=st.integers(0, 2**32 - 1),
)
def test_output_frame_count_law(t, g, policy, seed):
    if policy == "truncate" and t < g:
        return
    rng = np.random.default_rng(seed)
    cb = make_codebook(rng, 12, g, 3)
    target = make_latents(rng, t, 3)
    cfg = ResynthConfig(cb.params, MatchParams(0.5, seed % 2**64), tail_policy=policy)
    out, _ = resynthesize_latent(target, cb, cfg)
    assert out.num_frames == (t if policy == "pad" else g * (t // g))


# --- streaming ------------------------------------------------------------------


def test_stream_one_frame_at_a_time(rng):
    cb = make_codebook(rng, 10, 2, 4)
    cfg = greedy_cfg(cb.params)
    stream = GrainStream(cb, cfg)
    target = make_latents(rng, 10, 4)
    emitted = []
    for i in range(10):
        out = stream.push(target.frames[i : i + 1])
        # emission exactly on the push delivering each grain's 2nd frame
        assert len(out) == (2 if i % 2 == 1 else 0)
        emitted.append(out)
    assert sum(map(len, emitted)) == 10
    assert len(stream.flush()) == 0  # nothing pending


def test_stream_emission_latency_bound(rng):
    g = 3
    cb = make_codebook(rng, 10, g, 2)
    stream = GrainStream(cb, ResynthConfig(cb.params, MatchParams(1.0, 4)))
    target = make_latents(rng, 17, 2)
    grains_out = 0
    i = 0
    rng2 = np.random.default_rng(1)
    while i < 17:
        n = min(int(rng2.integers(1, 5)), 17 - i)
        out = stream.push(target.frames[i : i + n])
        i += n
        grains_out += len(out) // g
        # every grain whose g-th frame has arrived must already be out
        assert grains_out == stream.frames_pushed // g
    assert stream.frames_pushed == 17


def test_stream_equals_batch_over_random_chunkings(rng):
    for trial in range(30):
        g = int(rng.integers(1, 6))
        t = int(rng.integers(1, 120))
        d = int(rng.integers(1, 6))
        m = int(rng.integers(2, 40))
        policy = "pad" if rng.integers(2) else "truncate"
        if policy == "truncate" and t < g:
            policy = "pad"
        tau = float(rng.choice([0.0, 0.3, 1.0, 10.0]))
        seed = int(rng.integers(0, 2**63))
        cb = make_codebook(rng, m, g, d)
        cfg = ResynthConfig(cb.params, MatchParams(tau, seed), tail_policy=policy)
        target = make_latents(rng, t, d)

        batch, bsels = resynthesize_latent(target, cb, cfg)
        stream = GrainStream(cb, cfg)
        parts = []
        i = 0
        while i < t:
            n = min(int(rng.integers(1, g + 3)), t - i)
            parts.append(stream.push(target.frames[i : i + n]))
            i += n
        parts.append(stream.flush())
        streamed = np.concatenate(parts, axis=0)
        assert streamed.tobytes() == batch.frames.tobytes()
        assert stream.selections == bsels


def test_stream_flush_empty_emits_nothing(rng):
    cb = make_codebook(rng, 5, 2, 3)
    stream = GrainStream(cb, greedy_cfg(cb.params))
    assert stream.flush().shape == (0, 3)


def test_stream_flush_truncate_drops_tail(rng):
    cb = make_codebook(rng, 5, 2, 3)
    stream = GrainStream(cb, ResynthConfig(cb.params, MatchParams(0.0, 0), tail_policy="truncate"))
    stream.push(make_latents(rng, 1, 3).frames)
    assert len(stream.flush()) == 0


def test_stream_rejects_wrong_width(rng):
    cb = make_codebook(rng, 5, 2, 3)
    stream = GrainStream(cb, greedy_cfg(cb.params))
    with pytest.raises(DimensionMismatch):
        stream.push(np.zeros((2, 4), dtype=np.float32))


# --- audio-domain chain --------------------------------------------------------


def test_resynthesize_audio_silent_target(rng):
    cfg = CodecConfig(frame_size=32, hop=16, kept_dims=32, sample_rate=8000)
    codec = DctCodec(cfg)
    # corpus of silence plus noise: the silent grains are in the book
    silence = AudioBuffer(np.zeros(128, dtype=np.float32), 8000)
    noise = AudioBuffer(rng.uniform(-0.5, 0.5, 128).astype(np.float32), 8000)
    params = GrainParams(1, 1)
    cb = build_codebook(
        [("sil", codec.encode(silence)), ("noise", codec.encode(noise))], params
    )
    out = resynthesize_audio(silence, cb, greedy_cfg(params), codec)
    assert np.abs(out.samples).max() <= 1e-4


def test_resynthesize_audio_self_corpus_roundtrip(rng):
    # target == sole corpus file, s == g, tau=0, D == F: output equals the
    # round-trip-coded target on interior samples
    cfg = CodecConfig(frame_size=32, hop=16, kept_dims=32, sample_rate=8000)
    codec = DctCodec(cfg)
    x = AudioBuffer(rng.uniform(-0.9, 0.9, 16 * 20 + 32).astype(np.float32), 8000)
    params = GrainParams(2, 2)
    cb = build_codebook([("self", codec.encode(x))], params)
    out = resynthesize_audio(x, cb, greedy_cfg(params), codec)
    roundtrip = codec.decode(codec.encode(x))
    n = len(x.samples)
    assert np.abs(out.samples[32 : n - 32] - roundtrip.samples[32 : n - 32]).max() <= 1e-4


def test_resynthesize_audio_duration_within_one_hop(rng):
    cfg = CodecConfig(frame_size=32, hop=16, kept_dims=8, sample_rate=8000)
    codec = DctCodec(cfg)
    x = AudioBuffer(rng.uniform(-1, 1, 333).astype(np.float32), 8000)
    cb = build_codebook([("c", codec.encode(x))], GrainParams(1, 1))
    out = resynthesize_audio(x, cb, greedy_cfg(GrainParams(1, 1)), codec)
    assert 0 <= len(out.samples) - len(x.samples) < cfg.hop + cfg.frame_size


def test_resynthesize_audio_reproducible_at_high_temperature(rng):
    cfg = CodecConfig(frame_size=32, hop=16, kept_dims=8, sample_rate=8000)
    codec = DctCodec(cfg)
    x = AudioBuffer(rng.uniform(-1, 1, 500).astype(np.float32), 8000)
    cb = build_codebook([("c", codec.encode(x))], GrainParams(1, 1))
    hot = ResynthConfig(GrainParams(1, 1), MatchParams(temperature=1e6, seed=31337))
    a = resynthesize_audio(x, cb, hot, codec)
    b = resynthesize_audio(x, cb, hot, codec)
    assert a.samples.tobytes() == b.samples.tobytes()


def test_resynthesize_audio_codec_mismatch(rng):
    cfg = CodecConfig(frame_size=32, hop=16, kept_dims=8, sample_rate=8000)
    codec = DctCodec(cfg)
    other = DctCodec(CodecConfig(frame_size=64, hop=32, kept_dims=8, sample_rate=8000))
    x = AudioBuffer(rng.uniform(-1, 1, 200).astype(np.float32), 8000)
    cb = build_codebook([("c", codec.encode(x))], GrainParams(1, 1))
    with pytest.raises(CodecMismatch):
        resynthesize_audio(x, cb, greedy_cfg(GrainParams(1, 1)), other)


def test_selections_trace_shape(rng):
    cb = make_codebook(rng, 8, 2, 3)
    target = make_latents(rng, 9, 3)
    cfg = ResynthConfig(cb.params, MatchParams(0.7, 11), tail_policy="pad")
    _, sels = resynthesize_latent(target, cb, cfg)
    trace = selections_trace(sels, cb)
    assert [e["grain_index"] for e in trace] == list(range(5))
    for e in trace:
        assert set(e) == {
            "grain_index", "codebook_index", "distance", "probability",
            "source_id", "start_frame",
        }
        assert e["source_id"] == "corpus"
        assert 0.0 <= e["distance"] <= 2.0 + 1e-6
        assert 0.0 < e["probability"] <= 1.0


def test_tail_policy_validation(rng):
    with pytest.raises(ValueError):
        ResynthConfig(GrainParams(1, 1), MatchParams(0.0, 0), tail_policy="loop")
