"""Command-line entry point: build codebooks, resynthesize, encode/decode, inspect.

Exit codes: 0 success, 1 usage error, 2 data error (malformed files,
mismatched codecs, empty corpora). All outputs are written atomically, and
re-running a subcommand with identical flags produces byte-identical files.

Every npy written here gets a JSON sidecar (default: the npy path plus
".json") carrying codec_id, frame_rate, and latent_dim, since npy itself
cannot hold them. Latent-domain inputs (--latent-input / --latent-target)
require that sidecar, which is how latents produced by an external codec
bridge enter the engine without the engine touching any model code.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter

from .codebook import (
    GrainParams,
    build_codebook,
    gain_augment,
    load_codebook,
    save_codebook,
)
from .codec import CodecConfig, DctCodec, LatentSequence
from .errors import InconsistentLatents, LatentGrainError
from .matcher import MatchParams
from .pipeline import ResynthConfig, resynthesize_latent, selections_trace
from .tensor_io import _atomic_write, read_npy, read_wav, write_npy, write_wav

LGCB_SNIFF = b"LGCB"
NPY_SNIFF = b"\x93NUMPY"


class _UsageError(Exception):
    pass


def _sidecar_path(npy_path: str, meta: str | None) -> str:
    return meta if meta else npy_path + ".json"


def _write_sidecar(path: str, codec_id: str, frame_rate: float, latent_dim: int) -> None:
    doc = {"codec_id": codec_id, "frame_rate": frame_rate, "latent_dim": latent_dim}
    _atomic_write(path, (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8"))


def _read_latent_with_sidecar(npy_path: str, meta: str | None) -> LatentSequence:
    frames = read_npy(npy_path)
    meta_path = _sidecar_path(npy_path, meta)
    with open(meta_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if int(doc["latent_dim"]) != frames.shape[1]:
        raise InconsistentLatents(
            f"{npy_path}: sidecar says latent_dim={doc['latent_dim']}, file has {frames.shape[1]} columns"
        )
    return LatentSequence(
        frames=frames, frame_rate=float(doc["frame_rate"]), codec_id=str(doc["codec_id"])
    )


def _collect_files(paths: list[str], suffix: str) -> list[str]:
    out: list[str] = []
    for p in paths:
        if os.path.isdir(p):
            out.extend(
                os.path.join(p, name)
                for name in sorted(os.listdir(p))
                if name.lower().endswith(suffix)
            )
        else:
            out.append(p)
    return out


def _parse_gains(spec: str) -> list[float]:
    try:
        gains = [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError as exc:
        raise _UsageError(f"--gain-aug: {exc}") from exc
    if not gains:
        raise _UsageError("--gain-aug: no gain values given")
    if any(not g > 0 for g in gains):
        raise _UsageError("--gain-aug: gains must be > 0")
    return gains


def _codec_config(args: argparse.Namespace, sample_rate: int) -> CodecConfig:
    try:
        return CodecConfig(
            frame_size=args.frame_size,
            hop=args.hop if args.hop is not None else args.frame_size // 2,
            kept_dims=args.dims,
            sample_rate=sample_rate,
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def cmd_build_codebook(args: argparse.Namespace) -> int:
    if bool(args.input) == bool(args.latent_input):
        raise _UsageError("give exactly one of --input or --latent-input")
    if args.grain_size < 1:
        raise _UsageError(f"--grain-size must be >= 1, got {args.grain_size}")
    if args.stride < 1:
        raise _UsageError(f"--stride must be >= 1, got {args.stride}")
    if args.gain_aug and args.latent_input:
        raise _UsageError("--gain-aug applies to audio input, not --latent-input")
    gains = _parse_gains(args.gain_aug) if args.gain_aug else None

    corpus: list[tuple[str, LatentSequence, str]] = []
    if args.input:
        files = _collect_files(args.input, ".wav")
        for path in files:
            audio = read_wav(path)
            rate = args.sample_rate if args.sample_rate is not None else audio.sample_rate
            codec = DctCodec(_codec_config(args, rate))
            variants = gain_augment(audio, gains) if gains else [(audio, "")]
            for variant, tag in variants:
                corpus.append((path, codec.encode(variant), tag))
    else:
        files = _collect_files(args.latent_input, ".npy")
        for path in files:
            corpus.append((path, _read_latent_with_sidecar(path, None), ""))

    params = GrainParams(grain_size=args.grain_size, stride=args.stride)
    skipped = sum(1 for _, z, _ in corpus if z.num_frames < params.grain_size)
    cb = build_codebook(corpus, params)
    save_codebook(args.out, cb)
    print(
        f"built codebook: M={cb.num_grains} grains from {len(corpus)} sources "
        f"({skipped} skipped short) -> {args.out}"
    )
    return 0


def cmd_resynth(args: argparse.Namespace) -> int:
    if bool(args.target) == bool(args.latent_target):
        raise _UsageError("give exactly one of --target or --latent-target")
    if args.temperature < 0:
        raise _UsageError(f"--temperature must be >= 0, got {args.temperature}")
    if not 0 <= args.seed < 2**64:
        raise _UsageError(f"--seed must be a 64-bit unsigned integer, got {args.seed}")
    if args.top_k is not None and args.top_k < 1:
        raise _UsageError(f"--top-k must be >= 1, got {args.top_k}")

    cb = load_codebook(args.codebook)
    cfg = ResynthConfig(
        grain=cb.params,
        match=MatchParams(temperature=args.temperature, seed=args.seed, top_k=args.top_k),
        tail_policy=args.tail,
    )

    codec = None
    if args.target:
        codec = DctCodec.from_codec_id(cb.codec_id)
        target = codec.encode(read_wav(args.target))
    else:
        target = _read_latent_with_sidecar(args.latent_target, args.latent_meta)

    hybrid, selections = resynthesize_latent(target, cb, cfg)

    if codec is not None:
        write_wav(args.out, codec.decode(hybrid), args.wav_encoding)
    else:
        write_npy(args.out, hybrid.frames)
        _write_sidecar(
            _sidecar_path(args.out, args.meta), hybrid.codec_id, hybrid.frame_rate, hybrid.latent_dim
        )

    if args.trace:
        doc = json.dumps(selections_trace(selections, cb), indent=2) + "\n"
        _atomic_write(args.trace, doc.encode("utf-8"))
    return 0


def cmd_encode(args: argparse.Namespace) -> int:
    audio = read_wav(args.infile)
    rate = args.sample_rate if args.sample_rate is not None else audio.sample_rate
    codec = DctCodec(_codec_config(args, rate))
    latents = codec.encode(audio)
    write_npy(args.out, latents.frames)
    _write_sidecar(
        _sidecar_path(args.out, args.meta), latents.codec_id, latents.frame_rate, latents.latent_dim
    )
    return 0


def cmd_decode(args: argparse.Namespace) -> int:
    meta_path = _sidecar_path(args.infile, args.meta)
    with open(meta_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    codec = DctCodec.from_codec_id(str(doc["codec_id"]))
    cfg = codec.config
    mismatches = []
    if args.frame_size is not None and args.frame_size != cfg.frame_size:
        mismatches.append(f"frame_size {args.frame_size} != {cfg.frame_size}")
    if args.hop is not None and args.hop != cfg.hop:
        mismatches.append(f"hop {args.hop} != {cfg.hop}")
    if args.dims is not None and args.dims != cfg.kept_dims:
        mismatches.append(f"dims {args.dims} != {cfg.kept_dims}")
    if args.sample_rate is not None and args.sample_rate != cfg.sample_rate:
        mismatches.append(f"sample_rate {args.sample_rate} != {cfg.sample_rate}")
    if mismatches:
        raise InconsistentLatents(
            f"flags disagree with sidecar codec {cfg.codec_id!r}: " + "; ".join(mismatches)
        )

    frames = read_npy(args.infile)
    latents = LatentSequence(frames=frames, frame_rate=cfg.frame_rate, codec_id=cfg.codec_id)
    write_wav(args.out, codec.decode(latents), args.wav_encoding)
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    with open(args.path, "rb") as fh:
        head = fh.read(6)
    if head[:4] == LGCB_SNIFF:
        cb = load_codebook(args.path)
        per_source = Counter(p.source_id for p in cb.provenance)
        doc = {
            "kind": "codebook",
            "num_grains": cb.num_grains,
            "grain_size": cb.params.grain_size,
            "stride": cb.params.stride,
            "latent_dim": cb.latent_dim,
            "frame_rate": cb.frame_rate,
            "codec_id": cb.codec_id,
            "sources": dict(sorted(per_source.items())),
        }
    elif head == NPY_SNIFF:
        frames = read_npy(args.path)
        doc = {"kind": "latents", "shape": list(frames.shape), "dtype": "<f4"}
    else:
        raise LatentGrainError(f"{args.path}: neither a codebook nor an npy latent file")
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _add_codec_flags(p: argparse.ArgumentParser, with_defaults: bool) -> None:
    p.add_argument("--frame-size", type=int, default=512 if with_defaults else None)
    p.add_argument("--hop", type=int, default=None, help="default: frame size / 2")
    p.add_argument("--dims", type=int, default=64 if with_defaults else None)
    p.add_argument(
        "--sample-rate", type=int, default=None, help="default: the input file's rate"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentgrain",
        description="Granular resynthesis in codec latent space.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-codebook", help="encode sources and index their grains")
    b.add_argument("--input", nargs="+", help="WAV files or directories")
    b.add_argument("--latent-input", nargs="+", help="npy latent files or directories (with sidecars)")
    b.add_argument("--grain-size", type=int, required=True)
    b.add_argument("--stride", type=int, required=True)
    b.add_argument("--out", required=True, help="output .lgcb path")
    b.add_argument("--gain-aug", help="comma-separated gains applied before encoding")
    _add_codec_flags(b, with_defaults=True)
    b.set_defaults(func=cmd_build_codebook)

    r = sub.add_parser("resynth", help="rebuild a target from codebook grains")
    r.add_argument("--codebook", required=True)
    r.add_argument("--target", help="target WAV (reference codec only)")
    r.add_argument("--latent-target", help="target npy latents (any codec, needs sidecar)")
    r.add_argument("--latent-meta", help="sidecar for --latent-target (default: target + .json)")
    r.add_argument("--temperature", type=float, default=0.0)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--top-k", type=int, default=None)
    r.add_argument("--tail", choices=["pad", "truncate"], default="pad")
    r.add_argument("--trace", help="write the selection trace JSON here")
    r.add_argument("--out", required=True)
    r.add_argument("--meta", help="sidecar path for npy output (default: out + .json)")
    r.add_argument("--wav-encoding", choices=["pcm16", "float32"], default="pcm16")
    r.set_defaults(func=cmd_resynth)

    e = sub.add_parser("encode", help="WAV -> npy latents via the reference codec")
    e.add_argument("--in", dest="infile", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--meta", help="sidecar path (default: out + .json)")
    _add_codec_flags(e, with_defaults=True)
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="npy latents -> WAV via the reference codec")
    d.add_argument("--in", dest="infile", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--meta", help="sidecar path (default: in + .json)")
    d.add_argument("--wav-encoding", choices=["pcm16", "float32"], default="pcm16")
    _add_codec_flags(d, with_defaults=False)
    d.set_defaults(func=cmd_decode)

    i = sub.add_parser("inspect", help="print metadata for a codebook or npy file")
    i.add_argument("path")
    i.set_defaults(func=cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage/help
        code = exc.code if exc.code is not None else 0
        return 1 if code not in (0,) else 0
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (LatentGrainError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
