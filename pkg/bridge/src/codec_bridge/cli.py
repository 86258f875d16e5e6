"""codec-bridge CLI: encode WAV -> npy latents, decode npy latents -> WAV.

Exit codes: 0 success, 1 usage error, 2 model/data failure. The encode
subcommand prints the manifest JSON it wrote.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bridge import bridge_decode, bridge_encode
from .models import BridgeError, available_selectors, load_codec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codec-bridge",
        description="Run a neural audio codec between WAV files and npy latents.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("encode", "WAV -> npy continuous latents + JSON manifest"),
        ("decode", "npy latents -> WAV at the codec's native rate"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--model", required=True, help=f"one of: {', '.join(available_selectors())}")
        p.add_argument("--in", dest="infile", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--meta", help="manifest path (default: npy path + .json)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if exc.code is not None else 0
        return 0 if code == 0 else 1
    try:
        codec = load_codec(args.model)
        if args.command == "encode":
            manifest = bridge_encode(args.infile, args.out, codec, args.meta)
            print(json.dumps(manifest, indent=2, sort_keys=True))
        else:
            bridge_decode(args.infile, args.out, codec, args.meta)
        return 0
    except (BridgeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
