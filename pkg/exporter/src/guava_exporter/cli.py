"""CLI: guava-export export --manifest m.csv --out features.fvec
                           [--side 224] [--batch 32] [--weights imagenet]
"""

import argparse
import sys

from .export import ExportError, ExportJob, export_deep_features


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="guava-export", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="run the frozen backbone over a manifest")
    p.add_argument("--manifest", required=True, help="CSV manifest (path,label)")
    p.add_argument("--out", required=True, help="output FVEC path")
    p.add_argument("--side", type=int, default=224, help="resize target side length")
    p.add_argument("--batch", type=int, default=32, help="inference batch size")
    p.add_argument(
        "--weights", default="imagenet",
        help="'imagenet' (published pretrained, default), 'none' (seeded random "
             "init, smoke tests only), or a local state_dict path",
    )
    return parser


def run(argv) -> int:
    ns = build_parser().parse_args(argv)
    job = ExportJob(manifest=ns.manifest, out=ns.out, side=ns.side,
                    batch_size=ns.batch, weights=ns.weights)
    try:
        export_deep_features(job)
    except (ExportError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
