import argparse
import sys

from .encoders import EncoderError
from .exporter import ExportError, ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="export_embeddings",
        description="Encode a JSONL corpus into a binary per-sentence embedding file.")
    parser.add_argument("--corpus", required=True, help="JSONL corpus path")
    parser.add_argument("--encoder", required=True,
                        help="encoder id: hash:<dim>, hf:<model-or-path>, st:<model>")
    parser.add_argument("--out", required=True, help="output embedding file")
    parser.add_argument("--dim", type=int, default=0,
                        help="target width; model outputs are projected when it differs")
    parser.add_argument("--normalize", action="store_true",
                        help="L2-normalize every stored vector")
    parser.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(corpus_path=args.corpus, encoder_id=args.encoder, out_path=args.out,
                    target_dim=args.dim, normalize=args.normalize,
                    batch_size=args.batch_size)
    try:
        count = export(job)
    except (EncoderError, ExportError, FileNotFoundError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {count} vectors to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
