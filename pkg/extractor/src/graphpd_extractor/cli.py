"""CLI wrapper: graphpd-extract --corpus DIR --out DIR [options]."""

from __future__ import annotations

import argparse
import sys

from .extract import XLSR53_NAME, ExtractionError, Wav2Vec2Embedder, extract


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="graphpd-extract", description=__doc__)
    parser.add_argument("--corpus", required=True, help="speaker_id/*.wav layout with labels.csv")
    parser.add_argument("--out", required=True)
    parser.add_argument("--segment-ms", type=int, default=500)
    parser.add_argument("--overlap", type=float, default=0.5)
    parser.add_argument("--model", default=XLSR53_NAME, help="hugging-face model name")
    args = parser.parse_args(argv)
    try:
        embedder = Wav2Vec2Embedder.pretrained(args.model)
        extract(args.corpus, args.out, embedder, segment_ms=args.segment_ms, overlap=args.overlap)
    except ExtractionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
