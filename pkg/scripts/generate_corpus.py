#!/usr/bin/env python3
"""Regenerate the bundled corpora.

    python scripts/generate_corpus.py [--out src/sms_controller/fixtures]

Writes spam-seed-100.tsv (known spam used to seed the ontology) and
stream-500.tsv (the mixed spam/ham evaluation stream).
"""
import argparse
from pathlib import Path

from sms_controller.corpus import dump_corpus, generate_seed_spam, generate_stream

SEED_GENERATOR_SEED = 7
STREAM_GENERATOR_SEED = 11


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path,
                    default=Path(__file__).resolve().parents[1] / "src/sms_controller/fixtures")
    args = ap.parse_args()
    header = "# label\tsender\tbody  (generated by scripts/generate_corpus.py, seed {})\n"
    (args.out / "spam-seed-100.tsv").write_text(
        header.format(SEED_GENERATOR_SEED) + dump_corpus(generate_seed_spam(100, SEED_GENERATOR_SEED)),
        encoding="utf-8")
    (args.out / "stream-500.tsv").write_text(
        header.format(STREAM_GENERATOR_SEED) + dump_corpus(generate_stream(500, seed=STREAM_GENERATOR_SEED)),
        encoding="utf-8")
    print(f"wrote corpora to {args.out}")


if __name__ == "__main__":
    main()
