#!/usr/bin/env python3
"""Detection and false-positive trends with and without user feedback.

    python scripts/run_experiment.py [--corpus FILE] [--batches 5]

Prints one tab-separated table with both runs side by side, ready for
plotting with any tool.
"""
import argparse

from sms_controller.config import CliConfig
from sms_controller.corpus import load_corpus, parse_corpus
from sms_controller.engine import build_seed_ontology
from sms_controller.experiment import run_spam_experiment
from sms_controller.preprocess import fixture_text


def fmt(value):
    return "n/a" if value is None else f"{value:.2f}"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", help="labelled corpus (default: bundled 500-message stream)")
    ap.add_argument("--batches", type=int, default=5)
    args = ap.parse_args()

    cfg = CliConfig()
    pipeline = cfg.pipeline()
    corpus = load_corpus(args.corpus) if args.corpus else parse_corpus(fixture_text("stream-500.tsv"))
    seed = build_seed_ontology([x.message for x in cfg.seed_messages() if x.is_spam], pipeline)
    off = run_spam_experiment(corpus, seed, args.batches, False, pipeline)
    on = run_spam_experiment(corpus, seed, args.batches, True, pipeline)

    print("batch\tdetection_no_fb\tfp_no_fb\tdetection_fb\tfp_fb")
    for a, b in zip(off, on):
        print(f"{a.batch}\t{fmt(a.detection_pct)}\t{fmt(a.false_positive_pct)}"
              f"\t{fmt(b.detection_pct)}\t{fmt(b.false_positive_pct)}")


if __name__ == "__main__":
    main()
