"""Command-line front end.

    sms-controller classify [FILE]
    sms-controller experiment [CORPUS] --batches 5 [--feedback]
    sms-controller scenario FILE [--seed N]
    sms-controller ontology show|seed|feedback ...
"""
from __future__ import annotations

import argparse
import os
import sys

from .config import ENV_VAR, CliConfig, ConfigLoadError, load_config
from .corpus import load_corpus, parse_corpus
from .engine import Correction, apply_feedback, build_seed_ontology, classify
from .experiment import format_trend_table, run_spam_experiment
from .preprocess import SmsMessage, fixture_text
from .sim import Resources, ScenarioError, load_scenario, run_scenario


def _settings(args: argparse.Namespace) -> CliConfig:
    cfg = load_config(getattr(args, "config", None) or os.environ.get(ENV_VAR))
    for key in ("theta", "h", "seed"):
        if getattr(args, key, None) is not None:
            setattr(cfg, key, getattr(args, key))
    return cfg


def verdict_line(verdict) -> str:
    label = "SPAM" if verdict.is_spam else "HAM"
    matched = ",".join(f"{m.concept.surface}:{m.label.value}" for m in verdict.matches) or "-"
    return f"{label}\t{verdict.collective_score}\t{matched}"


def cmd_classify(args, cfg: CliConfig, out) -> int:
    pipeline = cfg.pipeline()
    ontology = cfg.load_ontology()
    stream = open(args.input, encoding="utf-8") if args.input else sys.stdin
    try:
        for lineno, raw in enumerate(stream, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            sender, sep, body = line.partition("\t")
            try:
                if not sep:
                    raise ValueError("expected sender<TAB>body")
                msg = SmsMessage(sender, body, timestamp=lineno)
            except ValueError as exc:
                print(f"ERROR\tline {lineno}: {exc}", file=out)
                continue
            print(verdict_line(classify(msg, pipeline, ontology)), file=out)
    finally:
        if stream is not sys.stdin:
            stream.close()
    return 0


def cmd_experiment(args, cfg: CliConfig, out) -> int:
    pipeline = cfg.pipeline()
    if args.batches < 2:
        print("error: --batches must be at least 2", file=sys.stderr)
        return 2
    corpus = (load_corpus(args.corpus) if args.corpus
              else parse_corpus(fixture_text("stream-500.tsv")))
    if args.ontology_file:
        seed_ontology = cfg.load_ontology()
    else:
        seed_ontology = build_seed_ontology(
            [x.message for x in cfg.seed_messages() if x.is_spam], pipeline)
    rows = run_spam_experiment(corpus, seed_ontology, args.batches, args.feedback, pipeline)
    out.write(format_trend_table(rows))
    return 0


def cmd_scenario(args, cfg: CliConfig, out) -> int:
    pipeline = cfg.pipeline()
    scenario = load_scenario(args.path)
    res = Resources(pipeline, [x.message for x in cfg.seed_messages() if x.is_spam])
    result = run_scenario(scenario, cfg.seed, res)
    out.write(result.text())
    for a in result.assertions:
        if not a.passed:
            print(a.line(), file=sys.stderr)
    return 0 if result.passed else 1


ONTOLOGY_HEADER = "keyword\tsynonyms\thypernyms\tsource\tadded_at"


def cmd_ontology(args, cfg: CliConfig, out) -> int:
    pipeline = cfg.pipeline()
    if args.action == "show":
        onto = cfg.load_ontology()
        print(ONTOLOGY_HEADER, file=out)
        for c in onto.sorted_concepts():
            print(f"{c.keyword}\t{','.join(sorted(c.synonyms))}\t{','.join(sorted(c.hypernyms))}"
                  f"\t{c.source.value}\t{c.added_at}", file=out)
        return 0
    if args.action == "seed":
        items = load_corpus(args.corpus) if args.corpus else cfg.seed_messages()
        onto = build_seed_ontology([x.message for x in items if x.is_spam], pipeline)
        onto.save(cfg.ontology)
        print(f"seeded {len(onto)} concepts into {cfg.ontology}", file=out)
        return 0
    # feedback
    onto = cfg.load_ontology()
    before = set(c.keyword for c in onto.sorted_concepts())
    revision = onto.revision
    correction = Correction.NOT_SPAM if args.correction == "notspam" else Correction.IS_SPAM
    apply_feedback(onto, SmsMessage(args.sender, args.body), correction, pipeline)
    if onto.revision == revision:
        print("no change", file=out)
        return 0
    after = set(c.keyword for c in onto.sorted_concepts())
    onto.save(cfg.ontology)
    if before - after:
        print(f"removed\t{','.join(sorted(before - after))}", file=out)
    if after - before:
        print(f"added\t{','.join(sorted(after - before))}", file=out)
    print(f"revision\t{onto.revision}", file=out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps nested subparsers from resetting values given earlier
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help=f"INI config file (default: ${ENV_VAR})")
    common.add_argument("--theta", type=float, help="spam threshold on the collective score")
    common.add_argument("--h", type=int, help="minimum depth for an LSO concept")
    common.add_argument("--seed", type=int, help="seed for chat-code generation")

    ap = argparse.ArgumentParser(prog="sms-controller", description="ontology-based SMS controller")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="classify sender<TAB>body lines")
    p.add_argument("input", nargs="?", help="input file (default: stdin)")

    p = sub.add_parser("experiment", parents=[common], help="batch detection / false-positive trend")
    p.add_argument("corpus", nargs="?", help="labelled corpus (default: bundled 500-message stream)")
    p.add_argument("--batches", type=int, default=5)
    p.add_argument("--feedback", action="store_true", help="apply NotSpam feedback on false positives")
    p.add_argument("--ontology-file", action="store_true",
                   help="start from the configured ontology file instead of the seed corpus")

    p = sub.add_parser("scenario", parents=[common], help="run a scripted multi-device scenario")
    p.add_argument("path")

    p = sub.add_parser("ontology", parents=[common], help="inspect or update the ontology file")
    osub = p.add_subparsers(dest="action", required=True)
    osub.add_parser("show", parents=[common])
    s = osub.add_parser("seed", parents=[common])
    s.add_argument("corpus", nargs="?", help="labelled corpus; spam lines seed the ontology")
    f = osub.add_parser("feedback", parents=[common])
    f.add_argument("correction", choices=["notspam", "isspam"])
    f.add_argument("body")
    f.add_argument("--sender", default="+10000000000")
    return ap


COMMANDS = {"classify": cmd_classify, "experiment": cmd_experiment,
            "scenario": cmd_scenario, "ontology": cmd_ontology}


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = _settings(args)
        return COMMANDS[args.command](args, cfg, out)
    except (ConfigLoadError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
