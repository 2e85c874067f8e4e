"""CLI configuration: an INI file plus flag overrides (flags win).

Example::

    [paths]
    taxonomy = taxonomy.tsv        ; relative to this file
    stopwords = stopwords.txt
    homogeneous = homogeneous.tsv
    ontology = ontology.tsv
    seed_corpus = spam-seed-100.tsv

    [engine]
    theta = 1.0
    h = 3
    weight_o = 1.0
    weight_s = 0.5
    weight_h = 0.25
    seed = 0

    [prefilter]
    blacklist = +15550000001, +15550000002
    spam_unknown = false
    spam_weird = true
    spam_specific =
    contacts = +15551230000

Any missing path falls back to the bundled fixture (``ontology`` defaults to
``ontology.tsv`` in the working directory).
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import LabeledSms, load_corpus, parse_corpus
from .engine import EngineConfig, MatchLabel, Pipeline
from .ontology import SpamOntology, load_ontology
from .preprocess import SpamPrefilterConfig, fixture_path, fixture_text, load_lexicon
from .taxonomy import TaxonomyError, load_taxonomy

ENV_VAR = "SMS_CONTROLLER_CONFIG"


class ConfigLoadError(Exception):
    pass


@dataclass
class CliConfig:
    taxonomy: Path | None = None
    stopwords: Path | None = None
    homogeneous: Path | None = None
    ontology: Path = Path("ontology.tsv")
    seed_corpus: Path | None = None
    theta: float = 1.0
    h: int = 3
    weights: dict = field(default_factory=lambda: {MatchLabel.O: 1.0, MatchLabel.S: 0.5,
                                                   MatchLabel.H: 0.25})
    seed: int = 0
    prefilter: SpamPrefilterConfig = field(default_factory=SpamPrefilterConfig)

    def engine_config(self) -> EngineConfig:
        return EngineConfig(h=self.h, theta=self.theta, weights=dict(self.weights))

    def pipeline(self) -> Pipeline:
        try:
            if self.taxonomy is None:
                with fixture_path("taxonomy-small.tsv").open("rb") as fh:
                    graph = load_taxonomy(fh)
            else:
                graph = load_taxonomy(self.taxonomy)
            lexicon = load_lexicon(self.stopwords, self.homogeneous)
            return Pipeline(graph, lexicon, self.prefilter, self.engine_config())
        except (OSError, TaxonomyError, ValueError) as exc:
            raise ConfigLoadError(f"cannot load resources: {exc}") from exc

    def load_ontology(self) -> SpamOntology:
        if not self.ontology.exists():
            return SpamOntology()
        try:
            return load_ontology(self.ontology)
        except (OSError, ValueError) as exc:
            raise ConfigLoadError(f"cannot load ontology {self.ontology}: {exc}") from exc

    def seed_messages(self) -> list[LabeledSms]:
        try:
            if self.seed_corpus is None:
                return parse_corpus(fixture_text("spam-seed-100.tsv"))
            return load_corpus(self.seed_corpus)
        except (OSError, ValueError) as exc:
            raise ConfigLoadError(f"cannot load seed corpus: {exc}") from exc


def _list(value: str) -> frozenset[str]:
    return frozenset(x.strip() for x in value.split(",") if x.strip())


def load_config(path: str | Path | None) -> CliConfig:
    cfg = CliConfig()
    if path is None:
        return cfg
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";",))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigLoadError(f"cannot read config {path}: {exc}") from exc
    base = path.parent
    try:
        if parser.has_section("paths"):
            sec = parser["paths"]
            for key in ("taxonomy", "stopwords", "homogeneous", "seed_corpus", "ontology"):
                if sec.get(key):
                    setattr(cfg, key, base / sec[key])
        if parser.has_section("engine"):
            sec = parser["engine"]
            cfg.theta = sec.getfloat("theta", cfg.theta)
            cfg.h = sec.getint("h", cfg.h)
            cfg.seed = sec.getint("seed", cfg.seed)
            for label in MatchLabel:
                cfg.weights[label] = sec.getfloat(f"weight_{label.value.lower()}",
                                                  cfg.weights[label])
        if parser.has_section("prefilter"):
            sec = parser["prefilter"]
            cfg.prefilter = SpamPrefilterConfig(
                blacklist=_list(sec.get("blacklist", "")),
                spam_unknown=sec.getboolean("spam_unknown", False),
                spam_weird=sec.getboolean("spam_weird", False),
                spam_specific=_list(sec.get("spam_specific", "")),
                contacts=_list(sec.get("contacts", "")))
    except ValueError as exc:
        raise ConfigLoadError(f"bad value in {path}: {exc}") from exc
    for key in ("taxonomy", "stopwords", "homogeneous", "seed_corpus"):
        p = getattr(cfg, key)
        if p is not None and not p.exists():
            raise ConfigLoadError(f"{key} file not found: {p}")
    return cfg
