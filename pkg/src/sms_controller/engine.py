"""Content analysis, scoring, classification and ontology learning."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .ontology import ConceptSource, SpamConcept, SpamOntology
from .preprocess import (Lexicon, PrefilterResult, SmsMessage, SpamPrefilterConfig,
                         prefilter_sender)
from .taxonomy import TaxonomyGraph


class ContractError(Exception):
    pass


class Origin(enum.Enum):
    ORIGINAL = "OriginalKeyword"
    LSO = "LsoNode"


@dataclass(frozen=True)
class Concept:
    surface: str
    sense: str | None = None  # None means unresolved
    origin: Origin = Origin.ORIGINAL

    def __post_init__(self) -> None:
        if self.origin is Origin.LSO and self.sense is None:
            raise ValueError("an LSO concept must carry a sense")

    @property
    def resolved(self) -> bool:
        return self.sense is not None


class MatchLabel(enum.Enum):
    O = "O"
    S = "S"
    H = "H"


DEFAULT_WEIGHTS = {MatchLabel.O: 1.0, MatchLabel.S: 0.50, MatchLabel.H: 0.25}


@dataclass(frozen=True)
class MatchResult:
    concept: Concept
    matched_keyword: str
    label: MatchLabel
    score: float


@dataclass(frozen=True)
class EngineConfig:
    h: int = 3
    theta: float = 1.0
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))

    def __post_init__(self) -> None:
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.h < 1:
            raise ValueError("h must be at least 1")
        if set(self.weights) != set(MatchLabel):
            raise ValueError("weights must cover O, S and H")

    def weight(self, label: MatchLabel) -> float:
        return self.weights[label]


class Classification(enum.Enum):
    SPAM = "Spam"
    LEGITIMATE = "Legitimate"


@dataclass(frozen=True)
class Verdict:
    classification: Classification
    collective_score: float
    matches: tuple[MatchResult, ...] = ()
    prefiltered: bool = False
    concepts: tuple[Concept, ...] = ()
    timestamp: int = 0

    @property
    def is_spam(self) -> bool:
        return self.classification is Classification.SPAM


@dataclass
class Pipeline:
    """Read-only dependencies shared by classification and learning."""

    graph: TaxonomyGraph
    lexicon: Lexicon = field(default_factory=Lexicon)
    prefilter: SpamPrefilterConfig = field(default_factory=SpamPrefilterConfig)
    config: EngineConfig = field(default_factory=EngineConfig)


def _sense_cost(graph: TaxonomyGraph, sense: str, others: list[list[str]], penalty: int) -> int:
    total = 0
    for candidates in others:
        best = None
        for t in candidates:
            d = graph.path_length(sense, t)
            d = penalty if d is None else d
            if best is None or d < best:
                best = d
        total += best
    return total


def disambiguate(keywords: list[str], graph: TaxonomyGraph) -> list[Concept]:
    """Pick, per keyword, the sense closest in total to the other keywords.

    Each candidate sense is scored by the sum over the other resolvable
    keywords of its shortest path (node count) to any of their senses;
    disconnected pairs cost ``len(graph) + 1``. Ties go to the smallest id.
    """
    senses = [graph.synsets_of(w) for w in keywords]
    penalty = len(graph) + 1
    out = []
    for i, word in enumerate(keywords):
        if not senses[i]:
            out.append(Concept(word))
            continue
        others = [s for j, s in enumerate(senses) if j != i and s]
        best = min(senses[i], key=lambda s: (_sense_cost(graph, s, others, penalty), s))
        out.append(Concept(word, best))
    return out


def build_concept_set(concepts: list[Concept], graph: TaxonomyGraph,
                      cfg: EngineConfig) -> list[Concept]:
    out = list(concepts)
    resolved = [c for c in concepts if c.resolved]
    for a, b in combinations(resolved, 2):
        node = graph.lso(a.sense, b.sense)
        if node is not None and graph.depth(node) >= cfg.h:
            out.append(Concept(graph.head_lemma(node), node, Origin.LSO))
    seen = set()
    unique = []
    for c in out:
        key = (c.surface, c.sense)
        if key not in seen:
            seen.add(key)
            unique.append(c)
    return unique


_PRECEDENCE = (MatchLabel.O, MatchLabel.S, MatchLabel.H)


def _label_for(surface: str, sc: SpamConcept) -> MatchLabel | None:
    if surface == sc.keyword:
        return MatchLabel.O
    if surface in sc.synonyms:
        return MatchLabel.S
    if surface in sc.hypernyms:
        return MatchLabel.H
    return None


def match_concepts(cset: list[Concept], ontology: SpamOntology,
                   cfg: EngineConfig | None = None) -> list[MatchResult]:
    """At most one match per concept: the best label anywhere in the store,
    ties resolved by keyword order."""
    cfg = cfg or EngineConfig()
    spam = ontology.sorted_concepts()
    results = []
    for c in cset:
        best: tuple[int, SpamConcept, MatchLabel] | None = None
        for sc in spam:
            label = _label_for(c.surface, sc)
            if label is None:
                continue
            rank = _PRECEDENCE.index(label)
            if best is None or rank < best[0]:
                best = (rank, sc, label)
                if rank == 0:
                    break
        if best is not None:
            _, sc, label = best
            results.append(MatchResult(c, sc.keyword, label, cfg.weight(label)))
    return results


def collective_score(matches: list[MatchResult]) -> float:
    return float(sum((Fraction(m.score) for m in matches), Fraction(0)))


def analyze(body: str, pipeline: Pipeline, ontology: SpamOntology,
            timestamp: int = 0) -> Verdict:
    """Content stages only (no sender prefilter)."""
    keywords = pipeline.lexicon.keywords(body)
    concepts = disambiguate(keywords, pipeline.graph)
    cset = build_concept_set(concepts, pipeline.graph, pipeline.config)
    matches = match_concepts(cset, ontology, pipeline.config)
    cs = collective_score(matches)
    label = Classification.SPAM if cs >= pipeline.config.theta else Classification.LEGITIMATE
    return Verdict(label, cs, tuple(matches), False, tuple(cset), timestamp)


def classify(msg: SmsMessage, pipeline: Pipeline, ontology: SpamOntology) -> Verdict:
    if prefilter_sender(msg, pipeline.prefilter) is PrefilterResult.SPAM_NO_ANALYSIS:
        return Verdict(Classification.SPAM, 0.0, prefiltered=True, timestamp=msg.timestamp)
    with ontology.lock:
        return analyze(msg.body, pipeline, ontology, msg.timestamp)


def _concept_record(c: Concept, graph: TaxonomyGraph, at: int) -> SpamConcept:
    if c.sense is None:
        return SpamConcept(c.surface, added_at=at, source=ConceptSource.ENHANCEMENT)
    return SpamConcept(c.surface, frozenset(graph.synonyms(c.sense)),
                       frozenset(graph.hypernyms(c.sense)), at, ConceptSource.ENHANCEMENT)


def enhance_ontology(ontology: SpamOntology, verdict: Verdict,
                     graph: TaxonomyGraph) -> SpamOntology:
    """Add every concept of a spam verdict that the store does not know yet."""
    if not verdict.is_spam or verdict.prefiltered:
        raise ContractError("enhancement needs a content-classified spam verdict")
    ontology.add_many(_concept_record(c, graph, verdict.timestamp) for c in verdict.concepts)
    return ontology


class Correction(enum.Enum):
    NOT_SPAM = "NotSpam"
    IS_SPAM = "IsSpam"


def apply_feedback(ontology: SpamOntology, msg: SmsMessage, correction: Correction,
                   pipeline: Pipeline) -> SpamOntology:
    with ontology.lock:
        verdict = analyze(msg.body, pipeline, ontology, msg.timestamp)
        if correction is Correction.NOT_SPAM:
            ontology.retract((m.matched_keyword for m in verdict.matches), msg.timestamp)
        else:
            ontology.unretract(c.surface for c in verdict.concepts)
            forced = Verdict(Classification.SPAM, verdict.collective_score, verdict.matches,
                             False, verdict.concepts, msg.timestamp)
            enhance_ontology(ontology, forced, pipeline.graph)
    return ontology


def build_seed_ontology(spam_corpus: list[SmsMessage], pipeline: Pipeline) -> SpamOntology:
    """Every resolved concept of every known-spam message becomes a Seed concept."""
    if not spam_corpus:
        raise ValueError("seed corpus is empty")
    records: dict[str, SpamConcept] = {}
    graph = pipeline.graph
    for msg in spam_corpus:
        concepts = disambiguate(pipeline.lexicon.keywords(msg.body), graph)
        for c in build_concept_set(concepts, graph, pipeline.config):
            if c.sense is None or c.surface in records:
                continue
            records[c.surface] = SpamConcept(c.surface, frozenset(graph.synonyms(c.sense)),
                                             frozenset(graph.hypernyms(c.sense)),
                                             msg.timestamp, ConceptSource.SEED)
    return SpamOntology(records.values())
