"""Spam ontology knowledge base and its on-disk format.

One record per line, tab separated::

    keyword <TAB> syn1,syn2 <TAB> hyp1,hyp2 <TAB> source <TAB> added_at

``source`` is ``Seed`` or ``Enhancement`` for live concepts. Keywords the
user has flagged as legitimate are kept as ``Retracted`` records with empty
synonym and hypernym columns; enhancement will not re-learn them.
"""
from __future__ import annotations

import enum
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator


class ConceptSource(enum.Enum):
    SEED = "Seed"
    ENHANCEMENT = "Enhancement"


RETRACTED = "Retracted"


@dataclass(frozen=True)
class SpamConcept:
    keyword: str
    synonyms: frozenset[str] = frozenset()
    hypernyms: frozenset[str] = frozenset()
    added_at: int = 0
    source: ConceptSource = ConceptSource.SEED

    def __post_init__(self) -> None:
        object.__setattr__(self, "keyword", self.keyword.lower())
        object.__setattr__(self, "synonyms",
                           frozenset(s.lower() for s in self.synonyms) - {self.keyword})
        object.__setattr__(self, "hypernyms", frozenset(h.lower() for h in self.hypernyms))


class SpamOntology:
    """Keyword -> SpamConcept store with a revision counter.

    Writers hold ``lock``; every mutating call that changes something bumps
    ``revision`` by exactly one.
    """

    def __init__(self, concepts: Iterable[SpamConcept] = (), retracted: Iterable[str] = (),
                 revision: int = 0):
        self._concepts: dict[str, SpamConcept] = {}
        for c in concepts:
            if c.keyword in self._concepts:
                raise ValueError(f"duplicate keyword {c.keyword!r}")
            self._concepts[c.keyword] = c
        self._retracted: dict[str, int] = {k: 0 for k in retracted}
        self.revision = revision
        self.lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._concepts)

    def __contains__(self, keyword: str) -> bool:
        return keyword in self._concepts

    def __iter__(self) -> Iterator[SpamConcept]:
        return iter(self.sorted_concepts())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpamOntology):
            return NotImplemented
        return (self._concepts == other._concepts
                and self._retracted.keys() == other._retracted.keys()
                and self.revision == other.revision)

    def get(self, keyword: str) -> SpamConcept | None:
        return self._concepts.get(keyword)

    def sorted_concepts(self) -> list[SpamConcept]:
        return [self._concepts[k] for k in sorted(self._concepts)]

    @property
    def retracted(self) -> frozenset[str]:
        return frozenset(self._retracted)

    def copy(self) -> "SpamOntology":
        with self.lock:
            dup = SpamOntology(self._concepts.values(), revision=self.revision)
            dup._retracted = dict(self._retracted)
            return dup

    def add_many(self, concepts: Iterable[SpamConcept]) -> list[str]:
        """Insert concepts whose keyword is new; returns keywords added."""
        with self.lock:
            added = []
            for c in concepts:
                if c.keyword in self._concepts or c.keyword in self._retracted:
                    continue
                self._concepts[c.keyword] = c
                added.append(c.keyword)
            if added:
                self.revision += 1
            return added

    def retract(self, keywords: Iterable[str], at: int = 0) -> list[str]:
        """Drop Enhancement concepts and remember them; Seed concepts stay."""
        with self.lock:
            removed = []
            for k in sorted(set(keywords)):
                c = self._concepts.get(k)
                if c is None or c.source is not ConceptSource.ENHANCEMENT:
                    continue
                del self._concepts[k]
                self._retracted[k] = at
                removed.append(k)
            if removed:
                self.revision += 1
            return removed

    def unretract(self, keywords: Iterable[str]) -> list[str]:
        with self.lock:
            cleared = [k for k in sorted(set(keywords)) if k in self._retracted]
            for k in cleared:
                del self._retracted[k]
            if cleared:
                self.revision += 1
            return cleared

    # persistence

    def to_lines(self) -> list[str]:
        lines = [f"# revision {self.revision}"]
        for c in self.sorted_concepts():
            lines.append("\t".join([c.keyword, ",".join(sorted(c.synonyms)),
                                    ",".join(sorted(c.hypernyms)), c.source.value,
                                    str(c.added_at)]))
        for k in sorted(self._retracted):
            lines.append("\t".join([k, "", "", RETRACTED, str(self._retracted[k])]))
        return lines

    def dumps(self) -> str:
        return "\n".join(self.to_lines()) + "\n"

    def save(self, path: str | Path) -> None:
        """Atomic rewrite: temp file in the same directory, then rename."""
        path = Path(path)
        with self.lock:
            text = self.dumps()
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _split(text: str) -> frozenset[str]:
    return frozenset(x for x in text.split(",") if x)


def parse_ontology(text: str) -> SpamOntology:
    concepts = []
    retracted: dict[str, int] = {}
    revision = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "revision" and parts[1].isdigit():
                revision = int(parts[1])
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise ValueError(f"ontology line {lineno}: expected 5 tab-separated fields")
        keyword, syns, hyps, source, added_at = fields
        try:
            stamp = int(added_at)
        except ValueError:
            raise ValueError(f"ontology line {lineno}: bad added_at {added_at!r}") from None
        if source == RETRACTED:
            retracted[keyword] = stamp
            continue
        try:
            src = ConceptSource(source)
        except ValueError:
            raise ValueError(f"ontology line {lineno}: unknown source {source!r}") from None
        concepts.append(SpamConcept(keyword, _split(syns), _split(hyps), stamp, src))
    onto = SpamOntology(concepts, revision=revision)
    onto._retracted = retracted
    return onto


def load_ontology(path: str | Path) -> SpamOntology:
    return parse_ontology(Path(path).read_text(encoding="utf-8"))
