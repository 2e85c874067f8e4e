"""Lexical taxonomy: a small WordNet-style hypernym DAG with a lemma index.

The file format is line based and tab separated::

    synset_id <TAB> lemma1,lemma2 <TAB> hypernym_id1,hypernym_id2 <TAB> gloss

An empty hypernym field marks a root. Lines starting with ``#`` and blank
lines are ignored. The gloss column is optional.
"""
from __future__ import annotations

import io
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping


class TaxonomyError(Exception):
    pass


class TaxonomyParseError(TaxonomyError):
    def __init__(self, lineno: int, reason: str):
        super().__init__(f"line {lineno}: {reason}")
        self.lineno = lineno
        self.reason = reason


class TaxonomyStructureError(TaxonomyError):
    pass


class UnknownSynsetError(KeyError):
    pass


@dataclass(frozen=True)
class Synset:
    id: str
    lemmas: frozenset[str]
    hypernym_ids: tuple[str, ...] = ()
    gloss: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "lemmas", frozenset(self.lemmas))
        object.__setattr__(self, "hypernym_ids", tuple(self.hypernym_ids))
        if not self.lemmas:
            raise TaxonomyStructureError(f"synset {self.id} has no lemmas")

    @property
    def is_root(self) -> bool:
        return not self.hypernym_ids


def _valid_lemma(lemma: str) -> bool:
    return bool(lemma) and lemma == lemma.lower() and not any(c.isspace() for c in lemma)


@dataclass
class TaxonomyGraph:
    """Immutable after construction; query caches are filled lazily."""

    synsets: Mapping[str, Synset]
    lemma_index: Mapping[str, frozenset[str]] = field(init=False)
    root_ids: frozenset[str] = field(init=False)

    def __post_init__(self) -> None:
        index: dict[str, set[str]] = {}
        for s in self.synsets.values():
            for lemma in s.lemmas:
                index.setdefault(lemma, set()).add(s.id)
        self.lemma_index = {k: frozenset(v) for k, v in index.items()}
        self.root_ids = frozenset(s.id for s in self.synsets.values() if s.is_root)
        self._validate()
        self._neighbours = self._undirected_adjacency()
        self._depth = self._root_distances()
        self._bfs_cache: dict[str, dict[str, int]] = {}
        self._ancestor_cache: dict[str, frozenset[str]] = {}

    @classmethod
    def from_synsets(cls, synsets: Iterable[Synset]) -> "TaxonomyGraph":
        table: dict[str, Synset] = {}
        for s in synsets:
            if s.id in table:
                raise TaxonomyStructureError(f"duplicate synset id {s.id!r}")
            table[s.id] = s
        return cls(table)

    def _validate(self) -> None:
        for s in self.synsets.values():
            if not s.lemmas:
                raise TaxonomyStructureError(f"synset {s.id!r} has no lemmas")
            for lemma in s.lemmas:
                if not _valid_lemma(lemma):
                    raise TaxonomyStructureError(f"synset {s.id!r}: invalid lemma {lemma!r}")
            for parent in s.hypernym_ids:
                if parent not in self.synsets:
                    raise TaxonomyStructureError(
                        f"synset {s.id!r} references unknown hypernym {parent!r}")
        edge = self._find_cycle_edge()
        if edge is not None:
            raise TaxonomyStructureError(f"hypernym cycle through edge {edge[0]} -> {edge[1]}")

    def _find_cycle_edge(self) -> tuple[str, str] | None:
        # iterative three-colour DFS over child -> parent edges
        WHITE, GREY, BLACK = 0, 1, 2
        colour = dict.fromkeys(self.synsets, WHITE)
        for start in sorted(self.synsets):
            if colour[start] != WHITE:
                continue
            colour[start] = GREY
            stack = [(start, iter(self.synsets[start].hypernym_ids))]
            while stack:
                node, parents = stack[-1]
                advanced = False
                for p in parents:
                    if colour[p] == GREY:
                        return (node, p)
                    if colour[p] == WHITE:
                        colour[p] = GREY
                        stack.append((p, iter(self.synsets[p].hypernym_ids)))
                        advanced = True
                        break
                if not advanced:
                    colour[node] = BLACK
                    stack.pop()
        return None

    def _undirected_adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {sid: set() for sid in self.synsets}
        for s in self.synsets.values():
            for p in s.hypernym_ids:
                adj[s.id].add(p)
                adj[p].add(s.id)
        return adj

    def _root_distances(self) -> dict[str, int]:
        children: dict[str, list[str]] = {sid: [] for sid in self.synsets}
        for s in self.synsets.values():
            for p in s.hypernym_ids:
                children[p].append(s.id)
        depth = {r: 1 for r in self.root_ids}
        queue = deque(sorted(self.root_ids))
        while queue:
            node = queue.popleft()
            for c in children[node]:
                if c not in depth:
                    depth[c] = depth[node] + 1
                    queue.append(c)
        return depth

    def _require(self, sid: str) -> Synset:
        try:
            return self.synsets[sid]
        except KeyError:
            raise UnknownSynsetError(sid) from None

    def __len__(self) -> int:
        return len(self.synsets)

    @property
    def edge_count(self) -> int:
        return sum(len(s.hypernym_ids) for s in self.synsets.values())

    def synsets_of(self, lemma: str) -> list[str]:
        return sorted(self.lemma_index.get(lemma.lower(), ()))

    def path_length(self, a: str, b: str) -> int | None:
        """Node count on the shortest undirected path, endpoints included.

        Returns None when the two synsets are disconnected.
        """
        self._require(a)
        self._require(b)
        dist = self._bfs_cache.get(a)
        if dist is None:
            dist = {a: 0}
            queue = deque([a])
            while queue:
                node = queue.popleft()
                for nb in self._neighbours[node]:
                    if nb not in dist:
                        dist[nb] = dist[node] + 1
                        queue.append(nb)
            self._bfs_cache[a] = dist
        edges = dist.get(b)
        return None if edges is None else edges + 1

    def depth(self, sid: str) -> int:
        self._require(sid)
        return self._depth[sid]

    def ancestors(self, sid: str) -> frozenset[str]:
        """Reflexive set of hypernym ancestors."""
        self._require(sid)
        cached = self._ancestor_cache.get(sid)
        if cached is not None:
            return cached
        seen = {sid}
        stack = [sid]
        while stack:
            for p in self.synsets[stack.pop()].hypernym_ids:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        result = frozenset(seen)
        self._ancestor_cache[sid] = result
        return result

    def lso(self, a: str, b: str) -> str | None:
        common = self.ancestors(a) & self.ancestors(b)
        if not common:
            return None
        # deepest first, then smallest id
        return min(common, key=lambda s: (-self._depth[s], s))

    def synonyms(self, sid: str) -> set[str]:
        return set(self._require(sid).lemmas)

    def hypernyms(self, sid: str) -> set[str]:
        out: set[str] = set()
        for p in self._require(sid).hypernym_ids:
            out |= self.synsets[p].lemmas
        return out

    def head_lemma(self, sid: str) -> str:
        return min(self._require(sid).lemmas)


def _split_list(field_text: str) -> list[str]:
    return [x.strip() for x in field_text.split(",") if x.strip()]


def parse_taxonomy(lines: Iterable[str]) -> TaxonomyGraph:
    synsets: dict[str, Synset] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 3 or len(fields) > 4:
            raise TaxonomyParseError(lineno, f"expected 3 or 4 tab-separated fields, got {len(fields)}")
        sid = fields[0].strip()
        if not sid:
            raise TaxonomyParseError(lineno, "empty synset id")
        lemmas = _split_list(fields[1])
        if not lemmas:
            raise TaxonomyParseError(lineno, "empty lemma list")
        for lemma in lemmas:
            if not _valid_lemma(lemma):
                raise TaxonomyParseError(lineno, f"invalid lemma {lemma!r}")
        if sid in synsets:
            raise TaxonomyParseError(lineno, f"duplicate synset id {sid!r}")
        gloss = fields[3].strip() if len(fields) == 4 else ""
        synsets[sid] = Synset(sid, frozenset(lemmas), tuple(_split_list(fields[2])), gloss)
    return TaxonomyGraph(synsets)


def load_taxonomy(source: IO[bytes] | IO[str] | str | Path) -> TaxonomyGraph:
    """Load a taxonomy from a path or an open (byte or text) stream."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return parse_taxonomy(fh)
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return parse_taxonomy(io.StringIO(data))


# module-level aliases matching the operation names used elsewhere
def synsets_of(graph: TaxonomyGraph, lemma: str) -> list[str]:
    return graph.synsets_of(lemma)


def path_length(graph: TaxonomyGraph, a: str, b: str) -> int | None:
    return graph.path_length(a, b)


def lso(graph: TaxonomyGraph, a: str, b: str) -> str | None:
    return graph.lso(a, b)


def depth(graph: TaxonomyGraph, s: str) -> int:
    return graph.depth(s)


def synonyms(graph: TaxonomyGraph, s: str) -> set[str]:
    return graph.synonyms(s)


def hypernyms(graph: TaxonomyGraph, s: str) -> set[str]:
    return graph.hypernyms(s)
