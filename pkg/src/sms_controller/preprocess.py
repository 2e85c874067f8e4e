"""Stage one of the spam pipeline: sender prefiltering and keyword extraction."""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

MAX_BODY_BYTES = 4096

_STRIP_CHARS = re.compile(r"[-\s()]")
_WEIRD = re.compile(r"[^0-9+\-\s()]")
_WORD = re.compile(r"[^\W_]+")


class MessageKind(enum.Enum):
    NORMAL = "Normal"
    CHAT_WIRE = "ChatWire"


@dataclass
class SmsMessage:
    sender: str
    body: str
    timestamp: int = 0
    kind: MessageKind = MessageKind.NORMAL

    def __post_init__(self) -> None:
        if not self.sender:
            raise ValueError("sender must be non-empty")
        if len(self.body.encode("utf-8")) > MAX_BODY_BYTES:
            raise ValueError(f"body exceeds {MAX_BODY_BYTES} bytes")


def canonical_address(address: str) -> str:
    """Drop dashes, whitespace and parentheses; a leading '+' survives."""
    return _STRIP_CHARS.sub("", address)


def is_weird_sender(address: str) -> bool:
    return bool(_WEIRD.search(address))


def _canon_set(addresses: Iterable[str]) -> frozenset[str]:
    return frozenset(canonical_address(a) for a in addresses)


@dataclass
class SpamPrefilterConfig:
    blacklist: frozenset[str] = frozenset()
    spam_unknown: bool = False
    spam_weird: bool = False
    spam_specific: frozenset[str] = frozenset()
    contacts: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        self.blacklist = _canon_set(self.blacklist)
        self.spam_specific = _canon_set(self.spam_specific)
        self.contacts = _canon_set(self.contacts)


class PrefilterResult(enum.Enum):
    PASS_THROUGH = "PassThrough"
    SPAM_NO_ANALYSIS = "SpamNoAnalysis"


def prefilter_sender(msg: SmsMessage, cfg: SpamPrefilterConfig) -> PrefilterResult:
    sender = canonical_address(msg.sender)
    if (
        sender in cfg.blacklist
        or sender in cfg.spam_specific
        or (cfg.spam_unknown and sender not in cfg.contacts)
        or (cfg.spam_weird and is_weird_sender(msg.sender))
    ):
        return PrefilterResult.SPAM_NO_ANALYSIS
    return PrefilterResult.PASS_THROUGH


def tokenize(body: str) -> list[str]:
    return [t for t in (m.lower() for m in _WORD.findall(body)) if not t.isdigit()]


def remove_stopwords(tokens: Iterable[str], stoplist: frozenset[str] | set[str]) -> list[str]:
    return [t for t in tokens if t not in stoplist]


def normalize_homogeneous(tokens: Iterable[str], table: dict[str, str]) -> list[str]:
    return [table.get(t, t) for t in tokens]


def dedupe(tokens: Iterable[str]) -> list[str]:
    return list(dict.fromkeys(tokens))


@dataclass(frozen=True)
class Lexicon:
    """Stop list plus homogeneous-word table."""

    stopwords: frozenset[str] = frozenset()
    homogeneous: dict[str, str] = field(default_factory=dict)

    def keywords(self, body: str) -> list[str]:
        tokens = remove_stopwords(tokenize(body), self.stopwords)
        tokens = normalize_homogeneous(tokens, self.homogeneous)
        # a canonical form may itself be a stop word
        return dedupe(remove_stopwords(tokens, self.stopwords))


def _content_lines(text: str) -> Iterable[tuple[int, str]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\r")
        if line.strip() and not line.lstrip().startswith("#"):
            yield lineno, line


def parse_stopwords(text: str) -> frozenset[str]:
    return frozenset(line.strip().lower() for _, line in _content_lines(text))


def parse_homogeneous(text: str) -> dict[str, str]:
    table: dict[str, str] = {}
    for lineno, line in _content_lines(text):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ValueError(f"homogeneous table line {lineno}: expected form<TAB>canonical")
        table[parts[0].strip().lower()] = parts[1].strip().lower()
    return table


def load_lexicon(stopwords_path: str | Path | None = None,
                 homogeneous_path: str | Path | None = None) -> Lexicon:
    """Read the two tables; None selects the bundled fixture."""
    return Lexicon(parse_stopwords(_read(stopwords_path, "stopwords.txt")),
                   parse_homogeneous(_read(homogeneous_path, "homogeneous.tsv")))


def _read(path: str | Path | None, bundled: str) -> str:
    if path is None:
        return fixture_text(bundled)
    return Path(path).read_text(encoding="utf-8")


def fixture_path(name: str):
    return resources.files("sms_controller") / "fixtures" / name


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")
