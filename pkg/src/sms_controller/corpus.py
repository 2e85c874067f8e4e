"""Labelled SMS corpora: file I/O and the synthetic generator behind the fixtures.

Corpus files hold one message per line: ``label<TAB>sender<TAB>body`` where
label is ``spam`` or ``ham``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .preprocess import SmsMessage


@dataclass(frozen=True)
class LabeledSms:
    message: SmsMessage
    is_spam: bool


def parse_corpus(text: str) -> list[LabeledSms]:
    items = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3 or parts[0] not in ("spam", "ham"):
            raise ValueError(f"corpus line {lineno}: expected spam|ham<TAB>sender<TAB>body")
        items.append(LabeledSms(SmsMessage(parts[1], parts[2], timestamp=lineno),
                                parts[0] == "spam"))
    return items


def load_corpus(path: str | Path) -> list[LabeledSms]:
    return parse_corpus(Path(path).read_text(encoding="utf-8"))


def dump_corpus(items: list[LabeledSms]) -> str:
    lines = [f"{'spam' if it.is_spam else 'ham'}\t{it.message.sender}\t{it.message.body}"
             for it in items]
    return "\n".join(lines) + "\n"


# Vocabulary for the synthetic corpora. Seed spam uses SEED_SPAM words only;
# the evaluation stream adds NOVEL_SPAM words the seed never saw, and both
# spam and ham draw on SHARED words that spammers pad messages with.
SEED_SPAM = ["free", "prize", "winner", "cash", "win", "claim", "jackpot", "lottery",
             "urgent", "bonus", "award", "exclusive"]
NOVEL_SPAM = ["loan", "credit", "discount", "rebate", "subscribe", "promo", "voucher",
              "advertize", "deal", "offer", "competition", "giveaway", "funds", "customer",
              "limited", "purchase",
              # outside the taxonomy: learnt as unresolved concepts
              "ringtone", "cashback", "casino", "mortgage", "insurance", "refund", "premium",
              "sweepstakes", "coupon", "clearance", "bargain", "investment", "trial",
              "membership", "pharmacy", "dating", "crypto", "tariff"]
SHARED = ["call", "text", "today", "tonight", "tomorrow", "reply", "phone", "link",
          "news", "update", "weekend"]
HAM_ONLY = ["meeting", "lunch", "dinner", "breakfast", "coffee", "home", "office",
            "school", "mom", "dad", "friend", "party", "birthday", "busy", "meet",
            "chat", "talk", "family", "appointment", "house", "work", "buddy"]
FILLER = ["you", "your", "the", "to", "a", "is", "for", "now", "and", "with", "on",
          "me", "we", "at", "in", "please", "this"]
SPAM_TEMPLATES = ["{} {} {} {}", "{} {} {}! {} {}", "{}: {} {} {} {}"]


def _spam_sender(rng: random.Random) -> str:
    return f"+44{rng.randrange(7000000000, 7999999999)}"


def _ham_sender(rng: random.Random) -> str:
    return f"+1555{rng.randrange(1000000, 9999999)}"


def _sentence(rng: random.Random, words: list[str]) -> str:
    picked = list(words)
    for _ in range(rng.randint(1, 3)):
        picked.insert(rng.randrange(len(picked) + 1), rng.choice(FILLER))
    return " ".join(picked)


def generate_seed_spam(n: int = 100, seed: int = 7) -> list[LabeledSms]:
    rng = random.Random(seed)
    out = []
    for i in range(n):
        words = rng.sample(SEED_SPAM, rng.randint(2, 3))
        if i < len(SEED_SPAM):
            words[0] = SEED_SPAM[i]  # every seed word appears at least once
        out.append(LabeledSms(SmsMessage(_spam_sender(rng), _sentence(rng, words)), True))
    return out


def generate_stream(n: int = 500, spam_fraction: float = 0.5, seed: int = 11,
                    novel_rate: float = 0.85, shared_rate: float = 0.3) -> list[LabeledSms]:
    """Mixed spam/ham stream; spam leans on words the seed ontology lacks."""
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        if rng.random() < spam_fraction:
            words = []
            for _ in range(rng.randint(2, 3)):
                pool = NOVEL_SPAM if rng.random() < novel_rate else SEED_SPAM
                words.append(rng.choice(pool))
            if rng.random() < shared_rate:
                words.append(rng.choice(SHARED))
            rng.shuffle(words)
            out.append(LabeledSms(SmsMessage(_spam_sender(rng), _sentence(rng, words)), True))
        else:
            words = rng.sample(HAM_ONLY, rng.randint(1, 3))
            if rng.random() < shared_rate:
                words.append(rng.choice(SHARED))
            rng.shuffle(words)
            out.append(LabeledSms(SmsMessage(_ham_sender(rng), _sentence(rng, words)), False))
    return out
