"""Auto-reply profiles, scheduled and birthday messages, and the auto-message report.

Timestamps are integer milliseconds since the epoch and are read as device
local time without a zone (the simulator has no timezone database).
"""
from __future__ import annotations

import datetime as dt
import enum
import shlex
from dataclasses import dataclass, field
from typing import Iterable

from .preprocess import (MessageKind, SmsMessage, SpamPrefilterConfig, canonical_address)

DEFAULT_REPLY = "I am busy right now and will get back to you later."
DEFAULT_BIRTHDAY_WISH = "Happy birthday! Have a wonderful day."
BIRTHDAY_HOUR = 9
REPLY_WINDOW_MS = 10 * 60 * 1000
_EPOCH = dt.datetime(1970, 1, 1)


class ConfigError(ValueError):
    pass


class Recurrence(enum.Enum):
    ONCE = "Once"
    YEARLY = "Yearly"


class Cause(enum.Enum):
    AUTO_REPLY = "AutoReply"
    EVENT = "Event"
    BIRTHDAY = "Birthday"


def to_datetime(ms: int) -> dt.datetime:
    return _EPOCH + dt.timedelta(milliseconds=ms)


def to_millis(moment: dt.datetime) -> int:
    delta = moment - _EPOCH
    return (delta.days * 86_400 + delta.seconds) * 1000 + delta.microseconds // 1000


def clamp_date(year: int, month: int, day: int) -> dt.date:
    """Feb 29 falls back to Feb 28 outside leap years."""
    if month == 2 and day == 29:
        try:
            return dt.date(year, 2, 29)
        except ValueError:
            return dt.date(year, 2, 28)
    return dt.date(year, month, day)


@dataclass(frozen=True)
class Group:
    title: str
    members: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", frozenset(canonical_address(m) for m in self.members))


@dataclass(frozen=True)
class Profile:
    title: str
    reply_text: str


@dataclass
class AutoReplyState:
    enabled: bool = False
    active_profile: str | None = None
    group_bindings: dict[str, str] = field(default_factory=dict)
    default_reply: str = DEFAULT_REPLY
    reply_window_ms: int = REPLY_WINDOW_MS


@dataclass
class EventSpec:
    title: str
    fire_at: int
    message: str
    group_titles: frozenset[str] = frozenset()
    extra_numbers: frozenset[str] = frozenset()
    recurrence: Recurrence = Recurrence.ONCE
    cause: Cause = Cause.EVENT
    fired: bool = False
    anchor: tuple[int, int] | None = None  # (month, day) that yearly events return to

    def __post_init__(self) -> None:
        self.group_titles = frozenset(self.group_titles)
        self.extra_numbers = frozenset(canonical_address(n) for n in self.extra_numbers)
        if not self.group_titles and not self.extra_numbers:
            raise ConfigError(f"event {self.title!r} has no recipients")
        if self.anchor is None:
            when = to_datetime(self.fire_at)
            self.anchor = (when.month, when.day)


@dataclass(frozen=True)
class ReportEntry:
    timestamp: int
    recipient: str
    text: str
    cause: Cause


@dataclass
class AutoMessageReport:
    entries: list[ReportEntry] = field(default_factory=list)

    def record(self, timestamp: int, recipient: str, text: str, cause: Cause) -> ReportEntry:
        entry = ReportEntry(timestamp, recipient, text, cause)
        self.entries.append(entry)
        return entry

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Contact:
    address: str
    name: str
    birthday: dt.date | None = None


@dataclass
class RulesConfig:
    """Everything one device needs for auto-reply and scheduled messages."""

    groups: dict[str, Group] = field(default_factory=dict)
    profiles: dict[str, Profile] = field(default_factory=dict)
    auto_reply: AutoReplyState = field(default_factory=AutoReplyState)
    events: dict[str, EventSpec] = field(default_factory=dict)
    contacts: list[Contact] = field(default_factory=list)
    birthday_message: str | None = None
    report: AutoMessageReport = field(default_factory=AutoMessageReport)
    last_reply: dict[str, int] = field(default_factory=dict)

    def validate(self) -> None:
        state = self.auto_reply
        if state.active_profile is not None and state.active_profile not in self.profiles:
            raise ConfigError(f"active profile {state.active_profile!r} does not exist")
        for g, p in state.group_bindings.items():
            if g not in self.groups:
                raise ConfigError(f"binding names unknown group {g!r}")
            if p not in self.profiles:
                raise ConfigError(f"binding names unknown profile {p!r}")
        for ev in self.events.values():
            missing = ev.group_titles - self.groups.keys()
            if missing:
                raise ConfigError(f"event {ev.title!r} names unknown groups {sorted(missing)}")

    def own_reply_texts(self) -> set[str]:
        texts = {self.auto_reply.default_reply.strip()}
        texts.update(p.reply_text.strip() for p in self.profiles.values())
        return texts


def resolve_auto_reply(sender: str, state: AutoReplyState, groups: dict[str, Group],
                       profiles: dict[str, Profile]) -> str | None:
    if not state.enabled:
        return None
    sender = canonical_address(sender)
    for title in sorted(state.group_bindings):
        group = groups.get(title)
        if group is not None and sender in group.members:
            return profiles[state.group_bindings[title]].reply_text
    if state.active_profile is not None:
        return profiles[state.active_profile].reply_text
    return state.default_reply


def on_incoming(msg: SmsMessage, rules: RulesConfig, clock: int,
                is_spam: bool = False, self_address: str | None = None) -> list[tuple[str, str]]:
    """At most one auto-reply for a normal, non-spam incoming SMS."""
    if msg.kind is not MessageKind.NORMAL or is_spam:
        return []
    sender = canonical_address(msg.sender)
    if self_address is not None and sender == canonical_address(self_address):
        return []
    if msg.body.strip() in rules.own_reply_texts():
        return []
    last = rules.last_reply.get(sender)
    if last is not None and clock - last < rules.auto_reply.reply_window_ms:
        return []
    reply = resolve_auto_reply(sender, rules.auto_reply, rules.groups, rules.profiles)
    if reply is None:
        return []
    rules.last_reply[sender] = clock
    rules.report.record(clock, msg.sender, reply, Cause.AUTO_REPLY)
    return [(msg.sender, reply)]


def next_occurrence(month: int, day: int, after: int, hour: int = BIRTHDAY_HOUR) -> int:
    """First (month, day) at ``hour``:00 strictly after the ``after`` timestamp."""
    now = to_datetime(after)
    year = now.year
    while True:
        moment = dt.datetime.combine(clamp_date(year, month, day), dt.time(hour))
        if to_millis(moment) > after:
            return to_millis(moment)
        year += 1


def birthday_title(address: str) -> str:
    return f"birthday:{canonical_address(address)}"


def sync_birthdays(contacts: Iterable[Contact], events: dict[str, EventSpec], clock: int,
                   message: str | None = None) -> dict[str, EventSpec]:
    text = message or DEFAULT_BIRTHDAY_WISH
    for contact in contacts:
        if contact.birthday is None:
            continue
        title = birthday_title(contact.address)
        anchor = (contact.birthday.month, contact.birthday.day)
        current = events.get(title)
        if current is not None and current.anchor == anchor and current.message == text:
            continue
        events[title] = EventSpec(title, next_occurrence(*anchor, clock), text,
                                  extra_numbers=frozenset([contact.address]),
                                  recurrence=Recurrence.YEARLY, cause=Cause.BIRTHDAY,
                                  anchor=anchor)
    return events


def add_event(events: dict[str, EventSpec], spec: EventSpec, clock: int) -> None:
    if spec.fire_at <= clock:
        raise ConfigError(f"event {spec.title!r} is not in the future")
    if spec.title in events:
        raise ConfigError(f"duplicate event title {spec.title!r}")
    events[spec.title] = spec


def _advance_year(ev: EventSpec, clock: int) -> int:
    when = to_datetime(ev.fire_at)
    month, day = ev.anchor
    year = when.year
    while True:
        year += 1
        moment = dt.datetime.combine(clamp_date(year, month, day), when.time())
        if to_millis(moment) > clock:
            return to_millis(moment)


def tick(clock: int, events: dict[str, EventSpec], groups: dict[str, Group],
         report: AutoMessageReport) -> list[tuple[str, str]]:
    """Dispatch every due event once. Returns (recipient, text) pairs."""
    out = []
    for title in sorted(events, key=lambda t: (events[t].fire_at, t)):
        ev = events[title]
        if ev.fired or ev.fire_at > clock:
            continue
        recipients = set(ev.extra_numbers)
        for g in ev.group_titles:
            if g in groups:
                recipients |= groups[g].members
        for r in sorted(recipients):
            report.record(clock, r, ev.message, ev.cause)
            out.append((r, ev.message))
        if ev.recurrence is Recurrence.ONCE:
            ev.fired = True
        else:
            ev.fire_at = _advance_year(ev, clock)
    return out


REPORT_HEADER = "timestamp\trecipient\tcause\ttext"


def _escape_field(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def format_timestamp(ms: int) -> str:
    return to_datetime(ms).isoformat(timespec="milliseconds")


def generate_report(report: AutoMessageReport, start: int | None = None,
                    end: int | None = None) -> str:
    """Header plus one line per entry with start <= timestamp <= end."""
    rows = [e for e in report.entries
            if (start is None or e.timestamp >= start) and (end is None or e.timestamp <= end)]
    rows.sort(key=lambda e: e.timestamp)
    lines = [REPORT_HEADER]
    lines += [f"{format_timestamp(e.timestamp)}\t{e.recipient}\t{e.cause.value}\t"
              f"{_escape_field(e.text)}" for e in rows]
    return "\n".join(lines) + "\n"


# device configuration file

@dataclass
class DeviceConfig:
    rules: RulesConfig = field(default_factory=RulesConfig)
    prefilter: SpamPrefilterConfig = field(default_factory=SpamPrefilterConfig)
    spam_filter: bool = True


def _flag(value: str, lineno: int) -> bool:
    v = value.lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"line {lineno}: expected on/off, got {value!r}")


def parse_datetime(text: str) -> int:
    return to_millis(dt.datetime.fromisoformat(text))


def parse_device_config(text: str) -> DeviceConfig:
    """Parse the line-oriented device configuration (grammar in README)."""
    cfg = DeviceConfig()
    rules = cfg.rules
    blacklist: set[str] = set()
    specific: set[str] = set()
    flags = {"SPAM_UNKNOWN": False, "SPAM_WEIRD": False}
    pending_events: list[EventSpec] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            tok = shlex.split(line)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
        key, args = tok[0].upper(), tok[1:]
        try:
            if key == "AUTOREPLY":
                rules.auto_reply.enabled = _flag(args[0], lineno)
            elif key == "DEFAULT_REPLY":
                rules.auto_reply.default_reply = args[0]
            elif key == "REPLY_WINDOW":
                rules.auto_reply.reply_window_ms = int(args[0]) * 60 * 1000
            elif key == "GROUP":
                if args[0] in rules.groups:
                    raise ConfigError(f"line {lineno}: duplicate group {args[0]!r}")
                rules.groups[args[0]] = Group(args[0], frozenset(args[1:]))
            elif key == "PROFILE":
                if args[0] in rules.profiles:
                    raise ConfigError(f"line {lineno}: duplicate profile {args[0]!r}")
                rules.profiles[args[0]] = Profile(args[0], args[1])
            elif key == "ACTIVE_PROFILE":
                rules.auto_reply.active_profile = args[0]
            elif key == "BIND":
                rules.auto_reply.group_bindings[args[0]] = args[1]
            elif key == "CONTACT":
                bday = dt.date.fromisoformat(args[2]) if len(args) > 2 else None
                rules.contacts.append(Contact(args[0], args[1], bday))
            elif key == "BIRTHDAY_MESSAGE":
                rules.birthday_message = args[0]
            elif key == "EVENT":
                pending_events.append(_parse_event(args, lineno))
            elif key == "SPAM_FILTER":
                cfg.spam_filter = _flag(args[0], lineno)
            elif key in flags:
                flags[key] = _flag(args[0], lineno)
            elif key == "BLACKLIST":
                blacklist.update(args)
            elif key == "SPAM_NUMBER":
                specific.update(args)
            else:
                raise ConfigError(f"line {lineno}: unknown directive {tok[0]!r}")
        except IndexError:
            raise ConfigError(f"line {lineno}: missing argument for {tok[0]}") from None
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: {exc}") from None
    for ev in pending_events:
        if ev.title in rules.events:
            raise ConfigError(f"duplicate event title {ev.title!r}")
        rules.events[ev.title] = ev
    cfg.prefilter = SpamPrefilterConfig(
        blacklist=frozenset(blacklist), spam_unknown=flags["SPAM_UNKNOWN"],
        spam_weird=flags["SPAM_WEIRD"], spam_specific=frozenset(specific),
        contacts=frozenset(c.address for c in rules.contacts))
    rules.validate()
    return cfg


def _parse_event(args: list[str], lineno: int) -> EventSpec:
    title, when, recurrence, message = args[:4]
    groups, numbers = set(), set()
    for opt in args[4:]:
        name, _, value = opt.partition("=")
        if name == "group":
            groups.add(value)
        elif name == "number":
            numbers.add(value)
        else:
            raise ConfigError(f"line {lineno}: unknown event option {opt!r}")
    try:
        rec = Recurrence(recurrence.capitalize())
    except ValueError:
        raise ConfigError(f"line {lineno}: recurrence must be once or yearly") from None
    return EventSpec(title, parse_datetime(when), message, frozenset(groups),
                     frozenset(numbers), rec)
