"""Deterministic in-process SMS bus hosting virtual devices, plus scenario files.

Delivery is reliable, zero-latency and FIFO: every event carries a monotone
sequence number and events run strictly in (time, seq) order. After each
scripted action the bus is drained to quiescence before the next one runs.

Scenario grammar (one directive per line, shell-style quoting)::

    DEVICE <address> [key=value ...]
    AT <t> SEND <from> <to> <body>
    AT <t> CHAT START <device> <invitee> [<invitee> ...]
    AT <t> CHAT INVITE <device> <code> <invitee> [...]
    AT <t> CHAT SEND <device> <code> <text>
    AT <t> CHAT LEAVE <device> <code>
    AT <t> USER <device> ACCEPT|REJECT <code> [nick]
    AT <t> FEEDBACK <device> NOTSPAM|ISSPAM <msg-id>
    AT <t> SYNC <device>
    AT <t> TICK
    ASSERT <check> <args ...>

``<t>`` is integer milliseconds or an ISO date-time. ``<code>`` may be a
literal chat code or ``%N``, the N-th chat started in the run. ``<msg-id>``
is a bus id (``m7``) or ``sN``, the N-th scripted SEND.
"""
from __future__ import annotations

import enum
import heapq
import logging
import random
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import chat as chatmod
from .engine import (Correction, Pipeline, Verdict, apply_feedback, build_seed_ontology,
                     classify, enhance_ontology)
from .ontology import SpamOntology, load_ontology
from .preprocess import MessageKind, SmsMessage, SpamPrefilterConfig, canonical_address
from .rules import (DeviceConfig, RulesConfig, on_incoming, parse_datetime,
                    parse_device_config, sync_birthdays, tick)

log = logging.getLogger(__name__)


class ScenarioError(ValueError):
    pass


class Folder(enum.Enum):
    INBOX = "INBOX"
    SPAM = "SPAM"
    CHAT = "CHAT"
    DROPPED = "DROPPED"


@dataclass
class VirtualDevice:
    address: str
    pipeline: Pipeline
    ontology: SpamOntology
    rules: RulesConfig
    chat: chatmod.ChatDevice
    spam_filter: bool = True
    learn: bool = True
    folders: dict[Folder, list[str]] = field(
        default_factory=lambda: {f: [] for f in Folder})
    outbox: list[str] = field(default_factory=list)
    verdicts: dict[str, Verdict] = field(default_factory=dict)


@dataclass(frozen=True)
class SentSms:
    id: str
    sender: str
    recipient: str
    body: str
    timestamp: int
    origin: str


class EventKind(enum.Enum):
    DELIVER = "Deliver"
    TICK = "Tick"
    USER_ACTION = "UserAction"


@dataclass(order=True)
class BusEvent:
    time: int
    seq: int
    kind: EventKind = field(compare=False)
    payload: object = field(compare=False, default=None)


def _show(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\n", "\\n").replace("\t", "\\t")


class SmsBus:
    def __init__(self) -> None:
        self.devices: dict[str, VirtualDevice] = {}
        self.messages: dict[str, SentSms] = {}
        self.transcript: list[str] = []
        self.clock = 0
        self._queue: list[BusEvent] = []
        self._seq = 0

    def add_device(self, device: VirtualDevice) -> None:
        key = canonical_address(device.address)
        if key in self.devices:
            raise ScenarioError(f"duplicate device address {device.address}")
        self.devices[key] = device

    def device(self, address: str) -> VirtualDevice | None:
        return self.devices.get(canonical_address(address))

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def log(self, text: str) -> None:
        self.transcript.append(f"t={self.clock} {text}")

    def schedule(self, time: int, kind: EventKind, payload: object = None) -> BusEvent:
        ev = BusEvent(time, self._next_seq(), kind, payload)
        heapq.heappush(self._queue, ev)
        return ev

    def send(self, sender: str, recipient: str, body: str, origin: str) -> str:
        msg_id = f"m{len(self.messages) + 1}"
        sms = SentSms(msg_id, sender, recipient, body, self.clock, origin)
        self.messages[msg_id] = sms
        src = self.device(sender)
        if src is not None:
            src.outbox.append(msg_id)
        self.log(f"SEND {msg_id} {sender} -> {recipient} [{origin}] {_show(body)}")
        self.schedule(self.clock, EventKind.DELIVER, msg_id)
        return msg_id

    def drain(self, until: int | None = None) -> None:
        while self._queue and (until is None or self._queue[0].time <= until):
            ev = heapq.heappop(self._queue)
            self.clock = max(self.clock, ev.time)
            if ev.kind is EventKind.DELIVER:
                self._deliver(self.messages[ev.payload])
            elif ev.kind is EventKind.TICK:
                self._tick_all()
            else:
                ev.payload()

    def _deliver(self, sms: SentSms) -> None:
        dev = self.device(sms.recipient)
        if dev is None:
            self.log(f"DELIVER {sms.id} EXTERNAL {sms.recipient}")
            return
        try:
            wire = chatmod.decode(sms.body)
        except chatmod.WireParseError as exc:
            dev.folders[Folder.DROPPED].append(sms.id)
            self.log(f"DELIVER {sms.id} {dev.address} DROPPED {exc}")
            return
        if wire is not None:
            dev.folders[Folder.CHAT].append(sms.id)
            self.log(f"DELIVER {sms.id} {dev.address} CHAT {wire.kind.value} {wire.code}")
            for to, out in chatmod.handle_incoming(dev.chat, sms.sender, wire, sms.timestamp):
                self.send(dev.address, to, chatmod.encode(out), "chat")
            return
        msg = SmsMessage(sms.sender, sms.body, sms.timestamp, MessageKind.NORMAL)
        spam = False
        if dev.spam_filter:
            verdict = classify(msg, dev.pipeline, dev.ontology)
            dev.verdicts[sms.id] = verdict
            spam = verdict.is_spam
            tag = ("SPAM prefiltered" if verdict.prefiltered else
                   f"{'SPAM' if spam else 'HAM'} cs={verdict.collective_score}")
            if spam and dev.learn and not verdict.prefiltered:
                before = dev.ontology.revision
                enhance_ontology(dev.ontology, verdict, dev.pipeline.graph)
                if dev.ontology.revision != before:
                    tag += f" learned->rev{dev.ontology.revision}"
        else:
            tag = "UNFILTERED"
        dev.folders[Folder.SPAM if spam else Folder.INBOX].append(sms.id)
        self.log(f"DELIVER {sms.id} {dev.address} {'SPAM' if spam else 'INBOX'} {tag}")
        for to, text in on_incoming(msg, dev.rules, self.clock, spam, dev.address):
            self.send(dev.address, to, text, "auto-reply")

    def _tick_all(self) -> None:
        self.log("TICK")
        for key in sorted(self.devices):
            dev = self.devices[key]
            before = len(dev.rules.report)
            out = tick(self.clock, dev.rules.events, dev.rules.groups, dev.rules.report)
            for entry, (to, text) in zip(dev.rules.report.entries[before:], out):
                self.send(dev.address, to, text, entry.cause.value.lower())


# scenario model

@dataclass
class DeviceSpec:
    address: str
    options: dict[str, str] = field(default_factory=dict)
    lineno: int = 0


@dataclass
class Action:
    time: int
    verb: str
    args: list[str]
    lineno: int
    line: str


@dataclass
class Assertion:
    check: str
    args: list[str]
    lineno: int
    line: str


@dataclass
class Scenario:
    devices: list[DeviceSpec] = field(default_factory=list)
    script: list[Action] = field(default_factory=list)
    expected: list[Assertion] = field(default_factory=list)
    base_dir: Path = field(default_factory=Path)


def _parse_time(text: str, lineno: int) -> int:
    if text.lstrip("-").isdigit():
        return int(text)
    try:
        return parse_datetime(text)
    except ValueError:
        raise ScenarioError(f"line {lineno}: bad time {text!r}") from None


_ARITY = {"SEND": 3, "TICK": 0, "USER": 3, "FEEDBACK": 3, "SYNC": 1}
_CHAT_ARITY = {"START": 2, "INVITE": 3, "SEND": 3, "LEAVE": 2}


def parse_scenario(text: str, base_dir: str | Path = ".") -> Scenario:
    sc = Scenario(base_dir=Path(base_dir))
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            tok = shlex.split(line)
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: {exc}") from None
        head = tok[0].upper()
        if head == "DEVICE":
            if len(tok) < 2:
                raise ScenarioError(f"line {lineno}: DEVICE needs an address")
            opts = {}
            for opt in tok[2:]:
                key, sep, value = opt.partition("=")
                if not sep:
                    raise ScenarioError(f"line {lineno}: option {opt!r} is not key=value")
                opts[key] = value
            sc.devices.append(DeviceSpec(tok[1], opts, lineno))
        elif head == "AT":
            if len(tok) < 3:
                raise ScenarioError(f"line {lineno}: AT needs a time and a verb")
            t = _parse_time(tok[1], lineno)
            verb, args = tok[2].upper(), tok[3:]
            if verb == "CHAT":
                if not args or args[0].upper() not in _CHAT_ARITY:
                    raise ScenarioError(f"line {lineno}: CHAT needs START|INVITE|SEND|LEAVE")
                sub = args[0].upper()
                if len(args) - 1 < _CHAT_ARITY[sub] or (sub in ("SEND", "LEAVE")
                                                        and len(args) - 1 != _CHAT_ARITY[sub]):
                    raise ScenarioError(f"line {lineno}: wrong arguments for CHAT {sub}")
                verb, args = f"CHAT_{sub}", args[1:]
            elif verb not in _ARITY:
                raise ScenarioError(f"line {lineno}: unknown verb {tok[2]!r}")
            elif verb == "USER":
                if len(args) not in (3, 4) or args[1].upper() not in ("ACCEPT", "REJECT"):
                    raise ScenarioError(f"line {lineno}: USER <device> ACCEPT|REJECT <code> [nick]")
            elif len(args) != _ARITY[verb]:
                raise ScenarioError(f"line {lineno}: {verb} takes {_ARITY[verb]} arguments")
            if sc.script and t < sc.script[-1].time:
                raise ScenarioError(f"line {lineno}: time goes backwards")
            sc.script.append(Action(t, verb, args, lineno, line))
        elif head == "ASSERT":
            if len(tok) < 2 or tok[1].upper() not in _CHECKS:
                raise ScenarioError(f"line {lineno}: unknown assertion")
            sc.expected.append(Assertion(tok[1].upper(), tok[2:], lineno, line))
        else:
            raise ScenarioError(f"line {lineno}: unknown directive {tok[0]!r}")
    validate_scenario(sc)
    return sc


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), path.parent)


def _device_refs(action: Action) -> list[str]:
    a = action.args
    if action.verb == "SEND":
        return [a[0], a[1]]
    if action.verb in ("USER", "FEEDBACK", "SYNC", "CHAT_SEND", "CHAT_LEAVE"):
        return [a[0]]
    if action.verb == "CHAT_START":
        return list(a)
    if action.verb == "CHAT_INVITE":
        return [a[0], *a[2:]]
    return []


_DEVICE_ASSERT_CHECKS = {"INBOX", "SPAM", "DROPPED", "CHATLOG", "REPORT", "MEMBERS", "STATE",
                         "TRANSCRIPT", "ONTOLOGY", "IN"}


def validate_scenario(sc: Scenario) -> None:
    known = set()
    for d in sc.devices:
        key = canonical_address(d.address)
        if key in known:
            raise ScenarioError(f"line {d.lineno}: duplicate device {d.address}")
        known.add(key)
    for act in sc.script:
        for ref in _device_refs(act):
            if canonical_address(ref) not in known:
                raise ScenarioError(f"line {act.lineno}: unknown device {ref!r}")
    for a in sc.expected:
        if a.check in _DEVICE_ASSERT_CHECKS:
            if not a.args or canonical_address(a.args[0]) not in known:
                raise ScenarioError(f"line {a.lineno}: unknown device in assertion")


# running

@dataclass
class Resources:
    """Shared, read-only inputs for every device in a run."""

    pipeline: Pipeline
    seed_corpus: list[SmsMessage] = field(default_factory=list)
    _seed_ontology: SpamOntology | None = None

    def seed_ontology(self) -> SpamOntology:
        if self._seed_ontology is None:
            self._seed_ontology = (build_seed_ontology(self.seed_corpus, self.pipeline)
                                   if self.seed_corpus else SpamOntology())
        return self._seed_ontology.copy()


def _on(value: str) -> bool:
    return value.lower() in ("on", "true", "yes", "1")


def _csv(value: str) -> frozenset[str]:
    return frozenset(v for v in value.split(",") if v)


def build_device(spec: DeviceSpec, res: Resources, seed: int, base_dir: Path) -> VirtualDevice:
    opts = spec.options
    if "config" in opts:
        cfg = parse_device_config((base_dir / opts["config"]).read_text(encoding="utf-8"))
    else:
        cfg = DeviceConfig()
    rules = cfg.rules
    if "autoreply" in opts:
        rules.auto_reply.enabled = _on(opts["autoreply"])
    if "default_reply" in opts:
        rules.auto_reply.default_reply = opts["default_reply"]
    pre = cfg.prefilter
    prefilter = SpamPrefilterConfig(
        blacklist=pre.blacklist | _csv(opts.get("blacklist", "")),
        spam_unknown=_on(opts["spam_unknown"]) if "spam_unknown" in opts else pre.spam_unknown,
        spam_weird=_on(opts["spam_weird"]) if "spam_weird" in opts else pre.spam_weird,
        spam_specific=pre.spam_specific,
        contacts=pre.contacts | _csv(opts.get("contacts", "")))
    engine_cfg = res.pipeline.config
    if "theta" in opts or "h" in opts:
        engine_cfg = type(engine_cfg)(h=int(opts.get("h", engine_cfg.h)),
                                      theta=float(opts.get("theta", engine_cfg.theta)),
                                      weights=dict(engine_cfg.weights))
    pipeline = Pipeline(res.pipeline.graph, res.pipeline.lexicon, prefilter, engine_cfg)
    source = opts.get("ontology", "seed")
    if source == "seed":
        ontology = res.seed_ontology()
    elif source == "empty":
        ontology = SpamOntology()
    else:
        ontology = load_ontology(base_dir / source)
    spam_filter = _on(opts["spam_filter"]) if "spam_filter" in opts else cfg.spam_filter
    # str seeds hash deterministically (random.seed version 2)
    rng = random.Random(f"{seed}:{canonical_address(spec.address)}")
    chat = chatmod.ChatDevice(spec.address, opts.get("nick", spec.address[-4:]), rng)
    learn = _on(opts.get("learn", "on"))
    return VirtualDevice(spec.address, pipeline, ontology, rules, chat, spam_filter, learn)


@dataclass
class AssertionResult:
    assertion: Assertion
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        suffix = f"  ({self.detail})" if self.detail and not self.passed else ""
        return f"{status} line {self.assertion.lineno}: {self.assertion.line}{suffix}"


@dataclass
class RunResult:
    transcript: list[str]
    assertions: list[AssertionResult]
    bus: SmsBus
    chat_codes: list[str]

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def text(self) -> str:
        lines = list(self.transcript)
        lines.append(f"# assertions: {sum(a.passed for a in self.assertions)}/"
                     f"{len(self.assertions)} passed")
        lines += [a.line() for a in self.assertions]
        return "\n".join(lines) + "\n"


class _Runner:
    def __init__(self, sc: Scenario, seed: int, res: Resources):
        self.sc = sc
        self.bus = SmsBus()
        self.codes: list[str] = []
        self.script_sends: list[str] = []
        for spec in sc.devices:
            self.bus.add_device(build_device(spec, res, seed, sc.base_dir))
        start = sc.script[0].time if sc.script else 0
        for dev in self.bus.devices.values():
            sync_birthdays(dev.rules.contacts, dev.rules.events, start,
                           dev.rules.birthday_message)

    def dev(self, address: str) -> VirtualDevice:
        return self.bus.device(address)

    def code(self, ref: str) -> str:
        if ref.startswith("%"):
            index = int(ref[1:]) - 1
            if not 0 <= index < len(self.codes):
                raise ScenarioError(f"chat reference {ref} not started yet")
            return self.codes[index]
        return ref

    def msg_id(self, ref: str) -> str:
        if ref.startswith("s") and ref[1:].isdigit():
            index = int(ref[1:]) - 1
            if not 0 <= index < len(self.script_sends):
                raise ScenarioError(f"scripted send {ref} has not happened")
            return self.script_sends[index]
        return ref

    def send_wires(self, dev: VirtualDevice, wires: chatmod.Outgoing) -> None:
        for to, wire in wires:
            self.bus.send(dev.address, to, chatmod.encode(wire), "chat")

    def perform(self, act: Action) -> None:
        bus, a = self.bus, act.args
        bus.log(f"ACTION line {act.lineno}: {act.verb} {' '.join(a)}")
        if act.verb == "SEND":
            self.script_sends.append(bus.send(a[0], a[1], a[2], "user"))
        elif act.verb == "TICK":
            bus.schedule(bus.clock, EventKind.TICK)
        elif act.verb == "SYNC":
            d = self.dev(a[0])
            sync_birthdays(d.rules.contacts, d.rules.events, bus.clock, d.rules.birthday_message)
        elif act.verb == "USER":
            d = self.dev(a[0])
            decision = chatmod.Decision.ACCEPT if a[1].upper() == "ACCEPT" else chatmod.Decision.REJECT
            self.send_wires(d, chatmod.respond_invite(d.chat, self.code(a[2]), decision,
                                                      a[3] if len(a) > 3 else None))
        elif act.verb == "FEEDBACK":
            d = self.dev(a[0])
            sms = bus.messages[self.msg_id(a[2])]
            correction = Correction.NOT_SPAM if a[1].upper() == "NOTSPAM" else Correction.IS_SPAM
            before = d.ontology.revision
            apply_feedback(d.ontology, SmsMessage(sms.sender, sms.body, sms.timestamp),
                           correction, d.pipeline)
            bus.log(f"FEEDBACK {d.address} {correction.value} {sms.id} "
                    f"revision {before}->{d.ontology.revision}")
        elif act.verb == "CHAT_START":
            d = self.dev(a[0])
            session, wires = chatmod.start_chat(d.chat, list(a[1:]))
            self.codes.append(session.code)
            bus.log(f"CHAT {d.address} started {session.code}")
            self.send_wires(d, wires)
        elif act.verb == "CHAT_INVITE":
            d = self.dev(a[0])
            self.send_wires(d, chatmod.invite_more(d.chat, self.code(a[1]), list(a[2:])))
        elif act.verb == "CHAT_SEND":
            d = self.dev(a[0])
            self.send_wires(d, chatmod.send_chat(d.chat, self.code(a[1]), a[2], bus.clock))
        elif act.verb == "CHAT_LEAVE":
            d = self.dev(a[0])
            self.send_wires(d, chatmod.leave_chat(d.chat, self.code(a[1])))

    def _safe(self, act: Action) -> None:
        try:
            self.perform(act)
        except (chatmod.ChatStateError, ScenarioError, KeyError) as exc:
            self.bus.log(f"ERROR line {act.lineno}: {exc}")

    def run(self) -> RunResult:
        for act in self.sc.script:
            self.bus.drain(act.time)
            self.bus.clock = max(self.bus.clock, act.time)
            self.bus.schedule(act.time, EventKind.USER_ACTION, lambda act=act: self._safe(act))
            self.bus.drain(self.bus.clock)
        self.bus.drain()
        results = [self.check(x) for x in self.sc.expected]
        return RunResult(self.bus.transcript, results, self.bus, list(self.codes))

    def check(self, a: Assertion) -> AssertionResult:
        try:
            ok, detail = _CHECKS[a.check](self, a.args)
        except (ScenarioError, IndexError, ValueError, KeyError) as exc:
            ok, detail = False, f"error: {exc}"
        return AssertionResult(a, ok, detail)


def _count(folder: Folder) -> Callable:
    def check(r: _Runner, args: list[str]):
        n = len(r.dev(args[0]).folders[folder])
        return n == int(args[1]), f"got {n}"
    return check


def _check_in(r: _Runner, args):
    folder = Folder(args[1].upper())
    mid = r.msg_id(args[2])
    return mid in r.dev(args[0]).folders[folder], f"{mid} not in {folder.value}"


def _check_report(r: _Runner, args):
    n = len(r.dev(args[0]).rules.report)
    return n == int(args[1]), f"got {n}"


def _session(r: _Runner, device: str, ref: str) -> chatmod.ChatSession:
    s = r.dev(device).chat.sessions.get(r.code(ref))
    if s is None:
        raise ScenarioError(f"{device} has no session {ref}")
    return s


def _check_members(r: _Runner, args):
    n = len(_session(r, args[0], args[1]).members)
    return n == int(args[2]), f"got {n}"


def _check_state(r: _Runner, args):
    state = _session(r, args[0], args[1]).state
    want = {"ACTIVE": "Active", "PENDING": "InvitePending", "CLOSED": "Closed"}[args[2].upper()]
    return state.value == want, f"got {state.value}"


def _check_transcript(r: _Runner, args):
    n = len(_session(r, args[0], args[1]).transcript)
    return n == int(args[2]), f"got {n}"


def _check_converged(r: _Runner, args):
    rosters = active_rosters(r.bus, r.code(args[0]))
    if not rosters:
        return False, "no active devices"
    distinct = {tuple(sorted(x.items())) for x in rosters.values()}
    return len(distinct) == 1, f"{len(distinct)} distinct rosters"


def _check_ontology(r: _Runner, args):
    has = args[2] in r.dev(args[0]).ontology
    want = args[1].upper() == "HAS"
    return has == want, f"{args[2]} {'present' if has else 'absent'}"


_CHECKS = {
    "INBOX": _count(Folder.INBOX),
    "SPAM": _count(Folder.SPAM),
    "DROPPED": _count(Folder.DROPPED),
    "CHATLOG": _count(Folder.CHAT),
    "IN": _check_in,
    "REPORT": _check_report,
    "MEMBERS": _check_members,
    "STATE": _check_state,
    "TRANSCRIPT": _check_transcript,
    "CONVERGED": _check_converged,
    "ONTOLOGY": _check_ontology,
}


def active_rosters(bus: SmsBus, code: str) -> dict[str, dict[str, str]]:
    """Full participant map (self included) of every device Active in ``code``."""
    out = {}
    for key, dev in sorted(bus.devices.items()):
        s = dev.chat.sessions.get(code)
        if s is not None and s.state is chatmod.SessionState.ACTIVE:
            out[key] = s.roster(dev.address)
    return out


def run_scenario(scenario: Scenario, seed: int, resources: Resources) -> RunResult:
    return _Runner(scenario, seed, resources).run()
