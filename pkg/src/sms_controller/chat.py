"""Group chat carried over plain SMS bodies.

Wire grammar (one SMS body)::

    #GSC1|<code>|<KIND>|<nick>|<payload>[|<member-list>]

KIND is one of INV, ACC, REJ, CHT, MUP, LVE. The member list, present only
for INV/ACC/MUP, is comma separated ``address~nick`` pairs. Inside fields
``|`` ``,`` ``~`` and ``\\`` are written ``\\p`` ``\\c`` ``\\t`` ``\\\\``.

The device that started a chat is the only one that broadcasts membership
updates.
"""
from __future__ import annotations

import enum
import logging
import random
import string
from dataclasses import dataclass, field

from .preprocess import MAX_BODY_BYTES

log = logging.getLogger(__name__)

PREFIX = "#GSC1"
CODE_LENGTH = 8
CODE_ALPHABET = string.ascii_uppercase + string.digits
MAX_NICK = 16
INVITE_TEXT = "join group chat"


class WireKind(enum.Enum):
    INVITE = "INV"
    ACCEPT = "ACC"
    REJECT = "REJ"
    CHAT = "CHT"
    MEMBER_UPDATE = "MUP"
    LEAVE = "LVE"


_WITH_MEMBERS = {WireKind.INVITE, WireKind.ACCEPT, WireKind.MEMBER_UPDATE}


class WireError(ValueError):
    pass


class WireParseError(WireError):
    pass


class WireSizeError(WireError):
    pass


class ChatStateError(Exception):
    pass


def is_valid_code(code: str) -> bool:
    return len(code) == CODE_LENGTH and all(c in CODE_ALPHABET for c in code)


@dataclass(frozen=True)
class WireChatMessage:
    code: str
    kind: WireKind
    sender_nick: str
    payload: str = ""
    members: tuple[tuple[str, str], ...] | None = None

    def __post_init__(self) -> None:
        if not is_valid_code(self.code):
            raise WireError(f"bad chat code {self.code!r}")
        if len(self.sender_nick) > MAX_NICK:
            raise WireError(f"nick longer than {MAX_NICK} characters")
        if self.kind in _WITH_MEMBERS:
            if self.members is None:
                object.__setattr__(self, "members", ())
            else:
                object.__setattr__(self, "members", tuple(tuple(m) for m in self.members))
        elif self.members is not None:
            raise WireError(f"{self.kind.value} carries no member list")


_ESCAPES = {"\\": "\\\\", "|": "\\p", ",": "\\c", "~": "\\t"}
_UNESCAPES = {"\\": "\\", "p": "|", "c": ",", "t": "~"}


def _escape(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def _unescape(text: str) -> str:
    out = []
    it = iter(text)
    for ch in it:
        if ch != "\\":
            out.append(ch)
            continue
        nxt = next(it, None)
        if nxt not in _UNESCAPES:
            raise WireParseError(f"bad escape sequence \\{nxt or ''}")
        out.append(_UNESCAPES[nxt])
    return "".join(out)


def encode(msg: WireChatMessage) -> str:
    fields = [PREFIX, msg.code, msg.kind.value, _escape(msg.sender_nick), _escape(msg.payload)]
    if msg.members is not None:
        fields.append(",".join(f"{_escape(a)}~{_escape(n)}" for a, n in msg.members))
    body = "|".join(fields)
    if len(body.encode("utf-8")) > MAX_BODY_BYTES:
        raise WireSizeError(f"encoded wire exceeds {MAX_BODY_BYTES} bytes")
    return body


def decode(body: str) -> WireChatMessage | None:
    """None for an ordinary SMS; WireParseError for a broken chat frame."""
    fields = body.split("|")
    if fields[0] != PREFIX:
        return None
    if len(fields) < 5:
        raise WireParseError("truncated chat frame")
    code, kind_text = fields[1], fields[2]
    try:
        kind = WireKind(kind_text)
    except ValueError:
        raise WireParseError(f"unknown kind {kind_text!r}") from None
    expected = 6 if kind in _WITH_MEMBERS else 5
    if len(fields) != expected:
        raise WireParseError(f"{kind_text} frame needs {expected} fields, got {len(fields)}")
    members = None
    if kind in _WITH_MEMBERS:
        members = []
        if fields[5]:
            for pair in fields[5].split(","):
                parts = pair.split("~")
                if len(parts) != 2:
                    raise WireParseError(f"bad member entry {pair!r}")
                members.append((_unescape(parts[0]), _unescape(parts[1])))
    try:
        return WireChatMessage(code, kind, _unescape(fields[3]), _unescape(fields[4]),
                               None if members is None else tuple(members))
    except WireParseError:
        raise
    except WireError as exc:
        raise WireParseError(str(exc)) from None


class SessionState(enum.Enum):
    INVITE_PENDING = "InvitePending"
    ACTIVE = "Active"
    CLOSED = "Closed"


@dataclass
class ChatSession:
    code: str
    self_nick: str
    initiator: str
    members: dict[str, str] = field(default_factory=dict)
    state: SessionState = SessionState.INVITE_PENDING
    transcript: list[tuple[str, str, int]] = field(default_factory=list)
    pending_invitees: set[str] = field(default_factory=set)

    def roster(self, self_address: str) -> dict[str, str]:
        """Every participant including this device."""
        return {**self.members, self_address: self.self_nick}


@dataclass(frozen=True)
class PendingInvite:
    code: str
    inviter: str
    inviter_nick: str
    members: tuple[tuple[str, str], ...]
    received_at: int


Outgoing = list[tuple[str, WireChatMessage]]


class Decision(enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"


@dataclass
class ChatDevice:
    """Per-device chat state; all calls come from one event loop."""

    address: str
    nick: str = "me"
    rng: random.Random = field(default_factory=random.Random)
    sessions: dict[str, ChatSession] = field(default_factory=dict)
    invites: dict[str, PendingInvite] = field(default_factory=dict)
    used_codes: set[str] = field(default_factory=set)
    events: list[str] = field(default_factory=list)

    def new_code(self) -> str:
        while True:
            code = "".join(self.rng.choice(CODE_ALPHABET) for _ in range(CODE_LENGTH))
            if code not in self.used_codes and code not in self.sessions:
                self.used_codes.add(code)
                return code

    def _note(self, text: str) -> None:
        self.events.append(text)
        log.debug("%s: %s", self.address, text)


def _invite_wires(device: ChatDevice, session: ChatSession, invitees: list[str]) -> Outgoing:
    roster = tuple(sorted(session.roster(device.address).items()))
    out = []
    for addr in invitees:
        session.pending_invitees.add(addr)
        out.append((addr, WireChatMessage(session.code, WireKind.INVITE, session.self_nick,
                                          INVITE_TEXT, roster)))
    return out


def start_chat(device: ChatDevice, invitees: list[str],
               self_nick: str | None = None) -> tuple[ChatSession, Outgoing]:
    if not invitees:
        raise ValueError("at least one invitee is required")
    nick = self_nick or device.nick
    session = ChatSession(device.new_code(), nick, device.address)
    device.sessions[session.code] = session
    return session, _invite_wires(device, session, list(dict.fromkeys(invitees)))


def invite_more(device: ChatDevice, code: str, invitees: list[str]) -> Outgoing:
    session = device.sessions.get(code)
    if session is None or session.state is SessionState.CLOSED:
        raise ChatStateError(f"no open session {code}")
    if session.initiator != device.address:
        raise ChatStateError("only the chat initiator can invite")
    fresh = [a for a in dict.fromkeys(invitees) if a not in session.members and a != device.address]
    return _invite_wires(device, session, fresh)


def _broadcast_roster(device: ChatDevice, session: ChatSession) -> Outgoing:
    roster = tuple(sorted(session.roster(device.address).items()))
    return [(addr, WireChatMessage(session.code, WireKind.MEMBER_UPDATE, session.self_nick,
                                   "", roster))
            for addr in sorted(session.members)]


def respond_invite(device: ChatDevice, code: str, decision: Decision,
                   nick: str | None = None) -> Outgoing:
    invite = device.invites.pop(code, None)
    if invite is None:
        raise ChatStateError(f"no pending invite {code}")
    if decision is Decision.REJECT:
        device._note(f"rejected {code}")
        return [(invite.inviter, WireChatMessage(code, WireKind.REJECT, nick or device.nick))]
    nick = nick or device.nick
    members = {a: n for a, n in invite.members if a != device.address}
    members.setdefault(invite.inviter, invite.inviter_nick)
    # stays pending until the initiator's roster arrives, so a joiner never
    # goes live on a stale member list
    device.sessions[code] = ChatSession(code, nick, invite.inviter, members)
    device._note(f"accepted {code}")
    return [(invite.inviter, WireChatMessage(code, WireKind.ACCEPT, nick, "",
                                             ((device.address, nick),)))]


def handle_incoming(device: ChatDevice, sender: str, wire: WireChatMessage, timestamp: int = 0,
                    decision: Decision | None = None, nick: str | None = None) -> Outgoing:
    if decision is not None and wire.kind is not WireKind.INVITE:
        raise ChatStateError("a user decision only applies to invitations")
    kind = wire.kind
    if kind is WireKind.INVITE:
        device.invites[wire.code] = PendingInvite(wire.code, sender, wire.sender_nick,
                                                  wire.members or (), timestamp)
        device._note(f"invited to {wire.code} by {sender}")
        if decision is not None:
            return respond_invite(device, wire.code, decision, nick)
        return []

    session = device.sessions.get(wire.code)
    if session is None or session.state is SessionState.CLOSED:
        device._note(f"dropped {kind.value} for unknown code {wire.code}")
        return []

    if kind is WireKind.CHAT:
        session.transcript.append((wire.sender_nick, wire.payload, timestamp))
        return []
    if kind is WireKind.ACCEPT:
        if sender not in session.pending_invitees:
            device._note(f"ignored unsolicited accept from {sender}")
            return []
        session.pending_invitees.discard(sender)
        session.members[sender] = wire.sender_nick
        session.state = SessionState.ACTIVE
        return _broadcast_roster(device, session)
    if kind is WireKind.REJECT:
        session.pending_invitees.discard(sender)
        if not session.members and not session.pending_invitees:
            session.state = SessionState.CLOSED
        return []
    if kind is WireKind.MEMBER_UPDATE:
        if sender != session.initiator:
            device._note(f"ignored roster from non-initiator {sender}")
            return []
        session.members = {a: n for a, n in wire.members if a != device.address}
        session.state = SessionState.ACTIVE if session.members else session.state
        return []
    # LEAVE
    session.members.pop(sender, None)
    out = _broadcast_roster(device, session) if device.address == session.initiator else []
    if not session.members and not session.pending_invitees:
        session.state = SessionState.CLOSED
    return out


def send_chat(device: ChatDevice, code: str, text: str, timestamp: int = 0) -> Outgoing:
    session = device.sessions.get(code)
    if session is None:
        raise ChatStateError(f"no session {code}")
    if session.state is not SessionState.ACTIVE:
        raise ChatStateError(f"session {code} is {session.state.value}")
    session.transcript.append((session.self_nick, text, timestamp))
    return [(addr, WireChatMessage(code, WireKind.CHAT, session.self_nick, text))
            for addr in sorted(session.members)]


def leave_chat(device: ChatDevice, code: str) -> Outgoing:
    session = device.sessions.get(code)
    if session is None or session.state is SessionState.CLOSED:
        raise ChatStateError(f"no open session {code}")
    out = [(addr, WireChatMessage(code, WireKind.LEAVE, session.self_nick))
           for addr in sorted(session.members)]
    session.state = SessionState.CLOSED
    return out
