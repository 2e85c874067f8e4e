import datetime as dt

import pytest
from hypothesis import given, settings, strategies as st

from sms_controller.preprocess import MessageKind, SmsMessage
from sms_controller.rules import (DEFAULT_BIRTHDAY_WISH, DEFAULT_REPLY, REPORT_HEADER,
                                  AutoMessageReport, AutoReplyState, Cause, ConfigError, Contact,
                                  EventSpec, Group, Profile, Recurrence, RulesConfig, add_event,
                                  generate_report, next_occurrence, on_incoming,
                                  parse_device_config, resolve_auto_reply, sync_birthdays, tick,
                                  to_datetime, to_millis)

from oracles import calendar_next_birthday

MIN = 60_000


def ms(*args):
    return to_millis(dt.datetime(*args))


GROUPS = {"family": Group("family", frozenset({"+1555 0001", "+15550002"})),
          "work": Group("work", frozenset({"+15550002", "+15550003"}))}
PROFILES = {"home": Profile("home", "at home"), "office": Profile("office", "in a meeting")}


def state(**kw):
    return AutoReplyState(enabled=True, **kw)


def test_disabled_gives_nothing():
    assert resolve_auto_reply("+1", AutoReplyState(), GROUPS, PROFILES) is None


def test_default_reply():
    assert resolve_auto_reply("+19", state(), GROUPS, PROFILES) == DEFAULT_REPLY


def test_group_binding_selects_profile():
    s = state(group_bindings={"family": "home", "work": "office"})
    assert resolve_auto_reply("+15550001", s, GROUPS, PROFILES) == "at home"
    assert resolve_auto_reply("+15550003", s, GROUPS, PROFILES) == "in a meeting"
    # member of both groups: smallest title ("family") wins
    assert resolve_auto_reply("+15550002", s, GROUPS, PROFILES) == "at home"


def test_active_profile_for_unbound_sender():
    s = state(active_profile="office", group_bindings={"family": "home"})
    assert resolve_auto_reply("+19", s, GROUPS, PROFILES) == "in a meeting"
    assert resolve_auto_reply("+15550001", s, GROUPS, PROFILES) == "at home"


def test_dangling_binding_fails_at_load():
    rules = RulesConfig(dict(GROUPS), dict(PROFILES), state(group_bindings={"family": "ghost"}))
    with pytest.raises(ConfigError):
        rules.validate()
    with pytest.raises(ConfigError):
        parse_device_config("GROUP g +1\nBIND g nowhere\n")


def rules_on():
    return RulesConfig(dict(GROUPS), dict(PROFILES), state())


def test_one_reply_recorded():
    r = rules_on()
    out = on_incoming(SmsMessage("+19", "hi"), r, 1000)
    assert out == [("+19", DEFAULT_REPLY)]
    assert [(e.recipient, e.cause) for e in r.report.entries] == [("+19", Cause.AUTO_REPLY)]


def test_no_reply_to_spam_chat_or_self():
    r = rules_on()
    assert on_incoming(SmsMessage("+19", "hi"), r, 0, is_spam=True) == []
    assert on_incoming(SmsMessage("+19", "#GSC1|x", kind=MessageKind.CHAT_WIRE), r, 0) == []
    assert on_incoming(SmsMessage("+1 9", "hi"), r, 0, self_address="+19") == []
    assert len(r.report) == 0


def test_loop_damping():
    r = rules_on()
    assert on_incoming(SmsMessage("+19", DEFAULT_REPLY), r, 0) == []
    assert len(on_incoming(SmsMessage("+19", "a"), r, 0)) == 1
    assert on_incoming(SmsMessage("+19", "b"), r, 9 * MIN) == []
    assert len(on_incoming(SmsMessage("+19", "c"), r, 10 * MIN)) == 1


def test_two_autoreplying_devices_do_not_ping_pong():
    a, b = rules_on(), rules_on()
    b.auto_reply.default_reply = "other text"
    inbox, hops = [("+2", "+1", "hello")], 0
    while inbox and hops < 50:
        frm, to, body = inbox.pop(0)
        rules = a if to == "+1" else b
        for dest, text in on_incoming(SmsMessage(frm, body), rules, 0, self_address=to):
            inbox.append((to, dest, text))
        hops += 1
    assert not inbox and hops <= 3


# birthdays and events

def test_contact_without_birthday_has_no_event():
    assert sync_birthdays([Contact("+1", "x")], {}, 0) == {}


def test_sync_is_idempotent():
    contacts = [Contact("+1", "a", dt.date(1990, 5, 6)), Contact("+2", "b", dt.date(1988, 2, 29))]
    clock = ms(2024, 1, 1)
    once = sync_birthdays(contacts, {}, clock)
    snapshot = {k: (v.fire_at, v.message) for k, v in once.items()}
    twice = sync_birthdays(contacts, once, clock)
    assert {k: (v.fire_at, v.message) for k, v in twice.items()} == snapshot
    assert len(twice) == 2
    assert all(v.message == DEFAULT_BIRTHDAY_WISH for v in twice.values())


def test_feb29_falls_back_to_feb28():
    assert to_datetime(next_occurrence(2, 29, ms(2025, 1, 1))) == dt.datetime(2025, 2, 28, 9)
    assert to_datetime(next_occurrence(2, 29, ms(2024, 1, 1))) == dt.datetime(2024, 2, 29, 9)


@settings(max_examples=200)
@given(st.dates(dt.date(1950, 1, 1), dt.date(2010, 12, 31)),
       st.datetimes(dt.datetime(2000, 1, 1), dt.datetime(2090, 12, 31)))
def test_next_birthday_matches_calendar_walk(birthday, now):
    now = now.replace(microsecond=0)
    got = to_datetime(next_occurrence(birthday.month, birthday.day, to_millis(now)))
    assert got == calendar_next_birthday(birthday.month, birthday.day, now)


def test_overlapping_groups_deduplicated():
    ev = EventSpec("party", ms(2024, 6, 1, 18), "come!", frozenset({"family", "work"}),
                   frozenset({"+15550002", "+15559999"}))
    report = AutoMessageReport()
    out = tick(ms(2024, 6, 1, 18), {"party": ev}, GROUPS, report)
    assert sorted(to for to, _ in out) == ["+15550001", "+15550002", "+15550003", "+15559999"]
    assert len(report) == 4


def test_tick_idempotent_and_no_due_events():
    ev = EventSpec("x", ms(2024, 6, 1), "m", extra_numbers=frozenset({"+1"}))
    events, report = {"x": ev}, AutoMessageReport()
    assert tick(ms(2024, 5, 31), events, GROUPS, report) == []
    assert len(tick(ms(2024, 6, 1), events, GROUPS, report)) == 1
    assert tick(ms(2024, 6, 1), events, GROUPS, report) == []
    assert ev.fired and len(report) == 1


def test_yearly_event_advances_one_year():
    ev = EventSpec("y", ms(2024, 3, 1, 9), "m", extra_numbers=frozenset({"+1"}),
                   recurrence=Recurrence.YEARLY)
    tick(ms(2024, 3, 1, 9), {"y": ev}, {}, AutoMessageReport())
    assert to_datetime(ev.fire_at) == dt.datetime(2025, 3, 1, 9)


def test_event_needs_recipients_and_future_time():
    with pytest.raises(ConfigError):
        EventSpec("x", 10, "m")
    ev = EventSpec("x", 10, "m", extra_numbers=frozenset({"+1"}))
    with pytest.raises(ConfigError):
        add_event({}, ev, clock=10)
    events = {}
    add_event(events, ev, clock=9)
    with pytest.raises(ConfigError):
        add_event(events, ev, clock=9)


# report

def test_empty_report_is_header_only():
    assert generate_report(AutoMessageReport()) == REPORT_HEADER + "\n"


def test_report_sorted_and_ranged():
    r = AutoMessageReport()
    r.record(ms(2024, 1, 3), "+3", "c", Cause.EVENT)
    r.record(ms(2024, 1, 1), "+1", "a\tb", Cause.AUTO_REPLY)
    r.record(ms(2024, 1, 2), "+2", "b", Cause.BIRTHDAY)
    assert generate_report(r).splitlines() == [
        REPORT_HEADER,
        "2024-01-01T00:00:00.000\t+1\tAutoReply\ta\\tb",
        "2024-01-02T00:00:00.000\t+2\tBirthday\tb",
        "2024-01-03T00:00:00.000\t+3\tEvent\tc",
    ]
    assert len(generate_report(r, ms(2024, 1, 2), ms(2024, 1, 2)).splitlines()) == 2


# device config

def test_parse_device_config_fixture():
    from sms_controller.preprocess import fixture_text
    cfg = parse_device_config(fixture_text("device-home.conf"))
    r = cfg.rules
    assert r.auto_reply.enabled and r.auto_reply.reply_window_ms == 10 * MIN
    assert r.auto_reply.group_bindings == {"family": "home", "work": "office"}
    assert [c.name for c in r.contacts] == ["Mum", "Dad", "Sam"]
    assert r.events["christmas"].recurrence is Recurrence.YEARLY
    assert cfg.prefilter.spam_weird and "+15552000" in cfg.prefilter.contacts


@pytest.mark.parametrize("text,where", [
    ("BOGUS x\n", "line 1"),
    ("AUTOREPLY maybe\n", "line 1"),
    ("# c\nPROFILE p\n", "line 2"),
    ('EVENT "t" 2024-01-01T09:00 sometimes "m" number=+1\n', "line 1"),
    ('EVENT "t" notadate once "m" number=+1\n', "line 1"),
])
def test_device_config_errors(text, where):
    with pytest.raises(ConfigError, match=where):
        parse_device_config(text)
