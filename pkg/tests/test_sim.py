from collections import Counter

import pytest

from sms_controller.chat import decode
from sms_controller.preprocess import fixture_path
from sms_controller.sim import (Folder, ScenarioError, active_rosters, load_scenario,
                                parse_scenario, run_scenario)

SCENARIOS = ["chat-convergence", "autoreply", "spam-feedback", "events"]


def scenario_path(name):
    return fixture_path(f"scenarios/{name}.scn")


@pytest.mark.parametrize("name", SCENARIOS)
def test_bundled_scenarios_pass(name, resources):
    result = run_scenario(load_scenario(scenario_path(name)), 0, resources)
    assert result.passed, result.text()


@pytest.mark.parametrize("name", SCENARIOS)
def test_runs_are_deterministic(name, resources):
    sc = load_scenario(scenario_path(name))
    assert run_scenario(sc, 3, resources).text() == run_scenario(sc, 3, resources).text()


def test_seed_changes_chat_codes_only(resources):
    sc = load_scenario(scenario_path("chat-convergence"))
    a, b = run_scenario(sc, 1, resources), run_scenario(sc, 2, resources)
    assert a.chat_codes != b.chat_codes
    assert a.passed and b.passed


def test_empty_script(resources):
    result = run_scenario(parse_scenario("DEVICE +1\nDEVICE +2\n"), 0, resources)
    assert result.transcript == [] and result.passed


@pytest.mark.parametrize("text,msg", [
    ("DEVICE +1\nAT 0 SEND +1 +9 \"hi\"\n", "unknown device"),
    ("DEVICE +1\nASSERT INBOX +9 0\n", "unknown device"),
    ("DEVICE +1\nDEVICE +1\n", "duplicate"),
    ("DEVICE +1\nAT 5 TICK\nAT 4 TICK\n", "backwards"),
    ("DEVICE +1\nAT 0 DANCE\n", "unknown verb"),
    ("DEVICE +1\nAT 0 SEND +1 +1\n", "arguments"),
    ("DEVICE +1 nick\n", "key=value"),
    ("DEVICE +1\nAT yesterday TICK\n", "bad time"),
])
def test_validation_errors(text, msg):
    with pytest.raises(ScenarioError, match=msg):
        parse_scenario(text)


def test_failing_assertion_reported(resources):
    result = run_scenario(parse_scenario("DEVICE +1\nDEVICE +2\nAT 0 SEND +1 +2 \"hi\"\n"
                                         "ASSERT INBOX +2 5\n"), 0, resources)
    assert not result.passed
    assert result.assertions[0].line() == "FAIL line 4: ASSERT INBOX +2 5  (got 1)"


def _folders_by_id(bus):
    seen = Counter()
    where = {}
    for addr, dev in bus.devices.items():
        for folder, ids in dev.folders.items():
            for mid in ids:
                seen[mid] += 1
                where[mid] = (addr, folder)
    return seen, where


@pytest.mark.parametrize("name", SCENARIOS)
def test_conservation_and_inbox_hygiene(name, resources):
    bus = run_scenario(load_scenario(scenario_path(name)), 0, resources).bus
    seen, where = _folders_by_id(bus)
    for mid, sms in bus.messages.items():
        if bus.device(sms.recipient) is None:
            assert seen[mid] == 0
            continue
        assert seen[mid] == 1
        addr, folder = where[mid]
        assert addr == bus.device(sms.recipient).address.replace(" ", "")
        is_wire = decode(sms.body) is not None
        assert (folder is Folder.CHAT) == is_wire


def test_convergence_after_join_and_leave(resources):
    result = run_scenario(load_scenario(scenario_path("chat-convergence")), 0, resources)
    rosters = active_rosters(result.bus, result.chat_codes[0])
    assert len(rosters) == 2
    assert len({tuple(sorted(r.items())) for r in rosters.values()}) == 1


def test_malformed_wire_dropped(resources):
    sc = parse_scenario('DEVICE +1\nDEVICE +2\nAT 0 SEND +1 +2 "#GSC1|garbage"\n'
                        "ASSERT DROPPED +2 1\nASSERT INBOX +2 0\n")
    assert run_scenario(sc, 0, resources).passed


def test_script_errors_are_logged_not_fatal(resources):
    sc = parse_scenario("DEVICE +1\nDEVICE +2\nAT 0 USER +2 ACCEPT ABCDEFGH\n")
    result = run_scenario(sc, 0, resources)
    assert any("ERROR line 3" in line for line in result.transcript)
