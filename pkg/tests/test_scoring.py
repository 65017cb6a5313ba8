import csv
import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wargame_lab.config import GameConfig
from wargame_lab.scoring import (
    Roster,
    RosterMember,
    RuleSet,
    ScoreReport,
    adjudicate,
    conduct_penalties,
    decide_winner,
    render_csv,
    render_text,
    report_to_json,
    uptime_points,
)
from wargame_lab.trace import Action, GameEvent, Outcome, Team, Trace, TraceError

OK = Outcome.SUCCESS

EVIDENCE_ACTIONS = {
    "red.service_stop": {Action.SERVICE_STOPPED, Action.SERVICE_RESTORED},
    "red.remote_shell": {Action.REMOTE_SHELL},
    "red.admin": {Action.ADMIN_PRIVILEGE},
    "red.host_discovery": {Action.KNOWLEDGE_REVEALED},
    "blue.intrusion_stop": {Action.INTRUSION_DETECTED, Action.INTRUSION_BLOCKED},
    "conduct.eavesdrop": {Action.CONDUCT_VIOLATION},
    "conduct.area_visit": {Action.CONDUCT_VIOLATION},
}


def trace(events=(), services=("web", "email", "voip"), duration=1440, final=None):
    cfg = GameConfig(duration_minutes=duration, critical_services=tuple(services))
    final = duration if final is None else final
    return Trace("test", cfg, tuple(events), final)


def red(minute, action, **kw):
    kw.setdefault("outcome", OK)
    return GameEvent(minute, Team.RED, "red-0", action, **kw)


def stop(minute, name):
    return red(minute, Action.SERVICE_STOPPED, target_label=name)


def restore(minute, name):
    return GameEvent(minute, Team.BLUE, "blue", Action.SERVICE_RESTORED, target_label=name, outcome=OK)


def violation(minute, team, tag):
    return GameEvent(minute, team, "x", Action.CONDUCT_VIOLATION, detail=tag)


def items(report, rule):
    return [it for it in report.line_items if it.rule_ref == rule]


def test_clean_day_three_services():
    r = adjudicate(trace())
    assert (r.blue_total, r.red_total, r.winner, r.auto_win) == (360, 0, "blue", False)


def test_target_reached_is_auto_win():
    t = trace([red(50, Action.TARGET_REACHED, target_label="ICS process"), stop(50, "ICS process")], final=50)
    r = adjudicate(t)
    assert r.auto_win and r.winner == "red" and r.auto_win_event == 0


def test_shell_and_two_admins():
    t = trace([red(10, Action.REMOTE_SHELL), red(20, Action.ADMIN_PRIVILEGE), red(30, Action.ADMIN_PRIVILEGE)])
    r = adjudicate(t)
    assert sum(it.points for it in r.line_items if it.rule_ref in ("red.remote_shell", "red.admin")) == 30
    failed = trace([red(10, Action.REMOTE_SHELL, outcome=Outcome.FAILURE)])
    assert adjudicate(failed).red_total == 0


def test_single_service_day():
    out = uptime_points(trace(services=["web"]), ["web"], RuleSet())
    assert len(out) == 24 and sum(it.points for it in out) == 120
    assert [it.minute for it in out] == [60 * h for h in range(1, 25)]


def test_fifteen_minute_outage():
    t = trace([stop(90, "web"), restore(105, "web")], services=["web"])
    out = uptime_points(t, ["web"], RuleSet())
    blue = [it.minute for it in out if it.team is Team.BLUE]
    assert 120 not in blue and len(blue) == 23
    red_items = [it for it in out if it.team is Team.RED]
    assert len(red_items) == 1 and red_items[0].points == 5 and red_items[0].minute == (90, 105)
    assert red_items[0].evidence_event_indices == (0, 1)


def test_five_minute_outage():
    t = trace([stop(200, "web"), restore(205, "web")], services=["web"])
    out = uptime_points(t, ["web"], RuleSet())
    assert not any(it.team is Team.RED for it in out)
    assert 240 not in [it.minute for it in out] and len(out) == 23


def test_outage_spanning_hours_and_open_at_end():
    t = trace([stop(50, "web"), restore(130, "web"), stop(1400, "email")], services=["web", "email"])
    r = adjudicate(t)
    red_items = items(r, "red.service_stop")
    assert [it.minute for it in red_items] == [(50, 130), (1400, 1440)]
    web_lost = {60, 120, 180}
    email_lost = {1440}
    assert r.blue_total == 5 * (48 - len(web_lost) - len(email_lost))


def test_back_to_back_outages_merge():
    t = trace([stop(10, "web"), restore(15, "web"), stop(15, "web"), restore(22, "web")], services=["web"])
    red_items = items(adjudicate(t), "red.service_stop")
    assert len(red_items) == 1 and red_items[0].minute == (10, 22)


def test_unknown_service_is_an_error():
    with pytest.raises(TraceError, match="unknown service"):
        adjudicate(trace([stop(5, "payroll")]))


def test_ics_process_not_scored_unless_listed():
    t = trace([red(5, Action.TARGET_REACHED), stop(5, "ICS process")], final=5)
    assert items(adjudicate(t), "red.service_stop") == []


def test_conduct_examples():
    roster = Roster((RosterMember("alice", Team.RED, frozenset({"event1", "event2"})), RosterMember("bo", Team.BLUE, frozenset({"event1"}))))
    out = conduct_penalties(trace(), roster, RuleSet())
    assert [(it.team, it.points) for it in out] == [(Team.RED, -5)]
    t = trace([violation(0, Team.RED, "pre-game-eavesdropping"), violation(300, Team.BLUE, "area-visit: blue visited red")])
    out = conduct_penalties(t, Roster(), RuleSet())
    assert [(it.team, it.rule_ref, it.points) for it in out] == [
        (Team.RED, "conduct.eavesdrop", -20),
        (Team.BLUE, "conduct.area_visit", -20),
    ]
    assert conduct_penalties(trace(), Roster(), RuleSet()) == []
    with pytest.raises(ValueError):
        Roster((RosterMember("a", Team.RED, frozenset()), RosterMember("a", Team.BLUE, frozenset())))


def test_intrusion_stop_needs_prior_detection():
    det = GameEvent(10, Team.BLUE, "blue", Action.INTRUSION_DETECTED, attack_index=1, outcome=OK)
    blk = GameEvent(11, Team.BLUE, "blue", Action.INTRUSION_BLOCKED, attack_index=1, outcome=OK)
    r = adjudicate(trace([det, blk]))
    stops = items(r, "blue.intrusion_stop")
    assert len(stops) == 1 and stops[0].points == 10 and stops[0].evidence_event_indices == (0, 1)
    assert items(adjudicate(trace([blk])), "blue.intrusion_stop") == []


def test_host_discovery_counts_distinct_addresses():
    t = trace([red(m, Action.KNOWLEDGE_REVEALED, target_label=h) for m, h in [(1, "10.0.0.1"), (2, "10.0.0.2"), (3, "10.0.0.1")]])
    assert sum(it.points for it in items(adjudicate(t), "red.host_discovery")) == 2


def test_decide_winner_examples():
    def rep(red_total, blue_total, auto):
        return ScoreReport((), red_total, blue_total, auto, "")

    assert decide_winner(rep(0, 500, True)) == "red"
    assert decide_winner(rep(30, 360, False)) == "blue"
    assert decide_winner(rep(100, 100, False)) == "draw"


def test_rule_set_checks_and_custom_values():
    with pytest.raises(ValueError):
        RuleSet(remote_shell_points=-1)
    with pytest.raises(ValueError):
        RuleSet(downtime_threshold_minutes=0)
    t = trace([stop(0, "web"), restore(4, "web")], services=["web"])
    assert len(items(adjudicate(t, RuleSet(downtime_threshold_minutes=3)), "red.service_stop")) == 1


def test_renderings():
    t = trace([red(10, Action.REMOTE_SHELL), stop(90, "web"), restore(105, "web")])
    r = adjudicate(t)
    doc = json.loads(report_to_json(r))
    assert doc["red_total"] == r.red_total and len(doc["line_items"]) == len(r.line_items)
    rows = list(csv.reader(io.StringIO(render_csv(r))))
    assert rows[0] == ["team", "rule_ref", "minute", "points"] and len(rows) == len(r.line_items) + 1
    text = render_text(r).splitlines()
    assert len(text) == len(r.line_items) + 2
    assert text[-1].startswith(f"red {r.red_total}  blue {r.blue_total}")
    assert "90-105" in render_text(r)


# -- properties over generated traces --------------------------------------------

SERVICES = ("web", "email", "voip")


@st.composite
def traces(draw):
    duration = draw(st.sampled_from([120, 600, 1440]))
    n = draw(st.integers(0, 30))
    minutes = sorted(draw(st.lists(st.integers(0, duration), min_size=n, max_size=n)))
    events = []
    for m in minutes:
        kind = draw(st.sampled_from(["shell", "admin", "recon", "stop", "restore", "detect", "block", "violation"]))
        if kind == "shell":
            events.append(red(m, Action.REMOTE_SHELL))
        elif kind == "admin":
            events.append(red(m, Action.ADMIN_PRIVILEGE))
        elif kind == "recon":
            events.append(red(m, Action.KNOWLEDGE_REVEALED, target_label=f"10.0.0.{draw(st.integers(1, 5))}"))
        elif kind == "stop":
            events.append(stop(m, draw(st.sampled_from(SERVICES))))
        elif kind == "restore":
            events.append(restore(m, draw(st.sampled_from(SERVICES))))
        elif kind == "detect":
            events.append(GameEvent(m, Team.BLUE, "blue", Action.INTRUSION_DETECTED, attack_index=0, outcome=OK))
        elif kind == "block":
            events.append(GameEvent(m, Team.BLUE, "blue", Action.INTRUSION_BLOCKED, attack_index=0, outcome=OK))
        else:
            events.append(violation(m, draw(st.sampled_from([Team.RED, Team.BLUE])), draw(st.sampled_from(["pre-game-eavesdropping", "area-visit"]))))
    final = duration
    if draw(st.booleans()) and events:
        final = events[-1].minute
        events.append(red(final, Action.TARGET_REACHED, target_label="ICS process"))
    return trace(events, duration=duration, final=final)


@given(traces())
def test_idempotent_decomposed_and_evidenced(t):
    before = list(t.events)
    r1, r2 = adjudicate(t), adjudicate(t)
    assert r1 == r2 and list(t.events) == before
    assert r1.red_total == sum(it.points for it in r1.line_items if it.team is Team.RED)
    assert r1.blue_total == sum(it.points for it in r1.line_items if it.team is Team.BLUE)
    for it in r1.line_items:
        assert all(0 <= k < len(t.events) for k in it.evidence_event_indices)
        allowed = EVIDENCE_ACTIONS.get(it.rule_ref)
        if allowed is not None:
            assert it.evidence_event_indices and {t.events[k].action for k in it.evidence_event_indices} <= allowed
        assert (it.points < 0) == it.rule_ref.startswith("conduct.")
    if t.target_reached:
        assert r1.winner == "red" and r1.auto_win


@given(traces(), st.sampled_from(["shell", "admin", "recon"]))
def test_appending_red_achievement_never_lowers_red(t, kind):
    if t.target_reached:
        return
    m = t.final_minute
    action = {"shell": Action.REMOTE_SHELL, "admin": Action.ADMIN_PRIVILEGE, "recon": Action.KNOWLEDGE_REVEALED}[kind]
    extra = red(m, action, target_label="10.9.9.9")
    longer = Trace(t.scenario_name, t.config, t.events + (extra,), t.final_minute)
    assert adjudicate(longer).red_total >= adjudicate(t).red_total


@given(traces(), st.sampled_from(SERVICES), st.data())
def test_inserting_outage_never_raises_blue(t, name, data):
    if t.target_reached:
        return
    m = data.draw(st.integers(0, t.final_minute))
    pos = sum(1 for e in t.events if e.minute <= m)
    events = t.events[:pos] + (stop(m, name),) + t.events[pos:]
    longer = Trace(t.scenario_name, t.config, events, t.final_minute)
    assert adjudicate(longer).blue_total <= adjudicate(t).blue_total
