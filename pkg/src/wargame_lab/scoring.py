"""White-team adjudication: conduct penalties, blue and red achievements, and the winner.

Rule references name the rule book entries:

=====================  ====  ====================================================
rule_ref               team  meaning
=====================  ====  ====================================================
conduct.one_event      any   competed in both events (per person)
conduct.eavesdrop      red   watched blue configure the network before play
conduct.area_visit     any   visited the opponent's area during play
blue.uptime            blue  critical service up for a whole clock hour
blue.intrusion_stop    blue  detected intrusion blocked (detection + block logged)
red.service_stop       red   critical service down >= threshold minutes (per outage)
red.remote_shell       red   remote shell on a defended host
red.admin              red   administrative privileges on a host or network element
red.host_discovery     red   learned the address of a plant host (per address)
=====================  ====  ====================================================

Stopping the ICS process is an automatic red win; it sets a flag instead of adding points.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Sequence

from .config import ICS_PROCESS
from .trace import Action, GameEvent, Outcome, Team, Trace, TraceError, check_trace

EAVESDROP_TAG = "pre-game-eavesdropping"
AREA_VISIT_TAG = "area-visit"


@dataclass(frozen=True)
class ConductRule:
    rule_id: str
    penalty: int
    scope: str  # "person_team" | "red" | "offending_team"


DEFAULT_CONDUCT = (
    ConductRule("conduct.one_event", 5, "person_team"),
    ConductRule("conduct.eavesdrop", 20, "red"),
    ConductRule("conduct.area_visit", 20, "offending_team"),
)


@dataclass(frozen=True)
class RuleSet:
    conduct_rules: tuple[ConductRule, ...] = DEFAULT_CONDUCT
    service_uptime_points_per_hour: int = 5
    intrusion_stop_points: int = 10
    service_stop_points: int = 5
    downtime_threshold_minutes: int = 10
    remote_shell_points: int = 10
    admin_points: int = 10
    host_discovery_points: int = 1
    auto_win_action: str = Action.TARGET_REACHED.value

    def __post_init__(self) -> None:
        values = [r.penalty for r in self.conduct_rules] + [
            self.service_uptime_points_per_hour,
            self.intrusion_stop_points,
            self.service_stop_points,
            self.remote_shell_points,
            self.admin_points,
            self.host_discovery_points,
        ]
        if any(v < 0 for v in values):
            raise ValueError("point values must be >= 0")
        if self.downtime_threshold_minutes <= 0:
            raise ValueError("downtime threshold must be > 0")

    def penalty(self, rule_id: str) -> int:
        for r in self.conduct_rules:
            if r.rule_id == rule_id:
                return r.penalty
        return 0

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RuleSet":
        kw = dict(d)
        if "conduct_rules" in kw:
            kw["conduct_rules"] = tuple(ConductRule(**r) for r in kw["conduct_rules"])
        return cls(**kw)


@dataclass(frozen=True)
class RosterMember:
    person_id: str
    team: Team
    events: frozenset[str]


@dataclass(frozen=True)
class Roster:
    members: tuple[RosterMember, ...] = ()

    def __post_init__(self) -> None:
        ids = [m.person_id for m in self.members]
        if len(ids) != len(set(ids)):
            raise ValueError("roster person ids must be unique")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Roster":
        return cls(
            tuple(
                RosterMember(m["person_id"], Team(m["team"]), frozenset(m.get("events", ())))
                for m in d.get("members", [])
            )
        )


@dataclass(frozen=True)
class LineItem:
    team: Team
    rule_ref: str
    minute: int | tuple[int, int]
    points: int
    evidence_event_indices: tuple[int, ...] = ()


@dataclass(frozen=True)
class ScoreReport:
    line_items: tuple[LineItem, ...]
    red_total: int
    blue_total: int
    auto_win: bool
    winner: str
    auto_win_event: int | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)


UNKNOWN_SERVICE = "unknown service"


def _outages(t: Trace, services: Sequence[str]) -> dict[str, list[tuple[int, int, list[int]]]]:
    """Maximal ``[start, end)`` outage episodes per service with their evidence events."""
    known = set(services) | {ICS_PROCESS}
    down_since: dict[str, tuple[int, list[int]]] = {}
    episodes: dict[str, list[tuple[int, int, list[int]]]] = {s: [] for s in known}
    for k, e in enumerate(t.events):
        if e.action not in (Action.SERVICE_STOPPED, Action.SERVICE_RESTORED):
            continue
        name = e.target_label
        if name not in known:
            raise TraceError(f"event {k}: {UNKNOWN_SERVICE} {name!r}")
        if e.action is Action.SERVICE_STOPPED:
            if name in down_since:
                continue
            prev = episodes[name]
            if prev and prev[-1][1] == e.minute:
                start, _, ev = prev.pop()
                down_since[name] = (start, ev + [k])
            else:
                down_since[name] = (e.minute, [k])
        elif name in down_since:
            start, ev = down_since.pop(name)
            episodes[name].append((start, e.minute, ev + [k]))
    for name, (start, ev) in down_since.items():
        episodes[name].append((start, t.final_minute, ev))
    return episodes


def uptime_points(t: Trace, services: Sequence[str], rules: RuleSet = RuleSet()) -> list[LineItem]:
    """Hourly blue uptime awards and red service-stop awards.

    Blue earns the hourly award for a service at each whole-hour boundary when the
    service was up for the entire preceding hour. Red earns one award per maximal
    outage lasting at least the downtime threshold. The ICS process is only scored
    here if it is listed in ``services``.
    """
    episodes = _outages(t, services)
    items: list[LineItem] = []
    hours = t.final_minute // 60
    for name in services:
        spans = episodes[name]
        for h in range(1, hours + 1):
            lo, hi = 60 * (h - 1), 60 * h
            if not any(start < hi and end > lo for start, end, _ in spans) and not any(
                start == end and lo <= start < hi for start, end, _ in spans
            ):
                items.append(LineItem(Team.BLUE, "blue.uptime", hi, rules.service_uptime_points_per_hour))
    for name in services:
        for start, end, ev in episodes[name]:
            if end - start >= rules.downtime_threshold_minutes and name != ICS_PROCESS:
                items.append(LineItem(Team.RED, "red.service_stop", (start, end), rules.service_stop_points, tuple(ev)))
    return items


def _tag(e: GameEvent) -> str:
    return e.detail.split(":", 1)[0].strip()


def conduct_penalties(t: Trace, roster: Roster, rules: RuleSet = RuleSet()) -> list[LineItem]:
    items = []
    for m in roster.members:
        if {"event1", "event2"} <= set(m.events) and m.team in (Team.RED, Team.BLUE):
            items.append(LineItem(m.team, "conduct.one_event", 0, -rules.penalty("conduct.one_event")))
    for k, e in t.of(Action.CONDUCT_VIOLATION):
        tag = _tag(e)
        if tag == EAVESDROP_TAG:
            items.append(LineItem(Team.RED, "conduct.eavesdrop", e.minute, -rules.penalty("conduct.eavesdrop"), (k,)))
        elif tag == AREA_VISIT_TAG and e.actor_team in (Team.RED, Team.BLUE):
            items.append(
                LineItem(e.actor_team, "conduct.area_visit", e.minute, -rules.penalty("conduct.area_visit"), (k,))
            )
    return items


def _red_achievements(t: Trace, rules: RuleSet) -> list[LineItem]:
    items = []
    seen_hosts: set[str] = set()
    for k, e in enumerate(t.events):
        if e.outcome is not Outcome.SUCCESS:
            continue
        if e.action is Action.REMOTE_SHELL:
            items.append(LineItem(Team.RED, "red.remote_shell", e.minute, rules.remote_shell_points, (k,)))
        elif e.action is Action.ADMIN_PRIVILEGE:
            items.append(LineItem(Team.RED, "red.admin", e.minute, rules.admin_points, (k,)))
        elif e.action is Action.KNOWLEDGE_REVEALED and e.target_label and e.target_label not in seen_hosts:
            seen_hosts.add(e.target_label)
            items.append(LineItem(Team.RED, "red.host_discovery", e.minute, rules.host_discovery_points, (k,)))
    return items


def _intrusion_stops(t: Trace, rules: RuleSet) -> list[LineItem]:
    """+points per block that can be paired with an earlier, unanswered detection."""
    items = []
    open_detections: list[int] = []
    for k, e in enumerate(t.events):
        if e.action is Action.INTRUSION_DETECTED:
            open_detections.append(k)
        elif e.action is Action.INTRUSION_BLOCKED and e.outcome is Outcome.SUCCESS and open_detections:
            match = next((d for d in open_detections if t.events[d].attack_index == e.attack_index), open_detections[0])
            open_detections.remove(match)
            items.append(LineItem(Team.BLUE, "blue.intrusion_stop", e.minute, rules.intrusion_stop_points, (match, k)))
    return items


def decide_winner(r: ScoreReport) -> str:
    if r.auto_win:
        return "red"
    if r.red_total > r.blue_total:
        return "red"
    if r.blue_total > r.red_total:
        return "blue"
    return "draw"


def adjudicate(t: Trace, rules: RuleSet = RuleSet(), roster: Roster = Roster()) -> ScoreReport:
    """Score a trace. Pure: the trace is not modified and repeated calls agree."""
    check_trace(t)
    items: list[LineItem] = []
    items += uptime_points(t, t.config.critical_services, rules)
    items += _red_achievements(t, rules)
    items += _intrusion_stops(t, rules)
    items += conduct_penalties(t, roster, rules)
    items.sort(key=lambda it: (_start(it.minute), it.team.value, it.rule_ref))

    win_at = next((k for k, e in enumerate(t.events) if e.action.value == rules.auto_win_action), None)
    red = sum(it.points for it in items if it.team is Team.RED)
    blue = sum(it.points for it in items if it.team is Team.BLUE)
    notes = ("single shared benefit b for both sides",) if win_at is None else ("ICS process stopped: automatic red win",)
    report = ScoreReport(tuple(items), red, blue, win_at is not None, "", win_at, notes)
    return ScoreReport(**{**report.__dict__, "winner": decide_winner(report)})


def _start(minute: int | tuple[int, int]) -> int:
    return minute[0] if isinstance(minute, tuple) else minute


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _minute_text(minute: int | tuple[int, int]) -> str:
    return f"{minute[0]}-{minute[1]}" if isinstance(minute, tuple) else str(minute)


def report_to_dict(r: ScoreReport) -> dict[str, Any]:
    d = asdict(r)
    d["line_items"] = [
        {
            "team": it.team.value,
            "rule_ref": it.rule_ref,
            "minute": list(it.minute) if isinstance(it.minute, tuple) else it.minute,
            "points": it.points,
            "evidence_event_indices": list(it.evidence_event_indices),
        }
        for it in r.line_items
    ]
    d["notes"] = list(r.notes)
    return d


def report_to_json(r: ScoreReport) -> str:
    return json.dumps(report_to_dict(r), indent=2)


def render_text(r: ScoreReport) -> str:
    lines = [f"{'rule_ref':<22}{'minute':>12}{'points':>8}{'red':>8}{'blue':>8}"]
    red = blue = 0
    for it in r.line_items:
        if it.team is Team.RED:
            red += it.points
        else:
            blue += it.points
        lines.append(f"{it.rule_ref:<22}{_minute_text(it.minute):>12}{it.points:>+8d}{red:>8d}{blue:>8d}")
    lines.append(f"red {r.red_total}  blue {r.blue_total}  auto_win {str(r.auto_win).lower()}  winner {r.winner}")
    return "\n".join(lines)


def render_csv(r: ScoreReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["team", "rule_ref", "minute", "points"])
    for it in r.line_items:
        w.writerow([it.team.value, it.rule_ref, _minute_text(it.minute), it.points])
    return buf.getvalue()


def load_rules(path: str | None) -> RuleSet:
    if path is None:
        return RuleSet()
    with open(path, encoding="utf-8") as fh:
        return RuleSet.from_dict(json.load(fh))


def load_roster(path: str | None) -> Roster:
    if path is None:
        return Roster()
    with open(path, encoding="utf-8") as fh:
        return Roster.from_dict(json.load(fh))


def evidence_actions(items: Iterable[LineItem], t: Trace) -> list[set[Action]]:
    return [{t.events[k].action for k in it.evidence_event_indices} for it in items]
