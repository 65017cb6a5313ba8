"""Structured game events and the archived trace of one war game.

On disk a trace is JSON Lines: one header object (``scenario_name``,
``final_minute``, ``config``) followed by one object per event. Serialization is
byte-stable for identical traces.
"""

from __future__ import annotations

import enum
import io
import json
from dataclasses import dataclass, fields
from typing import IO, Any, Iterable

from .config import GameConfig


class TraceError(ValueError):
    pass


class Team(str, enum.Enum):
    RED = "red"
    BLUE = "blue"
    WHITE = "white"


class Action(str, enum.Enum):
    RECON = "recon"
    ATTACK_ATTEMPT = "attack_attempt"
    LAYER_PENETRATED = "layer_penetrated"
    LAYER_BLOCKED = "layer_blocked"
    TARGET_REACHED = "target_reached"
    SERVICE_STOPPED = "service_stopped"
    SERVICE_RESTORED = "service_restored"
    INTRUSION_DETECTED = "intrusion_detected"
    INTRUSION_BLOCKED = "intrusion_blocked"
    MITIGATION_DEPLOYED = "mitigation_deployed"
    KNOWLEDGE_REVEALED = "knowledge_revealed"
    CONDUCT_VIOLATION = "conduct_violation"
    RULE_CHANGE = "rule_change"
    REMOTE_SHELL = "remote_shell"
    ADMIN_PRIVILEGE = "admin_privilege"
    NOTE = "note"


class Outcome(str, enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class GameEvent:
    minute: int
    actor_team: Team
    actor_id: str
    action: Action
    attack_index: int | None = None
    defense_index: int | None = None
    layer_index: int | None = None
    target_label: str | None = None
    outcome: Outcome = Outcome.NOT_APPLICABLE
    detail: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "actor_team", Team(self.actor_team))
        object.__setattr__(self, "action", Action(self.action))
        object.__setattr__(self, "outcome", Outcome(self.outcome))

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.value if isinstance(v, enum.Enum) else v
        return out

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GameEvent":
        names = {f.name for f in fields(cls)}
        if set(d) - names:
            raise TraceError(f"unexpected event fields: {sorted(set(d) - names)}")
        return cls(**d)


@dataclass(frozen=True)
class Trace:
    scenario_name: str
    config: GameConfig
    events: tuple[GameEvent, ...]
    final_minute: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))

    def of(self, action: Action) -> list[tuple[int, GameEvent]]:
        return [(k, e) for k, e in enumerate(self.events) if e.action is action]

    @property
    def target_reached(self) -> bool:
        return any(e.action is Action.TARGET_REACHED for e in self.events)


def check_trace(t: Trace) -> None:
    """Raise :class:`TraceError` unless ``t`` is time-ordered and ends correctly."""
    last = 0
    targets = []
    for k, e in enumerate(t.events):
        if e.minute < last:
            raise TraceError(f"event {k} at minute {e.minute} precedes minute {last}")
        if not 0 <= e.minute <= t.final_minute:
            raise TraceError(f"event {k} minute {e.minute} outside [0, {t.final_minute}]")
        last = e.minute
        if e.action is Action.TARGET_REACHED:
            targets.append(e)
    if len(targets) > 1:
        raise TraceError("trace has more than one target_reached event")
    if targets and targets[0].minute != t.final_minute:
        raise TraceError("trace must end at its target_reached event")
    if t.final_minute > t.config.duration_minutes:
        raise TraceError("final_minute exceeds the configured duration")


def _dumps(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def dump_trace(t: Trace, fh: IO[str]) -> None:
    header = {"scenario_name": t.scenario_name, "final_minute": t.final_minute, "config": t.config.to_dict()}
    fh.write(_dumps(header) + "\n")
    for e in t.events:
        fh.write(_dumps(e.to_dict()) + "\n")


def dumps_trace(t: Trace) -> str:
    buf = io.StringIO()
    dump_trace(t, buf)
    return buf.getvalue()


def write_trace(t: Trace, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        dump_trace(t, fh)


def loads_trace(lines: Iterable[str] | str) -> Trace:
    if isinstance(lines, str):
        lines = lines.splitlines()
    rows = [line for line in lines if line.strip()]
    if not rows:
        raise TraceError("empty trace file")
    try:
        header = json.loads(rows[0])
        events = tuple(GameEvent.from_dict(json.loads(r)) for r in rows[1:])
        trace = Trace(
            scenario_name=header["scenario_name"],
            config=GameConfig.from_dict(header["config"]),
            events=events,
            final_minute=int(header["final_minute"]),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise TraceError(f"malformed trace: {exc}") from None
    check_trace(trace)
    return trace


def read_trace(path: str) -> Trace:
    with open(path, encoding="utf-8") as fh:
        return loads_trace(fh)
