"""War-game configuration: clock, teams, behavioural knobs, and the Event 2 training effect."""

from __future__ import annotations

import dataclasses
import enum
import json
from dataclasses import dataclass, field
from typing import Any, Mapping

ICS_PROCESS = "ICS process"

DEFAULT_SERVICES = ("web", "email", "voip")


class ConfigError(ValueError):
    pass


class EventId(str, enum.Enum):
    EVENT1 = "event1"
    EVENT2 = "event2"


class PolicyKind(str, enum.Enum):
    EQUILIBRIUM = "equilibrium"
    BEST_RESPONSE_BELIEFS = "best_response_beliefs"
    EPSILON_GREEDY = "epsilon_greedy"
    INSTANCE_LEARNING = "instance_learning"
    SCRIPTED = "scripted"


_REQUIRED_PARAMS = {
    PolicyKind.EPSILON_GREEDY: ("epsilon",),
    PolicyKind.INSTANCE_LEARNING: ("decay", "temperature"),
}

_PROBABILITY_PARAMS = ("epsilon", "block_probability", "recon_probability")


@dataclass(frozen=True)
class AgentPolicy:
    """How one side picks actions.

    Parameters by kind (all optional unless noted):

    * ``epsilon_greedy``: ``epsilon`` (required)
    * ``instance_learning``: ``decay`` and ``temperature`` (required)
    * ``scripted``: red ``script`` (list of attack indices, ``-1`` = recon, cycled);
      blue ``defense`` (fixed index)
    * red, non-equilibrium: ``recon_probability`` (chance to scout a hidden entry first)
    * blue, non-equilibrium: ``block_probability`` (chance a detected intrusion is
      blocked; equilibrium blue always blocks)
    """

    kind: PolicyKind
    parameters: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        object.__setattr__(self, "parameters", dict(self.parameters))

    def param(self, name: str, default: Any = None) -> Any:
        return self.parameters.get(name, default)

    def to_dict(self) -> dict[str, Any]:
        params = {k: list(v) if isinstance(v, (list, tuple)) else v for k, v in sorted(self.parameters.items())}
        return {"kind": self.kind.value, "parameters": params}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AgentPolicy":
        return cls(PolicyKind(d["kind"]), dict(d.get("parameters", {})))


@dataclass(frozen=True)
class RuleChange:
    minute: int
    patch: Mapping[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {"minute": self.minute, "patch": json.loads(json.dumps(self.patch))}


@dataclass(frozen=True)
class GameConfig:
    event_id: EventId = EventId.EVENT1
    duration_minutes: int = 1440
    tick_minutes: int = 1
    seed: int = 0
    red_policy: AgentPolicy = AgentPolicy(PolicyKind.EQUILIBRIUM)
    blue_policy: AgentPolicy = AgentPolicy(PolicyKind.EQUILIBRIUM)
    red_team_size: int = 3
    shift_length_minutes: int = 480
    noncompliance_probability: float = 0.0
    knowledge_mask_fraction: float = 0.0
    knowledge_noise_sigma: float = 0.0
    detection_probability: float = 0.5
    recon_duration_minutes: int = 30
    attempt_duration_minutes: int = 60
    service_repair_minutes: int = 30
    critical_services: tuple[str, ...] = DEFAULT_SERVICES
    rule_change_schedule: tuple[RuleChange, ...] = ()
    red_prior: float = 0.5
    service_disruption_probability: float = 0.0
    training_detection_delta: float = 0.2
    training_applied: bool = False
    equilibrium_leader: str = "defender"
    equilibrium_mode: str = "anticipatory_strong"
    equilibrium_tie_break: str = "lowest_index"

    def __post_init__(self) -> None:
        object.__setattr__(self, "event_id", EventId(self.event_id))
        object.__setattr__(self, "critical_services", tuple(self.critical_services))
        changes = tuple(
            c if isinstance(c, RuleChange) else RuleChange(int(c[0]), c[1]) for c in self.rule_change_schedule
        )
        object.__setattr__(self, "rule_change_schedule", changes)

    def replace(self, **changes: Any) -> "GameConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, AgentPolicy):
                v = v.to_dict()
            elif isinstance(v, enum.Enum):
                v = v.value
            elif f.name == "critical_services":
                v = list(v)
            elif f.name == "rule_change_schedule":
                v = [c.to_dict() for c in v]
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "GameConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kw = dict(d)
        for side in ("red_policy", "blue_policy"):
            if side in kw:
                kw[side] = AgentPolicy.from_dict(kw[side])
        if "rule_change_schedule" in kw:
            kw["rule_change_schedule"] = tuple(
                RuleChange(int(c["minute"]), c["patch"]) for c in kw["rule_change_schedule"]
            )
        try:
            return cls(**kw)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from None


def load_config(path: str) -> GameConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return GameConfig.from_dict(doc)


def validate_config(cfg: GameConfig) -> None:
    """Raise :class:`ConfigError` on the first broken invariant."""
    if cfg.tick_minutes < 1:
        raise ConfigError("tick_minutes must be >= 1")
    if cfg.duration_minutes < 1 or cfg.duration_minutes % cfg.tick_minutes:
        raise ConfigError("duration_minutes must be a positive multiple of tick_minutes")
    if cfg.red_team_size < 1:
        raise ConfigError("red_team_size must be >= 1")
    for name in ("shift_length_minutes", "recon_duration_minutes", "attempt_duration_minutes", "service_repair_minutes"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be >= 1")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    for name in (
        "noncompliance_probability",
        "knowledge_mask_fraction",
        "detection_probability",
        "red_prior",
        "service_disruption_probability",
    ):
        v = getattr(cfg, name)
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"{name} must be in [0, 1], got {v}")
    if cfg.knowledge_noise_sigma < 0:
        raise ConfigError("knowledge_noise_sigma must be >= 0")
    if cfg.training_detection_delta < 0:
        raise ConfigError("training_detection_delta must be >= 0")
    if len(set(cfg.critical_services)) != len(cfg.critical_services):
        raise ConfigError("critical_services must be unique")
    minutes = [c.minute for c in cfg.rule_change_schedule]
    if minutes != sorted(minutes) or any(m < 0 or m > cfg.duration_minutes for m in minutes):
        raise ConfigError("rule_change_schedule must be time-ordered within the game")
    for side, policy in (("red_policy", cfg.red_policy), ("blue_policy", cfg.blue_policy)):
        for name in _REQUIRED_PARAMS.get(policy.kind, ()):
            if name not in policy.parameters:
                raise ConfigError(f"{side}: {policy.kind.value} requires parameter {name!r}")
        for name in _PROBABILITY_PARAMS:
            v = policy.parameters.get(name)
            if v is not None and not 0.0 <= float(v) <= 1.0:
                raise ConfigError(f"{side}: {name} must be in [0, 1]")
        if policy.kind is PolicyKind.INSTANCE_LEARNING:
            if float(policy.parameters["decay"]) < 0 or float(policy.parameters["temperature"]) <= 0:
                raise ConfigError(f"{side}: decay must be >= 0 and temperature > 0")
    if cfg.red_policy.kind is PolicyKind.SCRIPTED:
        script = cfg.red_policy.param("script")
        if not isinstance(script, (list, tuple)) or not script:
            raise ConfigError("red_policy: scripted requires a nonempty 'script' list")


def apply_training_effect(cfg: GameConfig) -> GameConfig:
    """Event 2 blue teams had extra SCADA security training.

    Detection rises by ``training_detection_delta`` (capped at 1) and a
    ``best_response_beliefs`` blue team plays the equilibrium defense instead. The
    result is marked so applying it twice changes nothing; Event 1 passes through.
    """
    if cfg.event_id is EventId.EVENT1 or cfg.training_applied:
        return cfg
    blue = cfg.blue_policy
    if blue.kind is PolicyKind.BEST_RESPONSE_BELIEFS:
        blue = AgentPolicy(PolicyKind.EQUILIBRIUM, blue.parameters)
    return cfg.replace(
        detection_probability=min(1.0, cfg.detection_probability + cfg.training_detection_delta),
        blue_policy=blue,
        training_applied=True,
    )
