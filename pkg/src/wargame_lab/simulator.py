"""Seeded, minute-clock simulation of a red/blue war game against a scenario.

The loop only visits ticks where something can happen (a free red member, a
pending blue task, a scheduled restoration or rule change). Skipped ticks are
provably idle, so the trace is identical to stepping every tick; ``dense=True``
forces the plain loop for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import engine
from .agents import (
    BlueAction,
    BlueContext,
    BlueView,
    KnowledgeState,
    RedContext,
    blue_decide,
    initial_defense,
    observe,
    red_decide,
)
from .config import ICS_PROCESS, ConfigError, GameConfig, PolicyKind, apply_training_effect, validate_config
from .equilibria import InfeasibleError, stackelberg
from .scenario import Scenario, patch_scenario, require_valid
from .trace import Action, GameEvent, Outcome, Team, Trace

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_replication_seed(master_seed: int, replication_index: int) -> int:
    """SplitMix64 finalizer applied to ``master_seed + (index + 1) * golden_gamma``.

    Both steps are bijections on 64-bit integers, so different indices (for one
    master seed) or different master seeds (for one index) never collide.
    """
    z = (master_seed + (replication_index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class AttemptOutcome:
    layers_passed: int
    reached_target: bool
    per_layer_draws: tuple[tuple[int, float, bool], ...]


def attempt_attack(s: Scenario, i: int, j: int, rng: np.random.Generator) -> AttemptOutcome:
    """Try layers in order; each passes with ``p[l, i, j]``, and the first failure stops the attempt."""
    if not 0 <= i < s.n_attacks or not 0 <= j < s.n_defenses:
        raise IndexError(f"cell ({i}, {j}) out of range")
    draws = []
    passed = 0
    for l in range(s.n_layers):
        p = float(s.penetration[l, i, j])
        ok = bool(rng.random() < p)
        draws.append((l, p, ok))
        if not ok:
            break
        passed += 1
    return AttemptOutcome(passed, passed == s.n_layers, tuple(draws))


def shift_member(minute: int, cfg: GameConfig) -> int:
    """Index of the red member on duty: shifts rotate through the team around the clock."""
    return (minute // cfg.shift_length_minutes) % cfg.red_team_size


def shift_window(member: int, minute: int, cfg: GameConfig) -> tuple[int, int] | None:
    """The ``[start, end)`` shift containing ``minute`` if ``member`` is on duty then."""
    if shift_member(minute, cfg) != member:
        return None
    start = (minute // cfg.shift_length_minutes) * cfg.shift_length_minutes
    return start, start + cfg.shift_length_minutes


def _ceil_to(minute: int, tick: int) -> int:
    return -(-minute // tick) * tick


def _host_label(l: int, i: int, j: int) -> str:
    return f"10.{l}.{i}.{j + 1}"


def _foothold_label(l: int) -> str:
    return f"10.{l}.0.254"


class _Game:
    def __init__(self, scenario: Scenario, cfg: GameConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.events: list[GameEvent] = []
        self.over = False
        self.needs_equilibrium = PolicyKind.EQUILIBRIUM in (cfg.red_policy.kind, cfg.blue_policy.kind)
        self._load(scenario)

        self.knowledge = KnowledgeState.from_truth(
            scenario.penetration, self._draw_hidden(scenario), cfg.knowledge_noise_sigma, self.rng
        )
        self.red = RedContext(
            benefit=scenario.benefit,
            attack_cost=scenario.attack_cost,
            equilibrium_attack=self.eq_attack,
            prior=cfg.red_prior,
            noncompliance_probability=cfg.noncompliance_probability,
        )
        self.busy_until = [0] * cfg.red_team_size
        self.footholds: set[int] = set()
        self.blue_ctx = BlueContext(
            u_d=self.matrices.u_d, affordable=self.affordable, equilibrium_defense=self.eq_defense
        )
        self.view = BlueView(current_defense=initial_defense(cfg.blue_policy, self.blue_ctx, self.rng))
        self.services = {name: True for name in cfg.critical_services}
        self.restorations: list[tuple[int, str]] = []
        self.pending_changes = list(cfg.rule_change_schedule)

    def _load(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.matrices = engine.build_matrices(scenario)
        self.affordable = sorted(engine.affordable_defenses(scenario))
        if not self.affordable:
            raise InfeasibleError("no affordable defense strategy within the budget")
        self.eq_attack = self.eq_defense = None
        if self.needs_equilibrium:
            eq = stackelberg(
                scenario,
                self.cfg.equilibrium_leader,
                self.cfg.equilibrium_mode,
                None,
                self.cfg.equilibrium_tie_break,
            )
            self.eq_attack, self.eq_defense = eq.attack_index, eq.defense_index

    def _draw_hidden(self, s: Scenario) -> list[tuple[int, int, int]]:
        total = s.penetration.size
        n_hidden = int(math.floor(self.cfg.knowledge_mask_fraction * total + 0.5))
        if n_hidden == 0:
            return []
        flat = sorted(int(k) for k in self.rng.choice(total, size=n_hidden, replace=False))
        return [tuple(int(v) for v in np.unravel_index(k, s.penetration.shape)) for k in flat]  # type: ignore[misc]

    def emit(self, minute: int, team: Team, actor: str, action: Action, **kw) -> int:
        self.events.append(GameEvent(minute, team, actor, action, **kw))
        return len(self.events) - 1

    # -- per-tick phases -----------------------------------------------------

    def apply_rule_changes(self, minute: int) -> None:
        while self.pending_changes and self.pending_changes[0].minute <= minute:
            change = self.pending_changes.pop(0)
            self._load(patch_scenario(self.scenario, change.patch))
            self.red.benefit = self.scenario.benefit
            self.red.attack_cost = self.scenario.attack_cost
            self.red.equilibrium_attack = self.eq_attack
            self.blue_ctx.u_d = self.matrices.u_d
            self.blue_ctx.affordable = self.affordable
            self.blue_ctx.equilibrium_defense = self.eq_defense
            self.view.info_dirty = True
            self.emit(minute, Team.WHITE, "white", Action.RULE_CHANGE, detail="changed: " + ", ".join(sorted(change.patch)))

    def restore_services(self, minute: int) -> None:
        due = [r for r in self.restorations if r[0] <= minute]
        self.restorations = [r for r in self.restorations if r[0] > minute]
        for _, name in sorted(due):
            self.services[name] = True
            self.emit(minute, Team.BLUE, "blue", Action.SERVICE_RESTORED, target_label=name, outcome=Outcome.SUCCESS)

    def blue_turn(self, minute: int) -> None:
        action: BlueAction = blue_decide(self.view, self.cfg.blue_policy, minute, self.rng, self.blue_ctx)
        if action.kind == "block":
            detected = self.events[action.detection_event]
            self.emit(
                minute,
                Team.BLUE,
                "blue",
                Action.INTRUSION_BLOCKED,
                attack_index=detected.attack_index,
                defense_index=self.view.current_defense,
                outcome=Outcome.SUCCESS,
                detail=f"detection event {action.detection_event}",
            )
        elif action.kind == "restore":
            self.restorations.append((minute + self.cfg.service_repair_minutes, action.service))
            self.emit(minute, Team.BLUE, "blue", Action.NOTE, target_label=action.service, detail="repair started")
        elif action.kind == "switch":
            self.view.current_defense = action.defense_index
            self.emit(
                minute, Team.BLUE, "blue", Action.MITIGATION_DEPLOYED, defense_index=action.defense_index, outcome=Outcome.SUCCESS
            )

    def red_turn(self, minute: int) -> None:
        member = shift_member(minute, self.cfg)
        if self.busy_until[member] > minute:
            return
        actor = f"red-{member}"
        act = red_decide(self.knowledge, self.cfg.red_policy, actor, minute, self.rng, self.red)
        if act.kind == "recon":
            l, i, j = act.entry
            self.emit(minute, Team.RED, actor, Action.RECON, attack_index=i, defense_index=j, layer_index=l)
            host = _host_label(l, i, j)
            estimate = observe(self.scenario.penetration[l, i, j], self.cfg.knowledge_noise_sigma, self.rng)
            self.knowledge.reveal((l, i, j), estimate, host)
            self.emit(
                minute,
                Team.RED,
                actor,
                Action.KNOWLEDGE_REVEALED,
                attack_index=i,
                defense_index=j,
                layer_index=l,
                target_label=host,
                outcome=Outcome.SUCCESS,
                detail=f"estimate={estimate:.6g}",
            )
            self.busy_until[member] = minute + self.cfg.recon_duration_minutes
        elif act.kind == "attack":
            self._attack(minute, actor, act.attack_index, act.noncompliant)
            self.busy_until[member] = minute + self.cfg.attempt_duration_minutes
        else:
            self.busy_until[member] = minute + self.cfg.tick_minutes

    def _attack(self, minute: int, actor: str, i: int, noncompliant: bool) -> None:
        s, j = self.scenario, self.view.current_defense
        self.emit(
            minute, Team.RED, actor, Action.ATTACK_ATTEMPT, attack_index=i, defense_index=j,
            detail="noncompliant" if noncompliant else "",
        )
        result = attempt_attack(s, i, j, self.rng)
        for l, p, ok in result.per_layer_draws:
            self.emit(
                minute, Team.RED, actor, Action.LAYER_PENETRATED if ok else Action.LAYER_BLOCKED,
                attack_index=i, defense_index=j, layer_index=l,
                outcome=Outcome.SUCCESS if ok else Outcome.FAILURE, detail=f"p={p:.6g}",
            )
            if ok and l not in self.footholds:
                self.footholds.add(l)
                gain = Action.REMOTE_SHELL if l == 0 else Action.ADMIN_PRIVILEGE
                self.emit(minute, Team.RED, actor, gain, layer_index=l, target_label=_foothold_label(l), outcome=Outcome.SUCCESS)

        detected = bool(self.rng.random() < self.cfg.detection_probability)
        if detected:
            k = self.emit(minute, Team.BLUE, "blue", Action.INTRUSION_DETECTED, attack_index=i, defense_index=j, outcome=Outcome.SUCCESS)
            self.view.pending_detections.append((k, i))
            self.view.observed_attacks.append(i)
            self.view.info_dirty = True

        self.red.believed_defense = j
        shaped = s.benefit * result.layers_passed / s.n_layers
        self.red.history.append((i, shaped - float(s.attack_cost[i, j]), minute))
        if detected:
            cd = float(engine.defense_cost_matrix(s)[i, j])
            self.blue_ctx.history.append((j, s.benefit - shaped - cd, minute))

        if result.reached_target:
            self.emit(minute, Team.RED, actor, Action.TARGET_REACHED, attack_index=i, defense_index=j,
                      target_label=ICS_PROCESS, outcome=Outcome.SUCCESS)
            self.emit(minute, Team.RED, actor, Action.SERVICE_STOPPED, target_label=ICS_PROCESS, outcome=Outcome.SUCCESS)
            self.over = True
            return
        disrupt = self.rng.random() < self.cfg.service_disruption_probability
        up = [name for name, ok in self.services.items() if ok and name != ICS_PROCESS]
        if disrupt and result.layers_passed > 0 and up:
            name = up[int(self.rng.integers(len(up)))]
            self.services[name] = False
            self.view.stopped_services.append(name)
            self.emit(minute, Team.RED, actor, Action.SERVICE_STOPPED, target_label=name, outcome=Outcome.SUCCESS)

    # -- clock ---------------------------------------------------------------

    def next_minute(self, minute: int) -> int:
        cfg = self.cfg
        tick = cfg.tick_minutes
        nxt = minute + tick
        if self.view.has_work:
            return nxt
        boundary = (minute // cfg.shift_length_minutes + 1) * cfg.shift_length_minutes
        red_at = max(nxt, self.busy_until[shift_member(minute, cfg)])
        candidates = [min(red_at, boundary)]
        if self.restorations:
            candidates.append(min(r[0] for r in self.restorations))
        if self.pending_changes:
            candidates.append(self.pending_changes[0].minute)
        return max(nxt, _ceil_to(min(candidates), tick))

    def run(self, dense: bool = False) -> int:
        cfg = self.cfg
        self.emit(0, Team.BLUE, "blue", Action.MITIGATION_DEPLOYED, defense_index=self.view.current_defense,
                  outcome=Outcome.SUCCESS, detail="initial deployment")
        minute = 0
        while minute < cfg.duration_minutes:
            self.apply_rule_changes(minute)
            self.restore_services(minute)
            self.blue_turn(minute)
            self.red_turn(minute)
            if self.over:
                return minute
            minute = minute + cfg.tick_minutes if dense else self.next_minute(minute)
        return cfg.duration_minutes


def run_game(s: Scenario, cfg: GameConfig, *, dense: bool = False) -> Trace:
    """Play one game; the trace is a pure function of ``(s, cfg)``."""
    require_valid(s)
    cfg = apply_training_effect(cfg)
    validate_config(cfg)
    for change in cfg.rule_change_schedule:
        try:
            patch_scenario(s, change.patch)
        except ValueError as exc:
            raise ConfigError(f"rule change at minute {change.minute}: {exc}") from None
    game = _Game(s, cfg)
    final = game.run(dense=dense)
    return Trace(scenario_name=s.name, config=cfg, events=tuple(game.events), final_minute=final)
