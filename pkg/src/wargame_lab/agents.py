"""Red and blue decision policies, from the rational equilibrium player to noisy humans."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import AgentPolicy, PolicyKind

Entry = tuple[int, int, int]  # (layer, attack, defense)


class KnowledgeState:
    """What red believes about the penetration tensor.

    ``estimates`` holds NaN for entries red has not learned. Entries and hosts can
    only be added, never forgotten.
    """

    def __init__(self, shape: tuple[int, int, int]):
        self.estimates = np.full(shape, np.nan)
        self.revealed_count = 0
        self.discovered_hosts: set[str] = set()

    @classmethod
    def from_truth(
        cls,
        penetration: np.ndarray,
        hidden: Sequence[Entry],
        noise_sigma: float,
        rng: np.random.Generator,
    ) -> "KnowledgeState":
        k = cls(penetration.shape)
        hidden_set = set(hidden)
        for entry in np.ndindex(*penetration.shape):
            if entry not in hidden_set:
                k.reveal(entry, observe(penetration[entry], noise_sigma, rng))
        return k

    @property
    def complete(self) -> bool:
        return not np.isnan(self.estimates).any()

    def unknown_entries(self) -> list[Entry]:
        return [tuple(int(v) for v in e) for e in np.argwhere(np.isnan(self.estimates))]  # type: ignore[misc]

    def reveal(self, entry: Entry, estimate: float, host: str | None = None) -> bool:
        """Record an estimate for a hidden entry; returns False if it was already known."""
        if host is not None:
            self.discovered_hosts.add(host)
        if not np.isnan(self.estimates[entry]):
            return False
        if not 0.0 <= estimate <= 1.0:
            raise ValueError("estimate must be a probability")
        self.estimates[entry] = estimate
        self.revealed_count += 1
        return True

    def believed(self, prior: float) -> np.ndarray:
        return np.where(np.isnan(self.estimates), prior, self.estimates)


def observe(true_p: float, sigma: float, rng: np.random.Generator) -> float:
    if sigma <= 0:
        return float(true_p)
    return float(min(1.0, max(0.0, true_p + rng.normal(0.0, sigma))))


def ibl_scores(history: Sequence[tuple[int, float, int]], candidates: Sequence[int], decay: float, minute: int) -> list[float]:
    """Recency-weighted payoff memory: ``sum payoff * (minute - t + 1) ** -decay`` per candidate."""
    scores = {c: 0.0 for c in candidates}
    for choice, payoff, t in history:
        if choice in scores:
            scores[choice] += payoff * (minute - t + 1) ** (-decay)
    return [scores[c] for c in candidates]


def softmax(scores: Sequence[float], temperature: float) -> np.ndarray:
    z = np.asarray(scores, dtype=np.float64) / temperature
    z = np.exp(z - z.max())
    return z / z.sum()


def ibl_choose(
    history: Sequence[tuple[int, float, int]],
    candidates: Sequence[int],
    params: dict,
    minute: int,
    rng: np.random.Generator,
) -> int:
    """Pick a candidate by softmax over decayed instance memory. Unseen candidates score 0."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError("candidates must be nonempty")
    decay, tau = float(params["decay"]), float(params["temperature"])
    if decay < 0 or tau <= 0:
        raise ValueError("decay must be >= 0 and temperature > 0")
    probs = softmax(ibl_scores(history, candidates, decay, minute), tau)
    return candidates[int(rng.choice(len(candidates), p=probs))]


# ---------------------------------------------------------------------------
# Red
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RedAction:
    kind: str  # "recon" | "attack" | "idle"
    attack_index: int | None = None
    entry: Entry | None = None
    noncompliant: bool = False


@dataclass
class RedContext:
    """Team-level facts a red member decides with."""

    benefit: float
    attack_cost: np.ndarray
    equilibrium_attack: int | None = None
    believed_defense: int | None = None
    history: list[tuple[int, float, int]] = field(default_factory=list)
    prior: float = 0.5
    noncompliance_probability: float = 0.0
    decisions: int = 0

    @property
    def n_attacks(self) -> int:
        return int(self.attack_cost.shape[0])


def believed_attack_values(k: KnowledgeState, ctx: RedContext) -> np.ndarray:
    """Expected attacker utility of each attack under red's current beliefs."""
    p = np.prod(k.believed(ctx.prior), axis=0)
    u = ctx.benefit * p - ctx.attack_cost
    if ctx.believed_defense is not None:
        return u[:, ctx.believed_defense]
    return u.mean(axis=1)


def _recon(k: KnowledgeState) -> RedAction:
    unknown = k.unknown_entries()
    if not unknown:
        return RedAction("idle")
    return RedAction("recon", entry=unknown[0])


def red_decide(
    k: KnowledgeState,
    policy: AgentPolicy,
    member_id: str,
    minute: int,
    rng: np.random.Generator,
    ctx: RedContext,
) -> RedAction:
    """One decision for an on-shift red member.

    Every call first draws whether the member ignores the team plan; a noncompliant
    member attacks uniformly at random.
    """
    ctx.decisions += 1
    if rng.random() < ctx.noncompliance_probability:
        return RedAction("attack", int(rng.integers(ctx.n_attacks)), noncompliant=True)

    kind = policy.kind
    if kind is PolicyKind.EQUILIBRIUM:
        if not k.complete:
            return _recon(k)
        if ctx.equilibrium_attack is None:
            raise ValueError("equilibrium policy needs a solved attack strategy")
        return RedAction("attack", ctx.equilibrium_attack)

    if kind is PolicyKind.SCRIPTED:
        script = list(policy.param("script"))
        step = int(script[(ctx.decisions - 1) % len(script)])
        if step < 0:
            return _recon(k)
        return RedAction("attack", step)

    recon_p = float(policy.param("recon_probability", 0.0))
    if recon_p > 0 and not k.complete and rng.random() < recon_p:
        return _recon(k)

    if kind is PolicyKind.INSTANCE_LEARNING:
        return RedAction("attack", ibl_choose(ctx.history, range(ctx.n_attacks), policy.parameters, minute, rng))

    if kind is PolicyKind.EPSILON_GREEDY and rng.random() < float(policy.param("epsilon")):
        return RedAction("attack", int(rng.integers(ctx.n_attacks)))

    values = believed_attack_values(k, ctx)
    return RedAction("attack", int(np.argmax(values)))


# ---------------------------------------------------------------------------
# Blue
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlueAction:
    kind: str  # "keep" | "switch" | "block" | "ignore" | "restore"
    defense_index: int | None = None
    service: str | None = None
    detection_event: int | None = None


@dataclass
class BlueView:
    """What blue sees: its alarms, broken services, and its own deployment."""

    current_defense: int
    pending_detections: list[tuple[int, int]] = field(default_factory=list)  # (event index, attack index)
    stopped_services: list[str] = field(default_factory=list)
    observed_attacks: list[int] = field(default_factory=list)
    info_dirty: bool = False

    @property
    def has_work(self) -> bool:
        return bool(self.pending_detections or self.stopped_services or self.info_dirty)


@dataclass
class BlueContext:
    u_d: np.ndarray
    affordable: list[int]
    equilibrium_defense: int | None = None
    history: list[tuple[int, float, int]] = field(default_factory=list)


def expected_defense_values(view: BlueView, ctx: BlueContext) -> dict[int, float]:
    """Expected defender utility of each affordable defense against the observed attack mix."""
    n_attacks = ctx.u_d.shape[0]
    if view.observed_attacks:
        w = np.bincount(view.observed_attacks, minlength=n_attacks) / len(view.observed_attacks)
    else:
        w = np.full(n_attacks, 1.0 / n_attacks)
    return {j: float(w @ ctx.u_d[:, j]) for j in ctx.affordable}


def initial_defense(policy: AgentPolicy, ctx: BlueContext, rng: np.random.Generator) -> int:
    kind = policy.kind
    if kind is PolicyKind.EQUILIBRIUM:
        if ctx.equilibrium_defense is None:
            raise ValueError("equilibrium policy needs a solved defense strategy")
        return ctx.equilibrium_defense
    if kind is PolicyKind.SCRIPTED:
        j = int(policy.param("defense", ctx.affordable[0]))
        if j not in ctx.affordable:
            raise ValueError(f"scripted defense {j} is not affordable")
        return j
    if kind is PolicyKind.INSTANCE_LEARNING:
        return ibl_choose([], ctx.affordable, policy.parameters, 0, rng)
    values = expected_defense_values(BlueView(current_defense=-1), ctx)
    return max(ctx.affordable, key=lambda j: (values[j], -j))


def _reconsider(view: BlueView, policy: AgentPolicy, minute: int, rng: np.random.Generator, ctx: BlueContext) -> int:
    kind = policy.kind
    if kind is PolicyKind.EQUILIBRIUM:
        return ctx.equilibrium_defense if ctx.equilibrium_defense is not None else view.current_defense
    if kind is PolicyKind.SCRIPTED:
        return view.current_defense
    if kind is PolicyKind.INSTANCE_LEARNING:
        return ibl_choose(ctx.history, ctx.affordable, policy.parameters, minute, rng)
    if kind is PolicyKind.EPSILON_GREEDY and rng.random() < float(policy.param("epsilon")):
        return ctx.affordable[int(rng.integers(len(ctx.affordable)))]
    values = expected_defense_values(view, ctx)
    best = max(ctx.affordable, key=lambda j: (values[j], -j))
    current = values.get(view.current_defense, -math.inf)
    return best if values[best] > current else view.current_defense


def blue_decide(
    view: BlueView,
    policy: AgentPolicy,
    minute: int,
    rng: np.random.Generator,
    ctx: BlueContext,
) -> BlueAction:
    """One blue action per tick, in priority order: block, restore, reconsider the defense.

    A detection can only be answered in the tick after it was raised; a non-equilibrium
    team that fails its ``block_probability`` draw lets that intrusion go. With no
    pending work the call consumes no randomness.
    """
    if view.pending_detections:
        event_index, _ = view.pending_detections.pop(0)
        if policy.kind is PolicyKind.EQUILIBRIUM:
            return BlueAction("block", detection_event=event_index)
        p = float(policy.param("block_probability", 1.0))
        if rng.random() < p:
            return BlueAction("block", detection_event=event_index)
        return BlueAction("ignore", detection_event=event_index)
    if view.stopped_services:
        return BlueAction("restore", service=view.stopped_services.pop(0))
    if view.info_dirty:
        view.info_dirty = False
        j = _reconsider(view, policy, minute, rng, ctx)
        if j != view.current_defense:
            if j not in ctx.affordable:
                raise ValueError(f"defense {j} is not affordable")
            return BlueAction("switch", defense_index=j)
    return BlueAction("keep", defense_index=view.current_defense)
