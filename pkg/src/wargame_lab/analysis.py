"""Post-game analysis: model-vs-trace comparison and seeded Monte Carlo studies."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from statistics import NormalDist
from typing import Any, Sequence

import numpy as np

from .config import GameConfig
from .equilibria import EquilibriumResult
from .scenario import Scenario
from .scoring import Roster, RuleSet, adjudicate
from .simulator import derive_replication_seed, run_game
from .trace import Action, Team, Trace

THREADS_ENV = "WARGAME_LAB_THREADS"


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class Agreement:
    rate: float
    matches: int
    attempts: int
    vacuous: bool


@dataclass(frozen=True)
class TargetEstimate:
    successes: int
    trials: int
    estimate: float
    ci_lower: float
    ci_upper: float
    confidence: float = 0.95


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials < 1 or not 0 <= successes <= trials:
        raise AnalysisError("need 0 <= successes <= trials and trials >= 1")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


def _check_scenario(traces: Sequence[Trace], predicted: EquilibriumResult | None) -> None:
    names = {t.scenario_name for t in traces}
    if len(names) > 1:
        raise AnalysisError(f"traces come from different scenarios: {sorted(names)}")
    if predicted is not None and predicted.scenario_name and names and predicted.scenario_name not in names:
        raise AnalysisError(
            f"prediction is for scenario {predicted.scenario_name!r}, traces for {sorted(names)[0]!r}"
        )


def _attempts(t: Trace) -> list[tuple[int, int]]:
    return [(e.attack_index, e.defense_index) for _, e in t.of(Action.ATTACK_ATTEMPT)]


def strategy_agreement(t: Trace, predicted: EquilibriumResult) -> Agreement:
    """Share of red attack attempts that used the predicted attack.

    With no attempts the rate is 1.0 and ``vacuous`` is set.
    """
    _check_scenario([t], predicted)
    attempts = _attempts(t)
    if not attempts:
        return Agreement(1.0, 0, 0, True)
    hits = sum(1 for i, _ in attempts if i == predicted.attack_index)
    return Agreement(hits / len(attempts), hits, len(attempts), False)


def empirical_target_rate(traces: Sequence[Trace], confidence: float = 0.95) -> TargetEstimate:
    if not traces:
        raise AnalysisError("empirical_target_rate needs at least one trace")
    _check_scenario(traces, None)
    k = sum(1 for t in traces if t.target_reached)
    lo, hi = wilson_interval(k, len(traces), confidence)
    return TargetEstimate(k, len(traces), k / len(traces), lo, hi, confidence)


# ---------------------------------------------------------------------------
# Prediction comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PredictionComparison:
    predicted: EquilibriumResult
    observed_attack_frequencies: tuple[float, ...]
    observed_defense_frequencies: tuple[float, ...]
    agreement_rate: float
    attack_agreement_rate: float
    defense_agreement_rate: float
    vacuous: bool
    predicted_p_target: float
    empirical_p_target: TargetEstimate
    n_decisions: int
    n_defense_selections: int
    n_traces: int
    attempt_p_target: TargetEstimate | None = None

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["predicted"] = self.predicted.to_dict()
        d["observed_attack_frequencies"] = list(self.observed_attack_frequencies)
        d["observed_defense_frequencies"] = list(self.observed_defense_frequencies)
        return d


def _frequencies(counts: np.ndarray) -> tuple[float, ...]:
    total = int(counts.sum())
    if total == 0:
        return tuple(0.0 for _ in counts)
    return tuple(float(c) / total for c in counts)


def compare_report(
    traces: Sequence[Trace],
    predicted: EquilibriumResult,
    n_attacks: int | None = None,
    n_defenses: int | None = None,
) -> PredictionComparison:
    """Pool every red attempt and blue deployment across ``traces`` and line them up with ``predicted``.

    ``agreement_rate`` counts attempts made at exactly the predicted cell, i.e. the
    predicted attack against the predicted defense. The per-side rates are reported
    alongside it.

    ``empirical_p_target`` is per game, as the traces record it. Because a game holds
    many attempts, ``attempt_p_target`` also gives the success rate of single
    attempts made at the predicted cell, which is the quantity ``P_T*`` predicts.
    """
    if not traces:
        raise AnalysisError("compare_report needs at least one trace")
    _check_scenario(traces, predicted)
    attempts = [a for t in traces for a in _attempts(t)]
    deployments = [e.defense_index for t in traces for _, e in t.of(Action.MITIGATION_DEPLOYED)]
    n_a = n_attacks or max([predicted.attack_index] + [i for i, _ in attempts]) + 1
    n_d = n_defenses or max([predicted.defense_index] + deployments + [j for _, j in attempts]) + 1
    a_counts = np.bincount([i for i, _ in attempts], minlength=n_a) if attempts else np.zeros(n_a, int)
    d_counts = np.bincount(deployments, minlength=n_d) if deployments else np.zeros(n_d, int)

    s_a, s_d = predicted.attack_index, predicted.defense_index
    n = len(attempts)
    if n:
        joint = sum(1 for i, j in attempts if i == s_a and j == s_d) / n
        attack_rate = sum(1 for i, _ in attempts if i == s_a) / n
    else:
        joint = attack_rate = 1.0
    defense_rate = deployments.count(s_d) / len(deployments) if deployments else 1.0
    at_cell = sum(1 for i, j in attempts if i == s_a and j == s_d)
    cell_hits = sum(
        1 for t in traces for _, e in t.of(Action.TARGET_REACHED) if (e.attack_index, e.defense_index) == (s_a, s_d)
    )
    attempt_est = None
    if at_cell:
        lo, hi = wilson_interval(cell_hits, at_cell)
        attempt_est = TargetEstimate(cell_hits, at_cell, cell_hits / at_cell, lo, hi)
    return PredictionComparison(
        predicted=predicted,
        observed_attack_frequencies=_frequencies(a_counts),
        observed_defense_frequencies=_frequencies(d_counts),
        agreement_rate=joint,
        attack_agreement_rate=attack_rate,
        defense_agreement_rate=defense_rate,
        vacuous=n == 0,
        predicted_p_target=predicted.p_target_star,
        empirical_p_target=empirical_target_rate(traces),
        n_decisions=n,
        n_defense_selections=len(deployments),
        n_traces=len(traces),
        attempt_p_target=attempt_est,
    )


def render_comparison(c: PredictionComparison) -> str:
    e = c.empirical_p_target
    fmt = lambda xs: "[" + ", ".join(f"{x:.4f}" for x in xs) + "]"  # noqa: E731
    lines = [
        f"traces {c.n_traces}  attack decisions {c.n_decisions}  defense selections {c.n_defense_selections}",
        f"predicted cell: attack {c.predicted.attack_index}, defense {c.predicted.defense_index}",
        f"agreement {c.agreement_rate:.4f} (attack {c.attack_agreement_rate:.4f}, defense {c.defense_agreement_rate:.4f})"
        + ("  [vacuous: no attempts]" if c.vacuous else ""),
        f"attack frequencies  {fmt(c.observed_attack_frequencies)}",
        f"defense frequencies {fmt(c.observed_defense_frequencies)}",
        f"P_T predicted {c.predicted_p_target:.4f}  empirical {e.estimate:.4f} "
        f"[{e.ci_lower:.4f}, {e.ci_upper:.4f}] ({e.successes}/{e.trials} games)",
    ]
    if c.attempt_p_target is not None:
        a = c.attempt_p_target
        lines.append(
            f"P_T per attempt at predicted cell {a.estimate:.4f} [{a.ci_lower:.4f}, {a.ci_upper:.4f}] "
            f"({a.successes}/{a.trials} attempts)"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplicationOutcome:
    index: int
    seed: int
    target_reached: bool
    red_total: int
    blue_total: int
    winner: str
    final_minute: int
    attempts: int
    detections: int
    blocks: int


@dataclass(frozen=True)
class MonteCarloSummary:
    replications: int
    master_seed: int
    red_win_rate: float
    blue_win_rate: float
    draw_rate: float
    mean_red_total: float
    mean_blue_total: float
    empirical_p_target: TargetEstimate
    block_rate: float
    per_replication_outcomes: tuple[ReplicationOutcome, ...]

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["per_replication_outcomes"] = [asdict(o) for o in self.per_replication_outcomes]
        return d


def replication_config(cfg: GameConfig, index: int) -> GameConfig:
    return cfg.replace(seed=derive_replication_seed(cfg.seed, index))


def _replicate(
    s: Scenario, cfg: GameConfig, index: int, rules: RuleSet, roster: Roster
) -> tuple[ReplicationOutcome, Trace]:
    rcfg = replication_config(cfg, index)
    t = run_game(s, rcfg)
    r = adjudicate(t, rules, roster)
    outcome = ReplicationOutcome(
        index=index,
        seed=rcfg.seed,
        target_reached=t.target_reached,
        red_total=r.red_total,
        blue_total=r.blue_total,
        winner=r.winner,
        final_minute=t.final_minute,
        attempts=len(t.of(Action.ATTACK_ATTEMPT)),
        detections=len(t.of(Action.INTRUSION_DETECTED)),
        blocks=sum(1 for _, e in t.of(Action.INTRUSION_BLOCKED) if e.actor_team is Team.BLUE),
    )
    return outcome, t


def _replicate_chunk(
    s: Scenario, cfg: GameConfig, indices: range, rules: RuleSet, roster: Roster, keep: bool
) -> list[tuple[ReplicationOutcome, Trace | None]]:
    out = []
    for k in indices:
        o, t = _replicate(s, cfg, k, rules, roster)
        out.append((o, t if keep else None))
    return out


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise AnalysisError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        if n < 1:
            raise AnalysisError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def run_replications(
    s: Scenario,
    cfg: GameConfig,
    n: int,
    *,
    workers: int | None = None,
    rules: RuleSet = RuleSet(),
    roster: Roster = Roster(),
    keep_traces: bool = False,
) -> list[tuple[ReplicationOutcome, Trace | None]]:
    """Run replications ``0..n-1``, returned in index order whatever the worker count."""
    if n < 1:
        raise AnalysisError("need at least one replication")
    workers = min(workers or default_workers(), n)
    if workers <= 1:
        return _replicate_chunk(s, cfg, range(n), rules, roster, keep_traces)
    size = -(-n // (workers * 4))
    chunks = [range(a, min(a + size, n)) for a in range(0, n, size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_replicate_chunk, s, cfg, c, rules, roster, keep_traces) for c in chunks]
        return [item for f in futures for item in f.result()]


def summarize(master_seed: int, outcomes: Sequence[ReplicationOutcome]) -> MonteCarloSummary:
    n = len(outcomes)
    if n < 1:
        raise AnalysisError("need at least one replication")
    wins = [o.winner for o in outcomes]
    k = sum(o.target_reached for o in outcomes)
    lo, hi = wilson_interval(k, n)
    attempts = sum(o.attempts for o in outcomes)
    return MonteCarloSummary(
        replications=n,
        master_seed=master_seed,
        red_win_rate=wins.count("red") / n,
        blue_win_rate=wins.count("blue") / n,
        draw_rate=wins.count("draw") / n,
        mean_red_total=math.fsum(o.red_total for o in outcomes) / n,
        mean_blue_total=math.fsum(o.blue_total for o in outcomes) / n,
        empirical_p_target=TargetEstimate(k, n, k / n, lo, hi),
        block_rate=sum(o.blocks for o in outcomes) / attempts if attempts else 0.0,
        per_replication_outcomes=tuple(outcomes),
    )


def monte_carlo(
    s: Scenario,
    cfg: GameConfig,
    n: int,
    *,
    workers: int | None = None,
    rules: RuleSet = RuleSet(),
    roster: Roster = Roster(),
) -> MonteCarloSummary:
    """``n`` seeded replications of ``run_game`` + ``adjudicate``; replication ``k`` uses
    ``derive_replication_seed(cfg.seed, k)``, so the summary ignores scheduling."""
    results = run_replications(s, cfg, n, workers=workers, rules=rules, roster=roster)
    return summarize(cfg.seed, [o for o, _ in results])


def summary_to_json(m: MonteCarloSummary) -> str:
    return json.dumps(m.to_dict(), indent=2)


def comparison_to_json(c: PredictionComparison) -> str:
    return json.dumps(c.to_dict(), indent=2)


def render_summary(m: MonteCarloSummary) -> str:
    e = m.empirical_p_target
    return "\n".join(
        [
            f"replications {m.replications}  master seed {m.master_seed}",
            f"red wins {m.red_win_rate:.4f}  blue wins {m.blue_win_rate:.4f}  draws {m.draw_rate:.4f}",
            f"mean red {m.mean_red_total:.3f}  mean blue {m.mean_blue_total:.3f}",
            f"P_T {e.estimate:.4f} [{e.ci_lower:.4f}, {e.ci_upper:.4f}]  block rate {m.block_rate:.4f}",
        ]
    )


def outcomes_csv(m: MonteCarloSummary) -> str:
    names = list(ReplicationOutcome.__dataclass_fields__)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for o in m.per_replication_outcomes:
        w.writerow([getattr(o, k) for k in names])
    return buf.getvalue()
