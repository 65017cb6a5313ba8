"""Solution concepts for the attacker-defender game.

Rows of every payoff array are attacks ``i``; columns are defenses ``j``.

Stackelberg follower responses are resolved in a fixed lexicographic order:

1. the follower's best-response set (exact float ties kept),
2. ``mode``: *strong* keeps the responses best for the leader, *weak* the worst,
   *literal* keeps all of them,
3. ``tie_break``: ``follower_favors_leader`` / ``follower_harms_leader`` filter the
   same way by leader utility; ``lowest_index`` does nothing here,
4. lowest index.

Leader ties always go to the lowest index.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Sequence

import numpy as np

from . import engine
from .engine import UtilityMatrices, affordable_defenses, build_matrices
from .scenario import Budget, Scenario, require_valid

ORACLE_MAX_CELLS = 64


class Leader(str, enum.Enum):
    DEFENDER = "defender"
    ATTACKER = "attacker"


class SolveMode(str, enum.Enum):
    ANTICIPATORY_STRONG = "anticipatory_strong"
    ANTICIPATORY_WEAK = "anticipatory_weak"
    LITERAL_JOINT_ARGMAX = "literal_joint_argmax"


class TieBreak(str, enum.Enum):
    LOWEST_INDEX = "lowest_index"
    FOLLOWER_FAVORS_LEADER = "follower_favors_leader"
    FOLLOWER_HARMS_LEADER = "follower_harms_leader"


class ResultKind(str, enum.Enum):
    PURE_NASH_SET = "pure_nash_set"
    SADDLE_SET = "saddle_set"
    MIXED_MINIMAX = "mixed_minimax"
    STACKELBERG_DEFENDER_LEADER = "stackelberg_defender_leader"
    STACKELBERG_ATTACKER_LEADER = "stackelberg_attacker_leader"


class InfeasibleError(ValueError):
    """No defense strategy fits the budget."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, solution: "MixedSolution"):
        super().__init__(message)
        self.solution = solution


@dataclass(frozen=True)
class PureCell:
    attack: int
    defense: int
    u_a: float
    u_d: float


@dataclass(frozen=True)
class MixedSolution:
    row_mix: tuple[float, ...]
    col_mix: tuple[float, ...]
    value: float
    iterations: int
    gap: float

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class EquilibriumResult:
    kind: ResultKind
    leader_strategy: int
    follower_strategy: int
    u_a_star: float
    u_d_star: float
    p_target_star: float
    mode: SolveMode
    tie_break: str
    scenario_name: str = ""

    @property
    def leader(self) -> Leader:
        if self.kind is ResultKind.STACKELBERG_ATTACKER_LEADER:
            return Leader.ATTACKER
        return Leader.DEFENDER

    @property
    def attack_index(self) -> int:
        return self.leader_strategy if self.leader is Leader.ATTACKER else self.follower_strategy

    @property
    def defense_index(self) -> int:
        return self.follower_strategy if self.leader is Leader.ATTACKER else self.leader_strategy

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["kind"] = self.kind.value
        d["mode"] = self.mode.value
        d["attack_index"] = self.attack_index
        d["defense_index"] = self.defense_index
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EquilibriumResult":
        return cls(
            kind=ResultKind(d["kind"]),
            leader_strategy=int(d["leader_strategy"]),
            follower_strategy=int(d["follower_strategy"]),
            u_a_star=float(d["u_a_star"]),
            u_d_star=float(d["u_d_star"]),
            p_target_star=float(d["p_target_star"]),
            mode=SolveMode(d["mode"]),
            tie_break=str(d["tie_break"]),
            scenario_name=str(d.get("scenario_name", "")),
        )


def describe_tie_break(tie_break: TieBreak) -> str:
    return f"follower ties: {tie_break.value}; remaining and leader ties: lowest index"


# ---------------------------------------------------------------------------
# Pure equilibria
# ---------------------------------------------------------------------------


def pure_nash(m: UtilityMatrices) -> list[PureCell]:
    """Cells where neither player gains by a unilateral deviation, row-major order."""
    u_a, u_d = m.u_a, m.u_d
    col_best = u_a.max(axis=0)
    row_best = u_d.max(axis=1)
    cells = []
    na, nd = u_a.shape
    for i in range(na):
        for j in range(nd):
            if u_a[i, j] >= col_best[j] and u_d[i, j] >= row_best[i]:
                cells.append(PureCell(i, j, float(u_a[i, j]), float(u_d[i, j])))
    return cells


def saddle_points(a: Any) -> list[PureCell]:
    """Saddle cells of a zero-sum array where the row player maximizes and the column player minimizes.

    A saddle is the largest entry of its column and the smallest of its row.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("payoff array must be a nonempty 2-D array")
    col_max = a.max(axis=0)
    row_min = a.min(axis=1)
    cells = []
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            if a[i, j] == col_max[j] and a[i, j] == row_min[i]:
                v = float(a[i, j])
                cells.append(PureCell(i, j, v, -v))
    return cells


def pure_bounds(a: Any) -> tuple[float, float]:
    """``(maximin, minimax)`` of the pure game for a maximizing row player."""
    a = np.asarray(a, dtype=np.float64)
    return float(a.min(axis=1).max()), float(a.max(axis=0).min())


# ---------------------------------------------------------------------------
# Mixed minimax by fictitious play
# ---------------------------------------------------------------------------


def _argmax(values: Sequence[float]) -> int:
    best = 0
    for k in range(1, len(values)):
        if values[k] > values[best]:
            best = k
    return best


def _argmin(values: Sequence[float]) -> int:
    best = 0
    for k in range(1, len(values)):
        if values[k] < values[best]:
            best = k
    return best


def _steps_until_overtaken(lead: float, lead_rate: float, other: float, other_rate: float, wins_ties: bool) -> float:
    """Smallest ``m >= 1`` with ``other + m*other_rate`` preferred over ``lead + m*lead_rate``.

    ``wins_ties`` means the challenger is preferred on exact equality (lower index).
    Returns ``inf`` if it never happens.
    """
    diff = lead - other
    slope = other_rate - lead_rate
    if slope > 0:
        x = diff / slope
        m = math.ceil(x) if wins_ties else math.floor(x) + 1
        return float(max(m, 1))
    after_one = diff - slope
    if after_one < 0 or (wins_ties and after_one == 0):
        return 1.0
    return math.inf


def mixed_minimax(a: Any, tolerance: float = 1e-3, max_iterations: int = 10**10) -> MixedSolution:
    """Approximate the mixed value of a zero-sum game by fictitious play.

    Both players best-respond simultaneously to the opponent's empirical mix (uniform
    before the first step); best-response ties go to the lowest index. After ``t``
    steps the value is bracketed by ``lower = min_j (x_t A)_j`` and
    ``upper = max_i (A y_t)_i``; iteration stops once ``upper - lower <= tolerance``.
    The reported value is the midpoint of that bracket intersected with the pure
    ``[maximin, minimax]`` bounds.

    Steps during which both best responses stay fixed are advanced in one jump; the
    gap only shrinks inside such a run, so the stopping step is found exactly. The
    returned ``iterations`` counts individual fictitious-play steps.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be > 0")
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("payoff array must be a nonempty 2-D array")
    na, nd = arr.shape
    rows = arr.tolist()
    cols = arr.T.tolist()

    i = _argmax(arr.mean(axis=1).tolist())
    j = _argmin(arr.mean(axis=0).tolist())
    row_pay = [0.0] * na  # cumulative payoff of each row against the column history
    col_pay = [0.0] * nd  # cumulative payoff of each column against the row history
    row_count = [0] * na
    col_count = [0] * nd
    t = 0
    gap = math.inf

    while t < max_iterations:
        da = cols[j]
        dc = rows[i]
        run = float(max_iterations - t)
        for k in range(na):
            if k != i:
                run = min(run, _steps_until_overtaken(row_pay[i], da[i], row_pay[k], da[k], k < i))
        # the column player minimizes: compare negated payoffs
        for k in range(nd):
            if k != j:
                run = min(run, _steps_until_overtaken(-col_pay[j], -dc[j], -col_pay[k], -dc[k], k < j))
        spread = row_pay[i] - col_pay[j]
        if spread > tolerance * (t + 1):
            run = min(run, float(math.ceil(spread / tolerance - t)))
        else:
            run = 1.0
        m = max(1, int(run))

        for k in range(na):
            row_pay[k] += m * da[k]
        for k in range(nd):
            col_pay[k] += m * dc[k]
        row_count[i] += m
        col_count[j] += m
        t += m

        i = _argmax(row_pay)
        j = _argmin(col_pay)
        upper = row_pay[i] / t
        lower = col_pay[j] / t
        gap = max(0.0, upper - lower)
        if gap <= tolerance:
            break

    # the true value is inside both [lower, upper] and the pure bounds
    maximin, minimax = pure_bounds(arr)
    mid = (max(lower, maximin) + min(upper, minimax)) / 2.0
    solution = MixedSolution(
        row_mix=tuple(c / t for c in row_count),
        col_mix=tuple(c / t for c in col_count),
        value=min(max(mid, maximin), minimax),
        iterations=t,
        gap=gap,
    )
    if gap > tolerance:
        raise ConvergenceError(
            f"fictitious play did not reach gap {tolerance:g} in {t} iterations (gap {gap:.3e})", solution
        )
    return solution


# ---------------------------------------------------------------------------
# Stackelberg
# ---------------------------------------------------------------------------


def _respond(
    follower_u: Sequence[float],
    leader_u: Sequence[float],
    options: Sequence[int],
    mode: SolveMode,
    tie_break: TieBreak,
) -> int:
    best = max(follower_u[k] for k in options)
    pool = [k for k in options if follower_u[k] == best]
    filters: list[Callable[[Sequence[float]], float]] = []
    if mode is SolveMode.ANTICIPATORY_STRONG:
        filters.append(max)
    elif mode is SolveMode.ANTICIPATORY_WEAK:
        filters.append(min)
    if tie_break is TieBreak.FOLLOWER_FAVORS_LEADER:
        filters.append(max)
    elif tie_break is TieBreak.FOLLOWER_HARMS_LEADER:
        filters.append(min)
    for pick in filters:
        target = pick([leader_u[k] for k in pool])
        pool = [k for k in pool if leader_u[k] == target]
    return pool[0]


def _affordable_or_raise(s: Scenario, budget: Budget | None) -> list[int]:
    options = sorted(affordable_defenses(s, budget))
    if not options:
        raise InfeasibleError("no affordable defense strategy within the budget")
    return options


def stackelberg(
    s: Scenario,
    leader: Leader | str = Leader.DEFENDER,
    mode: SolveMode | str = SolveMode.ANTICIPATORY_STRONG,
    budget: Budget | None = None,
    tie_break: TieBreak | str = TieBreak.LOWEST_INDEX,
) -> EquilibriumResult:
    """Pure-strategy Stackelberg equilibrium with either player leading.

    In the anticipatory modes the leader evaluates each of its strategies at the
    follower's resolved best response and keeps the best one. In literal mode the
    leader takes its component of the joint argmax of its own utility, and the
    follower then best-responds. The defender is always limited to affordable
    strategies; ``budget=None`` means the scenario's own budget.
    """
    leader, mode, tie_break = Leader(leader), SolveMode(mode), TieBreak(tie_break)
    require_valid(s)
    m = build_matrices(s)
    u_a, u_d = m.u_a.tolist(), m.u_d.tolist()
    defenses = _affordable_or_raise(s, budget)
    attacks = list(range(s.n_attacks))

    if leader is Leader.DEFENDER:
        cols_a = [[u_a[i][j] for i in attacks] for j in range(s.n_defenses)]
        cols_d = [[u_d[i][j] for i in attacks] for j in range(s.n_defenses)]
        if mode is SolveMode.LITERAL_JOINT_ARGMAX:
            best = max(u_d[i][j] for i in attacks for j in defenses)
            lead = min(j for j in defenses if any(u_d[i][j] == best for i in attacks))
        else:
            lead, lead_value = -1, -math.inf
            for j in defenses:
                r = _respond(cols_a[j], cols_d[j], attacks, mode, tie_break)
                if u_d[r][j] > lead_value:
                    lead, lead_value = j, u_d[r][j]
        follow = _respond(cols_a[lead], cols_d[lead], attacks, mode, tie_break)
        i_star, j_star = follow, lead
        kind = ResultKind.STACKELBERG_DEFENDER_LEADER
    else:
        if mode is SolveMode.LITERAL_JOINT_ARGMAX:
            best = max(u_a[i][j] for i in attacks for j in defenses)
            lead = min(i for i in attacks if any(u_a[i][j] == best for j in defenses))
        else:
            lead, lead_value = -1, -math.inf
            for i in attacks:
                r = _respond(u_d[i], u_a[i], defenses, mode, tie_break)
                if u_a[i][r] > lead_value:
                    lead, lead_value = i, u_a[i][r]
        follow = _respond(u_d[lead], u_a[lead], defenses, mode, tie_break)
        i_star, j_star = lead, follow
        kind = ResultKind.STACKELBERG_ATTACKER_LEADER

    return EquilibriumResult(
        kind=kind,
        leader_strategy=lead,
        follower_strategy=follow,
        u_a_star=u_a[i_star][j_star],
        u_d_star=u_d[i_star][j_star],
        p_target_star=float(m.p_target[i_star, j_star]),
        mode=mode,
        tie_break=describe_tie_break(tie_break),
        scenario_name=s.name,
    )


def exhaustive_oracle(
    s: Scenario,
    leader: Leader | str = Leader.DEFENDER,
    mode: SolveMode | str = SolveMode.ANTICIPATORY_STRONG,
    budget: Budget | None = None,
    tie_break: TieBreak | str = TieBreak.LOWEST_INDEX,
) -> EquilibriumResult:
    """Brute-force reference for :func:`stackelberg` on small games.

    Every cell is scored with the scalar utility functions and responses are chosen
    by sorting on a lexicographic key, so nothing is shared with the fast path except
    the scalar game-engine calls.
    """
    leader, mode, tie_break = Leader(leader), SolveMode(mode), TieBreak(tie_break)
    if s.n_attacks * s.n_defenses > ORACLE_MAX_CELLS:
        raise ValueError(f"instance too large for the exhaustive oracle ({s.n_attacks}x{s.n_defenses} cells)")
    require_valid(s)
    budget_cut = affordable_defenses(s, budget)
    cells = [(i, j) for i in range(s.n_attacks) for j in range(s.n_defenses) if j in budget_cut]
    if not cells:
        raise InfeasibleError("no affordable defense strategy within the budget")
    ua = {c: engine.attacker_utility(s, *c) for c in cells}
    ud = {c: engine.defender_utility(s, *c) for c in cells}

    mode_sign = {SolveMode.ANTICIPATORY_STRONG: -1, SolveMode.ANTICIPATORY_WEAK: 1}.get(mode, 0)
    tb_sign = {TieBreak.FOLLOWER_FAVORS_LEADER: -1, TieBreak.FOLLOWER_HARMS_LEADER: 1}.get(tie_break, 0)
    follower_mode_sign = 0 if mode is SolveMode.LITERAL_JOINT_ARGMAX else mode_sign

    if leader is Leader.DEFENDER:
        follower_u, leader_u = ua, ud

        def response(j: int) -> tuple[int, int]:
            choices = [c for c in cells if c[1] == j]
            return min(
                choices,
                key=lambda c: (-follower_u[c], follower_mode_sign * leader_u[c], tb_sign * leader_u[c], c[0]),
            )

        lead_of = lambda c: c[1]  # noqa: E731
    else:
        follower_u, leader_u = ud, ua

        def response(i: int) -> tuple[int, int]:
            choices = [c for c in cells if c[0] == i]
            return min(
                choices,
                key=lambda c: (-follower_u[c], follower_mode_sign * leader_u[c], tb_sign * leader_u[c], c[1]),
            )

        lead_of = lambda c: c[0]  # noqa: E731

    leader_options = sorted({lead_of(c) for c in cells})
    if mode is SolveMode.LITERAL_JOINT_ARGMAX:
        top = sorted(cells, key=lambda c: (-leader_u[c], lead_of(c)))[0]
        chosen = response(lead_of(top))
    else:
        outcomes = [(k, response(k)) for k in leader_options]
        _, chosen = sorted(outcomes, key=lambda kc: (-leader_u[kc[1]], kc[0]))[0]

    i_star, j_star = chosen
    if leader is Leader.DEFENDER:
        lead, follow, kind = j_star, i_star, ResultKind.STACKELBERG_DEFENDER_LEADER
    else:
        lead, follow, kind = i_star, j_star, ResultKind.STACKELBERG_ATTACKER_LEADER
    return EquilibriumResult(
        kind=kind,
        leader_strategy=lead,
        follower_strategy=follow,
        u_a_star=ua[chosen],
        u_d_star=ud[chosen],
        p_target_star=engine.target_probability(s, i_star, j_star),
        mode=mode,
        tie_break=describe_tie_break(tie_break),
        scenario_name=s.name,
    )


def zero_sum_view(m: UtilityMatrices, defenses: Sequence[int]) -> np.ndarray:
    """Attacker payoff restricted to the given defense columns, read as a zero-sum game.

    This is an approximation whenever ``u_a + u_d`` varies across cells.
    """
    return m.u_a[:, list(defenses)]
