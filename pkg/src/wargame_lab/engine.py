"""Penetration probabilities and attacker/defender utilities.

For attack ``i`` against defense ``j`` with per-layer pass chances ``p[l, i, j]``::

    P_T[i, j] = prod_l p[l, i, j]
    u_a[i, j] = b * P_T[i, j] - C_a[i, j]
    u_d[i, j] = b * (1 - P_T[i, j]) - C_d[i, j]

The scalar functions and :func:`build_matrices` multiply layers in the same order,
so batch cells are bit-identical to the scalar results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import UNBOUNDED, Budget, Scenario, defense_cost_matrix, require_valid

IDENTITY_RTOL = 1e-9


class UtilityIdentityError(ArithmeticError):
    pass


def _check_indices(s: Scenario, i: int, j: int) -> None:
    if not 0 <= i < s.n_attacks:
        raise IndexError(f"attack index {i} out of range [0, {s.n_attacks})")
    if not 0 <= j < s.n_defenses:
        raise IndexError(f"defense index {j} out of range [0, {s.n_defenses})")


def target_probability(s: Scenario, i: int, j: int) -> float:
    _check_indices(s, i, j)
    p = 1.0
    for l in range(s.n_layers):
        p = p * float(s.penetration[l, i, j])
    return p


def attacker_utility(s: Scenario, i: int, j: int) -> float:
    return s.benefit * target_probability(s, i, j) - float(s.attack_cost[i, j])


def defender_utility(s: Scenario, i: int, j: int) -> float:
    p = target_probability(s, i, j)
    return s.benefit * (1.0 - p) - float(defense_cost_matrix(s)[i, j])


@dataclass(frozen=True, eq=False)
class UtilityMatrices:
    u_a: np.ndarray
    u_d: np.ndarray
    p_target: np.ndarray
    benefit: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.u_a.shape  # type: ignore[return-value]


def build_matrices(s: Scenario) -> UtilityMatrices:
    """All ``N_a x N_d`` cells at once; checks ``u_a + u_d = b - C_a - C_d`` per cell."""
    require_valid(s)
    p = np.ones((s.n_attacks, s.n_defenses))
    for l in range(s.n_layers):
        p = p * s.penetration[l]
    ca = s.attack_cost
    cd = defense_cost_matrix(s)
    b = s.benefit
    u_a = b * p - ca
    u_d = b * (1.0 - p) - cd

    expected = b - ca - cd
    scale = np.maximum(1.0, np.abs(b) + np.abs(ca) + np.abs(cd))
    worst = np.max(np.abs(u_a + u_d - expected) / scale)
    if worst > IDENTITY_RTOL:
        raise UtilityIdentityError(f"u_a + u_d deviates from b - C_a - C_d by {worst:.3e} (relative)")

    for arr in (u_a, u_d, p):
        arr.setflags(write=False)
    return UtilityMatrices(u_a=u_a, u_d=u_d, p_target=p, benefit=b)


def affordable_defenses(s: Scenario, budget: Budget | None = None) -> frozenset[int]:
    """Defenses whose worst-case cost over all attacks fits ``budget``.

    ``budget=None`` uses the scenario's own ``defender_budget``. The bound is inclusive.
    """
    if budget is None:
        budget = s.defender_budget
    if budget == UNBOUNDED:
        return frozenset(range(s.n_defenses))
    cd = defense_cost_matrix(s)
    limit = float(budget)
    return frozenset(j for j in range(s.n_defenses) if float(cd[:, j].max()) <= limit)
