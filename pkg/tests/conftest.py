from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from wargame_lab import fixture_path
from wargame_lab.scenario import (
    AttackStrategy,
    DefenseStrategy,
    Layer,
    Mitigation,
    Scenario,
    load_scenario,
)

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def make_scenario(
    penetration,
    attack_cost,
    defense_cost=None,
    benefit: float = 100.0,
    budget="unbounded",
    name: str = "synthetic",
) -> Scenario:
    p = np.asarray(penetration, dtype=float)
    nl, na, nd = p.shape
    return Scenario(
        name=name,
        layers=tuple(Layer(l, f"layer {l}") for l in range(nl)),
        attacks=tuple(AttackStrategy(i, f"attack {i}") for i in range(na)),
        defenses=tuple(DefenseStrategy(j, f"defense {j}") for j in range(nd)),
        mitigations=(),
        penetration=p,
        attack_cost=np.broadcast_to(np.asarray(attack_cost, dtype=float), (na, nd)),
        defense_cost=None if defense_cost is None else np.broadcast_to(np.asarray(defense_cost, dtype=float), (na, nd)),
        benefit=benefit,
        defender_budget=budget,
    )


def random_scenario(rng: np.random.Generator, max_a=6, max_d=6, max_l=4, grid: int | None = None) -> Scenario:
    """Random game; ``grid`` rounds values to a coarse lattice so exact ties actually occur."""
    na, nd, nl = (int(rng.integers(1, m + 1)) for m in (max_a, max_d, max_l))
    p = rng.uniform(0, 1, (nl, na, nd))
    ca = rng.uniform(0, 40, (na, nd))
    cd = rng.uniform(0, 40, (na, nd))
    b = float(rng.uniform(0, 200))
    if grid:
        p = np.round(p * grid) / grid
        ca, cd, b = np.round(ca / 10) * 10, np.round(cd / 10) * 10, float(round(b / 50) * 50)
    budget = "unbounded" if rng.random() < 0.5 else float(np.sort(cd.max(axis=0))[rng.integers(nd)])
    return make_scenario(p, ca, cd, b, budget)


@pytest.fixture(scope="session")
def worked():
    return load_scenario(fixture_path("worked_2x2.json"))


@pytest.fixture(scope="session")
def alpha():
    return load_scenario(fixture_path("alpha.json"))


@pytest.fixture(scope="session")
def minimal():
    return load_scenario(fixture_path("minimal.json"))


# -- acceptance reporting --------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
