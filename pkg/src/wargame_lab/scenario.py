"""Security-game scenarios: strategy spaces, layers, penetration odds, costs.

A scenario is authored as a JSON document and loaded with :func:`parse_scenario`.
Construction never validates; call :func:`validate_scenario` (or go through the
parser, which refuses documents with error-severity issues).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence, Union

import numpy as np

UNBOUNDED = "unbounded"

Budget = Union[float, str]

PATCHABLE_KEYS = frozenset(
    {"penetration", "attack_cost", "defense_cost", "benefit", "defender_budget"}
)


class LayerKind(str, enum.Enum):
    CYBER = "cyber"
    PHYSICAL = "physical"
    MANAGEMENT = "management"


class Severity(str, enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class ValidationIssue:
    severity: Severity
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity.value}: {self.path}: {self.message}"


class ScenarioError(ValueError):
    """Raised when a scenario document or object cannot be used."""

    def __init__(self, issues: Sequence[ValidationIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


class ScenarioSyntaxError(ScenarioError):
    """The document is not well-formed JSON."""


@dataclass(frozen=True)
class Layer:
    id: int
    name: str
    kind: LayerKind = LayerKind.CYBER


@dataclass(frozen=True)
class AttackStrategy:
    id: int
    name: str


@dataclass(frozen=True)
class Mitigation:
    id: int
    name: str
    deploy_cost: float | None = None


@dataclass(frozen=True)
class DefenseStrategy:
    id: int
    name: str
    mitigation_ids: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "mitigation_ids", frozenset(self.mitigation_ids))


def _frozen_array(values: Any) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Scenario:
    """An attacker-defender game over ``N_a`` attacks, ``N_d`` defenses and ``N_l`` layers.

    Arrays are stored read-only as float64:

    * ``penetration[l, i, j]``: chance attack ``i`` passes layer ``l`` when defense ``j``
      is deployed.
    * ``attack_cost[i, j]`` and ``defense_cost[i, j]``. ``defense_cost`` may be ``None``,
      in which case it is derived from mitigation deploy costs on demand.
    """

    name: str
    layers: tuple[Layer, ...]
    attacks: tuple[AttackStrategy, ...]
    defenses: tuple[DefenseStrategy, ...]
    mitigations: tuple[Mitigation, ...]
    penetration: np.ndarray
    attack_cost: np.ndarray
    defense_cost: np.ndarray | None
    benefit: float
    defender_budget: Budget = UNBOUNDED

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "attacks", tuple(self.attacks))
        object.__setattr__(self, "defenses", tuple(self.defenses))
        object.__setattr__(self, "mitigations", tuple(self.mitigations))
        object.__setattr__(self, "penetration", _frozen_array(self.penetration))
        object.__setattr__(self, "attack_cost", _frozen_array(self.attack_cost))
        if self.defense_cost is not None:
            object.__setattr__(self, "defense_cost", _frozen_array(self.defense_cost))
        object.__setattr__(self, "benefit", float(self.benefit))
        if self.defender_budget != UNBOUNDED:
            object.__setattr__(self, "defender_budget", float(self.defender_budget))

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def n_attacks(self) -> int:
        return len(self.attacks)

    @property
    def n_defenses(self) -> int:
        return len(self.defenses)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented

        def same(a: np.ndarray | None, b: np.ndarray | None) -> bool:
            if a is None or b is None:
                return a is b
            return a.shape == b.shape and bool(np.array_equal(a, b))

        return (
            self.name == other.name
            and self.layers == other.layers
            and self.attacks == other.attacks
            and self.defenses == other.defenses
            and self.mitigations == other.mitigations
            and same(self.penetration, other.penetration)
            and same(self.attack_cost, other.attack_cost)
            and same(self.defense_cost, other.defense_cost)
            and self.benefit == other.benefit
            and self.defender_budget == other.defender_budget
        )

    __hash__ = None  # type: ignore[assignment]


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _err(path: str, message: str) -> ValidationIssue:
    return ValidationIssue(Severity.ERROR, path, message)


def _warn(path: str, message: str) -> ValidationIssue:
    return ValidationIssue(Severity.WARNING, path, message)


def _check_contiguous(items: Sequence[Any], key: str, what: str) -> list[ValidationIssue]:
    issues = []
    if not items:
        issues.append(_err(key, f"at least one {what} is required"))
    for pos, item in enumerate(items):
        if item.id != pos:
            issues.append(_err(f"{key}[{pos}].id", f"expected id {pos}, got {item.id}"))
    return issues


def _check_matrix(
    arr: np.ndarray, key: str, shape: tuple[int, ...], *, probability: bool
) -> list[ValidationIssue]:
    if arr.shape != shape:
        return [_err(key, f"expected shape {list(shape)}, got {list(arr.shape)}")]
    issues = []
    for idx in zip(*np.nonzero(~np.isfinite(arr))):
        issues.append(_err(key + "".join(f"[{k}]" for k in idx), "value is not finite"))
    if probability:
        bad = np.nonzero((arr < 0.0) | (arr > 1.0))
        message = "probability outside [0,1]"
    else:
        bad = np.nonzero(arr < 0.0)
        message = "cost must be nonnegative"
    for idx in zip(*bad):
        issues.append(_err(key + "".join(f"[{k}]" for k in idx), message))
    return issues


def validate_scenario(s: Scenario) -> list[ValidationIssue]:
    """Return every invariant violation in ``s``; an empty list means the scenario is usable."""
    issues: list[ValidationIssue] = []
    issues += _check_contiguous(s.layers, "layers", "layer")
    issues += _check_contiguous(s.attacks, "attacks", "attack strategy")
    issues += _check_contiguous(s.defenses, "defenses", "defense strategy")

    by_id: dict[int, Mitigation] = {}
    for pos, m in enumerate(s.mitigations):
        if m.id in by_id:
            issues.append(_err(f"mitigations[{pos}].id", f"duplicate mitigation id {m.id}"))
        by_id[m.id] = m
        if m.deploy_cost is not None and not (m.deploy_cost >= 0 and math.isfinite(m.deploy_cost)):
            issues.append(_err(f"mitigations[{pos}].deploy_cost", "cost must be nonnegative"))

    used: set[int] = set()
    for pos, d in enumerate(s.defenses):
        for mid in sorted(d.mitigation_ids):
            used.add(mid)
            if mid not in by_id:
                issues.append(
                    _err(f"defenses[{pos}].mitigation_ids", f"unknown mitigation id {mid}")
                )
    for pos, m in enumerate(s.mitigations):
        if m.id not in used:
            issues.append(_warn(f"mitigations[{pos}]", "mitigation is not used by any defense"))

    na, nd, nl = s.n_attacks, s.n_defenses, s.n_layers
    issues += _check_matrix(s.penetration, "penetration", (nl, na, nd), probability=True)
    issues += _check_matrix(s.attack_cost, "attack_cost", (na, nd), probability=False)
    if s.defense_cost is not None:
        issues += _check_matrix(s.defense_cost, "defense_cost", (na, nd), probability=False)
    else:
        for pos, d in enumerate(s.defenses):
            for mid in sorted(d.mitigation_ids):
                if mid in by_id and by_id[mid].deploy_cost is None:
                    issues.append(
                        _err(
                            f"defenses[{pos}].mitigation_ids",
                            f"defense_cost absent and mitigation {mid} has no deploy_cost",
                        )
                    )

    if not (math.isfinite(s.benefit) and s.benefit >= 0):
        issues.append(_err("benefit", "benefit must be a nonnegative number"))
    if s.defender_budget != UNBOUNDED:
        b = s.defender_budget
        if not isinstance(b, float) or not (b >= 0) or math.isnan(b):
            issues.append(_err("defender_budget", 'budget must be >= 0 or "unbounded"'))
    return issues


def has_errors(issues: Sequence[ValidationIssue]) -> bool:
    return any(i.severity is Severity.ERROR for i in issues)


def require_valid(s: Scenario) -> None:
    errors = [i for i in validate_scenario(s) if i.severity is Severity.ERROR]
    if errors:
        raise ScenarioError(errors)


def derive_defense_cost(s: Scenario) -> np.ndarray:
    """Column ``j`` is the summed deploy cost of defense ``j``'s mitigations, for every attack row.

    Shared mitigations are counted once per strategy that uses them.
    """
    by_id = {m.id: m for m in s.mitigations}
    column = np.zeros(s.n_defenses)
    for pos, d in enumerate(s.defenses):
        total = 0.0
        for mid in sorted(d.mitigation_ids):
            m = by_id.get(mid)
            if m is None:
                raise ScenarioError([_err(f"defenses[{pos}].mitigation_ids", f"unknown mitigation id {mid}")])
            if m.deploy_cost is None:
                raise ScenarioError(
                    [_err(f"mitigations[id={mid}].deploy_cost", "deploy_cost is required to derive defense cost")]
                )
            total += m.deploy_cost
        column[pos] = total
    out = np.tile(column, (s.n_attacks, 1))
    out.setflags(write=False)
    return out


def defense_cost_matrix(s: Scenario) -> np.ndarray:
    """Explicit ``defense_cost`` if present, else the mitigation-sum derivation."""
    if s.defense_cost is not None:
        return s.defense_cost
    return derive_defense_cost(s)


# ---------------------------------------------------------------------------
# Document parsing / serialization
# ---------------------------------------------------------------------------


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _nested(value: Any, ndim: int, path: str, issues: list[ValidationIssue]) -> np.ndarray | None:
    """Check ``value`` is a rectangular ``ndim``-deep list of numbers."""

    def shape_of(v: Any, depth: int, p: str) -> tuple[int, ...] | None:
        if depth == 0:
            if not _is_number(v):
                issues.append(_err(p, "expected a number"))
                return None
            return ()
        if not isinstance(v, list):
            issues.append(_err(p, f"expected an array nested {ndim} deep"))
            return None
        shapes = [shape_of(x, depth - 1, f"{p}[{k}]") for k, x in enumerate(v)]
        if any(sh is None for sh in shapes):
            return None
        if len(set(shapes)) > 1:
            issues.append(_err(p, "rows have inconsistent lengths"))
            return None
        inner = shapes[0] if shapes else (0,) * (depth - 1)
        return (len(v),) + inner

    if shape_of(value, ndim, path) is None:
        return None
    return np.array(value, dtype=np.float64).reshape(_deep_shape(value, ndim))


def _deep_shape(value: Any, ndim: int) -> tuple[int, ...]:
    shape = []
    v = value
    for _ in range(ndim):
        shape.append(len(v))
        v = v[0] if v else []
    return tuple(shape)


def _records(doc: Mapping[str, Any], key: str, issues: list[ValidationIssue]) -> list[Mapping[str, Any]]:
    raw = doc.get(key)
    if not isinstance(raw, list):
        issues.append(_err(key, "expected an array of objects"))
        return []
    out = []
    for pos, rec in enumerate(raw):
        if not isinstance(rec, dict):
            issues.append(_err(f"{key}[{pos}]", "expected an object"))
            continue
        if not isinstance(rec.get("id"), int) or isinstance(rec.get("id"), bool):
            issues.append(_err(f"{key}[{pos}].id", "expected an integer id"))
            continue
        if not isinstance(rec.get("name", ""), str):
            issues.append(_err(f"{key}[{pos}].name", "expected a string"))
            continue
        out.append(rec)
    return out


_REQUIRED = ("name", "layers", "attacks", "defenses", "penetration", "attack_cost", "benefit")


def scenario_from_dict(doc: Any) -> Scenario:
    """Build a scenario from a decoded document, applying defaults, then validate it."""
    if not isinstance(doc, dict):
        raise ScenarioError([_err("$", "scenario document must be a JSON object")])
    issues: list[ValidationIssue] = []
    for key in _REQUIRED:
        if key not in doc:
            issues.append(_err(key, "missing required key"))
    if issues:
        raise ScenarioError(issues)
    if not isinstance(doc["name"], str):
        issues.append(_err("name", "expected a string"))

    layers = []
    for pos, rec in enumerate(_records(doc, "layers", issues)):
        try:
            kind = LayerKind(rec.get("kind", LayerKind.CYBER.value))
        except ValueError:
            issues.append(_err(f"layers[{pos}].kind", "kind must be cyber, physical or management"))
            continue
        layers.append(Layer(rec["id"], rec.get("name", ""), kind))
    attacks = [AttackStrategy(r["id"], r.get("name", "")) for r in _records(doc, "attacks", issues)]

    mitigations = []
    if "mitigations" in doc:
        for pos, rec in enumerate(_records(doc, "mitigations", issues)):
            cost = rec.get("deploy_cost")
            if cost is not None and not _is_number(cost):
                issues.append(_err(f"mitigations[{pos}].deploy_cost", "expected a number"))
                continue
            mitigations.append(Mitigation(rec["id"], rec.get("name", ""), None if cost is None else float(cost)))

    defenses = []
    for pos, rec in enumerate(_records(doc, "defenses", issues)):
        mids = rec.get("mitigation_ids", [])
        if not isinstance(mids, list) or not all(isinstance(m, int) and not isinstance(m, bool) for m in mids):
            issues.append(_err(f"defenses[{pos}].mitigation_ids", "expected an array of integer ids"))
            continue
        defenses.append(DefenseStrategy(rec["id"], rec.get("name", ""), frozenset(mids)))

    penetration = _nested(doc["penetration"], 3, "penetration", issues)
    attack_cost = _nested(doc["attack_cost"], 2, "attack_cost", issues)
    defense_cost = None
    if doc.get("defense_cost") is not None:
        defense_cost = _nested(doc["defense_cost"], 2, "defense_cost", issues)

    benefit = doc["benefit"]
    if not _is_number(benefit):
        issues.append(_err("benefit", "expected a number"))
    budget = doc.get("defender_budget", UNBOUNDED)
    if budget != UNBOUNDED and not _is_number(budget):
        issues.append(_err("defender_budget", 'expected a number or "unbounded"'))

    if issues:
        raise ScenarioError(issues)

    s = Scenario(
        name=doc["name"],
        layers=tuple(layers),
        attacks=tuple(attacks),
        defenses=tuple(defenses),
        mitigations=tuple(mitigations),
        penetration=penetration,
        attack_cost=attack_cost,
        defense_cost=defense_cost,
        benefit=benefit,
        defender_budget=budget,
    )
    found = validate_scenario(s)
    if has_errors(found):
        raise ScenarioError([i for i in found if i.severity is Severity.ERROR])
    if s.defense_cost is None:
        s = Scenario(
            name=s.name,
            layers=s.layers,
            attacks=s.attacks,
            defenses=s.defenses,
            mitigations=s.mitigations,
            penetration=s.penetration,
            attack_cost=s.attack_cost,
            defense_cost=derive_defense_cost(s),
            benefit=s.benefit,
            defender_budget=s.defender_budget,
        )
    return s


def parse_scenario(text: str) -> Scenario:
    """Parse a scenario JSON document.

    Raises :class:`ScenarioSyntaxError` for malformed JSON and :class:`ScenarioError`
    for semantic problems; both carry path-located issues.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError([_err(f"line {exc.lineno} col {exc.colno}", exc.msg)]) from None
    return scenario_from_dict(doc)


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    mitigations = []
    for m in s.mitigations:
        rec: dict[str, Any] = {"id": m.id, "name": m.name}
        if m.deploy_cost is not None:
            rec["deploy_cost"] = m.deploy_cost
        mitigations.append(rec)
    doc: dict[str, Any] = {
        "name": s.name,
        "layers": [{"id": l.id, "name": l.name, "kind": l.kind.value} for l in s.layers],
        "attacks": [{"id": a.id, "name": a.name} for a in s.attacks],
        "defenses": [
            {"id": d.id, "name": d.name, "mitigation_ids": sorted(d.mitigation_ids)} for d in s.defenses
        ],
        "mitigations": mitigations,
        "penetration": s.penetration.tolist(),
        "attack_cost": s.attack_cost.tolist(),
    }
    if s.defense_cost is not None:
        doc["defense_cost"] = s.defense_cost.tolist()
    doc["benefit"] = s.benefit
    doc["defender_budget"] = s.defender_budget
    return doc


def serialize_scenario(s: Scenario, indent: int | None = 2) -> str:
    return json.dumps(scenario_to_dict(s), indent=indent, ensure_ascii=False)


def patch_scenario(s: Scenario, patch: Mapping[str, Any]) -> Scenario:
    """Return a copy of ``s`` with top-level numeric blocks replaced (a white-team rule change).

    Only game parameters may change; strategy spaces and layers stay fixed.
    """
    unknown = sorted(set(patch) - PATCHABLE_KEYS)
    if unknown:
        raise ScenarioError([_err(f"patch.{k}", "key cannot be changed during play") for k in unknown])
    doc = scenario_to_dict(s)
    doc.update(patch)
    return scenario_from_dict(doc)
