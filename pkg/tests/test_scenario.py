import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wargame_lab.scenario import (
    ScenarioError,
    ScenarioSyntaxError,
    Severity,
    derive_defense_cost,
    parse_scenario,
    patch_scenario,
    scenario_from_dict,
    scenario_to_dict,
    serialize_scenario,
    validate_scenario,
)

from conftest import make_scenario


def _doc(**overrides):
    doc = {
        "name": "tiny",
        "layers": [{"id": 0, "name": "edge"}],
        "attacks": [{"id": 0, "name": "a"}],
        "defenses": [{"id": 0, "name": "d", "mitigation_ids": [0]}],
        "mitigations": [{"id": 0, "name": "m", "deploy_cost": 0}],
        "penetration": [[[1.0]]],
        "attack_cost": [[0]],
        "benefit": 0,
    }
    doc.update(overrides)
    return doc


def _messages(exc):
    return [i.message for i in exc.value.issues]


def test_smallest_document_parses_with_defaults():
    s = parse_scenario(json.dumps(_doc()))
    assert (s.n_layers, s.n_attacks, s.n_defenses) == (1, 1, 1)
    assert s.defender_budget == "unbounded"
    assert s.defense_cost is not None and s.defense_cost.tolist() == [[0.0]]


def test_probability_above_one_is_rejected():
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(json.dumps(_doc(penetration=[[[1.2]]])))
    assert "probability outside [0,1]" in _messages(exc)
    assert exc.value.issues[0].path == "penetration[0][0][0]"


def test_alpha_fixture_dimensions(alpha):
    assert (alpha.n_layers, alpha.n_attacks, alpha.n_defenses) == (2, 3, 3)
    assert [l.name for l in alpha.layers] == ["corporate DMZ", "plant network"]


def test_valid_minimal_has_no_issues(minimal):
    assert validate_scenario(minimal) == []


def test_unknown_mitigation_reference():
    doc = _doc(defenses=[{"id": 0, "name": "d", "mitigation_ids": [0, 99]}])
    with pytest.raises(ScenarioError) as exc:
        scenario_from_dict(doc)
    errors = [i for i in exc.value.issues if i.severity is Severity.ERROR]
    assert len(errors) == 1 and "unknown mitigation id 99" in errors[0].message


def test_negative_attack_cost():
    s = make_scenario([[[0.5]]], [[-5]])
    issues = validate_scenario(s)
    assert len(issues) == 1
    assert issues[0].message == "cost must be nonnegative" and issues[0].path == "attack_cost[0][0]"


def test_validate_does_not_mutate(alpha):
    before = serialize_scenario(alpha)
    validate_scenario(alpha)
    assert serialize_scenario(alpha) == before


@pytest.mark.parametrize(
    "field, value, fragment",
    [
        ("layers", [], "at least one layer"),
        ("attacks", [{"id": 1, "name": "x"}], "expected id 0"),
        ("benefit", -1, "benefit must be"),
        ("defender_budget", -3, "budget must be"),
        ("attack_cost", [[0, 1]], "expected shape"),
        ("penetration", [[[0.5], [0.5]]], "expected shape"),
        ("penetration", [[[0.5, 0.2], [0.1]]], "inconsistent lengths"),
        ("mitigations", [{"id": 0, "name": "m", "deploy_cost": -1}], "cost must be nonnegative"),
    ],
)
def test_each_invariant_has_a_tripping_document(field, value, fragment):
    with pytest.raises(ScenarioError) as exc:
        scenario_from_dict(_doc(**{field: value}))
    assert any(fragment in i.message for i in exc.value.issues), _messages(exc)


def test_missing_key_and_syntax_errors():
    doc = _doc()
    del doc["benefit"]
    with pytest.raises(ScenarioError) as exc:
        scenario_from_dict(doc)
    assert exc.value.issues[0].path == "benefit"
    with pytest.raises(ScenarioSyntaxError) as exc:
        parse_scenario('{"name": ')
    assert exc.value.issues[0].path.startswith("line 1")


def test_unused_mitigation_is_only_a_warning():
    doc = _doc(mitigations=[{"id": 0, "name": "m", "deploy_cost": 0}, {"id": 1, "name": "spare", "deploy_cost": 3}])
    s = scenario_from_dict(doc)
    issues = validate_scenario(s)
    assert [i.severity for i in issues] == [Severity.WARNING]


def test_derived_cost_sums_mitigations():
    doc = _doc(
        attacks=[{"id": 0, "name": "a"}, {"id": 1, "name": "b"}],
        defenses=[
            {"id": 0, "name": "both", "mitigation_ids": [0, 1]},
            {"id": 1, "name": "none", "mitigation_ids": []},
            {"id": 2, "name": "shared", "mitigation_ids": [2]},
            {"id": 3, "name": "shared too", "mitigation_ids": [2]},
        ],
        mitigations=[
            {"id": 0, "name": "m10", "deploy_cost": 10},
            {"id": 1, "name": "m20", "deploy_cost": 20},
            {"id": 2, "name": "m7", "deploy_cost": 7},
        ],
        penetration=[[[0.5] * 4] * 2],
        attack_cost=[[0] * 4] * 2,
    )
    s = scenario_from_dict(doc)
    assert s.defense_cost.tolist() == [[30, 0, 7, 7], [30, 0, 7, 7]]
    assert np.array_equal(derive_defense_cost(s), s.defense_cost)


def test_explicit_defense_cost_overrides_derivation():
    s = scenario_from_dict(_doc(defense_cost=[[4]], mitigations=[{"id": 0, "name": "m", "deploy_cost": 9}]))
    assert s.defense_cost.tolist() == [[4.0]]


def test_missing_deploy_cost_blocks_derivation():
    with pytest.raises(ScenarioError) as exc:
        scenario_from_dict(_doc(mitigations=[{"id": 0, "name": "m"}]))
    assert any("deploy_cost" in m for m in _messages(exc))


def test_arrays_are_read_only(alpha):
    with pytest.raises(ValueError):
        alpha.penetration[0, 0, 0] = 0.0


def test_patch_replaces_numbers_only(worked):
    patched = patch_scenario(worked, {"benefit": 50})
    assert patched.benefit == 50 and worked.benefit == 100
    with pytest.raises(ScenarioError):
        patch_scenario(worked, {"attacks": []})


@st.composite
def scenario_docs(draw):
    nl, na, nd = draw(st.integers(1, 3)), draw(st.integers(1, 4)), draw(st.integers(1, 4))
    prob = st.floats(0, 1, allow_nan=False)
    cost = st.floats(0, 1e6, allow_nan=False)
    n_mit = draw(st.integers(0, 3))
    doc = {
        "name": draw(st.text(min_size=0, max_size=10)),
        "layers": [{"id": l, "name": f"L{l}", "kind": draw(st.sampled_from(["cyber", "physical", "management"]))} for l in range(nl)],
        "attacks": [{"id": i, "name": f"A{i}"} for i in range(na)],
        "defenses": [
            {"id": j, "name": f"D{j}", "mitigation_ids": sorted(draw(st.sets(st.integers(0, n_mit - 1)))) if n_mit else []}
            for j in range(nd)
        ],
        "mitigations": [{"id": k, "name": f"M{k}", "deploy_cost": draw(cost)} for k in range(n_mit)],
        "penetration": [[[draw(prob) for _ in range(nd)] for _ in range(na)] for _ in range(nl)],
        "attack_cost": [[draw(cost) for _ in range(nd)] for _ in range(na)],
        "benefit": draw(cost),
        "defender_budget": draw(st.one_of(st.just("unbounded"), cost)),
    }
    if draw(st.booleans()):
        doc["defense_cost"] = [[draw(cost) for _ in range(nd)] for _ in range(na)]
    return doc


@given(scenario_docs())
def test_round_trip(doc):
    s = scenario_from_dict(doc)
    again = parse_scenario(serialize_scenario(s))
    assert again == s
    assert scenario_to_dict(again) == scenario_to_dict(s)


@given(scenario_docs())
def test_derived_cost_is_column_constant(doc):
    doc.pop("defense_cost", None)
    s = scenario_from_dict(doc)
    assert np.all(s.defense_cost == s.defense_cost[0:1, :])
