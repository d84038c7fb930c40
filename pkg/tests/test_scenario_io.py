import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indemnify import scenario_io
from indemnify.errors import ScenarioError


def _doc():
    return json.loads(json.dumps(scenario_io.BUILTIN["4"]))


def test_builtin_examples():
    sc = scenario_io.builtin_scenario(4)
    assert sc.background.values.tolist() == [2.0, 8.0]
    assert sc.loss.M == 10.0 and sc.name == "pareto-two-state-reserve"
    assert scenario_io.builtin_scenario("2").eta == 0.2
    with pytest.raises(ScenarioError):
        scenario_io.builtin_scenario(7)


def test_round_trip(tmp_path):
    sc = scenario_io.builtin_scenario(4)
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scenario_io.scenario_to_dict(sc)))
    again = scenario_io.load_scenario(path)
    assert scenario_io.scenario_to_dict(again) == scenario_io.scenario_to_dict(sc)


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d.pop("eta"), "<root>"),
        (lambda d: d.update(extra=1), "<root>"),
        (lambda d: d["utility"].update(kind="cara"), "utility.kind"),
        (lambda d: d["background"]["points"][0].append(3.0), "background.points[0]"),
        (lambda d: d["loss"]["pieces"][0]["kernel"].pop("shape"), "loss.pieces[0].kernel.shape"),
        (lambda d: d.update(w="15"), "w"),
    ],
)
def test_errors_carry_field_path(mutate, path):
    doc = _doc()
    mutate(doc)
    with pytest.raises(ScenarioError) as info:
        scenario_io.scenario_from_dict(doc)
    assert info.value.path == path


def test_semantic_errors():
    doc = _doc()
    doc["background"]["points"][0][1] = 0.5
    with pytest.raises(ScenarioError):
        scenario_io.scenario_from_dict(doc)
    doc = _doc()
    doc["loss"]["pieces"][0]["kernel"]["shape"] = -1.0
    with pytest.raises(ScenarioError) as info:
        scenario_io.scenario_from_dict(doc)
    assert info.value.path.startswith("loss.pieces[0].kernel")


def test_file_errors(tmp_path):
    with pytest.raises(ScenarioError, match="no such file"):
        scenario_io.load_scenario(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioError, match="invalid JSON"):
        scenario_io.load_scenario(bad)
    bad.write_text("[1, 2]")
    with pytest.raises(ScenarioError):
        scenario_io.load_scenario(bad)


def test_other_kernels():
    doc = _doc()
    doc["loss"] = {
        "atoms": [[0.0, 0.2]],
        "pieces": [
            {"lo": 0.0, "hi": 4.0, "kernel": {"kind": "uniform"}, "weight": 0.4},
            {"lo": 4.0, "hi": 10.0, "kernel": {"kind": "truncated_exponential", "rate": 0.3}, "weight": 0.4},
        ],
    }
    sc = scenario_io.scenario_from_dict(doc)
    assert sc.loss.M == 10.0
    assert sc.loss.mean > 0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.4), st.floats(0.2, 3.0), st.floats(0.5, 1.0))
def test_valid_documents_load(eta, gamma, tau):
    doc = _doc()
    doc.update(eta=eta, tau=tau)
    doc["utility"]["params"]["gamma"] = gamma if abs(gamma - 1) > 1e-3 else 1.5
    sc = scenario_io.scenario_from_dict(doc)
    assert sc.eta == eta and sc.tau == tau
