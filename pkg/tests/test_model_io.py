from dataclasses import replace
from pathlib import Path

import pytest

from conftest import load_golden
from oracles import ORACLE_BUNDLES, flatten_discrepancies, oracle_bundle
from mbtkit.efsm import EfsmModel, State, Transition
from mbtkit.errors import (
    CycleError,
    DslSyntaxError,
    LabelGrammarError,
    ModelError,
    NoExitError,
    ParseError,
)
from mbtkit.model_io import (
    extract_labels,
    flatten,
    load_bundle,
    load_model,
    model_hash,
    parse_dsl,
    parse_graphml,
    validate,
)
from mbtkit.model_io.graphml import parse_edge_label, parse_node_label
from mbtkit.runner import bundled_path

GRAPHML_HEAD = """<?xml version="1.0" encoding="UTF-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns" xmlns:y="http://www.yworks.com/xml/graphml">
  <key id="d0" for="graph" attr.name="variables"/>
  <key id="d1" for="node" attr.name="label"/>
  <key id="d2" for="edge" attr.name="label"/>
"""


def graphml(body, variables=""):
    var = f'<data key="d0">{variables}</data>' if variables else ""
    return (GRAPHML_HEAD + f'<graph id="m" edgedefault="directed">{var}{body}</graph></graphml>'
            ).encode()


TWO_NODES = """
<node id="n0"><data key="d1">v_A
START</data></node>
<node id="n1"><data key="d1">v_B</data></node>
<edge id="x0" source="n0" target="n1"><data key="d2">e_Go</data></edge>
"""


# -- GraphML ----------------------------------------------------------------


def test_graphml_two_nodes():
    m = parse_graphml(graphml(TWO_NODES))
    assert [s.label for s in m.states] == ["v_A", "v_B"]
    assert m.start == "v_A"
    assert len(m.transitions) == 1 and m.transitions[0].guard is None


def test_graphml_yed_labels_and_styling_ignored():
    body = """
<node id="n0"><data key="d1"><y:ShapeNode><y:Geometry x="1" y="2"/>
  <y:NodeLabel>v_A
START
EXIT</y:NodeLabel></y:ShapeNode></data></node>
<node id="n1"><data key="d1"><y:ShapeNode><y:NodeLabel>v_S
SUBMODEL Sub</y:NodeLabel></y:ShapeNode></data></node>
<node id="n2"/>
<edge id="x0" source="n0" target="n1"><data key="d2"><y:PolyLineEdge>
  <y:EdgeLabel>e_Go [n &gt; 0] / n = n - 1;</y:EdgeLabel></y:PolyLineEdge></data></edge>
"""
    m = parse_graphml(graphml(body, "var n: int = 2;"))
    assert [s.label for s in m.states] == ["v_A", "v_S"]
    assert m.state("v_A").is_exit and m.state("v_S").submodel == "Sub"
    assert str(m.transitions[0].guard) == "n > 0"
    assert m.variables[0].initial == 2


def test_edge_label_grammar():
    t = parse_edge_label("e_TypePassword [loggedIn == false] / tries = tries + 1;", "v_A", "v_B")
    assert t.label == "e_TypePassword"
    assert str(t.guard) == "loggedIn == false"
    assert len(t.actions) == 1
    t = parse_edge_label("e_X ['a]b' == s]", "v_A", "v_B")
    assert str(t.guard) == "'a]b' == s"
    t = parse_edge_label("e_Y / push(h, 'x'); n = 1;", "v_A", "v_B")
    assert t.guard is None and len(t.actions) == 2


@pytest.mark.parametrize("text", ["Go", "e_Go [x >", "e_Go garbage", "e_Go [x > ] / ;",
                                  "e_Go / n = ;"])
def test_bad_edge_labels(text):
    with pytest.raises(LabelGrammarError) as info:
        parse_edge_label(text, "v_A", "v_B", "x9")
    assert info.value.element_id == "x9"


@pytest.mark.parametrize("text", ["A", "v_A\nBEGIN", "v_A\nSUBMODEL"])
def test_bad_node_labels(text):
    with pytest.raises(LabelGrammarError):
        parse_node_label(text, "n0")


def test_graphml_errors():
    with pytest.raises(ParseError):
        parse_graphml(b"<graphml><graph")
    with pytest.raises(ParseError) as info:
        parse_graphml(graphml('<node id="n0"><data key="d1">v_A</data></node>'
                              '<edge id="x7" source="n0" target="n9"><data key="d2">e_Go</data>'
                              '</edge>'))
    assert info.value.element_id == "x7"


def test_bundled_login_graphml():
    m = parse_graphml((bundled_path("reference_graphml") / "Login.graphml").read_bytes())
    email = [t for t in m.transitions if t.label.startswith("e_Type") and "Email" in t.label]
    password = [t for t in m.transitions if "Password" in t.label]
    assert len(email) == 3 and len(password) == 2


# -- DSL --------------------------------------------------------------------


def test_dsl_minimal():
    b = parse_dsl("model m { state v_A start; state v_B exit; trans e_Go: v_A -> v_B; }")
    m = b.main_model
    assert len(m.states) == 2 and len(m.transitions) == 1


def test_dsl_guard_and_action():
    b = parse_dsl('model m { var x: int = 3; state v_A start; state v_B exit;\n'
                  'trans e_Go: v_A -> v_B guard "x > 0" do "x = x - 1;"; }')
    t = b.main_model.transitions[0]
    assert str(t.guard) == "x > 0" and str(t.actions[0]) == "x = x + -1;"


def test_dsl_submodel_reference():
    b = parse_dsl("model m { state v_InGame start submodel InGame; }\n"
                  "model InGame { state v_Home start exit; }")
    assert b.main == "m"
    assert b.main_model.state("v_InGame").submodel == "InGame"


@pytest.mark.parametrize("text, line", [
    ("model m {\n  state v_A start\n}", 3),
    ("model m {\n  state A start;\n}", 2),
    ("model m {\n  var x: float = 1;\n}", 2),
    ('model m {\n state v_A;\n trans e_Go: v_A -> v_A guard "x >";\n}', 3),
    ("model m {\n  var x: int = 'a';\n}", 2),
])
def test_dsl_errors_have_positions(text, line):
    with pytest.raises(DslSyntaxError) as info:
        parse_dsl(text)
    assert info.value.line == line and info.value.column >= 1


def test_front_end_equivalence():
    dsl = parse_dsl(bundled_path("reference.efsm").read_text(encoding="utf-8"))
    gml = load_bundle(bundled_path("reference_graphml"))
    assert gml.main == dsl.main
    assert set(gml.models) == set(dsl.models)
    for name in dsl.models:
        assert gml.models[name] == dsl.models[name], name
    assert flatten(gml) == flatten(dsl)


# -- flattening -------------------------------------------------------------


def test_flatten_chain():
    b = parse_dsl("model main { state v_A start; state v_Sub submodel Sub; state v_B exit;"
                  " trans e_In: v_A -> v_Sub; trans e_Out: v_Sub -> v_B; }"
                  " model Sub { state v_S start exit; }")
    m = flatten(b)
    assert [s.label for s in m.states] == ["v_A", "Sub.v_S", "v_B"]
    assert [t.key for t in m.transitions] == [("v_A", "e_In", "Sub.v_S"),
                                              ("Sub.v_S", "e_Out", "v_B")]
    assert not m.state("Sub.v_S").is_exit


def test_flatten_two_exits_duplicate_outgoing_edge():
    b = parse_dsl("model main { state v_A start; state v_Sub submodel Sub; state v_B exit;"
                  " trans e_In: v_A -> v_Sub; trans e_Out: v_Sub -> v_B; }"
                  " model Sub { state v_S start; state v_X1 exit; state v_X2 exit;"
                  " trans e_L: v_S -> v_X1; trans e_R: v_S -> v_X2; }")
    expected = EfsmModel("main", (
        State("v_A", is_start=True), State("Sub.v_S"), State("Sub.v_X1"), State("Sub.v_X2"),
        State("v_B", is_exit=True),
    ), (
        Transition("e_L", "Sub.v_S", "Sub.v_X1"),
        Transition("e_R", "Sub.v_S", "Sub.v_X2"),
        Transition("e_In", "v_A", "Sub.v_S"),
        Transition("e_Out", "Sub.v_X1", "v_B"),
        Transition("e_Out", "Sub.v_X2", "v_B"),
    ), ())
    assert flatten(b) == expected


def test_flatten_same_submodel_twice_gets_distinct_prefixes():
    m = flatten(oracle_bundle("shared-submodel"))
    labels = {s.label for s in m.states}
    assert {"Menu@v_Left.v_Open", "Menu@v_Right.v_Open", "Play.Menu.v_Open"} <= labels
    assert sum(s.is_start for s in m.states) == 1
    assert validate(m).clean


def test_flatten_errors():
    with pytest.raises(CycleError) as info:
        flatten(parse_dsl("model a { state v_A start submodel b; } "
                          "model b { state v_B start submodel a; }"))
    assert info.value.cycle[0] == info.value.cycle[-1]
    with pytest.raises(NoExitError):
        flatten(parse_dsl("model a { state v_A start submodel b; state v_Z exit;"
                          " trans e_Go: v_A -> v_Z; } model b { state v_B start; }"))
    with pytest.raises(ModelError):
        flatten(parse_dsl("model a { state v_A start submodel nope; }"))
    with pytest.raises(ModelError):
        flatten(parse_dsl("model a { var n: int = 0; state v_A start submodel b; }"
                          " model b { var n: int = 1; state v_B start exit; }"))


@pytest.mark.parametrize("name", sorted(ORACLE_BUNDLES))
def test_flatten_matches_layered_semantics(name):
    bundle = oracle_bundle(name)
    discrepancies, n_walks = flatten_discrepancies(bundle, flatten(bundle), max_len=8)
    assert n_walks > 40
    assert discrepancies == 0


def test_layered_oracle_catches_a_broken_flatten():
    bundle = oracle_bundle("two-exits")
    good = flatten(bundle)
    broken = replace(good, transitions=good.transitions[:-1])
    assert flatten_discrepancies(bundle, broken, max_len=6)[0] > 0


def test_reference_bundle_matches_golden_inventory(reference_model):
    golden = load_golden("reference_inventory.json")
    inv = extract_labels(reference_model)
    assert len(reference_model.states) == golden["stateCount"]
    assert len(reference_model.transitions) == golden["transitionCount"]
    assert list(inv.state_labels) == golden["states"]
    assert list(inv.transition_labels) == golden["transitions"]
    assert inv.content_hash == golden["contentHash"]


def test_reference_bundle_has_five_layers():
    deepest = max(s.label.count(".") for s in load_model(bundled_path("reference.efsm")).states)
    assert deepest + 1 == 5


# -- validation and inventory -----------------------------------------------


def test_validate_island():
    m = parse_dsl("model m { state v_A start; state v_B exit; state v_X;"
                  " trans e_Go: v_A -> v_B; trans e_Loop: v_X -> v_X; }").main_model
    report = validate(m)
    assert [f.subject for f in report.of_kind("unreachable_state")] == ["v_X"]
    assert len(report.of_kind("unreachable_transition")) == 1


def test_validate_type_error_names_transition():
    m = parse_dsl('model m { state v_A start; state v_B exit;'
                  ' trans e_Bad: v_A -> v_B guard "1 + true"; }').main_model
    [finding] = validate(m).findings
    assert finding.kind == "type_error" and finding.subject.startswith("e_Bad")


def test_validate_structure():
    m = EfsmModel("m", (State("v_A"), State("v_A")),
                  (Transition("e_Go", "v_A", "v_Q"), Transition("e_Go", "v_A", "v_Q")), ())
    kinds = {f.kind for f in validate(m).findings}
    assert {"duplicate_state", "missing_start", "duplicate_transition", "unknown_state"} <= kinds


def test_reference_model_is_clean(reference_model):
    assert validate(reference_model).findings == []


def test_extract_labels():
    m = parse_dsl("model m { state v_B exit; state v_A start; trans e_Go: v_A -> v_B; }").main_model
    inv = extract_labels(m)
    assert inv.state_labels == ("v_A", "v_B") and inv.transition_labels == ("e_Go",)


def test_extract_labels_dedups_and_tracks_changes():
    text = "model m { state v_A start; " + " ".join(
        f"state v_S{i}; trans e_Go{i}: v_A -> v_S{i}; trans e_Back: v_S{i} -> v_A;"
        for i in range(5)) + " }"
    m = parse_dsl(text).main_model
    inv = extract_labels(m)
    assert inv.transition_labels.count("e_Back") == 1
    grown = replace(m, transitions=m.transitions + (Transition("e_New", "v_A", "v_S0"),))
    inv2 = extract_labels(grown)
    assert set(inv2.labels) - set(inv.labels) == {"e_New"}
    assert inv2.content_hash != inv.content_hash
    shuffled = replace(m, states=tuple(reversed(m.states)),
                       transitions=tuple(reversed(m.transitions)))
    assert extract_labels(shuffled) == inv
    assert extract_labels(m) == inv


def test_load_errors(tmp_path):
    bad = tmp_path / "model.txt"
    bad.write_text("x")
    with pytest.raises(ModelError):
        load_bundle(bad)
    with pytest.raises(ModelError):
        load_bundle(tmp_path)
    with pytest.raises(OSError):
        load_bundle(Path(tmp_path / "missing.efsm"))


def test_hash_is_stable(reference_model):
    assert model_hash(reference_model) == model_hash(load_model(bundled_path("reference.efsm")))
