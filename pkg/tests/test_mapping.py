import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import GOLDEN
from mbtkit.context import Context
from mbtkit.efsm import LabelKind, apply_transition
from mbtkit.errors import HashMismatch, MissingLabel, TodoFragment, UnresolvedPlaceholder
from mbtkit.generator import AbstractTestCase, Step
from mbtkit.mapping import (
    DriverCommand,
    ExecFragment,
    Group,
    MappingTable,
    RawFragment,
    ResolvedStep,
    ConcreteTestCase,
    emit_text,
    instantiate,
    instantiate_suite,
    resolve,
    scene_of,
    todo_labels,
    update_table,
)
from mbtkit.model_io import extract_labels, model_hash, parse_dsl
from mbtkit.runner import bundled_path

SMALL = parse_dsl("model m { var email: string = 'a@b.c'; state v_A start; state v_B exit;"
                  " trans e_Go: v_A -> v_B; }").main_model


def cmd(name, **args):
    return {"commands": [{"name": name, "args": args}]}


def complete_table(model=SMALL):
    inv = extract_labels(model)
    table = MappingTable(groups={"base": Group({label: cmd("do", what=label)
                                                for label in inv.labels})},
                         model_hash=inv.content_hash)
    return table


def abstract(model, labels, test_id=0):
    ctx = model.initial_context()
    state = model.start
    steps = [Step(LabelKind.STATE, state, ctx)]
    for label in labels:
        t = next(t for t in model.outgoing(state) if t.label == label)
        state, ctx = apply_transition(model, t, ctx)
        steps += [Step(LabelKind.TRANSITION, label, ctx), Step(LabelKind.STATE, state, ctx)]
    return AbstractTestCase(test_id, 0, tuple(steps))


# -- update_table -----------------------------------------------------------


def test_update_empty_table():
    table, report = update_table(MappingTable(), extract_labels(SMALL))
    assert sorted(report.added) == ["e_Go", "v_A", "v_B"] and report.stale == []
    assert todo_labels(table) == ["e_Go", "v_A", "v_B"]
    assert table.model_hash == extract_labels(SMALL).content_hash


def test_update_complete_table_is_a_no_op():
    table = complete_table()
    new, report = update_table(table, extract_labels(SMALL))
    assert report.added == [] and report.stale == [] and not report.changed
    assert new.dumps() == table.dumps()


def test_update_flags_stale_entries_and_keeps_them():
    table = complete_table()
    shrunk = parse_dsl("model m { state v_A start; state v_B exit; }").main_model
    new, report = update_table(table, extract_labels(shrunk))
    assert report.added == [] and report.stale == ["e_Go"] and report.hash_changed
    assert new.groups["base"].entries["e_Go"] == table.groups["base"].entries["e_Go"]


def test_update_leaves_existing_entries_byte_for_byte():
    table = complete_table()
    table.groups["base"].entries["v_A"] = {"commands": [], "note": "hand written  ✓"}
    grown = parse_dsl("model m { state v_A start; state v_B exit; state v_C;"
                      " trans e_Go: v_A -> v_B; trans e_New: v_A -> v_C; }").main_model
    new, report = update_table(table, extract_labels(grown))
    assert sorted(report.added) == ["e_New", "v_C"]
    assert json.dumps(new.groups["base"].entries["v_A"]) == \
        json.dumps(table.groups["base"].entries["v_A"])
    assert table.labels() == {"v_A", "v_B", "e_Go"}


def test_update_is_idempotent_on_reference(reference_model, reference_table):
    inv = extract_labels(reference_model)
    once, _ = update_table(MappingTable(flavor="raw"), inv)
    twice, report = update_table(once, inv)
    assert once.dumps() == twice.dumps() and not report.changed
    _, report = update_table(reference_table, inv)
    assert not report.changed and report.stale == []
    assert todo_labels(reference_table) == []


def test_raw_templates():
    table, _ = update_table(MappingTable(flavor="raw"), extract_labels(SMALL))
    assert table.groups["base"].entries["e_Go"] == {"todo": True, "text": "# TODO: code for e_Go"}


# -- resolve ----------------------------------------------------------------


def chain_table():
    return MappingTable(groups={
        "base": Group({"e_Back": cmd("back"), "v_X": cmd("read")}),
        "InGame": Group({}, "base"),
        "Settings": Group({"e_Back": cmd("close_settings")}, "InGame"),
    })


def test_resolve_inherits_and_overrides():
    table = chain_table()
    assert resolve(table, "e_Back", "InGame").commands[0].name == "back"
    assert resolve(table, "e_Back", "Settings").commands[0].name == "close_settings"
    assert resolve(table, "v_X", "Settings").commands[0].name == "read"
    with pytest.raises(MissingLabel) as info:
        resolve(table, "e_Nope", "Settings")
    assert (info.value.label, info.value.group) == ("e_Nope", "Settings")


def test_extends_cycle_rejected():
    data = {"groups": {"a": {"extends": "b", "entries": {}}, "b": {"extends": "a", "entries": {}}}}
    with pytest.raises(Exception, match="cycle"):
        MappingTable.from_json(data)


@given(st.lists(st.sets(st.sampled_from(["e_A", "e_B", "e_C", "v_D"])), min_size=3, max_size=3),
       st.sampled_from(["e_A", "e_B", "e_C", "v_D"]))
def test_resolution_order_random_chains(owned, label):
    names = ["leaf", "mid", "root"]
    groups = {}
    for i, name in enumerate(names):
        parent = names[i + 1] if i + 1 < len(names) else None
        groups[name] = Group({lbl: cmd(name) for lbl in owned[i]}, parent)
    table = MappingTable(groups=groups)
    expected = next((names[i] for i in range(3) if label in owned[i]), None)
    if expected is None:
        with pytest.raises(MissingLabel):
            resolve(table, label, "leaf")
    else:
        assert resolve(table, label, "leaf").commands[0].name == expected


def test_scene_of():
    assert scene_of("v_Welcome") is None
    assert scene_of("InGame.Settings.v_ProfileTab") == "Settings"
    assert scene_of("Menu@v_Left.v_Open") == "Menu"


# -- instantiate ------------------------------------------------------------


def test_instantiate_three_steps():
    concrete = instantiate(abstract(SMALL, ["e_Go"]), complete_table(),
                           model_hash=extract_labels(SMALL).content_hash)
    assert [s.label for s in concrete.steps] == ["v_A", "e_Go", "v_B"]
    assert concrete.steps[1].fragment.commands[0].args == {"what": "e_Go"}


def test_placeholder_substitution():
    table = complete_table()
    table.groups["base"].entries["e_Go"] = cmd("type_text", field="email", text="{{email}}")
    concrete = instantiate(abstract(SMALL, ["e_Go"]), table)
    assert concrete.steps[1].fragment.commands[0].args == {"field": "email", "text": "a@b.c"}


def test_placeholder_rendering():
    model = parse_dsl("model m { var on: bool = true; var n: int = 3; var xs: list = ['a', 'b'];"
                      " state v_A start exit; }").main_model
    table = MappingTable(groups={"base": Group({"v_A": {"text": "{{on}} {{ n }} {{xs}}"}})},
                         flavor="raw")
    assert emit_text(instantiate(abstract(model, []), table)) == "true 3 a,b"


def test_instantiate_errors():
    table = complete_table()
    test = abstract(SMALL, ["e_Go"])
    with pytest.raises(HashMismatch):
        instantiate(test, table, model_hash="0" * 64)
    table.groups["base"].entries["e_Go"] = cmd("x", text="{{ghost}}")
    with pytest.raises(UnresolvedPlaceholder) as info:
        instantiate(test, table)
    assert (info.value.name, info.value.label) == ("ghost", "e_Go")
    table.groups["base"].entries["e_Go"] = {"todo": True, "commands": []}
    with pytest.raises(TodoFragment):
        instantiate(test, table)


def test_missing_state_is_named(seed7, reference_model, reference_table):
    suite, _ = seed7
    broken = MappingTable.from_json(json.loads(reference_table.dumps()))
    del broken.groups["Home"].entries["InGame.Home.v_HomeMain"]
    with pytest.raises(MissingLabel) as info:
        instantiate_suite(suite, broken, model_hash=model_hash(reference_model))
    assert info.value.label == "InGame.Home.v_HomeMain"


def test_reference_suite_instantiates(seed7, seed7_concrete):
    suite, _ = seed7
    assert len(seed7_concrete) == len(suite)
    for a, c in zip(suite, seed7_concrete):
        assert len(a.steps) == len(c.steps)
        assert [s.label for s in a.steps] == [s.label for s in c.steps]
        text = json.dumps(c.to_json())
        assert "{{" not in text


def test_concrete_round_trip(seed7_concrete):
    c = seed7_concrete[3]
    assert ConcreteTestCase.from_json(json.loads(json.dumps(c.to_json()))) == c


# -- emit_text --------------------------------------------------------------


def raw_concrete(texts):
    return ConcreteTestCase(0, 0, tuple(ResolvedStep(LabelKind.STATE, f"v_{i}", RawFragment(t))
                                        for i, t in enumerate(texts)))


def test_emit_text_examples():
    assert emit_text(raw_concrete(["A", "B", "C"])) == "A\nB\nC"
    assert emit_text(raw_concrete([])) == ""


def test_emit_text_needs_raw():
    c = ConcreteTestCase(0, 0, (ResolvedStep(LabelKind.STATE, "v_A", ExecFragment(
        (DriverCommand("read"),))),))
    with pytest.raises(Exception, match="raw"):
        emit_text(c)


def test_raw_emission_golden(reference_model):
    raw = MappingTable.load(bundled_path("reference_table_raw.json"))
    test = abstract(reference_model, ["e_OpenLogin", "e_TypeValidEmail"])
    assert len(test.steps) == 5
    text = emit_text(instantiate(test, raw, model_hash=model_hash(reference_model)))
    assert text.encode() == (GOLDEN / "raw_login_5steps.txt").read_bytes()


def test_raw_and_exec_tables_cover_the_same_labels(reference_table):
    raw = MappingTable.load(bundled_path("reference_table_raw.json"))
    assert raw.labels() == reference_table.labels()
    assert raw.model_hash == reference_table.model_hash
    assert set(raw.groups) == set(reference_table.groups)


def test_context_values_are_not_changed_by_substitution():
    ctx = Context({"email": "a@b.c"})
    step = Step(LabelKind.STATE, "v_A", ctx)
    table = MappingTable(groups={"base": Group({"v_A": {"text": "{{email}}"}})}, flavor="raw")
    instantiate(AbstractTestCase(0, 0, (step,)), table)
    assert ctx["email"] == "a@b.c"
