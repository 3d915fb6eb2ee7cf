"""Reader for the GraphML subset produced by yEd.

Only ``node`` and ``edge`` elements and their first text label are read.
A node label is ``v_Name`` optionally followed by marker lines ``START``,
``EXIT`` or ``SUBMODEL <name>``. An edge label is ``e_Name``, optionally
followed by ``[guard]`` and ``/ action; action;``. Variables are declared in
a graph-level ``data`` element whose key has ``attr.name="variables"``, written in the DSL
syntax (``var name: type = literal;``).
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from ..efsm import EfsmModel, State, Transition
from ..errors import DslSyntaxError, ExprSyntaxError, LabelGrammarError, ParseError
from ..expr import parse_actions, parse_expr
from .labels import check_state_label, check_transition_label

_LABEL_TAGS = ("NodeLabel", "EdgeLabel")


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _label_text(elem: ET.Element, label_keys: set[str]) -> str | None:
    for child in elem.iter():
        if _local(child.tag) in _LABEL_TAGS and child.text and child.text.strip():
            return child.text
    for child in elem:
        if _local(child.tag) == "data" and child.get("key") in label_keys:
            if child.text and child.text.strip():
                return child.text
    return None


def parse_node_label(text: str, element_id: str | None = None) -> State:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    try:
        label = check_state_label(lines[0])
    except ValueError:
        raise LabelGrammarError("bad state label", text, element_id) from None
    is_start = is_exit = False
    submodel = None
    for line in lines[1:]:
        words = line.split()
        if words == ["START"]:
            is_start = True
        elif words == ["EXIT"]:
            is_exit = True
        elif len(words) == 2 and words[0] == "SUBMODEL":
            submodel = words[1]
        else:
            raise LabelGrammarError("unknown node marker line", line, element_id)
    return State(label, is_start, is_exit, submodel)


def _scan_bracket(text: str, start: int) -> int:
    """Index of the ``]`` closing the ``[`` at ``start``, skipping quoted strings."""
    i = start + 1
    quoted = False
    while i < len(text):
        c = text[i]
        if quoted:
            if c == "\\":
                i += 1
            elif c == "'":
                quoted = False
        elif c == "'":
            quoted = True
        elif c == "]":
            return i
        i += 1
    return -1


def parse_edge_label(text: str, source: str, target: str,
                     element_id: str | None = None) -> Transition:
    s = " ".join(text.split())
    name_end = 0
    while name_end < len(s) and (s[name_end].isalnum() or s[name_end] == "_"):
        name_end += 1
    try:
        label = check_transition_label(s[:name_end])
    except ValueError:
        raise LabelGrammarError("bad transition label", text, element_id) from None
    rest = s[name_end:].strip()
    guard = None
    actions = ()
    try:
        if rest.startswith("["):
            close = _scan_bracket(rest, 0)
            if close < 0:
                raise LabelGrammarError("unclosed guard bracket", text, element_id)
            guard = parse_expr(rest[1:close])
            rest = rest[close + 1:].strip()
        if rest.startswith("/"):
            actions = tuple(parse_actions(rest[1:]))
            rest = ""
    except ExprSyntaxError as exc:
        raise LabelGrammarError(f"bad guard or action ({exc})", text, element_id) from exc
    if rest:
        raise LabelGrammarError("trailing text after transition label", text, element_id)
    return Transition(label, source, target, guard, actions)


def _parse_variables(text: str, graph_id: str):
    from .dsl import parse_dsl

    try:
        bundle = parse_dsl(f"model _vars {{\n{text}\n}}")
    except DslSyntaxError as exc:
        raise ParseError(f"bad variable declarations: {exc}", graph_id) from exc
    return bundle.models["_vars"].variables


def _graph_to_model(graph: ET.Element, keys: dict[str, str], name: str) -> EfsmModel:
    label_keys = {k for k, attr in keys.items() if attr == "label"}
    var_keys = {k for k, attr in keys.items() if attr == "variables"}
    variables = ()
    for child in graph:
        if _local(child.tag) == "data" and child.get("key") in var_keys and child.text:
            variables = _parse_variables(child.text, name)

    states: list[State] = []
    node_labels: dict[str, str] = {}
    for node in graph.iter():
        if _local(node.tag) != "node":
            continue
        node_id = node.get("id")
        if node_id is None:
            raise ParseError("node without id")
        text = _label_text(node, label_keys)
        if text is None:
            continue
        state = parse_node_label(text, node_id)
        node_labels[node_id] = state.label
        states.append(state)

    transitions: list[Transition] = []
    for edge in graph.iter():
        if _local(edge.tag) != "edge":
            continue
        edge_id = edge.get("id") or f"{edge.get('source')}->{edge.get('target')}"
        try:
            source = node_labels[edge.get("source")]
            target = node_labels[edge.get("target")]
        except KeyError:
            raise ParseError("edge endpoint is not a labeled node", edge_id) from None
        text = _label_text(edge, label_keys)
        if text is None:
            raise LabelGrammarError("edge without label", "", edge_id)
        transitions.append(parse_edge_label(text, source, target, edge_id))
    return EfsmModel(name, tuple(states), tuple(transitions), tuple(variables))


def parse_graphml_models(data: bytes | str, default_name: str = "main") -> list[EfsmModel]:
    """Parse every top-level graph of a GraphML document."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from exc
    keys = {k.get("id"): k.get("attr.name") for k in root if _local(k.tag) == "key"}
    graphs = [g for g in root if _local(g.tag) == "graph"]
    if not graphs:
        raise ParseError("no <graph> element")
    return [_graph_to_model(g, keys, g.get("id") or default_name) for g in graphs]


def parse_graphml(data: bytes | str, default_name: str = "main") -> EfsmModel:
    """Parse a single-graph GraphML document into a model named after the graph id."""
    models = parse_graphml_models(data, default_name)
    if len(models) != 1:
        raise ParseError(f"expected one <graph>, found {len(models)}")
    return models[0]

