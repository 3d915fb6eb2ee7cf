"""Model validation and label extraction."""

from __future__ import annotations

import hashlib
import json
from collections import Counter, deque
from dataclasses import dataclass, field

from ..context import thaw
from ..efsm import EfsmModel
from ..errors import ExprTypeError
from ..expr import actions_to_source, check_action, check_guard, to_source


@dataclass(frozen=True)
class Finding:
    kind: str
    subject: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.subject}: {self.message}"


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.findings

    def of_kind(self, kind: str) -> list[Finding]:
        return [f for f in self.findings if f.kind == kind]

    def to_json(self) -> dict:
        return {"findings": [{"kind": f.kind, "subject": f.subject, "message": f.message}
                             for f in self.findings]}


def reachable(model: EfsmModel) -> tuple[set[str], set[tuple[str, str, str]]]:
    """States and (source, label, target) edges reachable from the start, ignoring guards."""
    starts = [s.label for s in model.states if s.is_start]
    seen = set(starts)
    edges = set()
    queue = deque(starts)
    while queue:
        label = queue.popleft()
        for t in model.outgoing_map.get(label, []):
            edges.add(t.key)
            if t.target in model.state_map and t.target not in seen:
                seen.add(t.target)
                queue.append(t.target)
    return seen, edges


def _transition_name(t) -> str:
    return f"{t.label} ({t.source} -> {t.target})"


def validate(model: EfsmModel) -> ValidationReport:
    """Collect structural and typing problems; an empty report means the model is clean."""
    findings: list[Finding] = []
    add = lambda kind, subject, msg: findings.append(Finding(kind, subject, msg))  # noqa: E731

    counts = Counter(s.label for s in model.states)
    for label, n in sorted(counts.items()):
        if n > 1:
            add("duplicate_state", label, f"declared {n} times")
    starts = [s.label for s in model.states if s.is_start]
    if not starts:
        add("missing_start", model.name, "no start state")
    elif len(starts) > 1:
        add("multiple_start", model.name, f"start states: {', '.join(starts)}")
    for s in model.states:
        if s.submodel and s.is_exit:
            add("submodel_exit", s.label, "a submodel state cannot be an EXIT state")

    triples = Counter(t.key for t in model.transitions)
    for (source, label, target), n in sorted(triples.items()):
        if n > 1:
            add("duplicate_transition", f"{label} ({source} -> {target})", f"declared {n} times")

    decls = model.decls
    for t in model.transitions:
        for end in (t.source, t.target):
            if end not in model.state_map:
                add("unknown_state", _transition_name(t), f"no state {end!r}")
        if t.guard is not None:
            try:
                check_guard(t.guard, decls)
            except ExprTypeError as exc:
                add("type_error", _transition_name(t), f"guard: {exc}")
        for stmt in t.actions:
            try:
                check_action(stmt, decls)
            except ExprTypeError as exc:
                add("type_error", _transition_name(t), f"action: {exc}")

    if len(starts) == 1:
        seen, edges = reachable(model)
        for s in model.states:
            if s.label not in seen:
                add("unreachable_state", s.label, "not reachable from the start state")
        for t in model.transitions:
            if t.key not in edges:
                add("unreachable_transition", _transition_name(t),
                    "source not reachable from the start state")
    return ValidationReport(findings)


# -- label inventory -------------------------------------------------------


@dataclass(frozen=True)
class LabelInventory:
    state_labels: tuple[str, ...]
    transition_labels: tuple[str, ...]
    source_model: str
    content_hash: str

    @property
    def labels(self) -> tuple[str, ...]:
        return self.state_labels + self.transition_labels

    def to_json(self) -> dict:
        return {"model": self.source_model, "contentHash": self.content_hash,
                "states": list(self.state_labels), "transitions": list(self.transition_labels)}


def canonical_model(model: EfsmModel) -> dict:
    """Declaration-order-independent JSON form of a model."""
    return {
        "name": model.name,
        "states": sorted([s.label, s.is_start, s.is_exit, s.submodel or ""] for s in model.states),
        "transitions": sorted(
            [t.source, t.label, t.target,
             to_source(t.guard) if t.guard is not None else "",
             actions_to_source(t.actions)]
            for t in model.transitions),
        "variables": sorted([v.name, v.type, json.dumps(thaw(v.initial))] for v in model.variables),
    }


def model_hash(model: EfsmModel) -> str:
    text = json.dumps(canonical_model(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def extract_labels(model: EfsmModel) -> LabelInventory:
    return LabelInventory(
        state_labels=tuple(sorted({s.label for s in model.states})),
        transition_labels=tuple(sorted({t.label for t in model.transitions})),
        source_model=model.name,
        content_hash=model_hash(model),
    )
