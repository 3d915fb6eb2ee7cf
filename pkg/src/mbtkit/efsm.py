"""EFSM domain model and single-step semantics."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

from .context import Context, value_type
from .errors import GuardTypeError, GuardViolation, UnknownState
from .expr import ActionStmt, Expr, eval_expr, exec_actions

STATE_PREFIX = "v_"
TRANSITION_PREFIX = "e_"


class LabelKind(enum.Enum):
    STATE = "State"
    TRANSITION = "Transition"


def label_kind(text: str) -> LabelKind:
    """Recover a label's kind from its text; flattened state labels carry ``Model.`` prefixes."""
    base = text.rsplit(".", 1)[-1]
    if base.startswith(STATE_PREFIX) and len(base) > 2:
        return LabelKind.STATE
    if base.startswith(TRANSITION_PREFIX) and len(base) > 2 and "." not in text:
        return LabelKind.TRANSITION
    raise ValueError(f"{text!r} is neither a state (v_) nor a transition (e_) label")


def base_label(text: str) -> str:
    """Strip submodel prefixes from a flattened state label."""
    return text.rsplit(".", 1)[-1]


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: str
    initial: Any

    def __post_init__(self):
        if isinstance(self.initial, list):
            object.__setattr__(self, "initial", tuple(self.initial))
        if value_type(self.initial) != self.type:
            raise TypeError(f"initial value of {self.name} is not a {self.type}")


@dataclass(frozen=True)
class State:
    label: str
    is_start: bool = False
    is_exit: bool = False
    submodel: str | None = None


@dataclass(frozen=True)
class Transition:
    label: str
    source: str
    target: str
    guard: Expr | None = None
    actions: tuple[ActionStmt, ...] = ()

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.source, self.label, self.target)


@dataclass(frozen=True)
class EfsmModel:
    name: str
    states: tuple[State, ...]
    transitions: tuple[Transition, ...]
    variables: tuple[VarDecl, ...] = field(default=())

    @cached_property
    def state_map(self) -> dict[str, State]:
        return {s.label: s for s in self.states}

    @cached_property
    def outgoing_map(self) -> dict[str, list[Transition]]:
        out: dict[str, list[Transition]] = {s.label: [] for s in self.states}
        for t in self.transitions:
            out.setdefault(t.source, []).append(t)
        return out

    @cached_property
    def decls(self) -> dict[str, str]:
        return {v.name: v.type for v in self.variables}

    @property
    def start_states(self) -> list[State]:
        return [s for s in self.states if s.is_start]

    @property
    def start(self) -> str:
        starts = self.start_states
        if len(starts) != 1:
            raise UnknownState(f"<start of {self.name}: {len(starts)} candidates>")
        return starts[0].label

    def state(self, label: str) -> State:
        try:
            return self.state_map[label]
        except KeyError:
            raise UnknownState(label) from None

    def outgoing(self, label: str) -> list[Transition]:
        if label not in self.state_map:
            raise UnknownState(label)
        return self.outgoing_map.get(label, [])

    def initial_context(self) -> Context:
        return Context({v.name: v.initial for v in self.variables})


def _guard_value(t: Transition, ctx: Context) -> bool:
    if t.guard is None:
        return True
    value = eval_expr(t.guard, ctx)
    if not isinstance(value, bool):
        raise GuardTypeError(f"guard of {t.label} ({t.source} -> {t.target}) gave {value!r}")
    return value


def enabled_transitions(model: EfsmModel, current: str, ctx: Context) -> list[Transition]:
    """Outgoing transitions of ``current`` whose guard is absent or true, in declaration order."""
    return [t for t in model.outgoing(current) if _guard_value(t, ctx)]


def guard_values(model: EfsmModel, current: str, ctx: Context) -> dict[str, bool]:
    """Map ``label -> target`` descriptions of outgoing edges to their guard values."""
    return {f"{t.label}->{t.target}": _guard_value(t, ctx) for t in model.outgoing(current)}


def apply_transition(model: EfsmModel, t: Transition, ctx: Context) -> tuple[str, Context]:
    if t.source not in model.state_map:
        raise UnknownState(t.source)
    if not _guard_value(t, ctx):
        raise GuardViolation(f"guard of {t.label} ({t.source} -> {t.target}) is false")
    return t.target, exec_actions(t.actions, ctx)
