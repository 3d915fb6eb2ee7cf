"""Mapping tables from labels to code fragments, and test instantiation.

A table file looks like::

    {
      "flavor": "exec",
      "modelHash": "...",
      "groups": {
        "base": {"entries": {"e_Back": {"commands": [{"name": "back", "args": {}}]}}},
        "Settings": {"extends": "base", "entries": {...}}
      }
    }

``exec`` fragments are lists of driver commands; ``raw`` fragments are text.
Both may contain ``{{var}}`` placeholders filled from the step's context.
"""

from __future__ import annotations

import copy
import json
import re
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .context import Context, thaw
from .efsm import LabelKind
from .errors import (
    HashMismatch,
    MbtError,
    MissingLabel,
    TodoFragment,
    UnresolvedPlaceholder,
)
from .generator import AbstractTestCase
from .model_io.inventory import LabelInventory

EXEC = "exec"
RAW = "raw"
DEFAULT_GROUP = "base"
PLACEHOLDER_RE = re.compile(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}")


@dataclass(frozen=True)
class DriverCommand:
    name: str
    args: dict = field(default_factory=dict)
    expect: dict | None = None

    def to_json(self) -> dict:
        data = {"name": self.name, "args": dict(self.args)}
        if self.expect is not None:
            data["expect"] = dict(self.expect)
        return data

    @classmethod
    def from_json(cls, data: dict) -> "DriverCommand":
        return cls(data["name"], dict(data.get("args", {})),
                   dict(data["expect"]) if data.get("expect") is not None else None)


@dataclass(frozen=True)
class ExecFragment:
    commands: tuple[DriverCommand, ...]
    todo: bool = False


@dataclass(frozen=True)
class RawFragment:
    text: str
    todo: bool = False


Fragment = ExecFragment | RawFragment


def fragment_from_json(data: dict, flavor: str) -> Fragment:
    todo = bool(data.get("todo", False))
    if flavor == EXEC:
        return ExecFragment(tuple(DriverCommand.from_json(c) for c in data.get("commands", [])),
                            todo)
    return RawFragment(data.get("text", ""), todo)


def fragment_to_json(fragment: Fragment) -> dict:
    if isinstance(fragment, ExecFragment):
        data = {"commands": [c.to_json() for c in fragment.commands]}
    else:
        data = {"text": fragment.text}
    if fragment.todo:
        data["todo"] = True
    return data


def template_entry(label: str, flavor: str) -> dict:
    if flavor == EXEC:
        return {"todo": True, "commands": []}
    return {"todo": True, "text": f"# TODO: code for {label}"}


@dataclass
class Group:
    entries: dict[str, dict] = field(default_factory=dict)
    extends: str | None = None


@dataclass
class MappingTable:
    """Groups of label entries. Entries are kept as raw JSON objects so that
    updates leave hand-written fragments exactly as they were."""

    flavor: str = EXEC
    groups: dict[str, Group] = field(default_factory=dict)
    model_hash: str = ""

    def __post_init__(self):
        if self.flavor not in (EXEC, RAW):
            raise ValueError(f"unknown fragment flavor {self.flavor!r}")

    def labels(self) -> set[str]:
        return {label for g in self.groups.values() for label in g.entries}

    def chain(self, group: str) -> list[str]:
        """``group`` followed by its ancestors; raises on unknown groups or cycles."""
        seen: list[str] = []
        name: str | None = group
        while name is not None:
            if name in seen:
                raise MbtError(f"extends cycle: {' -> '.join(seen + [name])}")
            if name not in self.groups:
                raise MbtError(f"unknown mapping group {name!r}")
            seen.append(name)
            name = self.groups[name].extends
        return seen

    def to_json(self) -> dict:
        groups = {}
        for name, g in self.groups.items():
            data = {"entries": g.entries}
            if g.extends is not None:
                data["extends"] = g.extends
            groups[name] = data
        return {"flavor": self.flavor, "modelHash": self.model_hash, "groups": groups}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, data: dict) -> "MappingTable":
        groups = {name: Group(dict(g.get("entries", {})), g.get("extends"))
                  for name, g in data.get("groups", {}).items()}
        table = cls(data.get("flavor", EXEC), groups, data.get("modelHash", ""))
        for name in table.groups:
            table.chain(name)
        return table

    @classmethod
    def load(cls, path: str | Path) -> "MappingTable":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")


@dataclass
class ChangeReport:
    added: list[str] = field(default_factory=list)
    stale: list[str] = field(default_factory=list)
    hash_changed: bool = False

    @property
    def changed(self) -> bool:
        return bool(self.added) or self.hash_changed

    def to_json(self) -> dict:
        return {"added": self.added, "stale": self.stale, "hashChanged": self.hash_changed}


def update_table(table: MappingTable, inventory: LabelInventory,
                 default_group: str = DEFAULT_GROUP) -> tuple[MappingTable, ChangeReport]:
    """Add TODO templates for unmapped labels and flag entries whose label disappeared."""
    new = copy.deepcopy(table)
    known = new.labels()
    wanted = set(inventory.labels)
    group = new.groups.setdefault(default_group, Group())
    report = ChangeReport()
    for label in inventory.labels:
        if label not in known:
            group.entries[label] = template_entry(label, new.flavor)
            report.added.append(label)
    report.stale = sorted(known - wanted)
    report.hash_changed = new.model_hash != inventory.content_hash
    new.model_hash = inventory.content_hash
    return new, report


def todo_labels(table: MappingTable) -> list[str]:
    return sorted(label for g in table.groups.values()
                  for label, entry in g.entries.items() if entry.get("todo"))


def resolve(table: MappingTable, label: str, group: str) -> Fragment:
    """Look ``label`` up in ``group`` and then along its ``extends`` chain."""
    for name in table.chain(group):
        entry = table.groups[name].entries.get(label)
        if entry is not None:
            return fragment_from_json(entry, table.flavor)
    raise MissingLabel(label, group)


# -- instantiation ---------------------------------------------------------


def scene_of(state_label: str) -> str | None:
    """Innermost submodel prefix of a flattened state label (``A.B.v_X`` -> ``B``)."""
    parts = state_label.split(".")
    if len(parts) < 2:
        return None
    return parts[-2].split("@", 1)[0]


def default_group_for(table: MappingTable) -> Callable[[str, str], str]:
    """Group policy: the scene of the state (a transition uses its source state),
    falling back to the default group when the table has no such group."""

    def group_for(label: str, state_label: str) -> str:
        scene = scene_of(state_label)
        return scene if scene in table.groups else DEFAULT_GROUP

    return group_for


def _render(value) -> str:
    value = thaw(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(value)
    return str(value)


def substitute(text: str, ctx: Context, label: str) -> str:
    def repl(m):
        name = m.group(1)
        if name not in ctx:
            raise UnresolvedPlaceholder(name, label)
        return _render(ctx[name])

    return PLACEHOLDER_RE.sub(repl, text)


def _substitute_fragment(fragment: Fragment, ctx: Context, label: str) -> Fragment:
    if isinstance(fragment, RawFragment):
        return RawFragment(substitute(fragment.text, ctx, label))
    commands = []
    for c in fragment.commands:
        args = {k: substitute(str(v), ctx, label) for k, v in c.args.items()}
        expect = None
        if c.expect is not None:
            expect = {k: substitute(str(v), ctx, label) for k, v in c.expect.items()}
        commands.append(DriverCommand(c.name, args, expect))
    return ExecFragment(tuple(commands))


@dataclass(frozen=True)
class ResolvedStep:
    kind: LabelKind
    label: str
    fragment: Fragment

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "label": self.label, **fragment_to_json(self.fragment)}


@dataclass(frozen=True)
class ConcreteTestCase:
    id: int
    source_id: int
    steps: tuple[ResolvedStep, ...]

    def to_json(self) -> dict:
        return {"id": self.id, "source": self.source_id, "steps": [s.to_json() for s in self.steps]}

    @classmethod
    def from_json(cls, data: dict, flavor: str = EXEC) -> "ConcreteTestCase":
        steps = tuple(ResolvedStep(LabelKind(s["kind"]), s["label"], fragment_from_json(s, flavor))
                      for s in data["steps"])
        return cls(data["id"], data["source"], steps)


def instantiate(abstract: AbstractTestCase, table: MappingTable,
                group_for: Callable[[str, str], str] | None = None,
                model_hash: str | None = None) -> ConcreteTestCase:
    """Replace every step label of ``abstract`` by its resolved, substituted fragment.

    ``group_for(label, state_label)`` picks the lookup group; ``state_label`` is
    the step itself for states and the source state for transitions.
    """
    if model_hash is not None and model_hash != table.model_hash:
        raise HashMismatch(table.model_hash, model_hash)
    group_for = group_for or default_group_for(table)
    resolved = []
    state_label = abstract.steps[0].label if abstract.steps else ""
    for step in abstract.steps:
        if step.kind is LabelKind.STATE:
            state_label = step.label
        fragment = resolve(table, step.label, group_for(step.label, state_label))
        if fragment.todo:
            raise TodoFragment(step.label)
        resolved.append(ResolvedStep(step.kind, step.label,
                                     _substitute_fragment(fragment, step.ctx, step.label)))
    return ConcreteTestCase(abstract.id, abstract.id, tuple(resolved))


def instantiate_suite(suite: Sequence[AbstractTestCase], table: MappingTable,
                      group_for=None, model_hash: str | None = None) -> list[ConcreteTestCase]:
    return [instantiate(t, table, group_for, model_hash) for t in suite]


def emit_text(concrete: ConcreteTestCase) -> str:
    """Join the raw fragments of a concrete test, one per line, in step order."""
    parts = []
    for step in concrete.steps:
        if not isinstance(step.fragment, RawFragment):
            raise MbtError("emit_text needs a raw-flavored mapping table")
        parts.append(step.fragment.text)
    return "\n".join(parts)


def dumps_concrete(tests: Sequence[ConcreteTestCase]) -> str:
    return "".join(json.dumps(t.to_json(), sort_keys=True, separators=(",", ":"),
                              ensure_ascii=False) + "\n" for t in tests)


def read_concrete(path: str | Path, flavor: str = EXEC) -> list[ConcreteTestCase]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ConcreteTestCase.from_json(json.loads(ln), flavor) for ln in lines if ln.strip()]


__all__ = [
    "ChangeReport", "ConcreteTestCase", "DriverCommand", "ExecFragment", "Group", "MappingTable",
    "RawFragment", "ResolvedStep", "default_group_for", "emit_text", "instantiate",
    "instantiate_suite", "resolve", "scene_of", "todo_labels", "update_table",
]
