"""Hierarchical model bundles and their flattening into a single EFSM."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path

from ..efsm import EfsmModel, State, VarDecl
from ..errors import CycleError, ModelError, NoExitError


@dataclass
class ModelBundle:
    models: dict[str, EfsmModel]
    main: str

    @property
    def main_model(self) -> EfsmModel:
        return self.models[self.main]

    def submodel_refs(self, name: str) -> list[str]:
        return [s.submodel for s in self.models[name].states if s.submodel]

    def check_hierarchy(self) -> None:
        """Raise unless every submodel reference resolves and the references form a DAG."""
        if self.main not in self.models:
            raise ModelError(f"main model {self.main!r} is not in the bundle")
        done: set[str] = set()

        def visit(name, path):
            if name in path:
                raise CycleError(path[path.index(name):] + [name])
            if name in done:
                return
            if name not in self.models:
                raise ModelError(f"submodel {name!r} referenced from {path[-1]!r} does not exist")
            for ref in self.submodel_refs(name):
                visit(ref, path + [name])
            done.add(name)

        for name in sorted(self.models):
            visit(name, [])


def _merge_variables(into: dict[str, VarDecl], extra) -> None:
    for decl in extra:
        known = into.get(decl.name)
        if known is None:
            into[decl.name] = decl
        elif known != decl:
            raise ModelError(f"conflicting declarations of variable {decl.name!r}")


def submodel_prefixes(model: EfsmModel) -> dict[str, str]:
    """Prefix used for each submodel state's copy: the submodel name, or
    ``Sub@v_State`` when the same submodel is referenced twice in one model."""
    counts = Counter(s.submodel for s in model.states if s.submodel)
    return {
        s.label: s.submodel if counts[s.submodel] == 1 else f"{s.submodel}@{s.label}"
        for s in model.states if s.submodel
    }


def flatten(bundle: ModelBundle) -> EfsmModel:
    """Replace every submodel state by a prefixed copy of its (flattened) submodel.

    Edges into the submodel state are redirected to the copy's start state and
    every EXIT state of the copy inherits the submodel state's outgoing edges.
    Copies of EXIT states stay EXIT only when the submodel state has no
    outgoing edges of its own.
    """
    bundle.check_hierarchy()
    memo: dict[str, EfsmModel] = {}

    def flat(name: str) -> EfsmModel:
        if name in memo:
            return memo[name]
        model = bundle.models[name]
        prefixes = submodel_prefixes(model)
        if not prefixes:
            memo[name] = model
            return model

        variables: dict[str, VarDecl] = {}
        _merge_variables(variables, model.variables)
        children: dict[str, tuple[str, EfsmModel, str, list[str]]] = {}
        for s in model.states:
            if not s.submodel:
                continue
            child = flat(s.submodel)
            _merge_variables(variables, child.variables)
            starts = [c.label for c in child.states if c.is_start]
            if len(starts) != 1:
                raise ModelError(f"submodel {s.submodel!r} has {len(starts)} start states")
            prefix = prefixes[s.label]
            exits = [f"{prefix}.{c.label}" for c in child.states if c.is_exit]
            if model.outgoing_map.get(s.label) and not exits:
                raise NoExitError(s.submodel, s.label)
            children[s.label] = (prefix, child, f"{prefix}.{starts[0]}", exits)

        states: list[State] = []
        for s in model.states:
            if not s.submodel:
                states.append(s)
                continue
            prefix, child, _, _ = children[s.label]
            keeps_exit = not model.outgoing_map.get(s.label)
            for c in child.states:
                states.append(State(f"{prefix}.{c.label}",
                                    is_start=s.is_start and c.is_start,
                                    is_exit=c.is_exit and keeps_exit))

        transitions = []
        for s in model.states:
            if s.submodel:
                prefix, child, _, _ = children[s.label]
                for t in child.transitions:
                    transitions.append(replace(t, source=f"{prefix}.{t.source}",
                                               target=f"{prefix}.{t.target}"))
        for t in model.transitions:
            target = children[t.target][2] if t.target in children else t.target
            sources = children[t.source][3] if t.source in children else [t.source]
            for source in sources:
                transitions.append(replace(t, source=source, target=target))

        memo[name] = EfsmModel(name, tuple(states), tuple(transitions),
                               tuple(variables.values()))
        return memo[name]

    return flat(bundle.main)


# -- loading ---------------------------------------------------------------


def _root_model(models: dict[str, EfsmModel]) -> str:
    referenced = {s.submodel for m in models.values() for s in m.states if s.submodel}
    roots = sorted(set(models) - referenced)
    if len(roots) != 1:
        raise ModelError(f"cannot pick a main model; candidates: {roots}")
    return roots[0]


def load_bundle(path: str | Path) -> ModelBundle:
    """Load a ``.efsm`` file, a ``.graphml`` file, or a directory of ``.graphml`` files."""
    from .dsl import parse_dsl
    from .graphml import parse_graphml_models

    path = Path(path)
    if path.is_dir():
        models: dict[str, EfsmModel] = {}
        for file in sorted(path.glob("*.graphml")):
            for m in parse_graphml_models(file.read_bytes(), default_name=file.stem):
                if m.name in models:
                    raise ModelError(f"model {m.name!r} defined twice")
                models[m.name] = m
        if not models:
            raise ModelError(f"no .graphml files in {path}")
        return ModelBundle(models, _root_model(models))
    if path.suffix == ".efsm":
        return parse_dsl(path.read_text(encoding="utf-8"))
    if path.suffix == ".graphml":
        models_list = parse_graphml_models(path.read_bytes(), default_name=path.stem)
        models = {m.name: m for m in models_list}
        return ModelBundle(models, _root_model(models))
    raise ModelError(f"unsupported model file {path} (expected .efsm or .graphml)")


def load_model(path: str | Path) -> EfsmModel:
    """Load and flatten a model from disk."""
    return flatten(load_bundle(path))
