"""Abstract test generation by seeded random traversal under stopping criteria."""

from __future__ import annotations

import json
import logging
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .context import Context
from .efsm import EfsmModel, LabelKind, apply_transition, enabled_transitions, guard_values
from .errors import BudgetExhausted, DeadEnd, GuardTrap, UnknownLabel
from .model_io.inventory import reachable

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
DEFAULT_MAX_STEPS = 200
DEFAULT_MAX_TESTS = 100
DEFAULT_BUDGET = 10_000
TRAP_LIMIT = 100


# -- randomness ------------------------------------------------------------


def _splitmix_finalize(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix64(seed: int, index: int) -> int:
    """Derive the seed of test ``index`` from a suite seed (SplitMix64 step)."""
    return _splitmix_finalize((seed + (index + 1) * 0x9E3779B97F4A7C15) & MASK64)


class SplitMix64:
    """Tiny portable PRNG so that suites are reproducible across platforms."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        return _splitmix_finalize(self.state)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` (Lemire's multiply-shift with rejection)."""
        if n <= 0:
            raise ValueError("n must be positive")
        threshold = (1 << 64) % n
        while True:
            product = self.next_u64() * n
            if (product & MASK64) >= threshold:
                return product >> 64


# -- stopping criteria -----------------------------------------------------


class StoppingCriterion:
    def satisfied(self, n_tests: int, ledger: "CoverageLedger") -> bool:
        raise NotImplementedError

    def parts(self) -> Iterable["StoppingCriterion"]:
        yield self

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    @property
    def max_steps(self) -> int:
        bounds = [p.n for p in self.parts() if isinstance(p, MaxStepsPerTest)]
        return min(bounds) if bounds else DEFAULT_MAX_STEPS

    def validate(self) -> None:
        parts = list(self.parts())
        for p in parts:
            if isinstance(p, (StateCoverage, TransitionCoverage)) and not 0 < p.target <= 100:
                raise ValueError(f"coverage target must be in (0, 100], got {p.target}")
            if isinstance(p, (MaxTestCases, MaxStepsPerTest)) and p.n < 1:
                raise ValueError(f"{type(p).__name__} needs a positive count")
        if not any(isinstance(p, (StateCoverage, TransitionCoverage, MaxTestCases)) for p in parts):
            raise ValueError("a stopping criterion needs a coverage or test-count condition")


@dataclass(frozen=True)
class StateCoverage(StoppingCriterion):
    target: float = 100

    def satisfied(self, n_tests, ledger):
        return ledger.state_percent >= self.target

    def __str__(self):
        return f"state_coverage({self.target:g})"


@dataclass(frozen=True)
class TransitionCoverage(StoppingCriterion):
    target: float = 100

    def satisfied(self, n_tests, ledger):
        return ledger.transition_percent >= self.target

    def __str__(self):
        return f"transition_coverage({self.target:g})"


@dataclass(frozen=True)
class MaxTestCases(StoppingCriterion):
    n: int = DEFAULT_MAX_TESTS

    def satisfied(self, n_tests, ledger):
        return n_tests >= self.n

    def __str__(self):
        return f"max_tests({self.n})"


@dataclass(frozen=True)
class MaxStepsPerTest(StoppingCriterion):
    """Per-test length bound; it never stops the suite by itself."""

    n: int = DEFAULT_MAX_STEPS

    def satisfied(self, n_tests, ledger):
        return True

    def __str__(self):
        return f"max_steps({self.n})"


@dataclass(frozen=True)
class And(StoppingCriterion):
    terms: tuple

    def satisfied(self, n_tests, ledger):
        return all(t.satisfied(n_tests, ledger) for t in self.terms)

    def parts(self):
        for t in self.terms:
            yield from t.parts()

    def __str__(self):
        return " && ".join(f"({t})" if isinstance(t, Or) else str(t) for t in self.terms)


@dataclass(frozen=True)
class Or(StoppingCriterion):
    terms: tuple

    def satisfied(self, n_tests, ledger):
        # per-test bounds are not stopping conditions, so they cannot satisfy an Or
        live = [t for t in self.terms if not isinstance(t, MaxStepsPerTest)]
        return any(t.satisfied(n_tests, ledger) for t in live)

    def parts(self):
        for t in self.terms:
            yield from t.parts()

    def __str__(self):
        return " || ".join(str(t) for t in self.terms)


_CRITERIA = {
    "state_coverage": (StateCoverage, float),
    "transition_coverage": (TransitionCoverage, float),
    "edge_coverage": (TransitionCoverage, float),
    "vertex_coverage": (StateCoverage, float),
    "max_tests": (MaxTestCases, int),
    "max_steps": (MaxStepsPerTest, int),
}
_CRIT_TOKEN = re.compile(r"\s*(?:(&&|\|\||\(|\))|([a-z_]+)(?:\s*\(\s*([0-9.]*)\s*\))?)")


def parse_criterion(text: str) -> StoppingCriterion:
    """Parse e.g. ``max_tests(100) && state_coverage(100) && transition_coverage(100)``."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _CRIT_TOKEN.match(text, pos)
        if m is None:
            raise ValueError(f"cannot parse stopping criterion near {text[pos:]!r}")
        if m.group(1):
            tokens.append(m.group(1))
        else:
            name, arg = m.group(2), m.group(3)
            if name not in _CRITERIA:
                raise ValueError(f"unknown stopping criterion {name!r}")
            cls, conv = _CRITERIA[name]
            tokens.append(cls(conv(arg)) if arg else cls())
        pos = m.end()
    tokens.append(None)
    i = 0

    def parse_or():
        nonlocal i
        terms = [parse_and()]
        while tokens[i] == "||":
            i += 1
            terms.append(parse_and())
        return terms[0] if len(terms) == 1 else Or(tuple(terms))

    def parse_and():
        nonlocal i
        terms = [parse_atom()]
        while tokens[i] == "&&":
            i += 1
            terms.append(parse_atom())
        return terms[0] if len(terms) == 1 else And(tuple(terms))

    def parse_atom():
        nonlocal i
        tok = tokens[i]
        i += 1
        if tok == "(":
            inner = parse_or()
            if tokens[i] != ")":
                raise ValueError("missing ')' in stopping criterion")
            i += 1
            return inner
        if isinstance(tok, StoppingCriterion):
            return tok
        raise ValueError(f"unexpected {tok!r} in stopping criterion")

    crit = parse_or()
    if tokens[i] is not None:
        raise ValueError(f"unexpected {tokens[i]!r} in stopping criterion")
    crit.validate()
    return crit


def default_criterion() -> StoppingCriterion:
    return And((MaxTestCases(DEFAULT_MAX_TESTS), StateCoverage(100), TransitionCoverage(100)))


# -- test cases and coverage -----------------------------------------------


@dataclass(frozen=True)
class Step:
    kind: LabelKind
    label: str
    ctx: Context

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "label": self.label, "ctx": self.ctx.to_json()}


@dataclass(frozen=True)
class AbstractTestCase:
    id: int
    seed: int
    steps: tuple[Step, ...]

    @property
    def state_labels(self) -> list[str]:
        return [s.label for s in self.steps if s.kind is LabelKind.STATE]

    def edges(self) -> list[tuple[str, str, str]]:
        """(source, label, target) of every transition step."""
        return [(self.steps[i - 1].label, self.steps[i].label, self.steps[i + 1].label)
                for i in range(1, len(self.steps), 2)]

    def to_json(self) -> dict:
        return {"id": self.id, "seed": self.seed, "steps": [s.to_json() for s in self.steps]}

    @classmethod
    def from_json(cls, data: dict) -> "AbstractTestCase":
        steps = tuple(Step(LabelKind(s["kind"]), s["label"], Context(s["ctx"]))
                      for s in data["steps"])
        return cls(data["id"], data["seed"], steps)


@dataclass
class CoverageLedger:
    reachable_states: frozenset
    reachable_transitions: frozenset
    visited_states: set = field(default_factory=set)
    traversed_transitions: set = field(default_factory=set)

    @classmethod
    def for_model(cls, model: EfsmModel) -> "CoverageLedger":
        states, edges = reachable(model)
        return cls(frozenset(states), frozenset(edges))

    @property
    def state_percent(self) -> float:
        if not self.reachable_states:
            return 0.0
        return 100.0 * len(self.visited_states & self.reachable_states) / len(self.reachable_states)

    @property
    def transition_percent(self) -> float:
        if not self.reachable_transitions:
            return 0.0
        hit = self.traversed_transitions & self.reachable_transitions
        return 100.0 * len(hit) / len(self.reachable_transitions)

    def record(self, test: AbstractTestCase) -> None:
        self.visited_states.update(test.state_labels)
        self.traversed_transitions.update(test.edges())

    def uncovered(self) -> tuple[list[str], list[str]]:
        states = sorted(self.reachable_states - self.visited_states)
        edges = sorted(f"{lbl} ({src} -> {dst})" for src, lbl, dst
                       in self.reachable_transitions - self.traversed_transitions)
        return states, edges

    def to_json(self) -> dict:
        return {
            "statePercent": self.state_percent,
            "transitionPercent": self.transition_percent,
            "reachableStates": len(self.reachable_states),
            "reachableTransitions": len(self.reachable_transitions),
            "visitedStates": len(self.visited_states & self.reachable_states),
            "traversedTransitions": len(self.traversed_transitions & self.reachable_transitions),
        }


def measure_coverage(suite: Sequence[AbstractTestCase], model: EfsmModel) -> CoverageLedger:
    """Recompute coverage of ``suite`` from scratch."""
    ledger = CoverageLedger.for_model(model)
    triples = {t.key for t in model.transitions}
    for test in suite:
        for label in test.state_labels:
            if label not in model.state_map:
                raise UnknownLabel(label)
        for edge in test.edges():
            if edge not in triples:
                raise UnknownLabel(f"{edge[1]} ({edge[0]} -> {edge[2]})")
        ledger.record(test)
    return ledger


# -- generation ------------------------------------------------------------


def generate_one(model: EfsmModel, seed: int, max_steps: int = DEFAULT_MAX_STEPS,
                 initial_ctx: Context | None = None, test_id: int = 0) -> AbstractTestCase:
    """Random walk from the start state.

    The walk stops on entering an EXIT state after at least one transition, or
    after ``max_steps`` transitions. Raises DeadEnd at a non-exit state with no
    enabled transition.
    """
    rng = SplitMix64(seed)
    ctx = initial_ctx if initial_ctx is not None else model.initial_context()
    current = model.start
    steps = [Step(LabelKind.STATE, current, ctx)]
    taken = 0
    while taken < max_steps:
        options = enabled_transitions(model, current, ctx)
        if not options:
            if model.state(current).is_exit:
                break
            raise DeadEnd(current, guard_values(model, current, ctx))
        t = options[rng.below(len(options))]
        current, ctx = apply_transition(model, t, ctx)
        steps.append(Step(LabelKind.TRANSITION, t.label, ctx))
        steps.append(Step(LabelKind.STATE, current, ctx))
        taken += 1
        if model.state(current).is_exit:
            break
    return AbstractTestCase(test_id, seed, tuple(steps))


def generate_suite(model: EfsmModel, criterion: StoppingCriterion | None = None, seed: int = 0,
                   initial_ctx: Context | None = None, budget: int = DEFAULT_BUDGET,
                   ) -> tuple[list[AbstractTestCase], CoverageLedger]:
    """Generate tests until ``criterion`` holds.

    Attempt ``k`` uses seed ``mix64(seed, k)``; dead-end attempts are discarded.
    Raises BudgetExhausted after ``budget`` accepted tests and GuardTrap after
    100 consecutive dead ends.
    """
    criterion = criterion or default_criterion()
    criterion.validate()
    ledger = CoverageLedger.for_model(model)
    unreachable = len(model.states) - len(ledger.reachable_states)
    if unreachable:
        log.warning("%d unreachable state(s) excluded from coverage", unreachable)
    max_steps = criterion.max_steps
    suite: list[AbstractTestCase] = []
    attempt = 0
    aborts = 0
    while not criterion.satisfied(len(suite), ledger):
        if len(suite) >= budget:
            raise BudgetExhausted(*ledger.uncovered())
        test_seed = mix64(seed, attempt)
        attempt += 1
        try:
            test = generate_one(model, test_seed, max_steps, initial_ctx, test_id=len(suite))
        except DeadEnd as exc:
            aborts += 1
            log.debug("discarding attempt %d: %s", attempt - 1, exc)
            if aborts >= TRAP_LIMIT:
                raise GuardTrap(f"{aborts} consecutive dead ends; last: {exc}") from exc
            continue
        aborts = 0
        suite.append(test)
        ledger.record(test)
    return suite, ledger


# -- suite files -----------------------------------------------------------


def dumps_suite(suite: Iterable[AbstractTestCase]) -> str:
    return "".join(json.dumps(t.to_json(), sort_keys=True, separators=(",", ":"),
                              ensure_ascii=False) + "\n" for t in suite)


def write_suite(path: str | Path, suite: Iterable[AbstractTestCase]) -> None:
    Path(path).write_text(dumps_suite(suite), encoding="utf-8")


def read_suite(path: str | Path) -> list[AbstractTestCase]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [AbstractTestCase.from_json(json.loads(line)) for line in lines if line.strip()]
