"""Execute concrete tests against a driver and report the verdicts.

A driver speaks a small request/response protocol: open a session, apply
commands one at a time, close the session. Every test gets a fresh session,
so tests cannot leak state into each other and may run in parallel.
"""

from __future__ import annotations

import json
import logging
import threading
import xml.etree.ElementTree as ET
from abc import ABC, abstractmethod
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import DriverUnavailable, MbtError, SessionError
from .mapping import ConcreteTestCase, ExecFragment
from .refsut import app as refapp
from .refsut.qtds import get_user, load_store

log = logging.getLogger(__name__)

PASSED = "passed"
FAILED = "failed"
ERRORED = "errored"
VERDICTS = (PASSED, FAILED, ERRORED)


# -- drivers ---------------------------------------------------------------


class DriverContract(ABC):
    """Synchronous command channel to a system under test."""

    name = ""

    @abstractmethod
    def start_session(self, config: dict) -> Any:
        ...

    @abstractmethod
    def apply(self, session: Any, command: str, args: dict) -> refapp.Response:
        ...

    @abstractmethod
    def end_session(self, session: Any) -> None:
        ...


@dataclass
class RefSutSession:
    state: refapp.AppState
    faults: frozenset


class RefSutDriver(DriverContract):
    """Drives the in-process reference SUT.

    Config keys: ``baseState`` (an access scene, default Welcome), ``faults``
    (list of fault names), ``qtdsPath`` (user store; default the bundled one),
    ``maturity`` and ``userCursor`` (which dummy user the session logs in as)
    and an opaque ``profile`` string that this driver ignores.
    """

    name = "refsut"

    def __init__(self):
        self._stores: dict[str, tuple] = {}
        self._lock = threading.Lock()

    def _store(self, path: str) -> tuple:
        with self._lock:
            if path not in self._stores:
                self._stores[path] = load_store(path)
            return self._stores[path]

    def start_session(self, config: dict) -> RefSutSession:
        try:
            users = self._store(str(config.get("qtdsPath") or bundled_path("qtds_users.json")))
            user = get_user(users, config.get("maturity"), int(config.get("userCursor", 0)))
            state = refapp.initial_state(users, user, config.get("baseState", refapp.WELCOME))
        except (MbtError, ValueError) as exc:
            raise SessionError(str(exc)) from exc
        return RefSutSession(state, frozenset(config.get("faults", ())))

    def apply(self, session: RefSutSession, command: str, args: dict) -> refapp.Response:
        session.state, response = refapp.handle(session.state, command, args, session.faults)
        return response

    def end_session(self, session: RefSutSession) -> None:
        pass


DRIVERS: dict[str, type[DriverContract]] = {"refsut": RefSutDriver}


def get_driver(name: str) -> DriverContract:
    try:
        return DRIVERS[name]()
    except KeyError:
        raise DriverUnavailable(f"unknown driver {name!r}; available: {', '.join(sorted(DRIVERS))}")


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("mbtkit") / "data" / name))


def load_config(path: str | Path | None) -> dict:
    """Read a driver config file; a relative ``qtdsPath`` is taken relative to the file."""
    if path is None:
        return {}
    path = Path(path)
    config = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(config, dict):
        raise ValueError("driver config must be a JSON object")
    unknown = set(config.get("faults", ())) - set(refapp.FAULTS)
    if unknown:
        raise ValueError(f"unknown fault(s): {', '.join(sorted(unknown))}")
    qtds = config.get("qtdsPath")
    if qtds and not Path(qtds).is_absolute():
        config["qtdsPath"] = str(path.parent / qtds)
    return config


# -- reports ---------------------------------------------------------------


@dataclass
class TestResult:
    __test__ = False  # not a pytest class

    id: int
    verdict: str
    failing_step: int | None = None
    label: str | None = None
    diff: dict = field(default_factory=dict)
    error: str | None = None
    trace: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"id": self.id, "verdict": self.verdict, "failingStep": self.failing_step,
                "label": self.label, "diff": self.diff, "error": self.error, "trace": self.trace}

    @classmethod
    def from_json(cls, data: dict) -> "TestResult":
        return cls(data["id"], data["verdict"], data.get("failingStep"), data.get("label"),
                   data.get("diff") or {}, data.get("error"), list(data.get("trace") or []))


@dataclass
class TestReport:
    __test__ = False

    results: list[TestResult] = field(default_factory=list)

    @property
    def summary(self) -> dict:
        counts = {v: 0 for v in VERDICTS}
        for r in self.results:
            counts[r.verdict] += 1
        return {"total": len(self.results), **counts}

    @property
    def verdicts(self) -> list[str]:
        return [r.verdict for r in self.results]

    @property
    def all_passed(self) -> bool:
        return all(r.verdict == PASSED for r in self.results)

    def to_json(self) -> dict:
        return {"summary": self.summary, "tests": [r.to_json() for r in self.results]}

    @classmethod
    def from_json(cls, data: dict) -> "TestReport":
        return cls([TestResult.from_json(t) for t in data.get("tests", [])])


def _diff_text(result: TestResult) -> str:
    lines = [f"step {result.failing_step} ({result.label})"]
    for key, d in sorted(result.diff.items()):
        lines.append(f"  {key}: expected {d['expected']!r}, actual {d['actual']!r}")
    if result.error:
        lines.append(f"  error: {result.error}")
    return "\n".join(lines)


def write_report(report: TestReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (json.dumps(report.to_json(), sort_keys=True, indent=2, ensure_ascii=False)
                + "\n").encode("utf-8")
    if fmt != "junit":
        raise ValueError(f"unknown report format {fmt!r}")
    s = report.summary
    suite = ET.Element("testsuite", name="mbtkit", tests=str(s["total"]),
                       failures=str(s[FAILED]), errors=str(s[ERRORED]))
    for r in report.results:
        case = ET.SubElement(suite, "testcase", classname="mbtkit.suite", name=f"test_{r.id:04d}")
        if r.verdict != PASSED:
            tag = "failure" if r.verdict == FAILED else "error"
            node = ET.SubElement(case, tag, message=f"{r.label}: {r.error or 'expectation mismatch'}")
            node.text = _diff_text(r)
    ET.indent(suite)
    return ET.tostring(suite, encoding="utf-8", xml_declaration=True) + b"\n"


def parse_report(data: bytes | str) -> TestReport:
    return TestReport.from_json(json.loads(data))


# -- execution -------------------------------------------------------------


def run_test(driver: DriverContract, config: dict, test: ConcreteTestCase) -> TestResult:
    """Run one test in a fresh session; stop at the first failing step."""
    try:
        session = driver.start_session(config)
    except Exception as exc:
        return TestResult(test.id, ERRORED, error=f"session could not start: {exc}")
    trace = []
    try:
        for index, step in enumerate(test.steps):
            if not isinstance(step.fragment, ExecFragment):
                raise SessionError("run needs exec-flavored fragments")
            for cmd in step.fragment.commands:
                try:
                    response = driver.apply(session, cmd.name, dict(cmd.args))
                except Exception as exc:
                    trace.append({"step": index, "label": step.label, "command": cmd.name,
                                  "args": dict(cmd.args), "status": "Error", "fields": {}})
                    return TestResult(test.id, ERRORED, index, step.label,
                                      error=f"driver raised {type(exc).__name__}: {exc}",
                                      trace=trace)
                trace.append({"step": index, "label": step.label, "command": cmd.name,
                              "args": dict(cmd.args), "status": response.status,
                              "fields": dict(response.fields)})
                expect = dict(cmd.expect or {})
                observed = dict(response.fields, status=response.status)
                expect.setdefault("status", refapp.OK)
                diff = {k: {"expected": v, "actual": observed.get(k)}
                        for k, v in expect.items() if observed.get(k) != v}
                if diff:
                    return TestResult(test.id, FAILED, index, step.label, diff,
                                      response.error, trace)
    except SessionError as exc:
        return TestResult(test.id, ERRORED, error=str(exc), trace=trace)
    finally:
        try:
            driver.end_session(session)
        except Exception:
            log.warning("end_session failed for test %s", test.id, exc_info=True)
    return TestResult(test.id, PASSED, trace=trace)


def run_suite(tests: Sequence[ConcreteTestCase], driver: DriverContract | str = "refsut",
              config: dict | None = None, jobs: int = 1) -> TestReport:
    """Run every test, ``jobs`` at a time; results are reported in test-id order."""
    if isinstance(driver, str):
        driver = get_driver(driver)
    config = config or {}
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    if jobs == 1:
        results = [run_test(driver, config, t) for t in tests]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda t: run_test(driver, config, t), tests))
    return TestReport(sorted(results, key=lambda r: r.id))


__all__ = [
    "DRIVERS", "DriverContract", "RefSutDriver", "TestReport", "TestResult", "get_driver",
    "load_config", "parse_report", "run_suite", "run_test", "write_report",
]
