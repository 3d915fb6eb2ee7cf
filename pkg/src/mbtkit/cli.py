"""Command-line front end: validate, generate, labels, instantiate, run, report.

Exit codes: 0 success, 1 test failures, 2 usage or I/O errors, 3 validation
errors (bad model, incomplete mapping table, unsatisfiable criterion).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .context import Context
from .errors import DriverUnavailable, MbtError, StoreParseError
from .generator import default_criterion, generate_suite, parse_criterion, read_suite, write_suite
from .mapping import (
    EXEC,
    RAW,
    MappingTable,
    dumps_concrete,
    emit_text,
    instantiate_suite,
    read_concrete,
    todo_labels,
    update_table,
)
from .model_io import extract_labels, load_model, model_hash, validate
from .refsut.qtds import get_user, load_store
from .runner import DRIVERS, get_driver, load_config, parse_report, run_suite, write_report

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_USAGE = 2
EXIT_INVALID = 3

log = logging.getLogger("mbtkit")


class UsageError(Exception):
    pass


def meta_path(suite_path: str | Path) -> Path:
    """Sidecar file next to a suite holding its model hash and generation settings."""
    return Path(str(suite_path) + ".meta.json")


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False))


# -- subcommands -----------------------------------------------------------


def cmd_validate(args) -> int:
    model = load_model(args.model)
    report = validate(model)
    _emit({"model": model.name, "states": len(model.states),
           "transitions": len(model.transitions), **report.to_json()})
    return EXIT_OK if report.clean else EXIT_INVALID


def _initial_context(model, args) -> Context | None:
    if not args.qtds:
        if args.maturity:
            raise UsageError("--maturity needs --qtds")
        return None
    user = get_user(load_store(args.qtds), args.maturity, args.user_cursor)
    changes = {"userName": user.name, "maturity": user.maturity}
    ctx = model.initial_context()
    return ctx.updated({k: v for k, v in changes.items() if k in ctx})


def cmd_generate(args) -> int:
    model = load_model(args.model)
    report = validate(model)
    blocking = [f for f in report.findings if not f.kind.startswith("unreachable")]
    if blocking:
        _emit(report.to_json())
        return EXIT_INVALID
    try:
        criterion = parse_criterion(args.criteria) if args.criteria else default_criterion()
    except ValueError as exc:
        raise UsageError(f"--criteria: {exc}") from exc
    suite, ledger = generate_suite(model, criterion, args.seed, _initial_context(model, args))
    write_suite(args.out, suite)
    meta = {"model": str(args.model), "modelHash": model_hash(model), "seed": args.seed,
            "criteria": str(criterion), "tests": len(suite), "coverage": ledger.to_json()}
    meta_path(args.out).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n",
                                   encoding="utf-8")
    _emit({"out": str(args.out), "tests": len(suite), "coverage": ledger.to_json()})
    return EXIT_OK


def cmd_labels(args) -> int:
    inventory = extract_labels(load_model(args.model))
    if not args.table:
        if args.update:
            raise UsageError("--update needs --table")
        _emit(inventory.to_json())
        return EXIT_OK
    table_path = Path(args.table)
    if table_path.exists():
        table = MappingTable.load(table_path)
    elif args.update:
        table = MappingTable(flavor=args.flavor)
    else:
        raise UsageError(f"--table: {table_path} does not exist (use --update to create it)")
    new, changes = update_table(table, inventory, args.group)
    result = {**changes.to_json(), "todo": todo_labels(new)}
    if args.update:
        if new.dumps() != (table_path.read_text(encoding="utf-8") if table_path.exists() else None):
            new.save(table_path)
        _emit(result)
        return EXIT_OK
    # check mode: report without writing
    _emit(result)
    return EXIT_INVALID if changes.added or result["todo"] or changes.hash_changed else EXIT_OK


def cmd_instantiate(args) -> int:
    table = MappingTable.load(args.table)
    wanted = EXEC if args.mode == "exec" else RAW
    if table.flavor != wanted:
        raise MbtError(f"--mode {args.mode} needs a {wanted}-flavored table, "
                       f"{args.table} is {table.flavor}")
    if args.model:
        expected_hash = model_hash(load_model(args.model))
    elif meta_path(args.suite).exists():
        expected_hash = json.loads(meta_path(args.suite).read_text(encoding="utf-8"))["modelHash"]
    else:
        log.warning("no model hash available for %s; skipping the table hash check", args.suite)
        expected_hash = None
    concrete = instantiate_suite(read_suite(args.suite), table, model_hash=expected_hash)
    out = Path(args.out)
    if args.mode == "exec":
        out.write_text(dumps_concrete(concrete), encoding="utf-8")
    else:
        out.mkdir(parents=True, exist_ok=True)
        for test in concrete:
            (out / f"test_{test.id:04d}.txt").write_text(emit_text(test) + "\n", encoding="utf-8")
    _emit({"out": str(out), "tests": len(concrete), "mode": args.mode})
    return EXIT_OK


def cmd_run(args) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    driver = get_driver(args.driver)
    try:
        config = load_config(args.config)
    except ValueError as exc:
        raise UsageError(f"--config: {exc}") from exc
    tests = read_concrete(args.concrete)
    report = run_suite(tests, driver, config, args.jobs)
    if args.report:
        Path(args.report).write_bytes(write_report(report, args.format))
    failed = [r for r in report.results if r.verdict != "passed"]
    for r in failed:
        print(f"test {r.id}: {r.verdict} at step {r.failing_step} ({r.label})", file=sys.stderr)
    _emit(report.summary)
    return EXIT_OK if not failed else EXIT_FAILURES


def cmd_report(args) -> int:
    report = parse_report(Path(args.file).read_bytes())
    data = write_report(report, args.format)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    return EXIT_OK


# -- argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mbtkit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a model for structural and type problems")
    s.add_argument("model")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("generate", help="generate abstract test cases by random walks")
    s.add_argument("model")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--criteria", help="e.g. 'max_tests(100) && transition_coverage(100)'")
    s.add_argument("--out", required=True)
    s.add_argument("--qtds", help="user store used to seed userName and maturity")
    s.add_argument("--maturity", choices=("new", "intermediate", "advanced"))
    s.add_argument("--user-cursor", type=int, default=0)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("labels", help="list labels or bring a mapping table up to date")
    s.add_argument("model")
    s.add_argument("--table")
    s.add_argument("--update", action="store_true")
    s.add_argument("--flavor", choices=(EXEC, RAW), default=EXEC,
                   help="flavor of a newly created table")
    s.add_argument("--group", default="base", help="group receiving new TODO entries")
    s.set_defaults(func=cmd_labels)

    s = sub.add_parser("instantiate", help="turn abstract tests into concrete ones")
    s.add_argument("suite")
    s.add_argument("--table", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mode", choices=("exec", "emit"), default="exec")
    s.add_argument("--model", help="model to hash-check the table against")
    s.set_defaults(func=cmd_instantiate)

    s = sub.add_parser("run", help="execute concrete tests against a driver")
    s.add_argument("concrete")
    s.add_argument("--driver", default="refsut", help=f"one of: {', '.join(sorted(DRIVERS))}")
    s.add_argument("--config")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--report")
    s.add_argument("--format", choices=("json", "junit"), default="json")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("report", help="convert a JSON run report")
    s.add_argument("file")
    s.add_argument("--format", choices=("json", "junit"), default="json")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mbtkit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError, DriverUnavailable, StoreParseError) as exc:
        print(f"mbtkit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MbtError as exc:
        print(f"mbtkit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
