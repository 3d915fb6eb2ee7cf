"""Switch on each seeded fault of the reference app and see which tests catch it."""

from collections import Counter

from mbtkit.generator import generate_suite, parse_criterion
from mbtkit.mapping import MappingTable, instantiate_suite
from mbtkit.model_io import load_model, model_hash
from mbtkit.refsut import FAULT_FIELDS, FAULTS
from mbtkit.runner import bundled_path, run_suite

model = load_model(bundled_path("reference.efsm"))
suite, _ = generate_suite(
    model, parse_criterion("max_tests(100) && state_coverage(100) && transition_coverage(100)"),
    seed=7)
concrete = instantiate_suite(suite, MappingTable.load(bundled_path("reference_table.json")),
                             model_hash=model_hash(model))

for fault in FAULTS:
    report = run_suite(concrete, config={"faults": [fault]})
    failed = [r for r in report.results if r.verdict == "failed"]
    where = Counter(r.label for r in failed)
    print(f"{fault}  (perturbs {', '.join(sorted(FAULT_FIELDS[fault]))})")
    print(f"  {len(failed)} failing tests, at {dict(where)}")
    if failed:
        # the first failure, the way a tester would read it
        r = failed[0]
        print(f"  e.g. test {r.id} step {r.failing_step}: {r.diff}")
