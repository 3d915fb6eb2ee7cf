"""Walk the whole pipeline on the bundled quiz-game model.

model -> abstract tests -> mapping table -> concrete tests -> run against the
in-process reference app. Run with ``python3 demos/01_end_to_end.py``.
"""

# %% load and flatten the model
from mbtkit.generator import generate_suite, parse_criterion
from mbtkit.mapping import MappingTable, instantiate_suite
from mbtkit.model_io import load_model, model_hash, validate
from mbtkit.runner import bundled_path, run_suite

model = load_model(bundled_path("reference.efsm"))
print(f"{model.name}: {len(model.states)} states, {len(model.transitions)} transitions")
print("validation findings:", validate(model).findings)

# %% generate 100 random walks that cover everything
criterion = parse_criterion("max_tests(100) && state_coverage(100) && transition_coverage(100)")
suite, ledger = generate_suite(model, criterion, seed=7)
print(f"{len(suite)} tests, state coverage {ledger.state_percent:.0f}%, "
      f"transition coverage {ledger.transition_percent:.0f}%")

# one test is just alternating labels
first = suite[0]
print(" -> ".join(s.label for s in first.steps[:9]), "...")

# %% turn labels into driver commands
table = MappingTable.load(bundled_path("reference_table.json"))
concrete = instantiate_suite(suite, table, model_hash=model_hash(model))
for step in concrete[0].steps[:4]:
    print(step.label, [c.to_json() for c in step.fragment.commands])

# %% run against the reference app
report = run_suite(concrete, jobs=4)
print(report.summary)
