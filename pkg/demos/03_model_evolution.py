"""Keep a mapping table in step with a model that grows.

A new scene is added to a small model; ``update_table`` adds TODO templates for
the new labels only, and instantiation refuses to proceed until they are written.
"""

from mbtkit.errors import TodoFragment
from mbtkit.generator import generate_suite, parse_criterion
from mbtkit.mapping import MappingTable, instantiate_suite, todo_labels, update_table
from mbtkit.model_io import extract_labels, flatten, parse_dsl

V1 = """
model Shop {
    var cart: int = 0;
    state v_Browse start;
    state v_Cart exit;
    trans e_Add: v_Browse -> v_Browse do "cart = cart + 1;";
    trans e_OpenCart: v_Browse -> v_Cart guard "cart > 0";
}
"""

# v2 adds a checkout scene behind the cart
V2 = V1.replace("state v_Cart exit;", "state v_Cart; state v_Paid exit;").replace(
    "}", '    trans e_Pay: v_Cart -> v_Paid;\n}')

m1 = flatten(parse_dsl(V1))
table, report = update_table(MappingTable(flavor="raw"), extract_labels(m1))
print("v1 added:", report.added)

# pretend a tester wrote the fragments
for label, entry in table.groups["base"].entries.items():
    table.groups["base"].entries[label] = {"text": f"do('{label}')  # cart={{{{cart}}}}"}

m2 = flatten(parse_dsl(V2))
table2, report = update_table(table, extract_labels(m2))
print("v2 added:", report.added, "stale:", report.stale, "todo:", todo_labels(table2))

suite, _ = generate_suite(m2, parse_criterion("transition_coverage(100)"), seed=1)
try:
    instantiate_suite(suite, table2)
except TodoFragment as exc:
    print("instantiate stopped:", exc)

table2.groups["base"].entries["e_Pay"] = {"text": "do('pay')"}
table2.groups["base"].entries["v_Paid"] = {"text": "assert screen() == 'Paid'"}
concrete = instantiate_suite(suite, table2)
print(f"{len(concrete)} concrete tests; the first one reads:")
print("\n".join(s.fragment.text for s in concrete[0].steps))
