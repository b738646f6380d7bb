"""
Edge and non-edge independence on graphs
========================================

Both relations are invariant and stationary. Only the edge relation survives
adding a clique predicate P.
"""

from fusionlab.classes import builtin_class
from fusionlab.closures import TripleConfig, check_indep_axioms, indep_eval
from fusionlab.structures import FiniteStructure

graphs, cliques = builtin_class("graphs"), builtin_class("clique-graphs")

# a path 0 - 1 - 2: the ends are non-adjacent over the middle
P3 = FiniteStructure.relational(graphs.language, range(3), {"E": {(0, 1), (1, 0), (1, 2), (2, 1)}})
cfg = TripleConfig.of(P3, [0], [2], [1])
print("edge:", indep_eval("edge", cfg), "| non-edge:", indep_eval("non-edge", cfg))

for rel in ("edge", "non-edge"):
    r = check_indep_axioms(rel, graphs, "full-existence", expansion=cliques, size_limit=3)
    print(f"{rel:8} full-existence: {r.label}")
    if r.witness:
        print("   forced:", r.witness["forced"])
