"""
A triangle-free graph from two hypergraph classes
=================================================

Each reduct of the fusion carries its own graph E1 or E2 next to a shared
ternary relation R. Pairs joined in both graphs form a triangle-free graph.
"""

from fusionlab import build_generic, check_extension_axioms, henson_reduct
from fusionlab.classes import fusion_class
from fusionlab.classes import builtin_class

# grow a finite piece of the generic fusion model
build = build_generic(fusion_class(), budget=25, ext_size=1, seed=0)
M = build.structure
print("points:", M.size, "| quiescent:", build.quiescent)

# keep only pairs that are edges in both reducts
G = henson_reduct(M)
E = G.relations["E"]
print("edges:", len(E) // 2)

# how close is the reduct to the generic triangle-free graph?
audit = check_extension_axioms(G, builtin_class("triangle-free"), 2)
print("2-extension realized:", audit.checked - len(audit.missing), "of", audit.checked)
