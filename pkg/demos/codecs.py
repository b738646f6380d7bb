"""
Encoding structures into other classes
======================================
"""

from fusionlab.interpretations import CODECS, get_codec, roundtrip_check
from fusionlab.structures import FiniteStructure
from fusionlab.classes import builtin_class

# encode a three-vertex path as a hypergraph-style structure
g = builtin_class("graphs").language
P3 = FiniteStructure.relational(g, range(3), {"E": {(0, 1), (1, 0), (1, 2), (2, 1)}})
codec = get_codec("hypergraph-pi")
T = codec.encode(P3)
print(T.sizes, sorted(T.relations["P"]))

# every codec should decode its own output back up to isomorphism
for name in CODECS:
    r = roundtrip_check(name, 3)
    print(f"{name:15} {r.counts()}")
