"""Show how the packed R-tree prunes dominance work.

Generates a few hundred uncertain objects, scores one probe with brute
force and through the tree, and compares the number of elementary
dominance checks each needed.

Run:  python demos/02_index_pruning.py
"""

from streamdom import CheckCounter, dom_bruteforce, rdom_bruteforce
from streamdom.datagen import GeneratorConfig, generate
from streamdom.rtree import (
    bulk_load,
    dom_via_index,
    iter_leaves,
    rdom_via_index,
    tree_height,
)

objects = generate(GeneratorConfig(count=400, n_instances=5, dim=3, margin=160, seed=7))
tree = bulk_load(objects, degree=6)
print(
    f"tree over {tree.size} objects: height {tree_height(tree)}, "
    f"{len(list(iter_leaves(tree)))} leaves, fanout <= {tree.degree}"
)

probe = objects[123]
peers = [o for o in objects if o.id != probe.id]

brute = CheckCounter()
dom_b = dom_bruteforce(probe, peers, brute)
rdom_b = rdom_bruteforce(probe, peers, brute)

indexed = CheckCounter()
dom_i = dom_via_index(probe, tree, indexed)
rdom_i = rdom_via_index(probe, tree, indexed)

assert abs(dom_b - dom_i) <= 1e-9 and abs(rdom_b - rdom_i) <= 1e-9
print(f"\nprobe {probe.id}: dom={dom_i:.3f} rdom={rdom_i:.3f} (both routes agree)")
print(f"brute force : {brute.instance_checks:7d} instance tests")
print(
    f"via tree    : {indexed.instance_checks:7d} instance tests + "
    f"{indexed.mbr_checks} box classifications"
)
print(f"reduction   : {100 * (1 - indexed.total / brute.total):.1f}% fewer checks")
