"""Bulk-loaded R-tree over object bounding boxes with dominance pruning.

The tree is rebuilt per time slot (sort-tile-recursive packing, which keeps
construction deterministic and overlap low) and queried read-only. Scoring a
probe object walks the tree in rounds: a target set of entries is classified
against the probe box in one vectorised comparison, completely dominated
subtrees contribute their object count, partially dominated ones descend,
and missing ones are pruned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dominance import CheckCounter, DominanceClass
from .errors import ConsistencyError, DimensionError, ParameterError
from .model import MBR, UncertainObject


class _Node:
    __slots__ = (
        "lo",
        "hi",
        "entries",
        "child_lo",
        "child_hi",
        "count",
        "is_leaf",
        "obj_pos",
    )

    def __init__(self, entries: Sequence, is_leaf: bool):
        self.entries = tuple(entries)
        self.is_leaf = is_leaf
        self.obj_pos: np.ndarray | None = None  # leaf-order slots, set by bulk_load
        if is_leaf:
            boxes_lo = np.array([obj.mbr.lo for obj in entries], dtype=float)
            boxes_hi = np.array([obj.mbr.hi for obj in entries], dtype=float)
            self.count = len(entries)
        else:
            boxes_lo = np.array([nd.lo for nd in entries], dtype=float)
            boxes_hi = np.array([nd.hi for nd in entries], dtype=float)
            self.count = sum(nd.count for nd in entries)
        self.child_lo = boxes_lo
        self.child_hi = boxes_hi
        self.lo = boxes_lo.min(axis=0)
        self.hi = boxes_hi.max(axis=0)

    @property
    def mbr(self) -> MBR:
        return MBR(tuple(self.lo), tuple(self.hi))


@dataclass(frozen=True, eq=False)
class RTree:
    """Read-only packed R-tree; ``root`` is None for the empty tree.

    When every indexed object has the same instance count, the instance
    tensors are also kept stacked in leaf order (``obj_coords``/``obj_probs``)
    so batched queries can gather them without re-stacking.
    """

    degree: int
    root: _Node | None
    size: int
    dim: int
    ids: frozenset[int]
    obj_coords: np.ndarray | None = None
    obj_probs: np.ndarray | None = None


def _tile(indices: np.ndarray, centers: np.ndarray, cap: int, axis: int) -> list[np.ndarray]:
    """Sort-tile-recursive grouping into ceil(n/cap) runs of at most cap."""
    n = len(indices)
    if n <= cap:
        return [indices]
    order = indices[np.argsort(centers[indices, axis], kind="stable")]
    remaining = centers.shape[1] - axis
    if remaining <= 1:
        return [order[i : i + cap] for i in range(0, n, cap)]
    pages = math.ceil(n / cap)
    slabs = math.ceil(pages ** (1.0 / remaining) - 1e-12)
    while slabs**remaining < pages:
        slabs += 1
    slab_size = slabs ** (remaining - 1) * cap
    groups: list[np.ndarray] = []
    for i in range(0, n, slab_size):
        groups.extend(_tile(order[i : i + slab_size], centers, cap, axis + 1))
    return groups


def _even_out_tail(groups: list[np.ndarray], cap: int) -> list[np.ndarray]:
    # STR leaves at most one short trailing run; rebalance it with its
    # predecessor so every non-root node meets the ceil(cap/2) fill bound.
    min_fill = (cap + 1) // 2
    if len(groups) >= 2 and len(groups[-1]) < min_fill:
        merged = np.concatenate([groups[-2], groups[-1]])
        half = (len(merged) + 1) // 2
        groups[-2], groups[-1] = merged[:half], merged[half:]
    return groups


def bulk_load(objects: Sequence[UncertainObject], degree: int) -> RTree:
    """Pack objects into an R-tree bottom-up; empty input gives an empty tree."""
    if degree < 2:
        raise ParameterError(f"tree degree {degree} must be >= 2")
    objs = list(objects)
    if not objs:
        return RTree(degree=degree, root=None, size=0, dim=0, ids=frozenset())
    dims = {obj.dim for obj in objs}
    if len(dims) != 1:
        raise DimensionError(f"objects mix dimensions: {sorted(dims)}")
    ids = [obj.id for obj in objs]
    if len(set(ids)) != len(ids):
        raise ConsistencyError("duplicate object ids in bulk load input")

    lo = np.array([obj.mbr.lo for obj in objs], dtype=float)
    hi = np.array([obj.mbr.hi for obj in objs], dtype=float)
    centers = (lo + hi) / 2.0
    groups = _even_out_tail(_tile(np.arange(len(objs)), centers, degree, 0), degree)
    level: list[_Node] = [_Node([objs[i] for i in g], is_leaf=True) for g in groups]

    leaves = level
    while len(level) > 1:
        centers = np.array([(nd.lo + nd.hi) / 2.0 for nd in level])
        groups = _even_out_tail(_tile(np.arange(len(level)), centers, degree, 0), degree)
        level = [_Node([level[i] for i in g], is_leaf=False) for g in groups]

    obj_coords = obj_probs = None
    counts = {obj.n_instances for obj in objs}
    if len(counts) == 1:
        pos = 0
        stacked_coords = []
        stacked_probs = []
        for leaf in leaves:
            leaf.obj_pos = np.arange(pos, pos + len(leaf.entries))
            pos += len(leaf.entries)
            for obj in leaf.entries:
                stacked_coords.append(obj.coords_matrix)
                stacked_probs.append(obj.probs_vector)
        obj_coords = np.stack(stacked_coords)
        obj_probs = np.stack(stacked_probs)

    return RTree(
        degree=degree,
        root=level[0],
        size=len(objs),
        dim=objs[0].dim,
        ids=frozenset(ids),
        obj_coords=obj_coords,
        obj_probs=obj_probs,
    )


def classify_mbr_dominance(a: MBR, b: MBR) -> DominanceClass:
    """Three-way box dominance with ``a`` as the dominator.

    Complete and missing are claimed only under conditions sufficient for
    dominance probability exactly 1 or exactly 0; everything else is partial
    and must be resolved at a finer level.
    """
    if a.dim != b.dim:
        raise DimensionError(f"box dimensions differ: {a.dim} vs {b.dim}")
    a_hi = np.asarray(a.hi)
    a_lo = np.asarray(a.lo)
    b_lo = np.asarray(b.lo)
    b_hi = np.asarray(b.hi)
    if (a_hi <= b_lo).all() and (a_hi < b_lo).any():
        return DominanceClass.COMPLETE
    if (a_lo > b_hi).any() or (a_lo >= b_hi).all():
        return DominanceClass.MISSING
    return DominanceClass.PARTIAL


def _classify_batch(
    probe_lo: np.ndarray,
    probe_hi: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    probe_is_dominator: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised classify of the probe box against (C, d) entry boxes.

    Returns boolean (complete, partial) masks; missing is the complement.
    """
    if probe_is_dominator:
        complete = (probe_hi <= lo).all(axis=1) & (probe_hi < lo).any(axis=1)
        missing = (probe_lo > hi).any(axis=1) | (probe_lo >= hi).all(axis=1)
    else:
        complete = (hi <= probe_lo).all(axis=1) & (hi < probe_lo).any(axis=1)
        missing = (lo > probe_hi).any(axis=1) | (lo >= probe_hi).all(axis=1)
    return complete, ~(complete | missing)


def _batch_pair_prob(
    probe: UncertainObject,
    others: list[UncertainObject],
    probe_is_dominator: bool,
    counter: CheckCounter | None,
) -> float:
    """Exact dominance mass between the probe and a batch of objects.

    Groups by instance count so each group is one vectorised comparison;
    equivalent to summing per-pair probabilities.
    """
    total = 0.0
    by_n: dict[int, list[UncertainObject]] = {}
    for obj in others:
        by_n.setdefault(obj.n_instances, []).append(obj)
    p_coords = probe.coords_matrix
    p_probs = probe.probs_vector
    for n, group in by_n.items():
        coords = np.stack([o.coords_matrix for o in group])  # (K, n, d)
        probs = np.stack([o.probs_vector for o in group])  # (K, n)
        if probe_is_dominator:
            a = p_coords[None, :, None, :]
            b = coords[:, None, :, :]
            mask = np.logical_and((a <= b).all(-1), (a < b).any(-1))  # (K, np, n)
            total += float(np.einsum("a,kab,kb->", p_probs, mask, probs))
        else:
            a = coords[:, :, None, :]
            b = p_coords[None, None, :, :]
            mask = np.logical_and((a <= b).all(-1), (a < b).any(-1))  # (K, n, np)
            total += float(np.einsum("ka,kab,b->", probs, mask, p_probs))
        if counter is not None:
            counter.instance_checks += len(group) * n * probe.n_instances
    return total


def _score_via_index(
    probe: UncertainObject,
    tree: RTree,
    probe_is_dominator: bool,
    counter: CheckCounter | None,
) -> float:
    if tree.root is None:
        return 0.0
    if tree.dim != probe.dim:
        raise DimensionError(f"probe dim {probe.dim} vs tree dim {tree.dim}")
    probe_lo = np.asarray(probe.mbr.lo)
    probe_hi = np.asarray(probe.mbr.hi)
    score = 0.0
    nodes = [tree.root]
    while nodes:
        if len(nodes) == 1:
            lo, hi = nodes[0].child_lo, nodes[0].child_hi
        else:
            lo = np.concatenate([nd.child_lo for nd in nodes])
            hi = np.concatenate([nd.child_hi for nd in nodes])
        entries = [e for nd in nodes for e in nd.entries]
        if counter is not None:
            counter.mbr_checks += len(entries)
        complete, partial = _classify_batch(probe_lo, probe_hi, lo, hi, probe_is_dominator)
        next_nodes: list[_Node] = []
        exact: list[UncertainObject] = []
        for idx in np.nonzero(complete)[0]:
            e = entries[idx]
            if isinstance(e, _Node):
                score += e.count
            elif e.id != probe.id:
                score += 1.0
        for idx in np.nonzero(partial)[0]:
            e = entries[idx]
            if isinstance(e, _Node):
                next_nodes.append(e)
            elif e.id != probe.id:
                exact.append(e)
        if exact:
            score += _batch_pair_prob(probe, exact, probe_is_dominator, counter)
        nodes = next_nodes
    return score


def dom_via_index(
    u: UncertainObject, tree: RTree, counter: CheckCounter | None = None
) -> float:
    """Dominant score of ``u`` over the indexed objects, excluding ``u`` itself."""
    return _score_via_index(u, tree, probe_is_dominator=True, counter=counter)


def rdom_via_index(
    u: UncertainObject, tree: RTree, counter: CheckCounter | None = None
) -> float:
    """Dominated score of ``u`` against the indexed objects, excluding itself."""
    return _score_via_index(u, tree, probe_is_dominator=False, counter=counter)


_PAIR_CHUNK_ELEMS = 4_000_000


def batch_scores_via_index(
    probes: Sequence[UncertainObject],
    tree: RTree,
    probe_is_dominator: bool,
    counter: CheckCounter | None = None,
) -> np.ndarray:
    """Scores of many probes against one tree in a single level-wise sweep.

    Produces exactly the per-probe traversal results (same classifications,
    same dominance-check counts); all probes walk the uniform-depth tree in
    lockstep so each level is one vectorised classification. Falls back to
    the per-probe loop when instance counts are ragged.
    """
    n_probes = len(probes)
    if n_probes == 0:
        return np.zeros(0)
    if tree.root is None:
        return np.zeros(n_probes)
    probe_ns = {p.n_instances for p in probes}
    if tree.obj_coords is None or len(probe_ns) != 1:
        return np.array(
            [_score_via_index(p, tree, probe_is_dominator, counter) for p in probes]
        )
    for p in probes:
        if p.dim != tree.dim:
            raise DimensionError(f"probe dim {p.dim} vs tree dim {tree.dim}")

    probe_lo = np.array([p.mbr.lo for p in probes])[:, None, :]
    probe_hi = np.array([p.mbr.hi for p in probes])[:, None, :]
    probe_coords = np.stack([p.coords_matrix for p in probes])
    probe_probs = np.stack([p.probs_vector for p in probes])
    probe_ids = np.array([p.id for p in probes])
    scores = np.zeros(n_probes)

    root = tree.root
    objects_level = root.is_leaf
    entries: tuple = root.entries
    positions = root.obj_pos if root.is_leaf else None
    lo = root.child_lo[None, :, :]
    hi = root.child_hi[None, :, :]
    active = np.ones((n_probes, len(entries)), dtype=bool)
    while True:
        if counter is not None:
            counter.mbr_checks += int(active.sum())
        if probe_is_dominator:
            complete = (probe_hi <= lo).all(-1) & (probe_hi < lo).any(-1)
            missing = (probe_lo > hi).any(-1) | (probe_lo >= hi).all(-1)
        else:
            complete = (hi <= probe_lo).all(-1) & (hi < probe_lo).any(-1)
            missing = (lo > probe_hi).any(-1) | (lo >= probe_hi).all(-1)
        complete &= active
        partial = active & ~complete & ~missing

        if objects_level:
            not_self = probe_ids[:, None] != np.array([o.id for o in entries])[None, :]
            scores += (complete & not_self).sum(axis=1)
            pi, pj = np.nonzero(partial & not_self)
            if pi.size:
                scores += _gathered_pair_scores(
                    probe_coords,
                    probe_probs,
                    tree,
                    positions,
                    pi,
                    pj,
                    n_probes,
                    probe_is_dominator,
                    counter,
                )
            return scores

        counts = np.array([nd.count for nd in entries])
        scores += complete @ counts
        keep = np.flatnonzero(partial.any(axis=0))
        if keep.size == 0:
            return scores
        kept_nodes = [entries[j] for j in keep]
        fanouts = np.array([len(nd.entries) for nd in kept_nodes])
        active = np.repeat(partial[:, keep], fanouts, axis=1)
        entries = tuple(e for nd in kept_nodes for e in nd.entries)
        lo = np.concatenate([nd.child_lo for nd in kept_nodes])[None, :, :]
        hi = np.concatenate([nd.child_hi for nd in kept_nodes])[None, :, :]
        objects_level = kept_nodes[0].is_leaf
        if objects_level:
            positions = np.concatenate([nd.obj_pos for nd in kept_nodes])


def _gathered_pair_scores(
    probe_coords: np.ndarray,
    probe_probs: np.ndarray,
    tree: RTree,
    positions: np.ndarray,
    pi: np.ndarray,
    pj: np.ndarray,
    n_probes: int,
    probe_is_dominator: bool,
    counter: CheckCounter | None,
) -> np.ndarray:
    """Exact dominance mass for (probe, object) pairs, chunked and summed
    back per probe."""
    n_p = probe_coords.shape[1]
    n_o = tree.obj_coords.shape[1]
    d = tree.dim
    if counter is not None:
        counter.instance_checks += int(pi.size) * n_p * n_o
    out = np.zeros(n_probes)
    chunk = max(1, _PAIR_CHUNK_ELEMS // (n_p * n_o * d))
    obj_pos = positions[pj]
    for s in range(0, pi.size, chunk):
        ppi = pi[s : s + chunk]
        opj = obj_pos[s : s + chunk]
        a = probe_coords[ppi][:, :, None, :]  # (K, n_p, 1, d)
        b = tree.obj_coords[opj][:, None, :, :]  # (K, 1, n_o, d)
        if probe_is_dominator:
            mask = np.logical_and((a <= b).all(-1), (a < b).any(-1))
            vals = np.einsum(
                "ka,kab,kb->k", probe_probs[ppi], mask, tree.obj_probs[opj]
            )
        else:
            # mask axes stay (pair, probe-instance a, object-instance b)
            mask = np.logical_and((b <= a).all(-1), (b < a).any(-1))
            vals = np.einsum(
                "kb,kab,ka->k", tree.obj_probs[opj], mask, probe_probs[ppi]
            )
        out += np.bincount(ppi, weights=vals, minlength=n_probes)
    return out


def iter_leaves(tree: RTree):
    """Yield leaf nodes left to right (test/debug helper)."""
    if tree.root is None:
        return
    stack = [tree.root]
    out = []
    while stack:
        nd = stack.pop()
        if nd.is_leaf:
            out.append(nd)
        else:
            stack.extend(reversed(nd.entries))
    yield from reversed(out)


def tree_height(tree: RTree) -> int:
    """Edges from root to leaf level; -1 for the empty tree."""
    if tree.root is None:
        return -1
    h = 0
    nd = tree.root
    while not nd.is_leaf:
        nd = nd.entries[0]
        h += 1
    return h


def validate_tree(tree: RTree) -> None:
    """Raise ConsistencyError unless all structural invariants hold.

    Checks fanout bounds (root 1..degree, others ceil(degree/2)..degree),
    parent box containment, uniform leaf depth, and exactly-once object
    membership.
    """
    if tree.root is None:
        if tree.size != 0:
            raise ConsistencyError("empty root but non-zero size")
        return
    min_fill = (tree.degree + 1) // 2
    seen: list[int] = []
    depths: set[int] = set()

    def walk(node: _Node, depth: int, is_root: bool) -> None:
        count = len(node.entries)
        low = 1 if is_root else min_fill
        if not (low <= count <= tree.degree):
            raise ConsistencyError(
                f"node fanout {count} outside [{low}, {tree.degree}]"
            )
        box = node.mbr
        if node.is_leaf:
            depths.add(depth)
            for obj in node.entries:
                if not box.contains(obj.mbr):
                    raise ConsistencyError(f"leaf box does not contain object {obj.id}")
                seen.append(obj.id)
        else:
            for child in node.entries:
                if not box.contains(child.mbr):
                    raise ConsistencyError("parent box does not contain child box")
                walk(child, depth + 1, is_root=False)

    walk(tree.root, 0, is_root=True)
    if len(depths) != 1:
        raise ConsistencyError(f"leaves at mixed depths: {sorted(depths)}")
    if len(seen) != len(set(seen)):
        raise ConsistencyError("an object appears in more than one leaf")
    if set(seen) != set(tree.ids):
        raise ConsistencyError("leaf membership does not match indexed id set")
