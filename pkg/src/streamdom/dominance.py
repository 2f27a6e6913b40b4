"""Exact instance- and object-level dominance, plus brute-force scoring.

Smaller-is-better in every dimension. The brute-force scores here are the
ground-truth oracle for the index-assisted scoring in :mod:`streamdom.rtree`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, SelfComparisonError
from .model import Instance, UncertainObject


class DominanceClass(enum.Enum):
    """Three-way object/box dominance outcome."""

    COMPLETE = "complete"
    PARTIAL = "partial"
    MISSING = "missing"


@dataclass
class CheckCounter:
    """Accumulates dominance work: instance-pair tests and box classifications.

    One counter is owned per node (or per query batch) and merged after use;
    it is never a shared global.
    """

    instance_checks: int = 0
    mbr_checks: int = 0

    @property
    def total(self) -> int:
        return self.instance_checks + self.mbr_checks

    def reset(self) -> None:
        self.instance_checks = 0
        self.mbr_checks = 0

    def merge(self, other: CheckCounter) -> None:
        self.instance_checks += other.instance_checks
        self.mbr_checks += other.mbr_checks


def instance_dominates(a: Instance, b: Instance) -> bool:
    """True iff ``a`` is <= ``b`` in every dimension and < in at least one."""
    if a.dim != b.dim:
        raise DimensionError(f"instance dimensions differ: {a.dim} vs {b.dim}")
    le = all(x <= y for x, y in zip(a.coords, b.coords))
    lt = any(x < y for x, y in zip(a.coords, b.coords))
    return le and lt


def _pair_dominance_prob(
    ui: UncertainObject, uj: UncertainObject, counter: CheckCounter | None
) -> float:
    """Probability mass of ``ui`` dominating ``uj`` over all instance pairs."""
    a = ui.coords_matrix[:, None, :]
    b = uj.coords_matrix[None, :, :]
    dominated = np.logical_and((a <= b).all(axis=2), (a < b).any(axis=2))
    if counter is not None:
        counter.instance_checks += ui.n_instances * uj.n_instances
    return float(ui.probs_vector @ dominated @ uj.probs_vector)


def object_dominance_prob(
    ui: UncertainObject,
    uj: UncertainObject,
    counter: CheckCounter | None = None,
) -> float:
    """Pr[ui dominates uj]: each ui instance's mass times the uj mass it dominates."""
    if ui.id == uj.id:
        raise SelfComparisonError(f"object {ui.id} compared against itself")
    if ui.dim != uj.dim:
        raise DimensionError(f"object dimensions differ: {ui.dim} vs {uj.dim}")
    return _pair_dominance_prob(ui, uj, counter)


def classify_object_dominance(
    ui: UncertainObject, uj: UncertainObject
) -> DominanceClass:
    """Complete / partial / missing dominance, decided from instance pairs.

    Decided combinatorially rather than from the probability value so a
    rounded 1.0 can never be mistaken for complete dominance.
    """
    if ui.id == uj.id:
        raise SelfComparisonError(f"object {ui.id} compared against itself")
    if ui.dim != uj.dim:
        raise DimensionError(f"object dimensions differ: {ui.dim} vs {uj.dim}")
    a = ui.coords_matrix[:, None, :]
    b = uj.coords_matrix[None, :, :]
    dominated = np.logical_and((a <= b).all(axis=2), (a < b).any(axis=2))
    if dominated.all():
        return DominanceClass.COMPLETE
    if not dominated.any():
        return DominanceClass.MISSING
    return DominanceClass.PARTIAL


def dom_bruteforce(
    u: UncertainObject,
    others: Iterable[UncertainObject],
    counter: CheckCounter | None = None,
) -> float:
    """Dominant score of ``u``: sum of dominance probabilities over ``others``."""
    score = 0.0
    for v in others:
        if v.id == u.id:
            raise SelfComparisonError(f"object {u.id} present in its own peer set")
        score += _pair_dominance_prob(u, v, counter)
    return score


def rdom_bruteforce(
    u: UncertainObject,
    others: Iterable[UncertainObject],
    counter: CheckCounter | None = None,
) -> float:
    """Dominated score of ``u``: sum of probabilities of others dominating it."""
    score = 0.0
    for v in others:
        if v.id == u.id:
            raise SelfComparisonError(f"object {u.id} present in its own peer set")
        score += _pair_dominance_prob(v, u, counter)
    return score


def pairwise_dominance_matrix(objects: Sequence[UncertainObject]) -> np.ndarray:
    """Matrix P with P[i, j] = Pr[objects[i] dominates objects[j]].

    Vectorised over every instance pair at once; the diagonal is zero.
    Row sums are dominant scores and column sums are dominated scores, which
    makes this the convenient whole-window oracle.
    """
    if not objects:
        return np.zeros((0, 0))
    dims = {obj.dim for obj in objects}
    if len(dims) != 1:
        raise DimensionError(f"window mixes dimensions: {sorted(dims)}")
    coords = np.concatenate([obj.coords_matrix for obj in objects])
    probs = np.concatenate([obj.probs_vector for obj in objects])
    counts = [obj.n_instances for obj in objects]
    offsets = np.zeros(len(objects) + 1, dtype=int)
    np.cumsum(counts, out=offsets[1:])

    a = coords[:, None, :]
    b = coords[None, :, :]
    dominated = np.logical_and((a <= b).all(axis=2), (a < b).any(axis=2))
    weighted = probs[:, None] * dominated * probs[None, :]

    # collapse instance blocks to object pairs
    k = len(objects)
    block_rows = np.add.reduceat(weighted, offsets[:-1], axis=0)
    matrix = np.add.reduceat(block_rows, offsets[:-1], axis=1)
    np.fill_diagonal(matrix, 0.0)
    return matrix
