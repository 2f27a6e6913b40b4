"""Probabilistic k-skyband selection and checking-time scheduling.

A window's candidates are the objects that dominate at least one unit of
probability mass and are themselves dominated by less than a bound; the
threshold variant tightens that bound so monitor nodes upload fewer
candidates. The checking-time table predicts the earliest slot at which a
non-result candidate could enter the result, letting the coordinator skip
rescoring it until then.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dominance import CheckCounter
from .errors import ConsistencyError, ParameterError
from .model import ScoredObject, UncertainObject
from .rtree import RTree, batch_scores_via_index


def score_window(
    objects: Sequence[UncertainObject],
    tree: RTree,
    counter: CheckCounter | None = None,
) -> list[ScoredObject]:
    """Score every window member against the tree indexing that window."""
    if tree.ids != {obj.id for obj in objects}:
        raise ConsistencyError("tree does not index exactly the given objects")
    doms = batch_scores_via_index(objects, tree, True, counter)
    rdoms = batch_scores_via_index(objects, tree, False, counter)
    return [
        ScoredObject(
            object_id=obj.id,
            dom=float(doms[i]),
            rdom=float(rdoms[i]),
            arrival=obj.arrival,
        )
        for i, obj in enumerate(objects)
    ]


def k_skyband(scored: Iterable[ScoredObject], k: int) -> list[ScoredObject]:
    """Objects with dom >= 1 that fewer than k others dominate on average."""
    if k < 1:
        raise ParameterError(f"k = {k} must be >= 1")
    return [s for s in scored if s.dom >= 1.0 and s.rdom < k]


def threshold_k_skyband(
    scored: Iterable[ScoredObject], delta: int, k: int
) -> list[ScoredObject]:
    """k-skyband tightened to rdom < delta; reduces the upload set."""
    if k < 1:
        raise ParameterError(f"k = {k} must be >= 1")
    if not (1 <= delta <= k):
        raise ParameterError(f"delta = {delta} must satisfy 1 <= delta <= k")
    return [s for s in scored if s.dom >= 1.0 and s.rdom < delta]


def select_top_k(scored: Iterable[ScoredObject], k: int) -> list[int]:
    """The k object ids with highest dom; ties broken by arrival then id."""
    ranked = sorted(scored, key=lambda s: (-s.dom, s.arrival, s.object_id))
    return [s.object_id for s in ranked[:k]]


def compute_mct(
    dom_u: float,
    dom_k: float,
    exp_min: int,
    t_cur: int,
    m: int,
    n: int,
) -> int:
    """Earliest slot the candidate could displace the k-th result member.

    The gap to the k-th score, divided by the mass (m new objects of n
    instances each) a slot can retire, bounds how soon the candidate can
    catch up; expiry of a result member bounds it from the other side.
    """
    if dom_u > dom_k:
        raise ParameterError(
            f"candidate dom {dom_u} exceeds k-th result dom {dom_k}"
        )
    if exp_min <= t_cur:
        raise ParameterError(f"exp_min {exp_min} must exceed current slot {t_cur}")
    if m < 1 or n < 1:
        raise ParameterError("m and n must be >= 1")
    gap_slots = math.floor((dom_k - dom_u) / (m * n))
    return min(exp_min, gap_slots + t_cur)


@dataclass(frozen=True)
class CheckingTimeEntry:
    object_id: int
    mct: int
    expiry: int


@dataclass
class CheckingTimeTable:
    """Coordinator-side cache: candidate id -> next slot worth rechecking."""

    entries: dict[int, CheckingTimeEntry] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, object_id: int) -> CheckingTimeEntry | None:
        return self.entries.get(object_id)

    def due(self, object_id: int, t: int) -> bool:
        """True when the object has no entry or its checking time has come."""
        entry = self.entries.get(object_id)
        return entry is None or entry.mct <= t


@dataclass(frozen=True)
class CandidateInfo:
    """Minimal view of a scored candidate used for table maintenance."""

    object_id: int
    dom: float
    expiry: int


def update_checking_table(
    table: CheckingTimeTable,
    candidates: Sequence[CandidateInfo],
    ptd: Sequence[CandidateInfo],
    t_cur: int,
    m: int,
    n: int,
) -> CheckingTimeTable:
    """Refresh the table after a result update.

    Every candidate outside the result gets an entry clipped to
    [t_cur + 1, its own expiry]; result members are dropped and expired
    entries purged. With an empty result there is no score to chase, so
    every candidate is marked for the very next slot.
    """
    ptd_ids = {p.object_id for p in ptd}
    entries = {
        oid: e
        for oid, e in table.entries.items()
        if e.expiry > t_cur and oid not in ptd_ids
    }
    if ptd:
        dom_k = min(p.dom for p in ptd)
        exp_min = min(p.expiry for p in ptd)
    for cand in candidates:
        if cand.object_id in ptd_ids:
            continue
        if cand.expiry <= t_cur:
            entries.pop(cand.object_id, None)
            continue
        if ptd:
            mct = compute_mct(min(cand.dom, dom_k), dom_k, exp_min, t_cur, m, n)
            mct = min(mct, cand.expiry)
        else:
            mct = t_cur
        if mct <= t_cur:
            mct = t_cur + 1
        entries[cand.object_id] = CheckingTimeEntry(cand.object_id, mct, cand.expiry)
    return CheckingTimeTable(entries)
