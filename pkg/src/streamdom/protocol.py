"""Monitor and coordinator node state machines and the monitoring pipelines.

Three pipelines share the same slot structure:

* ``ptdmus``   -- monitors keep an incremental working set (last broadcast
  candidates plus new arrivals minus expired), upload only score diffs, and
  the coordinator skips rescoring candidates whose checking time has not
  arrived.
* ``ptdsky``   -- monitors recompute their threshold skyband from the full
  local window every slot and upload it whole; the coordinator rescores
  everything every slot; no checking-time table.
* ``ptdbf``    -- a single node holds the global window, scores every object
  through its tree, and ranks; no messages at all (the accuracy baseline).

A slot is a barrier-synchronised sequence: m monitor steps, coordinator
merge + broadcast, m rescores, coordinator finalize. All message payloads
are counted in object-sized entries; broadcasts are costed once per
recipient.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .dominance import CheckCounter
from .errors import ParameterError, ProtocolError
from .model import ScoredObject, SlidingWindow, UncertainObject
from .rtree import batch_scores_via_index, bulk_load
from .skyband import (
    CandidateInfo,
    CheckingTimeTable,
    score_window,
    select_top_k,
    threshold_k_skyband,
    update_checking_table,
)

COORDINATOR = "coordinator"


class MessageKind(enum.Enum):
    LOCAL_CANDIDATE_UPLOAD = "LocalCandidateUpload"
    UPDATE_INFO_UPLOAD = "UpdateInfoUpload"
    GLOBAL_CANDIDATE_BROADCAST = "GlobalCandidateBroadcast"
    SCORE_UPLOAD = "ScoreUpload"
    CHECKING_TIME_BROADCAST = "CheckingTimeBroadcast"


@dataclass(frozen=True)
class CandidateEntry:
    """A candidate object with its currently known scores."""

    obj: UncertainObject
    dom: float
    rdom: float


@dataclass(frozen=True)
class UpdateRecord:
    """One element of an update-info upload: add/change carry the object
    and fresh scores, remove carries only the id."""

    op: str  # "add" | "change" | "remove"
    object_id: int
    obj: UncertainObject | None = None
    dom: float = 0.0
    rdom: float = 0.0


@dataclass(frozen=True)
class ScoreEntry:
    object_id: int
    dom: float
    rdom: float


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    sender: str
    recipients: int
    slot: int
    payload: tuple
    exp_min: int | None = None  # earliest result expiry, rides the broadcast

    @property
    def entries(self) -> int:
        return len(self.payload)

    @property
    def cost(self) -> int:
        return len(self.payload) * self.recipients


class MonitorNode:
    """Edge node owning one stream's sliding window."""

    def __init__(
        self,
        index: int,
        window_capacity: int,
        degree: int,
        delta: int,
        k: int,
        incremental: bool = True,
        diff_uploads: bool = True,
    ):
        self.index = index
        self.name = f"monitor{index}"
        self.window = SlidingWindow(window_capacity)
        self.degree = degree
        self.delta = delta
        self.k = k
        self.incremental = incremental
        self.diff_uploads = diff_uploads
        self.counter = CheckCounter()
        self.initialized = False
        self._prev_tks: dict[int, tuple[float, float]] = {}
        self._candidate_cache: dict[int, UncertainObject] = {}
        self._horizon = 1  # slots-until-expiry of the current result set
        self.checking_table = CheckingTimeTable()

    def preload(self, obj: UncertainObject) -> None:
        """Warm-up push before monitoring starts (no protocol traffic)."""
        self.window.push(obj)

    def _alive(self, obj: UncertainObject, t: int) -> bool:
        return obj.arrival + self.window.capacity > t

    def _working_set(self, t: int) -> list[UncertainObject]:
        """Known candidates plus objects newer than the result-change horizon.

        The horizon is the broadcast earliest-expiry of the current result:
        until then a fresh object keeps its chance to enter the candidate
        set, so it stays in the update pool rather than being judged once.
        """
        if not self.initialized or not self.incremental:
            return list(self.window)
        pool = {
            oid: obj
            for oid, obj in self._candidate_cache.items()
            if self._alive(obj, t)
        }
        cutoff = t - self._horizon
        for obj in reversed(self.window.contents()):
            if obj.arrival <= cutoff:
                break
            pool[obj.id] = obj
        return [pool[oid] for oid in sorted(pool)]

    def monitor_step(self, arrivals: Sequence[UncertainObject], t: int) -> Message:
        """Slide the window, recompute the local candidate set, upload.

        The first monitored slot uploads the whole threshold skyband; later
        slots upload only entries whose scores changed plus explicit
        add/remove records.
        """
        for obj in arrivals:
            if obj.stream != self.index:
                raise ProtocolError(
                    f"object {obj.id} for stream {obj.stream} routed to "
                    f"monitor {self.index}"
                )
            self.window.push(obj)
        working = self._working_set(t)
        tks: dict[int, tuple[float, float]] = {}
        objs_by_id: dict[int, UncertainObject] = {}
        if working:
            tree = bulk_load(working, self.degree)
            scored = score_window(working, tree, self.counter)
            for s in threshold_k_skyband(scored, self.delta, self.k):
                tks[s.object_id] = (s.dom, s.rdom)
            objs_by_id = {obj.id: obj for obj in working}

        if not self.initialized or not self.diff_uploads:
            self.initialized = True
            payload = tuple(
                CandidateEntry(objs_by_id[oid], dom, rdom)
                for oid, (dom, rdom) in sorted(tks.items())
            )
            kind = MessageKind.LOCAL_CANDIDATE_UPLOAD
        else:
            records = []
            for oid in sorted(set(tks) | set(self._prev_tks)):
                now = tks.get(oid)
                before = self._prev_tks.get(oid)
                if now is not None and before is None:
                    records.append(UpdateRecord("add", oid, objs_by_id[oid], *now))
                elif now is None and before is not None:
                    records.append(UpdateRecord("remove", oid))
                elif now != before:
                    records.append(UpdateRecord("change", oid, objs_by_id[oid], *now))
            payload = tuple(records)
            kind = MessageKind.UPDATE_INFO_UPLOAD
        self._prev_tks = tks
        return Message(kind, self.name, 1, t, payload)

    def monitor_rescore(self, broadcast: Message, t: int) -> Message:
        """Score each broadcast candidate against the local window only.

        Uploads partial scores; a candidate whose local dominated mass
        already reaches the threshold is precluded from the upload.
        """
        if broadcast.kind is not MessageKind.GLOBAL_CANDIDATE_BROADCAST:
            raise ProtocolError(f"unexpected broadcast kind {broadcast.kind}")
        window_objs = list(self.window)
        records = []
        if window_objs and broadcast.payload:
            candidates = [entry.obj for entry in broadcast.payload]
            tree = bulk_load(window_objs, self.degree)
            pdoms = batch_scores_via_index(candidates, tree, True, self.counter)
            prdoms = batch_scores_via_index(candidates, tree, False, self.counter)
            for i, obj in enumerate(candidates):
                if prdoms[i] >= self.delta:
                    continue
                records.append(ScoreEntry(obj.id, float(pdoms[i]), float(prdoms[i])))
        else:
            records = [ScoreEntry(e.obj.id, 0.0, 0.0) for e in broadcast.payload]
        for entry in broadcast.payload:
            if self._alive(entry.obj, t):
                self._candidate_cache[entry.obj.id] = entry.obj
        self._candidate_cache = {
            oid: obj for oid, obj in self._candidate_cache.items() if self._alive(obj, t)
        }
        if broadcast.exp_min is not None:
            self._horizon = max(1, broadcast.exp_min - t)
        return Message(MessageKind.SCORE_UPLOAD, self.name, 1, t, tuple(records))

    def receive_checking_table(self, message: Message) -> None:
        if message.kind is not MessageKind.CHECKING_TIME_BROADCAST:
            raise ProtocolError(f"unexpected table broadcast kind {message.kind}")
        self.checking_table = CheckingTimeTable(
            {e.object_id: e for e in message.payload}
        )


class CoordinatorNode:
    """Cloud node merging per-monitor candidate sets into the global result."""

    def __init__(
        self,
        m: int,
        local_window_capacity: int,
        k: int,
        use_checking_table: bool = True,
        final_filter_delta: int | None = None,
    ):
        self.m = m
        self.swj = local_window_capacity
        self.k = k
        self.use_checking_table = use_checking_table
        self.final_filter_delta = final_filter_delta
        self.window = SlidingWindow(m * local_window_capacity)
        self.replicas: list[dict[int, tuple[float, float]]] = [dict() for _ in range(m)]
        self.candidate_objs: dict[int, UncertainObject] = {}
        self.global_scores: dict[int, tuple[float, float]] = {}
        self.checking_table = CheckingTimeTable()
        self.ptd: list[int] = []
        self.cs_ids: list[int] = []
        self.union_size = 0
        self._rescore_ids: list[int] = []
        self._exp_min: int | None = None

    def preload(self, obj: UncertainObject) -> None:
        self.window.push(obj)

    def _alive_id(self, oid: int, t: int) -> bool:
        obj = self.candidate_objs.get(oid)
        return obj is not None and obj.arrival + self.swj > t

    def _expiry(self, oid: int) -> int:
        return self.candidate_objs[oid].arrival + self.swj

    def _score_at_hand(self, oid: int) -> tuple[float, float]:
        got = self.global_scores.get(oid)
        if got is not None:
            return got
        best: tuple[float, float] | None = None
        for replica in self.replicas:
            entry = replica.get(oid)
            if entry is not None and (best is None or entry[0] > best[0]):
                best = entry
        return best if best is not None else (0.0, 0.0)

    def coordinator_merge(
        self,
        uploads: Sequence[Message],
        arrivals: Sequence[UncertainObject],
        t: int,
    ) -> Message:
        """Apply uploads, slide the global window, form and broadcast the
        candidate set (minus the members not yet due for rechecking)."""
        if len(uploads) != self.m:
            raise ProtocolError(f"expected {self.m} uploads, got {len(uploads)}")
        for msg in uploads:
            j = int(msg.sender.removeprefix("monitor")) - 1
            if msg.kind is MessageKind.LOCAL_CANDIDATE_UPLOAD:
                self.replicas[j] = {
                    e.obj.id: (e.dom, e.rdom) for e in msg.payload
                }
                for e in msg.payload:
                    self.candidate_objs[e.obj.id] = e.obj
            elif msg.kind is MessageKind.UPDATE_INFO_UPLOAD:
                replica = self.replicas[j]
                for rec in msg.payload:
                    if rec.op == "remove":
                        replica.pop(rec.object_id, None)
                    else:
                        replica[rec.object_id] = (rec.dom, rec.rdom)
                        self.candidate_objs[rec.object_id] = rec.obj
            else:
                raise ProtocolError(f"unexpected upload kind {msg.kind}")

        for obj in sorted(arrivals, key=lambda o: (o.arrival, o.id)):
            self.window.push(obj)

        # drop expired candidates everywhere
        for replica in self.replicas:
            for oid in [oid for oid in replica if not self._alive_id(oid, t)]:
                del replica[oid]
        union = set().union(*self.replicas) if self.replicas else set()
        self.union_size = len(union)

        # a candidate stays tracked until it expires or fresh scores fail
        # the dom >= 1 / rdom < k membership test
        pool = set(union)
        pool.update(oid for oid in self.cs_ids if self._alive_id(oid, t))
        cs: list[int] = []
        for oid in sorted(pool):
            dom, rdom = self._score_at_hand(oid)
            if dom >= 1.0 and rdom < self.k:
                cs.append(oid)
        self.cs_ids = cs

        if self.use_checking_table:
            self._rescore_ids = [
                oid for oid in cs if self.checking_table.due(oid, t)
            ]
        else:
            self._rescore_ids = list(cs)
        payload = tuple(
            CandidateEntry(self.candidate_objs[oid], *self._score_at_hand(oid))
            for oid in self._rescore_ids
        )
        expired = [
            oid for oid in self.candidate_objs if not self._alive_id(oid, t)
        ]
        for oid in expired:
            del self.candidate_objs[oid]
            self.global_scores.pop(oid, None)
        return Message(
            MessageKind.GLOBAL_CANDIDATE_BROADCAST,
            COORDINATOR,
            self.m,
            t,
            payload,
            exp_min=self._exp_min,
        )

    def coordinator_finalize(
        self,
        score_uploads: Sequence[Message],
        t: int,
        n_instances: int,
    ) -> tuple[list[int], Message | None, int]:
        """Sum partial scores, rank the candidate set, refresh the table.

        Returns (result ids, checking-table broadcast or None, count of
        result members that entered before their recorded checking time).
        """
        if len(score_uploads) != self.m:
            raise ProtocolError(
                f"expected {self.m} score uploads, got {len(score_uploads)}"
            )
        sums: dict[int, list[float]] = {oid: [0.0, 0.0] for oid in self._rescore_ids}
        for msg in score_uploads:
            if msg.kind is not MessageKind.SCORE_UPLOAD:
                raise ProtocolError(f"unexpected score upload kind {msg.kind}")
            for rec in msg.payload:
                acc = sums.get(rec.object_id)
                if acc is not None:
                    acc[0] += rec.dom
                    acc[1] += rec.rdom
        for oid, (dom, rdom) in sums.items():
            self.global_scores[oid] = (dom, rdom)

        pool = [
            ScoredObject(
                oid,
                *self.global_scores.get(oid, (0.0, 0.0)),
                arrival=self.candidate_objs[oid].arrival,
            )
            for oid in self.cs_ids
        ]
        if self.final_filter_delta is not None:
            pool = [
                s for s in pool if s.dom >= 1.0 and s.rdom < self.final_filter_delta
            ]
        previous_table = self.checking_table
        ptd_ids = select_top_k(pool, self.k)
        early = 0
        for oid in ptd_ids:
            entry = previous_table.get(oid)
            if entry is not None and entry.mct > t:
                early += 1
        self.ptd = ptd_ids
        self._exp_min = (
            min(self._expiry(oid) for oid in ptd_ids) if ptd_ids else None
        )

        if not self.use_checking_table:
            return ptd_ids, None, early

        by_id = {s.object_id: s for s in pool}
        ptd_infos = [
            CandidateInfo(oid, by_id[oid].dom, self._expiry(oid)) for oid in ptd_ids
        ]
        cand_infos = [
            CandidateInfo(s.object_id, s.dom, self._expiry(s.object_id))
            for s in pool
            if s.object_id not in set(ptd_ids)
        ]
        self.checking_table = update_checking_table(
            self.checking_table, cand_infos, ptd_infos, t, self.m, n_instances
        )
        table_payload = tuple(
            self.checking_table.entries[oid]
            for oid in sorted(self.checking_table.entries)
        )
        ct_msg = Message(
            MessageKind.CHECKING_TIME_BROADCAST, COORDINATOR, self.m, t, table_payload
        )
        return ptd_ids, ct_msg, early


# ---------------------------------------------------------------------------
# Slot traces and pipeline runners
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    abs_slot: int
    ptd: tuple[int, ...]
    ptd_dom: tuple[float, ...]
    messages: dict[str, int]
    cost: int
    checks: dict[str, int]
    cs_size: int
    union_size: int
    ct_size: int
    early_mct: int


@dataclass(frozen=True)
class Trace:
    method: str
    slots: tuple[SlotRecord, ...]

    @property
    def total_cost(self) -> int:
        return sum(rec.cost for rec in self.slots)

    @property
    def total_checks(self) -> int:
        return sum(sum(rec.checks.values()) for rec in self.slots)


def _stream_length(streams: Sequence[Sequence[UncertainObject]]) -> int:
    if not streams:
        raise ParameterError("need at least one stream")
    return min(len(s) for s in streams)


def monitoring_span(total_objects: int, m: int, swj: int) -> int:
    """Number of monitored slots: stream length minus window size, or 1."""
    per_stream = total_objects // m
    span = per_stream - swj
    return span if span > 0 else 1


def _slot_bounds(streams, swj: int) -> tuple[int, int]:
    length = _stream_length(streams)
    start = min(swj, length) - 1
    span = monitoring_span(length * len(streams), len(streams), swj)
    return start, span


def run_ptdmus(
    streams: Sequence[Sequence[UncertainObject]],
    *,
    swj: int,
    degree: int,
    delta: int,
    k: int,
    mct_forced: bool = False,
) -> Trace:
    """Run the incremental checking-time pipeline over dealt streams.

    ``mct_forced`` disables the checking-time skip and the incremental
    working set, so every candidate is rescored from full windows at every
    slot (the degenerate mode that must match the centralized baseline).
    """
    m = len(streams)
    _validate_run_params(m, swj, degree, delta, k)
    n_instances = streams[0][0].n_instances
    monitors = [
        MonitorNode(j + 1, swj, degree, delta, k, incremental=not mct_forced)
        for j in range(m)
    ]
    coord = CoordinatorNode(
        m, swj, k, use_checking_table=not mct_forced, final_filter_delta=None
    )
    return _run_distributed(streams, monitors, coord, swj, n_instances, "ptdmus")


def run_ptdsky(
    streams: Sequence[Sequence[UncertainObject]],
    *,
    swj: int,
    degree: int,
    delta: int,
    k: int,
) -> Trace:
    """Run the per-slot skyband recomputation pipeline (no checking table)."""
    m = len(streams)
    _validate_run_params(m, swj, degree, delta, k)
    n_instances = streams[0][0].n_instances
    monitors = [
        MonitorNode(j + 1, swj, degree, delta, k, incremental=False, diff_uploads=False)
        for j in range(m)
    ]
    coord = CoordinatorNode(
        m, swj, k, use_checking_table=False, final_filter_delta=delta
    )
    return _run_distributed(streams, monitors, coord, swj, n_instances, "ptdsky")


def _validate_run_params(m: int, swj: int, degree: int, delta: int, k: int) -> None:
    if m < 1:
        raise ParameterError(f"m = {m} must be >= 1")
    if swj < 1:
        raise ParameterError(f"swj = {swj} must be >= 1")
    if degree < 2:
        raise ParameterError(f"rdeg = {degree} must be >= 2")
    if not (1 <= delta <= k):
        raise ParameterError(f"delta = {delta} must satisfy 1 <= delta <= k = {k}")


def _run_distributed(
    streams,
    monitors: list[MonitorNode],
    coord: CoordinatorNode,
    swj: int,
    n_instances: int,
    method: str,
) -> Trace:
    m = len(streams)
    start, span = _slot_bounds(streams, swj)
    for t in range(start):
        for j in range(m):
            monitors[j].preload(streams[j][t])
        for obj in sorted((s[t] for s in streams), key=lambda o: o.id):
            coord.preload(obj)

    records = []
    prev_checks = [0] * m
    for rel in range(span):
        t = start + rel
        arrivals = [[streams[j][t]] if t < len(streams[j]) else [] for j in range(m)]
        uploads = [monitors[j].monitor_step(arrivals[j], t) for j in range(m)]
        all_arrivals = [obj for batch in arrivals for obj in batch]
        broadcast = coord.coordinator_merge(uploads, all_arrivals, t)
        score_uploads = [monitors[j].monitor_rescore(broadcast, t) for j in range(m)]
        ptd_ids, ct_msg, early = coord.coordinator_finalize(
            score_uploads, t, n_instances
        )
        messages = list(uploads) + [broadcast] + list(score_uploads)
        if ct_msg is not None:
            for mon in monitors:
                mon.receive_checking_table(ct_msg)
            messages.append(ct_msg)

        entries_by_kind: dict[str, int] = {}
        for msg in messages:
            entries_by_kind[msg.kind.value] = (
                entries_by_kind.get(msg.kind.value, 0) + msg.entries
            )
        checks = {}
        for j, mon in enumerate(monitors):
            checks[mon.name] = mon.counter.total - prev_checks[j]
            prev_checks[j] = mon.counter.total
        records.append(
            SlotRecord(
                slot=rel,
                abs_slot=t,
                ptd=tuple(ptd_ids),
                ptd_dom=tuple(coord.global_scores[oid][0] for oid in ptd_ids),
                messages=entries_by_kind,
                cost=sum(msg.cost for msg in messages),
                checks=checks,
                cs_size=len(coord.cs_ids),
                union_size=coord.union_size,
                ct_size=len(coord.checking_table),
                early_mct=early,
            )
        )
    return Trace(method=method, slots=tuple(records))


def run_ptdbf(
    streams: Sequence[Sequence[UncertainObject]],
    *,
    swj: int,
    degree: int,
    k: int,
) -> Trace:
    """Centralized baseline: one node, one global window, full scoring."""
    m = len(streams)
    _validate_run_params(m, swj, degree, 1, k)
    start, span = _slot_bounds(streams, swj)
    window = SlidingWindow(m * swj)
    counter = CheckCounter()
    for t in range(start):
        for obj in sorted((s[t] for s in streams), key=lambda o: o.id):
            window.push(obj)

    records = []
    prev_total = 0
    for rel in range(span):
        t = start + rel
        for obj in sorted(
            (s[t] for s in streams if t < len(s)), key=lambda o: o.id
        ):
            window.push(obj)
        objects = list(window)
        tree = bulk_load(objects, degree)
        scored = score_window(objects, tree, counter)
        ptd_ids = select_top_k(scored, k)
        dom_by_id = {s.object_id: s.dom for s in scored}
        records.append(
            SlotRecord(
                slot=rel,
                abs_slot=t,
                ptd=tuple(ptd_ids),
                ptd_dom=tuple(dom_by_id[oid] for oid in ptd_ids),
                messages={},
                cost=0,
                checks={"central": counter.total - prev_total},
                cs_size=0,
                union_size=0,
                ct_size=0,
                early_mct=0,
            )
        )
        prev_total = counter.total
    return Trace(method="ptdbf", slots=tuple(records))
