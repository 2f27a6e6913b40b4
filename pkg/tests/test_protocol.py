from __future__ import annotations

import pytest

from streamdom.datagen import GeneratorConfig, generate, partition_streams
from streamdom.dominance import dom_bruteforce, rdom_bruteforce
from streamdom.errors import ParameterError, ProtocolError
from streamdom.protocol import (
    CandidateEntry,
    CoordinatorNode,
    Message,
    MessageKind,
    MonitorNode,
    monitoring_span,
    run_ptdbf,
    run_ptdmus,
    run_ptdsky,
)


def _streams(count, m, *, d=3, n=3, seed=0):
    objs = generate(
        GeneratorConfig(count=count, n_instances=n, dim=d, margin=160, seed=seed)
    )
    return partition_streams(objs, m)


class TestMessage:
    def test_cost_is_entries_times_recipients(self):
        payload = (1, 2, 3)
        upload = Message(MessageKind.SCORE_UPLOAD, "monitor1", 1, 0, payload)
        broadcast = Message(
            MessageKind.GLOBAL_CANDIDATE_BROADCAST, "coordinator", 4, 0, payload
        )
        assert upload.entries == 3 and upload.cost == 3
        assert broadcast.entries == 3 and broadcast.cost == 12


class TestMonitorStep:
    def test_initial_upload_carries_threshold_skyband(self, demo_objects):
        mon = MonitorNode(1, window_capacity=4, degree=6, delta=2, k=2)
        msg = mon.monitor_step(demo_objects, t=0)
        assert msg.kind is MessageKind.LOCAL_CANDIDATE_UPLOAD
        # oracle scores give u1 (2.0, 0), u2 (1.92, 0), u4 (1.0, 1.92):
        # all three pass dom >= 1 and rdom < 2
        assert [e.obj.id for e in msg.payload] == [1, 2, 4]
        by_id = {e.obj.id: e for e in msg.payload}
        assert by_id[1].dom == pytest.approx(2.0, abs=1e-9)
        assert by_id[2].dom == pytest.approx(1.92, abs=1e-9)

    def test_quiet_slot_uploads_empty_diff(self, window_factory):
        objs = window_factory.window(6, d=2, n=3)
        mon = MonitorNode(1, window_capacity=10, degree=6, delta=3, k=5)
        first = mon.monitor_step(objs, t=0)
        assert first.kind is MessageKind.LOCAL_CANDIDATE_UPLOAD
        # no arrivals, nothing expires: the working set and scores repeat
        second = mon.monitor_step([], t=1)
        assert second.kind is MessageKind.UPDATE_INFO_UPLOAD
        assert second.entries == 0 and second.cost == 0

    def test_full_window_evicts_exactly_one(self, window_factory):
        objs = window_factory.window(3, d=2, n=1)
        mon = MonitorNode(1, window_capacity=3, degree=6, delta=1, k=1)
        mon.monitor_step(objs, t=0)
        newcomer = window_factory.window(1, d=2, n=1, base_id=50)[0]
        newcomer = newcomer.__class__(50, 1, 1, newcomer.instances)
        mon.monitor_step([newcomer], t=1)
        assert len(mon.window) == 3
        assert [o.id for o in mon.window][-1] == 50

    def test_wrong_stream_routing_rejected(self, demo_objects):
        mon = MonitorNode(2, window_capacity=4, degree=6, delta=1, k=1)
        with pytest.raises(ProtocolError):
            mon.monitor_step(demo_objects, t=0)  # objects carry stream=1


class TestPartitionAdditivity:
    def test_partial_scores_sum_to_global(self, window_factory):
        # whatever the split of the global window, per-monitor partial
        # scores for a candidate must add up to its global score
        objs = window_factory.window(48, d=3, n=3)
        candidate = objs[7]
        for m in (2, 3, 4):
            parts = [objs[j::m] for j in range(m)]
            dom_sum = 0.0
            rdom_sum = 0.0
            for part in parts:
                peers = [o for o in part if o.id != candidate.id]
                dom_sum += dom_bruteforce(candidate, peers)
                rdom_sum += rdom_bruteforce(candidate, peers)
            others = [o for o in objs if o.id != candidate.id]
            assert dom_sum == pytest.approx(dom_bruteforce(candidate, others), abs=1e-9)
            assert rdom_sum == pytest.approx(
                rdom_bruteforce(candidate, others), abs=1e-9
            )

    def test_demo_window_partial_dom_sums_across_monitors(self, demo_objects):
        # split the demo window over two monitors: partial dominant scores
        # for u1 must add up to its global score of 2.0
        u1 = demo_objects[0]
        near = MonitorNode(1, window_capacity=2, degree=6, delta=9, k=9)
        far = MonitorNode(2, window_capacity=2, degree=6, delta=9, k=9)
        near.monitor_step(demo_objects[:2], t=0)
        far.monitor_step(
            [o.__class__(o.id, o.arrival, 2, o.instances) for o in demo_objects[2:]],
            t=0,
        )
        broadcast = Message(
            MessageKind.GLOBAL_CANDIDATE_BROADCAST,
            "coordinator",
            2,
            0,
            (CandidateEntry(u1, 0.0, 0.0),),
        )
        total = sum(
            mon.monitor_rescore(broadcast, t=0).payload[0].dom
            for mon in (near, far)
        )
        assert total == pytest.approx(2.0, abs=1e-9)

    def test_empty_broadcast_gives_empty_upload(self, window_factory):
        mon = MonitorNode(1, window_capacity=8, degree=6, delta=2, k=4)
        mon.monitor_step(window_factory.window(4, d=2, n=1), t=0)
        empty = Message(
            MessageKind.GLOBAL_CANDIDATE_BROADCAST, "coordinator", 1, 1, ()
        )
        upload = mon.monitor_rescore(empty, t=1)
        assert upload.entries == 0 and upload.cost == 0

    def test_rescore_upload_matches_brute_force(self, window_factory):
        objs = window_factory.window(20, d=2, n=3)
        mon = MonitorNode(1, window_capacity=20, degree=6, delta=50, k=50)
        mon.monitor_step(objs, t=0)
        candidate = window_factory.window(1, d=2, n=3, base_id=600)[0]
        broadcast = Message(
            MessageKind.GLOBAL_CANDIDATE_BROADCAST,
            "coordinator",
            1,
            1,
            (CandidateEntry(candidate, 0.0, 0.0),),
        )
        upload = mon.monitor_rescore(broadcast, t=1)
        (entry,) = upload.payload
        assert entry.dom == pytest.approx(dom_bruteforce(candidate, objs), abs=1e-9)
        assert entry.rdom == pytest.approx(rdom_bruteforce(candidate, objs), abs=1e-9)


class TestCoordinator:
    def test_missing_upload_rejected(self):
        coord = CoordinatorNode(m=3, local_window_capacity=5, k=2)
        with pytest.raises(ProtocolError):
            coord.coordinator_merge([], [], t=0)

    def test_single_monitor_union(self, demo_objects):
        mon = MonitorNode(1, window_capacity=4, degree=6, delta=2, k=2)
        coord = CoordinatorNode(m=1, local_window_capacity=4, k=2)
        upload = mon.monitor_step(demo_objects, t=0)
        broadcast = coord.coordinator_merge([upload], demo_objects, t=0)
        assert coord.cs_ids == [1, 2, 4]
        assert broadcast.kind is MessageKind.GLOBAL_CANDIDATE_BROADCAST
        assert broadcast.recipients == 1
        score_upload = mon.monitor_rescore(broadcast, t=0)
        ptd, ct_msg, early = coord.coordinator_finalize([score_upload], 0, 3)
        assert ptd == [1, 2]
        assert early == 0
        # u4 is the only candidate outside the result: one table entry
        assert ct_msg.entries == 1 and ct_msg.payload[0].object_id == 4

    def test_disjoint_unions_add(self, window_factory):
        a = window_factory.window(3, d=2, n=1, base_id=0)
        b = window_factory.window(4, d=2, n=1, base_id=10)
        coord = CoordinatorNode(m=2, local_window_capacity=8, k=5)
        uploads = [
            Message(
                MessageKind.LOCAL_CANDIDATE_UPLOAD,
                f"monitor{j + 1}",
                1,
                0,
                tuple(CandidateEntry(o, 2.0, 0.0) for o in objs),
            )
            for j, objs in enumerate((a, b))
        ]
        coord.coordinator_merge(uploads, a + b, t=0)
        assert len(coord.cs_ids) == 7


class TestRunners:
    def test_monitoring_span_branches(self):
        assert monitoring_span(10_000, 10, 960) == 40
        assert monitoring_span(2000, 4, 500) == 1
        assert monitoring_span(2000, 4, 200) == 300

    def test_window_contents_mirror_coordinator_window(self):
        streams = _streams(120, 3, seed=7)
        swj = 20
        monitors = [MonitorNode(j + 1, swj, 6, 4, 8) for j in range(3)]
        coord = CoordinatorNode(m=3, local_window_capacity=swj, k=8)
        for t in range(len(streams[0])):
            uploads = [monitors[j].monitor_step([streams[j][t]], t) for j in range(3)]
            arrivals = [s[t] for s in streams]
            broadcast = coord.coordinator_merge(uploads, arrivals, t)
            score_uploads = [m.monitor_rescore(broadcast, t) for m in monitors]
            coord.coordinator_finalize(score_uploads, t, 3)
            monitor_ids = sorted(
                o.id for mon in monitors for o in mon.window
            )
            coordinator_ids = sorted(o.id for o in coord.window)
            assert monitor_ids == coordinator_ids

    def test_degenerate_run_matches_baseline(self):
        # the forced-rescore single-monitor run must equal the centralized
        # baseline restricted to candidates with dom >= 1, at every slot
        streams = _streams(240, 3, seed=11)
        forced = run_ptdmus(streams, swj=40, degree=6, delta=12, k=12, mct_forced=True)
        central = run_ptdbf(streams, swj=40, degree=6, k=12)
        assert len(forced.slots) == len(central.slots) == 40
        for a, b in zip(forced.slots, central.slots):
            restricted = tuple(
                oid for oid, dom in zip(b.ptd, b.ptd_dom) if dom >= 1.0
            )
            assert a.ptd == restricted

    def test_initial_uploads_match_between_methods(self):
        streams = _streams(160, 2, seed=3)
        a = run_ptdmus(streams, swj=60, degree=6, delta=5, k=10)
        b = run_ptdsky(streams, swj=60, degree=6, delta=5, k=10)
        kind = MessageKind.LOCAL_CANDIDATE_UPLOAD.value
        assert a.slots[0].messages[kind] == b.slots[0].messages[kind]

    def test_ptdbf_cost_is_zero_and_deterministic(self):
        streams = _streams(160, 2, seed=5)
        t1 = run_ptdbf(streams, swj=60, degree=6, k=5)
        t2 = run_ptdbf(streams, swj=60, degree=6, k=5)
        assert t1.total_cost == 0
        assert [s.ptd for s in t1.slots] == [s.ptd for s in t2.slots]
        assert t1.total_checks == t2.total_checks

    def test_ptdmus_deterministic(self):
        streams = _streams(200, 2, seed=9)
        t1 = run_ptdmus(streams, swj=70, degree=6, delta=4, k=8)
        t2 = run_ptdmus(streams, swj=70, degree=6, delta=4, k=8)
        assert [s.ptd for s in t1.slots] == [s.ptd for s in t2.slots]
        assert t1.total_cost == t2.total_cost
        assert t1.total_checks == t2.total_checks

    def test_config_validation(self):
        streams = _streams(60, 2, seed=1)
        with pytest.raises(ParameterError):
            run_ptdmus(streams, swj=20, degree=6, delta=9, k=8)
        with pytest.raises(ParameterError):
            run_ptdmus(streams, swj=20, degree=1, delta=2, k=8)

    def test_mct_skip_excludes_from_broadcast_but_keeps_candidate(self):
        # find a slot where some candidate is withheld from rescoring:
        # broadcast entries < candidate-set size, while the candidate set
        # still carries the skipped ids
        streams = _streams(300, 2, seed=4)
        trace = run_ptdmus(streams, swj=100, degree=6, delta=6, k=12)
        kind = MessageKind.GLOBAL_CANDIDATE_BROADCAST.value
        skipping = [
            rec
            for rec in trace.slots[1:]
            if rec.messages.get(kind, 0) < rec.cs_size
        ]
        assert skipping, "checking table never withheld a candidate"

    def test_early_entries_counted(self):
        streams = _streams(300, 2, seed=4)
        trace = run_ptdmus(streams, swj=100, degree=6, delta=6, k=12)
        assert all(rec.early_mct >= 0 for rec in trace.slots)

    def test_forced_single_monitor_equals_skyband_method(self):
        # with one monitor, threshold = k, and rescoring forced every slot,
        # the incremental pipeline reduces to the per-slot skyband one
        streams = _streams(240, 1, seed=13)
        forced = run_ptdmus(
            streams, swj=80, degree=6, delta=9, k=9, mct_forced=True
        )
        sky = run_ptdsky(streams, swj=80, degree=6, delta=9, k=9)
        assert [s.ptd for s in forced.slots] == [s.ptd for s in sky.slots]
