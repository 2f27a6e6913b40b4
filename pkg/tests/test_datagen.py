from __future__ import annotations

import numpy as np
import pytest

from streamdom.datagen import ATTRIBUTE_RANGE, GeneratorConfig, generate, partition_streams
from streamdom.errors import ParameterError
from streamdom.model import format_object


class TestGeneratorConfig:
    def test_margin_above_range_rejected(self):
        with pytest.raises(ParameterError):
            GeneratorConfig(margin=2001.0)

    def test_non_uniform_distribution_rejected(self):
        with pytest.raises(ParameterError):
            GeneratorConfig(distribution="gaussian")

    def test_bad_counts_rejected(self):
        with pytest.raises(ParameterError):
            GeneratorConfig(count=0)
        with pytest.raises(ParameterError):
            GeneratorConfig(n_instances=0)
        with pytest.raises(ParameterError):
            GeneratorConfig(dim=0)


class TestGenerate:
    def test_ids_and_counts(self):
        objs = generate(GeneratorConfig(count=50, n_instances=4, dim=3, seed=2))
        assert [o.id for o in objs] == list(range(50))
        assert all(o.n_instances == 4 and o.dim == 3 for o in objs)

    def test_zero_margin_collapses_to_point(self):
        objs = generate(GeneratorConfig(count=10, n_instances=3, dim=2, margin=0.0, seed=1))
        for obj in objs:
            box = obj.mbr
            assert box.lo == box.hi

    def test_probabilities_normalized_and_coords_in_range(self):
        objs = generate(GeneratorConfig(count=40, n_instances=5, dim=4, seed=3))
        lo, hi = ATTRIBUTE_RANGE
        for obj in objs:
            assert sum(i.prob for i in obj.instances) == pytest.approx(1.0, abs=1e-9)
            assert all(i.prob > 0 for i in obj.instances)
            for inst in obj.instances:
                assert all(lo <= c <= hi for c in inst.coords)

    def test_margin_bounds_box_side(self):
        margin = 80.0
        objs = generate(
            GeneratorConfig(count=60, n_instances=5, dim=3, margin=margin, seed=4)
        )
        for obj in objs:
            box = obj.mbr
            assert all(h - l <= margin + 1e-12 for l, h in zip(box.lo, box.hi))

    def test_same_seed_same_bytes(self):
        cfg = GeneratorConfig(count=30, n_instances=3, dim=2, seed=9)
        text1 = "".join(format_object(o) for o in generate(cfg))
        text2 = "".join(format_object(o) for o in generate(cfg))
        assert text1 == text2

    def test_different_seed_differs(self):
        a = generate(GeneratorConfig(count=5, n_instances=2, dim=2, seed=1))
        b = generate(GeneratorConfig(count=5, n_instances=2, dim=2, seed=2))
        assert a != b

    def test_center_marginals_match_uniform_mean(self):
        # empirical mean of each center marginal within 3 standard errors
        count, margin = 12_000, 160.0
        objs = generate(
            GeneratorConfig(count=count, n_instances=1, dim=2, margin=0.0, seed=7)
        )
        centers = np.array([o.instances[0].coords for o in objs])
        # margin 0: instances are the centers drawn from [0, 2000]
        lo, hi = ATTRIBUTE_RANGE
        mean = (hi - lo) / 2
        se = (hi - lo) / np.sqrt(12 * count)
        for dim in range(2):
            assert abs(centers[:, dim].mean() - mean) < 3 * se


class TestPartitionStreams:
    def test_round_robin_eight_objects(self):
        objs = generate(GeneratorConfig(count=8, n_instances=2, dim=2, seed=0))
        streams = partition_streams(objs, 4)
        assert [len(s) for s in streams] == [2, 2, 2, 2]
        for j, stream in enumerate(streams, start=1):
            assert [o.arrival for o in stream] == [0, 1]
            assert all(o.stream == j for o in stream)

    def test_single_stream_keeps_id_order(self):
        objs = generate(GeneratorConfig(count=6, n_instances=2, dim=2, seed=0))
        (stream,) = partition_streams(objs, 1)
        assert [o.id for o in stream] == list(range(6))
        assert [o.arrival for o in stream] == list(range(6))

    def test_partition_is_bijection(self):
        objs = generate(GeneratorConfig(count=103, n_instances=2, dim=2, seed=0))
        streams = partition_streams(objs, 5)
        seen = {}
        for j, stream in enumerate(streams, start=1):
            for obj in stream:
                key = (j, obj.arrival)
                assert key not in seen
                seen[key] = obj.id
        assert sorted(seen.values()) == [o.id for o in objs]

    def test_m_below_one_rejected(self):
        with pytest.raises(ParameterError):
            partition_streams([], 0)
