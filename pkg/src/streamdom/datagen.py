"""Deterministic synthetic uncertain-object generator and stream partitioner.

Each object is a box of side at most M placed uniformly in [0, 2000]^d:
a center is drawn from [0, 2000 - M]^d and the instances uniformly from
[center, center + M]^d, so M bounds the bounding-box side exactly.
Instance weights are normalised uniforms. Everything is a pure function of
the seed (PCG64).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import Instance, UncertainObject, relocate

ATTRIBUTE_RANGE = (0.0, 2000.0)


@dataclass(frozen=True)
class GeneratorConfig:
    count: int = 10_000
    n_instances: int = 5
    dim: int = 9
    margin: float = 160.0
    seed: int = 0
    distribution: str = "uniform"

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ParameterError(f"count = {self.count} must be >= 1")
        if self.n_instances < 1:
            raise ParameterError(f"n_instances = {self.n_instances} must be >= 1")
        if self.dim < 1:
            raise ParameterError(f"dim = {self.dim} must be >= 1")
        if not (0.0 <= self.margin <= ATTRIBUTE_RANGE[1]):
            raise ParameterError(
                f"margin = {self.margin} must lie in [0, {ATTRIBUTE_RANGE[1]}]"
            )
        if self.distribution != "uniform":
            raise ParameterError(f"unsupported distribution {self.distribution!r}")


def generate(config: GeneratorConfig) -> list[UncertainObject]:
    """Generate ``count`` objects, ids 0..count-1, laid out as one stream.

    The single-stream layout (stream 1, arrival = id) is the canonical
    dataset form; :func:`partition_streams` re-deals it for any m.
    """
    rng = np.random.Generator(np.random.PCG64(config.seed))
    lo, hi = ATTRIBUTE_RANGE
    objects = []
    for oid in range(config.count):
        center = rng.uniform(lo, hi - config.margin, size=config.dim)
        if config.margin > 0:
            pts = rng.uniform(center, center + config.margin,
                              size=(config.n_instances, config.dim))
        else:
            pts = np.tile(center, (config.n_instances, 1))
        weights = 1.0 - rng.random(config.n_instances)  # in (0, 1]
        weights /= weights.sum()
        instances = tuple(
            Instance(tuple(p), float(w)) for p, w in zip(pts, weights)
        )
        objects.append(UncertainObject(oid, oid, 1, instances))
    return objects


def partition_streams(
    objects: list[UncertainObject], m: int
) -> list[list[UncertainObject]]:
    """Deal objects round-robin to m streams: id i -> stream (i mod m) + 1,
    arrival slot i // m. Returns one arrival-ordered list per stream."""
    if m < 1:
        raise ParameterError(f"m = {m} must be >= 1")
    streams: list[list[UncertainObject]] = [[] for _ in range(m)]
    for obj in objects:
        j = obj.id % m
        streams[j].append(relocate(obj, arrival=obj.id // m, stream=j + 1))
    return streams
