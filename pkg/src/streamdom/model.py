"""Core value types: uncertain objects, bounding boxes, sliding windows.

All attributes are smaller-is-better. An uncertain object is a set of
weighted instances whose probabilities sum to 1; its bounding box is the
componentwise min/max over the instance coordinates.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    DatasetFormatError,
    InvalidObjectError,
    OrderingError,
)

PROB_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Instance:
    """One possible position of an uncertain object, with its probability."""

    coords: tuple[float, ...]
    prob: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))
        if len(self.coords) == 0:
            raise InvalidObjectError("instance needs at least one coordinate")
        if not (0.0 < self.prob <= 1.0):
            raise InvalidObjectError(f"instance probability {self.prob} not in (0, 1]")

    @property
    def dim(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class UncertainObject:
    """An identified set of weighted instances arriving on one stream.

    Instance probabilities must sum to 1 within ``PROB_TOLERANCE``; ids are
    globally unique across streams so candidate bookkeeping can key on them.
    """

    id: int
    arrival: int
    stream: int
    instances: tuple[Instance, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "instances", tuple(self.instances))
        if self.id < 0:
            raise InvalidObjectError(f"object id {self.id} must be non-negative")
        if self.arrival < 0:
            raise InvalidObjectError(f"arrival {self.arrival} must be non-negative")
        if self.stream < 1:
            raise InvalidObjectError(f"stream index {self.stream} must be >= 1")
        if not self.instances:
            raise InvalidObjectError(f"object {self.id} has no instances")
        d = self.instances[0].dim
        if any(inst.dim != d for inst in self.instances):
            raise InvalidObjectError(f"object {self.id} mixes instance dimensions")
        total = sum(inst.prob for inst in self.instances)
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise InvalidObjectError(
                f"object {self.id} instance probabilities sum to {total!r}, not 1"
            )

    @property
    def dim(self) -> int:
        return self.instances[0].dim

    @property
    def n_instances(self) -> int:
        return len(self.instances)

    @cached_property
    def coords_matrix(self) -> np.ndarray:
        """Instance coordinates stacked as an (n, d) float array."""
        arr = np.array([inst.coords for inst in self.instances], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def probs_vector(self) -> np.ndarray:
        arr = np.array([inst.prob for inst in self.instances], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def mbr(self) -> MBR:
        return mbr_of(self)


@dataclass(frozen=True)
class MBR:
    """Minimum bounding rectangle: the lower and upper corner of a box."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", tuple(float(c) for c in self.lo))
        object.__setattr__(self, "hi", tuple(float(c) for c in self.hi))
        if len(self.lo) != len(self.hi):
            raise InvalidObjectError("box corners differ in dimension")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise InvalidObjectError(f"box has lo > hi: {self.lo} / {self.hi}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, other: MBR) -> bool:
        return all(sl <= ol for sl, ol in zip(self.lo, other.lo)) and all(
            oh <= sh for sh, oh in zip(self.hi, other.hi)
        )


def mbr_of(obj: UncertainObject) -> MBR:
    """Bounding box of an object: componentwise min/max over its instances."""
    if not obj.instances:
        raise InvalidObjectError(f"object {obj.id} has no instances")
    coords = obj.coords_matrix
    return MBR(tuple(coords.min(axis=0)), tuple(coords.max(axis=0)))


@dataclass(frozen=True)
class ScoredObject:
    """An object id with its dominant and dominated scores.

    ``arrival`` rides along because top-k tie-breaking is
    (dom desc, arrival asc, id asc).
    """

    object_id: int
    dom: float
    rdom: float
    arrival: int = 0


class SlidingWindow:
    """Fixed-capacity FIFO of uncertain objects, ordered by arrival.

    Owned by exactly one node; push is the only mutation.
    """

    def __init__(self, capacity: int, contents: Iterable[UncertainObject] = ()):
        if capacity < 1:
            raise InvalidObjectError(f"window capacity {capacity} must be >= 1")
        self.capacity = capacity
        self._items: deque[UncertainObject] = deque()
        for obj in contents:
            self.push(obj)

    def push(self, obj: UncertainObject) -> UncertainObject | None:
        """Append an object; return the evicted oldest one if over capacity."""
        if self._items and obj.arrival < self._items[-1].arrival:
            raise OrderingError(
                f"arrival {obj.arrival} precedes window tail "
                f"{self._items[-1].arrival}"
            )
        self._items.append(obj)
        if len(self._items) > self.capacity:
            return self._items.popleft()
        return None

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[UncertainObject]:
        return iter(self._items)

    def contents(self) -> tuple[UncertainObject, ...]:
        return tuple(self._items)


def window_push(
    window: SlidingWindow, obj: UncertainObject
) -> UncertainObject | None:
    """Functional alias for :meth:`SlidingWindow.push`."""
    return window.push(obj)


# ---------------------------------------------------------------------------
# Dataset file format.
#
# One object per line:
#   id,arrival,stream,n,d|prob,c1,...,cd|prob,c1,...,cd...
# Floats are rendered with 17 significant digits so parsing round-trips
# exactly.
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_object(obj: UncertainObject) -> str:
    head = f"{obj.id},{obj.arrival},{obj.stream},{obj.n_instances},{obj.dim}"
    groups = [
        ",".join([_fmt(inst.prob)] + [_fmt(c) for c in inst.coords])
        for inst in obj.instances
    ]
    return "|".join([head] + groups)


def parse_object(line: str) -> UncertainObject:
    parts = line.strip().split("|")
    if len(parts) < 2:
        raise DatasetFormatError(f"malformed line (no instance groups): {line[:80]!r}")
    head = parts[0].split(",")
    if len(head) != 5:
        raise DatasetFormatError(f"expected 5 header fields, got {len(head)}")
    try:
        oid, arrival, stream, n, d = (int(v) for v in head)
    except ValueError as exc:
        raise DatasetFormatError(f"non-integer header field in {head}") from exc
    if len(parts) - 1 != n:
        raise DatasetFormatError(
            f"object {oid} declares {n} instances but carries {len(parts) - 1}"
        )
    instances = []
    for group in parts[1:]:
        fields = group.split(",")
        if len(fields) != d + 1:
            raise DatasetFormatError(
                f"object {oid}: instance group has {len(fields) - 1} coords, wants {d}"
            )
        try:
            values = [float(v) for v in fields]
        except ValueError as exc:
            raise DatasetFormatError(f"object {oid}: bad float in {group!r}") from exc
        instances.append(Instance(tuple(values[1:]), values[0]))
    try:
        return UncertainObject(oid, arrival, stream, tuple(instances))
    except InvalidObjectError as exc:
        raise DatasetFormatError(f"object {oid} rejected: {exc}") from exc


def write_dataset(objects: Sequence[UncertainObject], path: str | Path) -> None:
    Path(path).write_text(
        "".join(format_object(obj) + "\n" for obj in objects), encoding="ascii"
    )


def read_dataset(path: str | Path) -> list[UncertainObject]:
    objects = []
    seen: set[int] = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = parse_object(line)
        except DatasetFormatError as exc:
            raise DatasetFormatError(f"line {lineno}: {exc}") from exc
        if obj.id in seen:
            raise DatasetFormatError(f"line {lineno}: duplicate object id {obj.id}")
        seen.add(obj.id)
        objects.append(obj)
    return objects


def relocate(obj: UncertainObject, *, arrival: int, stream: int) -> UncertainObject:
    """Copy of ``obj`` with new arrival slot and stream index."""
    return replace(obj, arrival=arrival, stream=stream)
