from __future__ import annotations

import numpy as np
import pytest

from streamdom.model import Instance, UncertainObject


def make_object(oid, rows, arrival=0, stream=1):
    """rows: iterable of (prob, c1, ..., cd)."""
    return UncertainObject(
        oid,
        arrival,
        stream,
        tuple(Instance(tuple(row[1:]), row[0]) for row in rows),
    )


@pytest.fixture
def demo_objects():
    """Four 2-D objects with three instances each; the hand-checkable window.

    u1 dominates u3 and u4 completely (dom 2.0); u2 dominates u3 completely
    and u4 partially with mass 0.92 (dom 1.92); u4 dominates u3 completely.
    """
    u1 = make_object(1, [(0.4, 28, 7), (0.3, 31, 11), (0.3, 35, 8)])
    u2 = make_object(2, [(0.6, 21, 16), (0.1, 17, 21), (0.3, 15, 17)])
    u3 = make_object(3, [(0.7, 72, 33), (0.2, 67, 30), (0.1, 64, 35)])
    u4 = make_object(4, [(0.8, 48, 19), (0.1, 43, 23), (0.1, 52, 26)])
    return [u1, u2, u3, u4]


class WindowFactory:
    """Seeded random windows matching the generator's box construction."""

    def __init__(self, seed=0):
        self.rng = np.random.default_rng(seed)

    def window(self, size, d=2, n=3, margin=160.0, base_id=0, arrival=0):
        objs = []
        for i in range(size):
            center = self.rng.uniform(0, 2000 - margin, size=d)
            if margin > 0:
                pts = self.rng.uniform(center, center + margin, size=(n, d))
            else:
                pts = np.tile(center, (n, 1))
            w = 1.0 - self.rng.random(n)
            w = w / w.sum()
            objs.append(
                UncertainObject(
                    base_id + i,
                    arrival,
                    1,
                    tuple(
                        Instance(tuple(p), float(pw)) for p, pw in zip(pts, w)
                    ),
                )
            )
        return objs


@pytest.fixture
def window_factory():
    return WindowFactory(seed=1234)
