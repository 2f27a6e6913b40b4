"""Top-k dominating query monitoring over distributed uncertain data streams."""

from .dominance import (
    CheckCounter,
    DominanceClass,
    classify_object_dominance,
    dom_bruteforce,
    instance_dominates,
    object_dominance_prob,
    pairwise_dominance_matrix,
    rdom_bruteforce,
)
from .model import (
    MBR,
    Instance,
    ScoredObject,
    SlidingWindow,
    UncertainObject,
    mbr_of,
    read_dataset,
    window_push,
    write_dataset,
)

__all__ = [
    "CheckCounter",
    "DominanceClass",
    "Instance",
    "MBR",
    "ScoredObject",
    "SlidingWindow",
    "UncertainObject",
    "classify_object_dominance",
    "dom_bruteforce",
    "instance_dominates",
    "mbr_of",
    "object_dominance_prob",
    "pairwise_dominance_matrix",
    "rdom_bruteforce",
    "read_dataset",
    "window_push",
    "write_dataset",
]
