import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rangepta.hierarchy import AllocSite, build_hierarchy, number_allocations

# worked hierarchy: Object -> {A -> {B, C}, D}; I implemented by B and D
WORKED_CLASSES = [
    ("Object", None, ()),
    ("A", "Object", ()),
    ("B", "A", ("I",)),
    ("C", "A", ()),
    ("D", "Object", ("I",)),
]
WORKED_IFACES = [("I", ())]
WORKED_COUNTS = [("Object", 2), ("A", 3), ("B", 1), ("C", 2), ("D", 4)]


def worked_allocs():
    allocs = []
    for cls, n in WORKED_COUNTS:
        for k in range(n):
            allocs.append(AllocSite(f"{cls.lower()}{k + 1}", cls))
    return allocs


@pytest.fixture
def worked_hierarchy():
    return build_hierarchy(WORKED_CLASSES, WORKED_IFACES)


@pytest.fixture
def worked_numbering(worked_hierarchy):
    return number_allocations(worked_hierarchy, worked_allocs())


def random_hierarchy(rng: random.Random, max_classes=20, max_ifaces=4):
    """Random declarations plus alloc sites, for property tests."""
    n = rng.randint(1, max_classes)
    classes = [("Object", None, ())]
    names = ["Object"]
    ifaces = [(f"I{i}", tuple(
        rng.sample([f"I{j}" for j in range(1, i)], rng.randint(0, min(2, i - 1)))
    )) for i in range(1, rng.randint(0, max_ifaces) + 1)]
    iface_names = [i[0] for i in ifaces]
    for i in range(1, n):
        parent = rng.choice(names)
        impl = tuple(rng.sample(iface_names, rng.randint(0, min(2, len(iface_names)))))
        classes.append((f"K{i}", parent, impl))
        names.append(f"K{i}")
    allocs = []
    for cls in names:
        for k in range(rng.randint(0, 6)):
            allocs.append(AllocSite(f"{cls}_{k}", cls))
    return classes, ifaces, allocs
