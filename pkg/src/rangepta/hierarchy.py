"""Class hierarchy, allocation-site numbering, intervals and type masks.

Allocation sites are renumbered by a depth-first walk of the class tree so
that every class owns one contiguous index interval covering its own sites
and those of all its subclasses.  Interfaces map to one interval per topmost
implementing class.  Indices are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import (
    DuplicateTypeError,
    InheritanceCycleError,
    UnknownTypeError,
)


@dataclass(frozen=True)
class TypeRef:
    name: str
    kind: str  # 'class' | 'interface' | 'array'
    element: Optional[str] = None  # element type name for arrays

    @property
    def is_classlike(self) -> bool:
        # arrays behave like classes in the tree
        return self.kind != "interface"


@dataclass
class AllocSite:
    id: str
    type_name: str
    index: Optional[int] = None  # assigned by number_allocations


@dataclass(frozen=True)
class Interval:
    lower: int
    upper: int

    @property
    def empty(self) -> bool:
        return self.upper == self.lower - 1

    def __len__(self) -> int:
        return max(0, self.upper - self.lower + 1)

    def contains(self, idx: int) -> bool:
        return self.lower <= idx <= self.upper


def array_name(element: str, dims: int = 1) -> str:
    return element + "[]" * dims


class ClassHierarchy:
    """Single-inheritance class tree plus interface implementation relation.

    Immutable once built; construct via :func:`build_hierarchy`.
    """

    def __init__(self):
        self.types: dict[str, TypeRef] = {}
        self.root: Optional[TypeRef] = None
        self.parent: dict[str, Optional[str]] = {}
        self.children: dict[str, list[str]] = {}  # declaration order
        self.implements: dict[str, tuple[str, ...]] = {}
        self.iface_extends: dict[str, tuple[str, ...]] = {}
        # caches filled by _finalize
        self._all_ifaces_of_class: dict[str, frozenset[str]] = {}
        self._ancestors: dict[str, frozenset[str]] = {}

    # -- queries ------------------------------------------------------

    def lookup(self, name: str) -> TypeRef:
        try:
            return self.types[name]
        except KeyError:
            raise UnknownTypeError(f"unknown type: {name}") from None

    def is_declared(self, name: str) -> bool:
        return name in self.types

    def class_names(self) -> list[str]:
        """All class-like type names in preorder of the tree."""
        out = []
        stack = [self.root.name]
        while stack:
            c = stack.pop()
            out.append(c)
            stack.extend(reversed(self.children[c]))
        return out

    def interface_names(self) -> list[str]:
        return [n for n, t in self.types.items() if t.kind == "interface"]

    def superclass_chain(self, name: str) -> list[str]:
        """name itself followed by all ancestor classes up to the root."""
        chain = []
        cur: Optional[str] = name
        while cur is not None:
            chain.append(cur)
            cur = self.parent[cur]
        return chain

    def super_interfaces(self, iface: str) -> frozenset[str]:
        """iface plus everything it extends, transitively."""
        seen = {iface}
        work = [iface]
        while work:
            for sup in self.iface_extends.get(work.pop(), ()):
                if sup not in seen:
                    seen.add(sup)
                    work.append(sup)
        return frozenset(seen)

    def interfaces_of_class(self, cls: str) -> frozenset[str]:
        """All interfaces cls is compatible with, via ancestors and extension."""
        return self._all_ifaces_of_class[cls]

    def is_subtype(self, s, t) -> bool:
        """True iff a value of type s may be held by a slot of type t."""
        sn = s.name if isinstance(s, TypeRef) else s
        tn = t.name if isinstance(t, TypeRef) else t
        st = self.lookup(sn)
        tt = self.lookup(tn)
        if sn == tn:
            return True
        if st.kind == "interface":
            return tt.kind == "interface" and tn in self.super_interfaces(sn)
        if tt.kind == "interface":
            return tn in self._all_ifaces_of_class[sn]
        return tn in self._ancestors[sn]

    # -- construction helpers -----------------------------------------

    def _add_class(self, t: TypeRef, parent: Optional[str], ifaces: Iterable[str]):
        self.types[t.name] = t
        self.parent[t.name] = parent
        self.children[t.name] = []
        self.implements[t.name] = tuple(ifaces)
        if parent is not None:
            self.children[parent].append(t.name)

    def _finalize(self):
        for cls in self.parent:
            anc = set(self.superclass_chain(cls)[1:])
            self._ancestors[cls] = frozenset(anc)
            ifs: set[str] = set()
            for c in (cls, *anc):
                for i in self.implements.get(c, ()):
                    ifs |= self.super_interfaces(i)
            self._all_ifaces_of_class[cls] = frozenset(ifs)


def build_hierarchy(
    class_decls: Sequence[tuple[str, Optional[str], Sequence[str]]],
    iface_decls: Sequence[tuple[str, Sequence[str]]] = (),
    array_types: Sequence[str] = (),
) -> ClassHierarchy:
    """Validate declarations and build an immutable hierarchy.

    class_decls: (name, parent or None for the root, implemented interfaces).
    iface_decls: (name, extended interfaces).
    array_types: array type names (``Elem[]``, ``Elem[][]`` ...) to graft in
    as synthetic classes mirroring their element hierarchy.
    """
    h = ClassHierarchy()
    names: set[str] = set()
    for name, _, _ in class_decls:
        if name in names:
            raise DuplicateTypeError(f"duplicate type: {name}")
        names.add(name)
    for name, _ in iface_decls:
        if name in names:
            raise DuplicateTypeError(f"duplicate type: {name}")
        names.add(name)

    roots = [d for d in class_decls if d[1] is None]
    if len(roots) != 1:
        raise InheritanceCycleError(
            f"expected exactly one root class, found {len(roots)}"
        )

    iface_names = {name for name, _ in iface_decls}
    class_names = {name for name, _, _ in class_decls}

    for name, parent, ifaces in class_decls:
        if parent is not None and parent not in class_names:
            raise UnknownTypeError(f"class {name}: unknown parent {parent}")
        for i in ifaces:
            if i not in iface_names:
                raise UnknownTypeError(f"class {name}: unknown interface {i}")
    for name, exts in iface_decls:
        for e in exts:
            if e not in iface_names:
                raise UnknownTypeError(f"interface {name}: unknown interface {e}")

    # cycle check on the class parent relation
    parent_map = {name: parent for name, parent, _ in class_decls}
    state: dict[str, int] = {}
    for name in parent_map:
        path = []
        cur: Optional[str] = name
        while cur is not None and state.get(cur, 0) == 0:
            state[cur] = 1
            path.append(cur)
            cur = parent_map[cur]
        if cur is not None and state[cur] == 1:
            raise InheritanceCycleError(f"class inheritance cycle through {cur}")
        for p in path:
            state[p] = 2

    # cycle check on interface extension
    ext_map = {name: tuple(exts) for name, exts in iface_decls}
    istate: dict[str, int] = {}

    def visit_iface(i: str):
        if istate.get(i) == 1:
            raise InheritanceCycleError(f"interface extension cycle through {i}")
        if istate.get(i) == 2:
            return
        istate[i] = 1
        for sup in ext_map[i]:
            visit_iface(sup)
        istate[i] = 2

    for i in ext_map:
        visit_iface(i)

    root_name = roots[0][0]
    h.root = TypeRef(root_name, "class")
    # classes in declaration order; root first so children lists exist
    ordered = [roots[0]] + [d for d in class_decls if d[0] != root_name]
    added: set[str] = set()
    pending = list(ordered)
    while pending:
        progressed = False
        rest = []
        for name, parent, ifaces in pending:
            if parent is None or parent in added:
                h._add_class(TypeRef(name, "class"), parent, ifaces)
                added.add(name)
                progressed = True
            else:
                rest.append((name, parent, ifaces))
        if not progressed:
            # remaining classes hang off a cycle already rejected above
            raise InheritanceCycleError(
                "classes unreachable from the root: " + ", ".join(d[0] for d in rest)
            )
        pending = rest

    for name, exts in iface_decls:
        h.types[name] = TypeRef(name, "interface")
        h.iface_extends[name] = tuple(exts)

    for a in array_types:
        _ensure_array(h, a)

    h._finalize()
    return h


def _ensure_array(h: ClassHierarchy, name: str) -> None:
    """Register an array type (and its mirror ancestors) as synthetic classes.

    ``T[]`` is a subtype of ``S[]`` iff T is a subtype of S; every array type
    is ultimately a subtype of the root class.
    """
    if name in h.types:
        return
    if not name.endswith("[]"):
        raise UnknownTypeError(f"unknown type: {name}")
    elem = name[:-2]
    if elem not in h.types:
        if elem.endswith("[]"):
            _ensure_array(h, elem)
        else:
            raise UnknownTypeError(f"unknown array element type: {elem}")
    et = h.types[elem]
    if et.kind == "interface":
        raise UnknownTypeError(f"interface element arrays are not supported: {name}")
    elem_parent = h.parent[elem]
    if elem_parent is None:
        parent = h.root.name
    else:
        parent = elem_parent + "[]"
        _ensure_array(h, parent)
    h._add_class(TypeRef(name, "array", element=elem), parent, ())


@dataclass
class TypeMask:
    """Plain bit array over all alloc indices; bit i set iff compatible."""

    for_type: TypeRef
    bits: int
    total_allocs: int

    def get(self, idx: int) -> bool:
        return bool(self.bits >> idx & 1)


@dataclass
class NumberingResult:
    hierarchy: ClassHierarchy
    global_array: tuple[AllocSite, ...]  # position i-1 holds the alloc with index i
    type2interval: dict[str, Interval]
    iface2intervals: dict[str, tuple[Interval, ...]]
    total_allocs: int
    postorder: tuple[str, ...]  # interval creation order
    index_of: dict[str, int] = field(default_factory=dict)  # alloc id -> index

    def type_of_index(self, idx: int) -> str:
        return self.global_array[idx - 1].type_name

    def site_of_index(self, idx: int) -> AllocSite:
        return self.global_array[idx - 1]


def number_allocations(h: ClassHierarchy, allocs: Sequence[AllocSite]) -> NumberingResult:
    """Depth-first renumbering; fills indices and per-type intervals."""
    class2allocs: dict[str, list[AllocSite]] = {c: [] for c in h.parent}
    for a in allocs:
        t = h.lookup(a.type_name)
        if not t.is_classlike:
            raise UnknownTypeError(
                f"alloc {a.id}: allocated type may not be an interface"
            )
        class2allocs[a.type_name].append(a)

    global_array: list[AllocSite] = []
    type2interval: dict[str, Interval] = {}
    postorder: list[str] = []

    def dfs_visit(cls: str):
        lower = len(global_array) + 1
        for alloc in class2allocs[cls]:
            global_array.append(alloc)
            alloc.index = len(global_array)
        for c in h.children[cls]:
            dfs_visit(c)
        type2interval[cls] = Interval(lower, len(global_array))
        postorder.append(cls)

    dfs_visit(h.root.name)

    nr = NumberingResult(
        hierarchy=h,
        global_array=tuple(global_array),
        type2interval=type2interval,
        iface2intervals={},
        total_allocs=len(global_array),
        postorder=tuple(postorder),
        index_of={a.id: a.index for a in global_array},
    )
    for iface in h.interface_names():
        nr.iface2intervals[iface] = tuple(_interface_intervals(nr, h, iface))
    return nr


def _interface_intervals(nr: NumberingResult, h: ClassHierarchy, iface: str) -> list[Interval]:
    # classes compatible with iface, keeping only the topmost ones
    impl = [c for c in h.parent if iface in h.interfaces_of_class(c)]
    impl_set = set(impl)
    tops = [c for c in impl if not (set(h.superclass_chain(c)[1:]) & impl_set)]
    ivs = sorted(
        (nr.type2interval[c] for c in tops if not nr.type2interval[c].empty),
        key=lambda iv: iv.lower,
    )
    merged: list[Interval] = []
    for iv in ivs:
        if merged and iv.lower <= merged[-1].upper + 1:
            merged[-1] = Interval(merged[-1].lower, max(merged[-1].upper, iv.upper))
        else:
            merged.append(iv)
    return merged


def intervals_of(nr: NumberingResult, h: ClassHierarchy, t) -> list[Interval]:
    """Index intervals covering all allocs compatible with t.

    Classes get their single interval; interfaces get one interval per
    topmost implementing class, merged when adjacent, sorted by lower bound.
    """
    name = t.name if isinstance(t, TypeRef) else t
    tt = h.lookup(name)
    if tt.kind == "interface":
        return list(nr.iface2intervals[name])
    return [nr.type2interval[name]]


def build_type_mask(nr: NumberingResult, h: ClassHierarchy, t) -> TypeMask:
    """Bit i set iff the alloc with index i is compatible with t."""
    name = t.name if isinstance(t, TypeRef) else t
    tt = h.lookup(name)
    bits = 0
    # deliberately defined via the subtype test, not via intervals, so that
    # mask/interval agreement stays a checkable property of the numbering
    compat = {c for c in h.parent if h.is_subtype(c, name)}
    for i, site in enumerate(nr.global_array, start=1):
        if site.type_name in compat:
            bits |= 1 << i
    return TypeMask(for_type=tt, bits=bits, total_allocs=nr.total_allocs)
