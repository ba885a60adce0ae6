"""Interned concept expressions (the intensional algebra).

A concept is an n-ary universal: degree 0 concepts are propositions,
degree 1 properties, and so on.  Concepts are built from atomic
predicate concepts by conj (join-style conjunction), neg, exists
(slot-wise quantification), the derived union, and necess.  They are
hash-consed: structurally identical canonical expressions share one
node, so concept identity is plain object identity and `cid` equality.

The only canonicalization applied is neg(neg(u)) -> u.  In particular
conj is not commutative and no propositional rewriting happens: two
logically equivalent but differently built concepts stay distinct,
which is the whole point of separating meaning from extension.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple, Union

from .errors import IntlogError
from .relalg import ConceptHandle, DomainElement, Particular, join_spec_ok
from .syntax import ID_PRED, PredicateSymbol


class ConceptError(IntlogError):
    pass


class DegreeError(ConceptError):
    """Union over an empty set or over mixed degrees."""


#: Atom argument: a 1-based slot index or a fixed domain element.
AtomArg = Union[int, DomainElement]


@dataclass(eq=False)
class Concept:
    """One interned node.  Never construct directly; use the builder
    functions below so equal expressions share an id."""

    cid: int
    kind: str  # atom, conj, neg, exists, union, necess, id, truth
    degree: int
    pred: Optional[PredicateSymbol] = None
    args: Tuple[AtomArg, ...] = ()
    s: frozenset = frozenset()
    subs: Tuple["Concept", ...] = ()
    n: int = 0
    has_necess: bool = False

    def __str__(self) -> str:
        return format_concept(self)

    def __repr__(self) -> str:
        return f"<concept {self.cid}: {format_concept(self)}>"


_lock = threading.Lock()
_table: dict = {}
_next_cid = 0


def _intern(key, **fields) -> Concept:
    global _next_cid
    with _lock:
        found = _table.get(key)
        if found is not None:
            return found
        node = Concept(cid=_next_cid, **fields)
        _next_cid += 1
        _table[key] = node
        return node


def registry_size() -> int:
    return len(_table)


def atom_concept(pred: PredicateSymbol, args: Iterable[AtomArg]) -> Concept:
    """The concept of a predicate applied to slots and fixed elements.

    Slots are 1-based and must be numbered by first occurrence
    (1, 2, ... in reading order); repeats are allowed.  The degree is
    the number of distinct slots, so a fully ground atom is a
    proposition.

    Raises:
        ConceptError: on arity mismatch or bad slot numbering.
    """
    args = tuple(args)
    if len(args) != pred.arity:
        raise ConceptError(
            f"{pred} applied to {len(args)} arguments"
        )
    seen = []
    for a in args:
        if isinstance(a, bool) or not isinstance(a, (int, Particular, ConceptHandle)):
            raise ConceptError(f"bad atom argument {a!r}")
        if isinstance(a, int):
            if a == len(seen) + 1:
                seen.append(a)
            elif not (1 <= a <= len(seen)):
                raise ConceptError(
                    f"slot {a} out of order; slots must be numbered by first occurrence"
                )
    degree = len(seen)
    if pred == ID_PRED and args == (1, 2):
        return ID_CONCEPT
    return _intern(("atom", pred, args), kind="atom", degree=degree, pred=pred, args=args)


def conj(s, u: Concept, v: Concept) -> Concept:
    """Conjunction joining u's and v's slots along the index pairs in s.

    The degree follows the join arity rule when s is well formed for
    the two degrees, and is the plain sum otherwise (the extension side
    then degrades to a cartesian product the same way).
    """
    s = frozenset(tuple(p) for p in s)
    if join_spec_ok(s, u.degree, v.degree):
        degree = u.degree + v.degree - len(s)
    else:
        degree = u.degree + v.degree
    return _intern(
        ("conj", s, u.cid, v.cid),
        kind="conj",
        degree=degree,
        s=s,
        subs=(u, v),
        has_necess=u.has_necess or v.has_necess,
    )


def neg(u: Concept) -> Concept:
    """Complement concept; neg(neg(u)) collapses to u."""
    if u.kind == "neg":
        return u.subs[0]
    return _intern(
        ("neg", u.cid), kind="neg", degree=u.degree, subs=(u,), has_necess=u.has_necess
    )


def exists(n, u: Concept) -> Concept:
    """Quantify away slot n (1-based).  Out-of-range n, including the
    0 used for vacuous quantification, is the identity and returns u
    itself."""
    if not (isinstance(n, int) and 1 <= n <= u.degree):
        return u
    return _intern(
        ("exists", n, u.cid),
        kind="exists",
        degree=u.degree - 1,
        n=n,
        subs=(u,),
        has_necess=u.has_necess,
    )


def union_concepts(bs: Iterable[Concept]) -> Concept:
    """Union of a non-empty set of same-degree concepts.

    Set semantics: duplicates collapse, and a singleton returns its
    element unchanged.

    Raises:
        DegreeError: if bs is empty or degrees are mixed.
    """
    by_cid = {u.cid: u for u in bs}
    if not by_cid:
        raise DegreeError("union over the empty set")
    members = tuple(by_cid[c] for c in sorted(by_cid))
    degrees = {u.degree for u in members}
    if len(degrees) != 1:
        raise DegreeError(f"union over mixed degrees {sorted(degrees)}")
    if len(members) == 1:
        return members[0]
    return _intern(
        ("union", tuple(u.cid for u in members)),
        kind="union",
        degree=members[0].degree,
        subs=members,
        has_necess=any(u.has_necess for u in members),
    )


def necess(u: Concept) -> Concept:
    """The rigidified concept: its extension is the same in every world
    of a world set (the intersection of u's extensions)."""
    return _intern(
        ("necess", u.cid),
        kind="necess",
        degree=u.degree,
        subs=(u,),
        has_necess=True,
    )


ID_CONCEPT = _intern(("id",), kind="id", degree=2)
TRUTH_CONCEPT = _intern(("truth",), kind="truth", degree=0)


def _format_arg(a: AtomArg) -> str:
    if isinstance(a, int):
        return f"_{a}"
    if isinstance(a, ConceptHandle):
        return f"@{a.cid}"
    return a.name


def format_concept(u: Concept) -> str:
    """S-expression rendering, e.g.
    (conj {(1,1)} (atom p1/1 _1) (neg (atom p2/1 _1)))."""
    if u.kind == "atom":
        head = f"atom {u.pred}"
        if u.args:
            head += " " + " ".join(_format_arg(a) for a in u.args)
        return f"({head})"
    if u.kind == "conj":
        pairs = ",".join(f"({i},{j})" for i, j in sorted(u.s))
        return f"(conj {{{pairs}}} {format_concept(u.subs[0])} {format_concept(u.subs[1])})"
    if u.kind == "neg":
        return f"(neg {format_concept(u.subs[0])})"
    if u.kind == "exists":
        return f"(exists {u.n} {format_concept(u.subs[0])})"
    if u.kind == "union":
        return f"(union {' '.join(format_concept(m) for m in u.subs)})"
    if u.kind == "necess":
        return f"(necess {format_concept(u.subs[0])})"
    if u.kind == "id":
        return "(id)"
    if u.kind == "truth":
        return "(truth)"
    raise ConceptError(f"unknown concept kind {u.kind!r}")
