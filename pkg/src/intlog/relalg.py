"""Finite relational algebra over a domain of individuals.

Relations are immutable sets of equal-length tuples over a domain whose
elements are either named individuals or reified concepts.  The two
arity-0 relations act as truth values: FALSE is the empty one, TRUE is
the one holding the empty tuple.  Column indices are 1-based throughout;
optional column labels (attrs) support the label-driven operators
project_out_many and rel_equiv.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .errors import IntlogError


class RelationError(IntlogError):
    """Malformed relation value or misuse of a relational operator."""


class DomainError(RelationError):
    """A tuple element lies outside the domain it is evaluated against."""


class AttrError(RelationError):
    """A column label is missing or two label sets do not match."""


@dataclass(frozen=True)
class Particular:
    """An ordinary named individual."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ConceptHandle:
    """A reified concept playing the role of an individual.

    Equality and hashing go by the interned concept id only; the name is
    display metadata (whatever a world file chose to call the element).
    """

    cid: int
    name: Optional[str] = field(default=None, compare=False)

    def __str__(self) -> str:
        return self.name if self.name is not None else f"&{self.cid}"


DomainElement = Union[Particular, ConceptHandle]

#: The distinguished empty-tuple individual.
EMPTY = Particular("<>")


def element_key(e: DomainElement) -> tuple:
    """Sort key giving a canonical element order: EMPTY first, then
    particulars by name, then concept handles by id."""
    if isinstance(e, Particular):
        if e == EMPTY:
            return (0, "", 0)
        return (1, e.name, 0)
    return (2, "", e.cid)


def element_name(e: DomainElement) -> str:
    return str(e)


def tuple_key(t: Sequence[DomainElement]) -> tuple:
    return tuple(element_key(e) for e in t)


@dataclass(frozen=True)
class Relation:
    """A finite set of arity-length tuples with optional column labels."""

    arity: int
    tuples: frozenset
    attrs: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "tuples", frozenset(tuple(t) for t in self.tuples))
        if self.attrs is not None:
            object.__setattr__(self, "attrs", tuple(self.attrs))
        if self.arity < 0:
            raise RelationError(f"negative arity {self.arity}")
        for t in self.tuples:
            if len(t) != self.arity:
                raise RelationError(
                    f"tuple {t} has length {len(t)}, expected arity {self.arity}"
                )
        if self.attrs is not None:
            if len(self.attrs) != self.arity:
                raise AttrError(
                    f"{len(self.attrs)} labels for arity {self.arity}"
                )
            if len(set(self.attrs)) != len(self.attrs):
                raise AttrError(f"duplicate column labels in {self.attrs}")

    def sorted_tuples(self) -> list:
        return sorted(self.tuples, key=tuple_key)

    def as_bool(self) -> bool:
        """Truth value of an arity-0 relation."""
        if self.arity != 0:
            raise RelationError(f"relation of arity {self.arity} is not a truth value")
        return bool(self.tuples)

    def with_attrs(self, attrs: Optional[Sequence]) -> "Relation":
        return Relation(self.arity, self.tuples, tuple(attrs) if attrs is not None else None)

    def same_tuples(self, other: "Relation") -> bool:
        return self.arity == other.arity and self.tuples == other.tuples

    def __str__(self) -> str:
        return format_relation(self)


def rel(arity: int, tuples: Iterable = (), attrs: Optional[Sequence] = None) -> Relation:
    """Convenience constructor coercing tuples to a frozenset."""
    return Relation(arity, frozenset(tuple(t) for t in tuples), attrs)


#: Truth values: the two arity-0 relations.
TRUE = rel(0, [()])
FALSE = rel(0, [])


def truth(b: bool) -> Relation:
    return TRUE if b else FALSE


def join_spec_ok(s, k: int, j: int) -> bool:
    """Check a join index set against arities k and j.

    Every pair must address real columns (1-based) and no right-hand
    column may be matched twice, otherwise the result arity could not
    be k + j - |s|.  An ill-formed set is not an error: the join then
    degrades to the cartesian product.
    """
    seen = set()
    for pair in s:
        if not (isinstance(pair, tuple) and len(pair) == 2):
            return False
        i1, i2 = pair
        if not (isinstance(i1, int) and isinstance(i2, int)):
            return False
        if not (1 <= i1 <= k and 1 <= i2 <= j):
            return False
        if i2 in seen:
            return False
        seen.add(i2)
    return True


def _merge_attrs(a1: Optional[tuple], a2_kept: Optional[tuple]) -> Optional[tuple]:
    # Labels survive only when both sides have them and the merge stays
    # duplicate-free.
    if a1 is None or a2_kept is None:
        return None
    merged = a1 + a2_kept
    if len(set(merged)) != len(merged):
        return None
    return merged


def natural_join(r1: Relation, r2: Relation, s) -> Relation:
    """Join r1 and r2 on the 1-based index pairs in s.

    A combined tuple is kept iff the paired columns agree; the joined
    columns of r2 are dropped, so the result has r1's columns followed
    by r2's remaining columns.  An empty or ill-formed s yields the
    cartesian product.
    """
    s = frozenset(s)
    if s and join_spec_ok(s, r1.arity, r2.arity):
        drop = {i2 for _, i2 in s}
        keep = [i for i in range(1, r2.arity + 1) if i not in drop]
        out = set()
        for t1 in r1.tuples:
            for t2 in r2.tuples:
                if all(t1[i1 - 1] == t2[i2 - 1] for i1, i2 in s):
                    out.add(t1 + tuple(t2[i - 1] for i in keep))
        attrs = _merge_attrs(
            r1.attrs, tuple(r2.attrs[i - 1] for i in keep) if r2.attrs is not None else None
        )
        return Relation(r1.arity + r2.arity - len(s), frozenset(out), attrs)
    out = {t1 + t2 for t1 in r1.tuples for t2 in r2.tuples}
    return Relation(r1.arity + r2.arity, frozenset(out), _merge_attrs(r1.attrs, r2.attrs))


def complement(r: Relation, domain: Iterable) -> Relation:
    """The complement of r within domain^arity.

    Raises:
        DomainError: if a tuple element of r is not in domain.
    """
    if r.arity == 0:
        return Relation(0, frozenset() if r.tuples else frozenset({()}), r.attrs)
    dom = sorted(set(domain), key=element_key)
    domset = set(dom)
    for t in r.tuples:
        for e in t:
            if e not in domset:
                raise DomainError(f"element {element_name(e)} not in domain")
    full = set(itertools.product(dom, repeat=r.arity))
    return Relation(r.arity, frozenset(full - set(r.tuples)), r.attrs)


def f_truth(r: Relation) -> Relation:
    """Collapse r to an arity-0 truth value: TRUE iff r is non-empty."""
    return truth(bool(r.tuples))


def project_out(r: Relation, m) -> Relation:
    """Remove the m-th column (1-based).

    With m = arity = 1 this is f_truth; with m out of range it is the
    identity.  Duplicates arising from the removal collapse.
    """
    k = r.arity
    if m == 1 and k == 1:
        return f_truth(r)
    if not (isinstance(m, int) and 1 <= m <= k and k >= 2):
        return r
    out = frozenset(t[: m - 1] + t[m:] for t in r.tuples)
    attrs = r.attrs[: m - 1] + r.attrs[m:] if r.attrs is not None else None
    return Relation(k - 1, out, attrs)


def project_out_many(r: Relation, beta: Sequence) -> Relation:
    """Remove every column whose label is in beta.

    An empty beta is the identity (and needs no labels); removing all
    columns collapses to f_truth.

    Raises:
        AttrError: if r has no labels or a beta name is missing.
    """
    beta = tuple(beta)
    if not beta:
        return r
    if r.attrs is None:
        raise AttrError("relation has no column labels")
    drop = set(beta)
    for b in beta:
        if b not in r.attrs:
            raise AttrError(f"no column labeled {b!r}")
    keep = [i for i, a in enumerate(r.attrs) if a not in drop]
    if not keep:
        return f_truth(r)
    out = frozenset(tuple(t[i] for i in keep) for t in r.tuples)
    return Relation(len(keep), out, tuple(r.attrs[i] for i in keep))


def identity_relation(domain: Iterable) -> Relation:
    """The binary relation {(d, d) | d in domain}."""
    return rel(2, [(d, d) for d in domain])


def rel_equiv(r1: Relation, r2: Relation) -> bool:
    """Equality up to a column permutation aligning labels.

    Raises:
        AttrError: if either relation is unlabeled or the label sets
            differ.
    """
    if r1.attrs is None or r2.attrs is None:
        raise AttrError("rel_equiv needs labeled relations on both sides")
    if set(r1.attrs) != set(r2.attrs):
        raise AttrError(f"label sets differ: {r1.attrs} vs {r2.attrs}")
    perm = [r2.attrs.index(a) for a in r1.attrs]
    return r1.tuples == frozenset(tuple(t[i] for i in perm) for t in r2.tuples)


def format_relation(r: Relation) -> str:
    """Text form: header `rel <arity> [attrs...]`, one tuple per line,
    the empty tuple rendered as `()`."""
    head = f"rel {r.arity}"
    if r.attrs:
        head += " " + " ".join(str(a) for a in r.attrs)
    lines = [head]
    for t in r.sorted_tuples():
        lines.append("()" if not t else " ".join(element_name(e) for e in t))
    return "\n".join(lines)


def parse_relation(text: str) -> Relation:
    """Parse the format produced by format_relation.

    Elements parse as particulars; reified concept handles have no
    stable text form and are rejected.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("rel"):
        raise RelationError("expected header line 'rel <arity> [attrs...]'")
    head = lines[0].split()
    if len(head) < 2:
        raise RelationError("header is missing the arity")
    try:
        arity = int(head[1])
    except ValueError:
        raise RelationError(f"bad arity {head[1]!r}") from None
    attrs = tuple(head[2:]) or None
    tuples = []
    for ln in lines[1:]:
        if ln == "()":
            tuples.append(())
            continue
        toks = ln.split()
        for tok in toks:
            if tok.startswith("&"):
                raise RelationError("concept handles cannot be parsed from text")
        tuples.append(tuple(Particular(tok) for tok in toks))
    return rel(arity, tuples, attrs)
