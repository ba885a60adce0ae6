"""Seeded random formula generation for sweeps and corpus building.

All randomness flows through one private random.Random, so a
(signature, seed, shape) triple pins the exact output sequence across
runs and platforms.  Abstraction terms generated as atom arguments are
always beta-closed: every free variable of the body is abstracted.
Open beta lists make an argument's denotation assignment-relative,
which the diagram sweeps deliberately avoid; standalone abstraction
terms (for the projection checks) do get random alpha/beta splits.
"""
import random
from importlib import resources
from typing import Iterable, List, Sequence

from .errors import IntlogError
from .syntax import (
    Abstraction,
    Atom,
    Conj,
    Constant,
    Exists,
    Formula,
    ID_PRED,
    Neg,
    PredicateSymbol,
    Signature,
    TRUE_PRED,
    Term,
    Variable,
    free_vars,
    load_signature,
    make_abstraction,
    mk_forall,
    mk_implies,
    mk_or,
    parse_formula,
    parse_term,
)


class FormulaGenerator:
    """Random well-formed formulas over a signature.

    depth bounds the connective nesting budget (derived connectives
    spend one unit and expand afterwards); abs_prob is the chance that
    an argument position holds a reified abstraction instead of a base
    term, while budget remains.
    """

    def __init__(
        self,
        sig: Signature,
        seed: int = 0,
        depth: int = 3,
        abs_prob: float = 0.2,
        var_pool: Sequence[str] = ("x", "y", "z"),
        elem_names: Sequence[str] = (),
    ):
        if depth < 0:
            raise ValueError("depth must be non-negative")
        if not 0.0 <= abs_prob <= 1.0:
            raise ValueError("abs_prob must lie in [0, 1]")
        if not var_pool:
            raise ValueError("the variable pool must be non-empty")
        self.sig = sig
        self.depth = depth
        self.abs_prob = abs_prob
        self.var_pool = tuple(var_pool)
        self.preds = [PredicateSymbol(n, a) for n, a in sorted(sig.preds)]
        if not self.preds:
            raise ValueError("the signature declares no predicates")
        self.consts = sorted(sig.consts)
        self.elem_terms = tuple(parse_term(f"#{n}", sig) for n in elem_names)
        self.rng = random.Random(seed)

    # -- terms --------------------------------------------------------

    def base_term(self) -> Term:
        roll = self.rng.random()
        if self.consts and roll < 0.15:
            return Constant(self.rng.choice(self.consts))
        if self.elem_terms and roll < 0.3:
            return self.rng.choice(self.elem_terms)
        return Variable(self.rng.choice(self.var_pool))

    def term(self, budget: int) -> Term:
        if budget > 0 and self.rng.random() < self.abs_prob:
            return self.abstraction_argument(budget - 1)
        return self.base_term()

    def abstraction_argument(self, budget: int) -> Abstraction:
        body = self.formula(budget)
        alpha = list(free_vars(body))
        self.rng.shuffle(alpha)
        return make_abstraction(body, alpha)

    def abstraction(self, budget: int = None) -> Abstraction:
        """A standalone abstraction term with a random alpha/beta split
        of the body's free variables."""
        if budget is None:
            budget = self.depth
        body = self.formula(max(budget - 1, 0))
        fv = list(free_vars(body))
        picks = sorted(self.rng.sample(range(len(fv)), self.rng.randint(0, len(fv))))
        alpha = [fv[i] for i in picks]
        self.rng.shuffle(alpha)
        beta = [v for v in fv if v not in alpha]
        return make_abstraction(body, alpha, beta)

    # -- formulas -----------------------------------------------------

    def atom(self, budget: int) -> Formula:
        roll = self.rng.random()
        if roll < 0.05:
            return Atom(TRUE_PRED)
        if roll < 0.18:
            return Atom(ID_PRED, (self.base_term(), self.base_term()))
        pred = self.rng.choice(self.preds)
        return Atom(pred, tuple(self.term(budget) for _ in range(pred.arity)))

    _KINDS = ("atom", "neg", "conj", "exists", "forall", "or", "impl")
    _WEIGHTS = (4, 3, 3, 3, 2, 2, 2)

    def formula(self, budget: int = None) -> Formula:
        if budget is None:
            budget = self.depth
        if budget == 0:
            return self.atom(0)
        kind = self.rng.choices(self._KINDS, weights=self._WEIGHTS)[0]
        if kind == "atom":
            return self.atom(budget)
        if kind == "neg":
            return Neg(self.formula(budget - 1))
        if kind == "conj":
            return Conj(self.formula(budget - 1), self.formula(budget - 1))
        if kind == "exists":
            return Exists(self.rng.choice(self.var_pool), self.formula(budget - 1))
        if kind == "forall":
            return mk_forall(self.rng.choice(self.var_pool), self.formula(budget - 1))
        if kind == "or":
            return mk_or(self.formula(budget - 1), self.formula(budget - 1))
        return mk_implies(self.formula(budget - 1), self.formula(budget - 1))

    def formulas(self, n: int) -> List[Formula]:
        return [self.formula() for _ in range(n)]


def random_formulas(
    sig: Signature,
    n: int,
    seed: int = 0,
    depth: int = 3,
    abs_prob: float = 0.2,
    elem_names: Iterable[str] = (),
) -> List[Formula]:
    gen = FormulaGenerator(
        sig, seed=seed, depth=depth, abs_prob=abs_prob, elem_names=tuple(elem_names)
    )
    return gen.formulas(n)


# ---------------------------------------------------------------------------
# the bundled corpus
# ---------------------------------------------------------------------------

def _data_text(name: str) -> str:
    return resources.files("intlog").joinpath("data", name).read_text(encoding="utf-8")


def _corpus_lines(name: str):
    for line in _data_text(name).splitlines():
        s = line.strip()
        if s and not s.startswith("#"):
            yield s


def corpus_signature() -> Signature:
    return load_signature(_data_text("corpus_sig.txt"))


def corpus_formulas(sig: Signature = None) -> List[Formula]:
    """The bundled formula corpus, parsed against the corpus signature
    (or a caller-provided superset of it)."""
    sig = sig if sig is not None else corpus_signature()
    return [parse_formula(s, sig) for s in _corpus_lines("formulas.txt")]


def corpus_abstractions(sig: Signature = None) -> List[Abstraction]:
    """The bundled abstraction-term corpus."""
    sig = sig if sig is not None else corpus_signature()
    out = []
    for s in _corpus_lines("abstractions.txt"):
        t = parse_term(s, sig)
        if not isinstance(t, Abstraction):
            raise IntlogError(f"corpus line is not an abstraction term: {s!r}")
        out.append(t)
    return out
