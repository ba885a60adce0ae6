"""Tests for the two-step semantics against hand-derived extensions and
the brute-force reference evaluator.

Fixture world w1: D = {a, b}, p = {(a)}, q = {(a,b), (b,b)}, r empty,
c -> a, d -> b.  Expected relations below were worked out on paper from
the definitions before the implementation ran; derivations are noted
inline.
"""
import itertools

import pytest
from hypothesis import given, settings, strategies as st

from intlog.concepts import (
    ID_CONCEPT,
    TRUTH_CONCEPT,
    atom_concept,
    conj,
    exists,
    necess,
    neg,
    union_concepts,
)
from intlog.relalg import (
    ConceptHandle,
    FALSE,
    Particular,
    Relation,
    TRUE,
    rel,
    rel_equiv,
)
from intlog.semantics import (
    DiagramReport,
    SemanticsError,
    World,
    WorldError,
    assignment_extend,
    check_diagram,
    check_tarski_constraint,
    eval_abstraction,
    eval_formula,
    extensionalize,
    extensionalize_nomemo,
    interpret,
    interpret_abstraction,
    load_world,
    tarski_eval,
    tarski_satisfied,
)
from intlog.syntax import (
    Abstraction,
    AssignmentError,
    AbstractionError,
    Atom,
    Conj,
    Exists,
    Neg,
    PredicateSymbol,
    Variable,
    free_vars,
    make_abstraction,
    make_signature,
    parse_formula,
    parse_term,
)

A = Particular("a")
B = Particular("b")
P = PredicateSymbol("p", 1)
Q = PredicateSymbol("q", 2)
R = PredicateSymbol("r", 2)

SIG = make_signature(preds=[("p", 1), ("q", 2), ("r", 2)], consts=["c", "d"])

W1_TEXT = """\
# small fixture world
domain a b
const c = a
const d = b
rel p/1 = (a)
rel q/2 = (a,b) (b,b)
"""


@pytest.fixture()
def w1():
    return load_world(W1_TEXT, SIG, name="w1")


@pytest.fixture()
def w2():
    return World(
        "w2",
        (A, B),
        {"c": B, "d": A},
        {P: rel(1, [(B,)]), Q: rel(2, [(A, A)]), R: rel(2, [])},
    )


def parse(text):
    return parse_formula(text, SIG)


class TestLoadWorld:
    def test_fixture_contents(self, w1):
        assert w1.domain == frozenset([A, B])
        assert w1.const_map == {"c": A, "d": B}
        assert w1.pred_map[P] == rel(1, [(A,)])
        assert w1.pred_map[Q] == rel(2, [(A, B), (B, B)])
        # r/2 has no rel line, defaults to empty
        assert w1.pred_map[R] == rel(2, [])

    def test_identity_relation_automatic(self, w1):
        ident = w1.pred_map[PredicateSymbol("==", 2)]
        assert ident == rel(2, [(A, A), (B, B)])

    def test_arity_zero_relation(self):
        sig = make_signature(preds=[("s", 0)], consts=[])
        w = load_world("domain a\nrel s/0 = ()", sig)
        assert w.pred_map[PredicateSymbol("s", 0)] == TRUE
        w = load_world("domain a\nrel s/0 =", sig)
        assert w.pred_map[PredicateSymbol("s", 0)] == FALSE

    def test_reify_adds_concept_element(self):
        text = "domain a b\nconst c = a\nconst d = b\nreify unicorn = << p(x) >>_{x}\n"
        w = load_world(text, SIG)
        e = w.element_names["unicorn"]
        assert isinstance(e, ConceptHandle)
        assert e.cid == atom_concept(P, (1,)).cid
        assert e in w.domain

    def test_reified_element_usable_in_relations(self):
        text = (
            "domain a b\nconst c = a\nconst d = b\n"
            "reify unicorn = << p(x) >>_{x}\n"
            "rel p/1 = (a) (unicorn)\n"
        )
        w = load_world(text, SIG)
        u = w.element_names["unicorn"]
        assert (u,) in w.pred_map[P].tuples
        # the handle participates in identity like any element
        assert (u, u) in w.pred_map[PredicateSymbol("==", 2)].tuples

    def test_reify_beta_enumerates_elements_declared_so_far(self):
        # both reify lines close over D = {a, b}; the second sees the
        # first handle only as a value, not as a beta instance
        text = (
            "domain a b\nconst c = a\nconst d = b\n"
            "reify nothing = << p(x) & ~p(x) >>_{}^{x}\n"
        )
        w = load_world(text, SIG)
        h = w.element_names["nothing"]
        expected = union_concepts(
            [
                interpret(parse("p(#a) & ~p(#a)")),
                interpret(parse("p(#b) & ~p(#b)")),
            ]
        )
        assert h.cid == expected.cid

    @pytest.mark.parametrize(
        "text,msg",
        [
            ("rel p/1 = (a)", "domain must be declared"),
            ("domain a\ndomain b", "twice"),
            ("domain a a", "duplicate"),
            ("domain a\nconst e = a", "not declared"),
            ("domain a\nconst c = zz", "unknown element"),
            ("domain a\nconst c = a\nconst c = a", "mapped twice"),
            ("domain a\nrel p/3 = (a,a,a)", "not declared"),
            ("domain a\nrel p/1 = (a,a)", "expected 1"),
            ("domain a\nrel p/1 = (zz)", "unknown element"),
            ("domain a\nrel p/1 = (a)\nrel p/1 = (a)", "twice"),
            ("domain a\nreify u = c", "abstraction"),
            ("domain a\nreify u = p(x)", "reify u:"),
            ("domain a\nreify u = << p(x) >>_{x}\nreify u = << p(x) >>_{x}", "taken"),
            ("domain a\nwat", "cannot parse"),
            ("domain a\nrel p/1 = (a) b", "cannot parse"),
            ("", "no domain"),
        ],
    )
    def test_bad_files(self, text, msg):
        with pytest.raises(WorldError, match=msg):
            load_world(text, SIG)

    def test_missing_const_mapping(self):
        with pytest.raises(WorldError, match="without denotation"):
            load_world("domain a b\nconst c = a", SIG)

    def test_comments_and_blank_lines(self):
        text = "# header\n\ndomain a\n  # indented comment\nconst c = a\nconst d = a\n"
        w = load_world(text, SIG)
        assert w.domain == frozenset([A])


class TestInterpret:
    def test_atom_slots_first_occurrence(self):
        assert interpret(parse("q(x, y)")) is atom_concept(Q, (1, 2))
        assert interpret(parse("q(y, x)")) is atom_concept(Q, (1, 2))
        assert interpret(parse("q(x, x)")) is atom_concept(Q, (1, 1))

    def test_atom_ground_args(self, w1):
        u = interpret(parse("q(c, x)"), w1)
        assert u is atom_concept(Q, (A, 1))
        assert u.degree == 1

    def test_elem_literal_without_world(self):
        u = interpret(parse("p(#a)"))
        assert u is atom_concept(P, (Particular("a"),))

    def test_constant_without_world_fails(self):
        with pytest.raises(SemanticsError, match="needs a world"):
            interpret(parse("p(c)"))

    def test_unknown_element_literal(self, w1):
        with pytest.raises(SemanticsError, match="unknown element"):
            interpret(parse("p(#zz)"), w1)

    def test_true_atom(self):
        assert interpret(parse("true")) is TRUTH_CONCEPT

    def test_identity_atom(self):
        assert interpret(parse("x == y")) is ID_CONCEPT
        assert interpret(parse("x == x")) is atom_concept(
            PredicateSymbol("==", 2), (1, 1)
        )

    def test_conj_join_spec_from_free_tuples(self):
        u = interpret(parse("q(x, y) & q(y, z)"))
        expect = conj({(2, 1)}, atom_concept(Q, (1, 2)), atom_concept(Q, (1, 2)))
        assert u is expect
        assert u.degree == 3

    def test_conj_disjoint_free_tuples(self):
        u = interpret(parse("p(x) & p(y)"))
        assert u.s == frozenset()
        assert u.degree == 2

    def test_exists_position(self):
        # free tuple of the body is (x, y); quantifying y projects
        # column 2, quantifying x column 1
        body = atom_concept(Q, (1, 2))
        assert interpret(parse("exists y . q(x, y)")) is exists(2, body)
        assert interpret(parse("exists x . q(x, y)")) is exists(1, body)

    def test_exists_vacuous_is_body(self):
        # z is not free in q(x, y): index 0, same concept
        assert interpret(parse("exists z . q(x, y)")) is atom_concept(Q, (1, 2))

    def test_degree_tracks_free_tuple(self):
        for text in [
            "p(x)",
            "~p(x)",
            "q(x, y) & q(y, z)",
            "exists x . (p(x) & q(x, y))",
            "forall x . p(x)",
            "p(x) | q(x, y)",
            "x == y -> q(x, y)",
            "exists1 x . p(x)",
        ]:
            f = parse(text)
            assert interpret(f).degree == len(free_vars(f))

    def test_abstraction_argument_reifies(self, w1):
        u = interpret(parse("q(x, << p(y) >>_{y})"), w1)
        h = ConceptHandle(atom_concept(P, (1,)).cid)
        assert u is atom_concept(Q, (1, h))


class TestInterpretAbstraction:
    def test_beta_empty_is_body_interpretation(self, w1):
        t = parse_term("<< q(x, y) >>_{x,y}", SIG)
        assert interpret_abstraction(t, w1) is atom_concept(Q, (1, 2))

    def test_alpha_order_is_inert(self, w1):
        t1 = parse_term("<< q(x, y) >>_{x,y}", SIG)
        t2 = parse_term("<< q(x, y) >>_{y,x}", SIG)
        assert interpret_abstraction(t1, w1) is interpret_abstraction(t2, w1)

    def test_beta_union_members(self, w1):
        t = parse_term("<< q(x, y) >>_{x}^{y}", SIG)
        u = interpret_abstraction(t, w1)
        expect = union_concepts(
            [interpret(parse("q(x, #a)")), interpret(parse("q(x, #b)"))]
        )
        assert u is expect
        assert u.degree == 1

    def test_beta_needs_world(self):
        t = parse_term("<< q(x, y) >>_{x}^{y}", SIG)
        with pytest.raises(SemanticsError, match="needs a world"):
            interpret_abstraction(t)

    def test_malformed_term_rejected(self, w1):
        t = Abstraction(parse("q(x, y)"), ("x", "x"), ())
        with pytest.raises(AbstractionError):
            interpret_abstraction(t, w1)
        t = Abstraction(parse("q(x, y)"), ("x",), ())
        with pytest.raises(AbstractionError):
            interpret_abstraction(t, w1)


class TestAssignmentExtend:
    def test_variable(self, w1):
        assert assignment_extend(Variable("x"), {"x": B}, w1) is B

    def test_unbound_variable(self, w1):
        with pytest.raises(AssignmentError, match="cover"):
            assignment_extend(Variable("x"), {}, w1)

    def test_constant_and_literal(self, w1):
        assert assignment_extend(parse_term("c", SIG), {}, w1) == A
        assert assignment_extend(parse_term("#b", SIG), {}, w1) == B

    def test_abstraction_closes_beta_through_assignment(self, w1):
        t = parse_term("<< q(x, y) >>_{x}^{y}", SIG)
        e = assignment_extend(t, {"y": B}, w1)
        assert isinstance(e, ConceptHandle)
        assert e.cid == interpret(parse("q(x, #b)")).cid

    def test_abstraction_ignores_irrelevant_bindings(self, w1):
        t = parse_term("<< p(x) >>_{x}", SIG)
        e = assignment_extend(t, {"y": B, "z": A}, w1)
        assert e.cid == atom_concept(P, (1,)).cid


class TestExtensions:
    """Frozen extensions in w1, each derived by hand from the fixture
    relations."""

    CASES = [
        # p = {(a)}
        ("p(x)", rel(1, [(A,)], attrs=("x",))),
        ("~p(x)", rel(1, [(B,)], attrs=("x",))),
        # join on the shared x: only (a) survives against q's (a,b)
        ("p(x) & q(x, y)", rel(2, [(A, B)], attrs=("x", "y"))),
        # q joined with itself on y: (a,b)+(b,b) and (b,b)+(b,b)
        ("q(x, y) & q(y, z)", rel(3, [(A, B, B), (B, B, B)], attrs=("x", "y", "z"))),
        # projecting column 1 out of {(a,b)}
        ("exists x . (p(x) & q(x, y))", rel(1, [(B,)], attrs=("y",))),
        ("exists y . q(x, y)", rel(1, [(A,), (B,)], attrs=("x",))),
        ("exists x . q(x, y)", rel(1, [(B,)], attrs=("y",))),
        # vacuous quantifier leaves the extension alone
        ("exists z . q(x, y)", rel(2, [(A, B), (B, B)], attrs=("x", "y"))),
        ("exists x . p(x)", TRUE),
        # not every element is p
        ("forall x . p(x)", FALSE),
        ("true", TRUE),
        ("~true", FALSE),
        # identity against a constant: c -> a
        ("x == c", rel(1, [(A,)], attrs=("x",))),
        ("x == y", rel(2, [(A, A), (B, B)], attrs=("x", "y"))),
        # repeated variable selects the diagonal of q
        ("q(x, x)", rel(1, [(B,)], attrs=("x",))),
        ("q(c, x)", rel(1, [(B,)], attrs=("x",))),
        ("q(#a, #b)", TRUE),
        ("q(#b, #a)", FALSE),
        ("r(x, y)", rel(2, [], attrs=("x", "y"))),
        # derived connectives reduce to the core before compiling
        ("p(x) | q(x, x)", rel(1, [(A,), (B,)], attrs=("x",))),
        ("p(x) -> q(x, x)", rel(1, [(B,)], attrs=("x",))),
        ("p(x) <-> q(x, x)", rel(1, [], attrs=("x",))),
        # exactly one element satisfies p
        ("exists1 x . p(x)", TRUE),
        ("exists1 x . (p(x) | ~p(x))", FALSE),
    ]

    @pytest.mark.parametrize("text,expected", CASES, ids=[c[0] for c in CASES])
    def test_frozen_extension(self, w1, text, expected):
        assert eval_formula(parse(text), w1) == expected

    @pytest.mark.parametrize("text,expected", CASES, ids=[c[0] for c in CASES])
    def test_reference_evaluator_agrees(self, w1, text, expected):
        got = tarski_eval(parse(text), w1)
        assert got.same_tuples(expected)

    def test_attrs_are_free_tuple(self, w1):
        r = eval_formula(parse("q(y, x) & p(z)"), w1)
        assert r.attrs == ("y", "x", "z")

    def test_closed_formula_unlabeled_truth_value(self, w1):
        r = eval_formula(parse("exists x . p(x)"), w1)
        assert r.arity == 0 and r.attrs is None and r.as_bool()


class TestAbstractionExtensions:
    def test_projection_vs_union_route(self, w1):
        # union over y of q(x, y=e) gives {} for e=a and {(a),(b)} for
        # e=b, so the union is {(a),(b)}, matching the projection
        t = parse_term("<< q(x, y) >>_{x}^{y}", SIG)
        got = eval_abstraction(t, w1)
        assert got == rel(1, [(A,), (B,)], attrs=("x",))
        via_exists = eval_formula(parse("exists y . q(x, y)"), w1)
        assert got.same_tuples(via_exists)

    def test_first_position_abstracted(self, w1):
        # union over x: rows of q starting with a give {(b)}, rows
        # starting with b give {(b)} again
        t = parse_term("<< q(x, y) >>_{y}^{x}", SIG)
        assert eval_abstraction(t, w1) == rel(1, [(B,)], attrs=("y",))

    def test_contradiction_is_empty_everywhere(self, w1, w2):
        t = parse_term("<< p(x) & ~p(x) >>_{}^{x}", SIG)
        for w in (w1, w2):
            assert eval_abstraction(t, w) == FALSE

    def test_columns_follow_body_order_not_alpha_order(self, w1):
        t1 = parse_term("<< q(x, y) >>_{x,y}", SIG)
        t2 = parse_term("<< q(x, y) >>_{y,x}", SIG)
        r1, r2 = eval_abstraction(t1, w1), eval_abstraction(t2, w1)
        assert r1 == r2
        assert r1.attrs == ("x", "y")
        assert rel_equiv(r1, r2)

    def test_beta_open_argument_drops_labels(self, w1):
        # the argument's reification makes the compiled degree 1 while
        # the formula has two free variables, so no labels are attached
        f = parse("q(x, << q(z, y) >>_{z}^{y})")
        assert free_vars(f) == ("x", "y")
        r = eval_formula(f, w1)
        assert r.arity == 1 and r.attrs is None


class TestMemo:
    def test_memo_transparent(self, w1):
        u = interpret(parse("exists y . (q(x, y) & p(x))"))
        first = extensionalize(u, w1)
        assert extensionalize(u, w1) is first
        assert extensionalize_nomemo(u, w1) == first
        w1.clear_memo()
        assert extensionalize(u, w1) == first

    def test_nomemo_does_not_populate(self, w1):
        u = interpret(parse("p(x)"))
        extensionalize_nomemo(u, w1)
        assert u.cid not in w1._memo

    def test_memo_is_per_world(self, w1, w2):
        u = interpret(parse("p(x)"))
        assert extensionalize(u, w1) == rel(1, [(A,)])
        assert extensionalize(u, w2) == rel(1, [(B,)])


class TestNecessOutsideWorldSet:
    def test_requires_world_set(self, w1):
        u = necess(interpret(parse("p(x)")))
        with pytest.raises(SemanticsError, match="world set"):
            extensionalize(u, w1)


DIAGRAM_FORMULAS = [
    "p(x)",
    "~p(x)",
    "q(x, y)",
    "q(x, x)",
    "q(c, x)",
    "p(d)",
    "x == y",
    "x == c",
    "#a == #a",
    "true",
    "~true",
    "p(x) & q(x, y)",
    "q(x, y) & q(y, z)",
    "p(x) | q(x, y)",
    "p(x) -> q(x, x)",
    "p(x) <-> p(y)",
    "exists x . q(x, y)",
    "exists y . q(x, y)",
    "exists z . q(x, y)",
    "forall x . (p(x) -> exists y . q(x, y))",
    "exists1 x . p(x)",
    "exists x . (p(x) & exists y . (q(x, y) & ~(x == y)))",
    "q(x, << p(y) >>_{y})",
    "p(<< q(x, y) >>_{x,y})",
    "~q(<< p(x) >>_{x}, << p(x) >>_{x})",
]


class TestCheckDiagram:
    @pytest.mark.parametrize("text", DIAGRAM_FORMULAS)
    def test_fixture_worlds(self, w1, w2, text):
        f = parse(text)
        for w in (w1, w2):
            report = check_diagram(f, w)
            assert report.ok, str(report)

    def test_diagram_with_reified_elements(self):
        text = (
            "domain a b\nconst c = a\nconst d = b\n"
            "reify unicorn = << p(x) >>_{x}\n"
            "rel p/1 = (a) (unicorn)\n"
            "rel q/2 = (a, unicorn)\n"
        )
        w = load_world(text, SIG)
        for t in ["p(<< p(x) >>_{x})", "q(x, << p(y) >>_{y})", "exists x . q(x, x)"]:
            assert check_diagram(parse(t), w).ok

    def test_report_rendering(self, w1):
        f = parse("p(x)")
        ok = check_diagram(f, w1)
        assert str(ok) == "ok: p(x) @ w1"
        bad = DiagramReport(False, f, "w1", rel(1, [(A,)]), rel(1, []), (A,))
        assert "MISMATCH" in str(bad) and "witness (a)" in str(bad)

    def test_mismatch_detected_on_corrupted_world(self, w1):
        # evaluate once, then silently change the world behind the memo:
        # the stale cache makes the concept route disagree
        f = parse("p(x)")
        eval_formula(f, w1)
        w1.pred_map[P] = rel(1, [(A,), (B,)])
        report = check_diagram(f, w1)
        assert not report.ok
        assert report.witness == (B,)


class TestTarskiConstraint:
    def test_holds_on_fixture(self, w1, w2):
        for text in DIAGRAM_FORMULAS:
            f = parse(text)
            fv = free_vars(f)
            for w in (w1, w2):
                for combo in itertools.product((A, B), repeat=len(fv)):
                    g = dict(zip(fv, combo))
                    assert check_tarski_constraint(f, g, w), (text, combo, w.name)

    def test_requires_total_assignment(self, w1):
        with pytest.raises(AssignmentError):
            check_tarski_constraint(parse("q(x, y)"), {"x": A}, w1)

    def test_satisfaction_basics(self, w1):
        assert tarski_satisfied(parse("q(x, y)"), {"x": A, "y": B}, w1)
        assert not tarski_satisfied(parse("q(x, y)"), {"x": B, "y": A}, w1)
        assert tarski_satisfied(parse("exists y . q(x, y)"), {"x": B}, w1)


# ---------------------------------------------------------------------------
# randomized agreement between the two routes
# ---------------------------------------------------------------------------

ALL_PAIRS = list(itertools.product((A, B), repeat=2))


def _world_from(p_rows, q_rows, cden, dden):
    return World(
        "rw",
        (A, B),
        {"c": cden, "d": dden},
        {P: rel(1, p_rows), Q: rel(2, q_rows), R: rel(2, [])},
    )


worlds_st = st.builds(
    _world_from,
    st.sets(st.sampled_from([(A,), (B,)])),
    st.sets(st.sampled_from(ALL_PAIRS)),
    st.sampled_from((A, B)),
    st.sampled_from((A, B)),
)

variables = st.sampled_from(["x", "y", "z"])
base_terms = st.one_of(
    variables.map(Variable),
    st.sampled_from(["c", "d"]).map(lambda n: parse_term(n, SIG)),
    st.sampled_from(["#a", "#b"]).map(lambda n: parse_term(n, SIG)),
)


def _abs_arg(body, reverse):
    fv = free_vars(body)
    alpha = tuple(reversed(fv)) if reverse else fv
    return make_abstraction(body, alpha)


def _atoms(terms):
    # identity atoms draw from base terms only: the grammar does not
    # admit abstraction operands for ==
    return st.one_of(
        st.builds(lambda t: Atom(P, (t,)), terms),
        st.builds(lambda t1, t2: Atom(Q, (t1, t2)), terms, terms),
        st.builds(
            lambda t1, t2: Atom(PredicateSymbol("==", 2), (t1, t2)),
            base_terms,
            base_terms,
        ),
    )


inner_formulas = st.recursive(
    _atoms(base_terms),
    lambda sub: st.one_of(
        st.builds(Neg, sub),
        st.builds(Conj, sub, sub),
        st.builds(Exists, variables, sub),
    ),
    max_leaves=4,
)

# abstraction arguments are kept beta-closed: every free variable of the
# body is abstracted, so both evaluators resolve them assignment-free
abs_terms = st.builds(_abs_arg, inner_formulas, st.booleans())
leaf_terms = st.one_of(base_terms, abs_terms)

formulas_st = st.recursive(
    _atoms(leaf_terms),
    lambda sub: st.one_of(
        st.builds(Neg, sub),
        st.builds(Conj, sub, sub),
        st.builds(Exists, variables, sub),
    ),
    max_leaves=8,
)


@settings(max_examples=120, deadline=None)
@given(f=formulas_st, w=worlds_st)
def test_diagram_commutes_on_random_formulas(f, w):
    report = check_diagram(f, w)
    assert report.ok, str(report)


@settings(max_examples=120, deadline=None)
@given(f=formulas_st, w=worlds_st, data=st.data())
def test_tarski_constraint_on_random_assignments(f, w, data):
    fv = free_vars(f)
    combo = data.draw(st.tuples(*[st.sampled_from((A, B)) for _ in fv]))
    assert check_tarski_constraint(f, dict(zip(fv, combo)), w)


@settings(max_examples=80, deadline=None)
@given(f=formulas_st)
def test_degree_matches_free_tuple(f):
    w = _world_from([], [], A, B)
    assert interpret(f, w).degree == len(free_vars(f))
