"""Formula parsing, printing, evaluation, and definability agreement."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from valcuts.errors import ParseError, StructuralError
from valcuts.formlang import (
    DEFINITIONS,
    Add,
    BinOp,
    Budget,
    DeclaredValue,
    Domain,
    EqAtom,
    FormulaModel,
    InK,
    IntLit,
    Mul,
    Not,
    Pow,
    Quant,
    RatConst,
    Recip,
    Sub,
    Sym,
    Truth,
    ValAtom,
    Var,
    VOf,
    check_definition,
    evaluate,
    membership,
    parse,
    print_formula,
)
from valcuts.gpsfield import INF
from valcuts.ogroup import ConvexSubgroup
from valcuts.scenarios import abhyankar, example_e1, kummer_mixed


class TestParser:
    def test_coarse_ring_body(self):
        f = parse("forall c in K : v(x^p - x - c^p + c) < v(b)")
        assert isinstance(f, Quant) and f.kind == "forall" and f.domain is Domain.K
        body = f.body
        assert isinstance(body, ValAtom) and body.rel == "<"
        assert body.left == VOf(Add(Sub(Sub(Pow(Var("x"), "p"), Var("x")),
                                        Pow(Var("c"), "p")), Var("c")))

    def test_negated_valuation(self):
        f = parse("exists c in K : v(b) >= -v(x - c)")
        assert f.body.right == VOf(Sub(Var("x"), Var("c")), negated=True)

    def test_reflexive_atom(self):
        f = parse("v(0) = v(0)")
        assert isinstance(f, ValAtom)

    def test_domains(self):
        f = parse("forall x in L\\K : inK(x^p - x) -> v(x) < 0")
        assert f.domain is Domain.L_MINUS_K
        assert isinstance(f.body, BinOp) and f.body.op == "->"
        assert f.body.right.right == RatConst(Fraction(0))

    def test_reciprocal_and_product(self):
        f = parse("v((zeta_p - 1) * (1/(x - c))) <= v(b)")
        term = f.left.term
        assert isinstance(term, Mul)
        assert term.left == Sub(Sym("zeta_p"), IntLit(1))
        assert term.right == Recip(Sub(Var("x"), Var("c")))

    def test_errors_carry_position(self):
        with pytest.raises(ParseError) as err:
            parse("forall c in K v(c) > 0")
        assert err.value.position > 0
        with pytest.raises(ParseError):
            parse("v(x >")
        with pytest.raises(ParseError):
            parse("exists in K : v(b) > 0")

    def test_roundtrip_on_catalog(self):
        for text in DEFINITIONS.values():
            ast = parse(text)
            assert parse(print_formula(ast)) == ast

    def test_roundtrip_on_random_asts(self):
        rng = random.Random(5)

        def rand_term(depth):
            if depth == 0:
                return rng.choice([Var("b"), Var("c"), Sym("t"), Sym("theta"),
                                   IntLit(rng.randint(0, 3))])
            kind = rng.randrange(5)
            if kind == 0:
                return Add(rand_term(depth - 1), rand_term(depth - 1))
            if kind == 1:
                return Sub(rand_term(depth - 1), rand_term(depth - 1))
            if kind == 2:
                return Mul(rand_term(depth - 1), rand_term(depth - 1))
            if kind == 3:
                return Pow(rand_term(depth - 1), rng.choice([2, 3, "p"]))
            return Recip(rand_term(depth - 1))

        def rand_formula(depth):
            if depth == 0:
                kind = rng.randrange(3)
                if kind == 0:
                    return ValAtom(VOf(rand_term(1), negated=rng.random() < 0.3),
                                   rng.choice(["<", "<=", "=", ">=", ">"]),
                                   rng.choice([VOf(rand_term(1)),
                                               RatConst(Fraction(rng.randint(-2, 2)))]))
                if kind == 1:
                    return EqAtom(rand_term(1), rand_term(1))
                return InK(rand_term(1))
            kind = rng.randrange(4)
            if kind == 0:
                return BinOp(rng.choice(["and", "or", "->"]),
                             rand_formula(depth - 1), rand_formula(depth - 1))
            if kind == 1:
                return Not(rand_formula(depth - 1))
            return Quant(rng.choice(["forall", "exists"]), rng.choice(["c", "y"]),
                         rng.choice(list(Domain)), rand_formula(depth - 1))

        for _ in range(150):
            ast = rand_formula(rng.randrange(3))
            assert parse(print_formula(ast)) == ast


class TestEvaluation:
    def test_reflexivity_of_infinite_valuations(self):
        sc = abhyankar(3)
        res = evaluate("v(0) = v(0)", sc.fmodel)
        assert res.value is Truth.TRUE

    def test_ram_ideal_member_by_oracle(self):
        sc = abhyankar(2)
        b = sc.model.monomial(1, sc.model.value_group.element(Fraction(1, 2)))
        res = evaluate(DEFINITIONS["ram-ideal-as"], sc.fmodel, bindings={"b": b})
        assert res.value is Truth.TRUE
        assert res.mode == "oracle"

    def test_ram_ideal_nonmember(self):
        sc = abhyankar(2)
        b = sc.model.monomial(1, sc.model.value_group.element(-1))
        res = evaluate(DEFINITIONS["ram-ideal-as"], sc.fmodel, bindings={"b": b})
        assert res.value is Truth.FALSE
        # cross-check against explicit approximants c = b_k
        theta = sc.fmodel.immediates[0].carrier
        from valcuts.gpsfield import val_diff

        for k in range(12):
            c = theta.partial_sum(k)
            assert not b.valuation() >= -val_diff(theta, c)

    def test_boundary_membership(self):
        sc = abhyankar(3)
        one = sc.model.one()
        inside = evaluate(DEFINITIONS["ram-ideal-as"], sc.fmodel, bindings={"b": one})
        assert inside.value is Truth.FALSE  # v = 0 sits outside the open cone
        coarse = evaluate(DEFINITIONS["coarse-ring-as"], sc.fmodel, bindings={"b": one})
        assert coarse.value is Truth.TRUE

    def test_unmatched_forall_is_unknown(self):
        # every candidate satisfies the body, but a finite pool cannot close
        # a universal claim over an infinite domain
        sc = abhyankar(2)
        res = evaluate("forall c in K : inK(c + c)", sc.fmodel,
                       budget=Budget(max_candidates=10))
        assert res.value is Truth.UNKNOWN
        assert res.mode == "bounded"
        assert res.candidates_used > 0

    def test_bounded_forall_refuted_by_counterexample(self):
        sc = abhyankar(2)
        res = evaluate("forall c in K : v(c * c) >= v(c)", sc.fmodel,
                       budget=Budget(max_candidates=10))
        assert res.value is Truth.FALSE  # any c of negative value refutes it
        assert res.witness is not None

    def test_bounded_exists_finds_witness(self):
        sc = abhyankar(2)
        res = evaluate("exists c in K : v(c) = 2", sc.fmodel)
        assert res.value is Truth.TRUE
        assert res.mode == "bounded" and res.witness is not None

    def test_kleene_monotone_under_budget(self):
        sc = abhyankar(2)
        texts = [
            "exists c in K : v(c) = 2",
            "forall c in K : v(c * c) >= v(c)",
            "exists c in K : v(c) = 2 or v(b) < 0",
            "not (exists c in K : v(c) = 3)",
        ]
        b = sc.model.one()
        for text in texts:
            small = evaluate(text, sc.fmodel, bindings={"b": b},
                             budget=Budget(max_candidates=2, schedule_depth=1))
            big = evaluate(text, sc.fmodel, bindings={"b": b},
                           budget=Budget(max_candidates=128, schedule_depth=12))
            if small.value is not Truth.UNKNOWN:
                assert small.value == big.value

    def test_oracle_agrees_with_bounded_witnesses(self):
        # where the oracle says TRUE for an existential, explicit approximants
        # must also witness it
        sc = abhyankar(3)
        theta = sc.fmodel.immediates[0].carrier
        from valcuts.gpsfield import val_diff

        g = sc.model.value_group
        for num in (1, 2, 5):
            b = sc.model.monomial(1, g.element(Fraction(num, 9)))
            res = evaluate(DEFINITIONS["ram-ideal-as"], sc.fmodel, bindings={"b": b})
            assert res.value is Truth.TRUE
            assert any(b.valuation() >= -val_diff(theta, theta.partial_sum(k))
                       for k in range(10))

    def test_missing_immediate_element_raises(self):
        sc = abhyankar(2)
        bare = FormulaModel(model=sc.model, immediates=(), constants={})
        with pytest.raises(StructuralError):
            evaluate("exists x in L\\K : v(x) < 0", bare)

    def test_unbound_variable_rejected(self):
        sc = abhyankar(2)
        with pytest.raises(StructuralError):
            evaluate("v(zz) = 0", sc.fmodel)
        # quantified occurrences are in scope
        ok = evaluate("exists zz in K : v(zz) = 0", sc.fmodel)
        assert ok.value is Truth.TRUE


class TestSamples:
    @staticmethod
    def series_samples(model, count, seed, include_boundary=True):
        rng = random.Random(seed)
        g = model.value_group
        p = g.prime
        out = []
        if include_boundary:
            out.append(("1", model.one(), g.zero()))
        while len(out) < count:
            coords = []
            for i in range(g.rank):
                coords.append(Fraction(rng.randint(-12, 12), p ** rng.randint(0, 3)))
            try:
                e = g.element(*coords)
            except StructuralError:
                continue
            s = model.monomial(1, e)
            out.append((f"t^{e}", s, e))
        return out

    @staticmethod
    def declared_samples(group, count, seed):
        rng = random.Random(seed)
        out = [("v=0", DeclaredValue(group.zero()), group.zero())]
        while len(out) < count:
            v = group.element(Fraction(rng.randint(-12, 12), rng.randint(1, 9)))
            out.append((f"v={v}", DeclaredValue(v), v))
        return out

    def test_ram_ideal_as_agreement(self):
        sc = abhyankar(2)
        samples = self.series_samples(sc.model, 60, 11)
        rep = check_definition(DEFINITIONS["ram-ideal-as"], sc.result("theta").ram_ideal,
                               sc.fmodel, samples, name="ram-ideal-as")
        assert rep.passed and rep.unknowns == 0

    def test_max_ideal_agreement_rank2(self):
        sc = example_e1(2)
        samples = self.series_samples(sc.model, 60, 13)
        rep = check_definition(DEFINITIONS["max-ideal"], sc.result("theta_x").max_ideal,
                               sc.fmodel, samples, name="max-ideal")
        assert rep.passed and rep.unknowns == 0

    def test_coarse_ring_as_agreement(self):
        sc = abhyankar(3)
        samples = self.series_samples(sc.model, 60, 17)
        rep = check_definition(DEFINITIONS["coarse-ring-as"], sc.result("theta").H_E,
                               sc.fmodel, samples, name="coarse-ring-as")
        assert rep.passed and rep.unknowns == 0

    def test_kummer_definitions_agree(self):
        sc = kummer_mixed(3)
        samples = self.declared_samples(sc.model.value_group, 60, 19)
        rep = check_definition(DEFINITIONS["ram-ideal-kummer"],
                               sc.result("eta").ram_ideal, sc.fmodel, samples,
                               name="ram-ideal-kummer")
        assert rep.passed and rep.unknowns == 0
        rep2 = check_definition(DEFINITIONS["coarse-ring-kummer"],
                                sc.result("eta").H_E, sc.fmodel, samples,
                                name="coarse-ring-kummer")
        assert rep2.passed and rep2.unknowns == 0

    def test_membership_of_coarsening(self):
        sc = example_e1(2)
        h1 = ConvexSubgroup(sc.model.value_group, 1)
        g = sc.model.value_group
        assert membership(h1, g.element(0, -5))
        assert membership(h1, g.element(1, 0))
        assert not membership(h1, g.element(-1, 0))
        assert membership(h1, INF)
