"""Defect classification and defectless analysis."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from valcuts.errors import (
    InconsistentDatumError,
    NotImmediateError,
    StructuralError,
    WrongCaseError,
)
from valcuts.extension import (
    DeclaredSchedule,
    DefectDatum,
    DefectKind,
    DefectlessCase,
    DefectlessDatum,
    DefectlessKind,
    ExtensionKind,
    classify,
    coinitial_in_max_ideal,
    defectless_analyze,
    sigma_segment,
)
from valcuts.gpsfield import FieldModel, PatternSeries, Tail, compose_valuation
from valcuts.ogroup import Component, ConvexSubgroup, GroupDescriptor
from valcuts.residue import GF
from valcuts.segment import (
    CutKind,
    contains,
    element_cut,
    normalize,
    subgroup_cut,
)

from test_gpsfield import abhyankar_root, perfect_model


def abhyankar_datum(p: int) -> DefectDatum:
    m = perfect_model(p)
    return DefectDatum(name=f"abhyankar_p{p}", kind=ExtensionKind.AS_DEFECT,
                       base=m, degree=p, generator=abhyankar_root(m))


def rank2_composite(p: int):
    inner = perfect_model(p, name="K")
    outer = FieldModel(name="K((x))^(1/p^inf)", char=p,
                       value_group=GroupDescriptor((Component.PDIV,), p),
                       residue=None, residue_name="K")
    return compose_valuation(outer, inner)


class TestSigmaSegment:
    @pytest.mark.parametrize("p", [2, 3, 5])
    def test_abhyankar_positive_cone(self, p):
        sigma, approach = sigma_segment(abhyankar_datum(p))
        assert sigma.kind is CutKind.SUBGROUP and sigma.level == 1
        assert sigma.shift.is_zero and not sigma.closed
        assert approach.schedule[0] == approach.segment.group.element(Fraction(-1, p))

    def test_rank2_coarse_witness(self):
        comp = rank2_composite(2)
        L = comp.composite
        theta_x = PatternSeries(L, L.zero(),
                                (Tail(L.residue.one(), L.value_group.element(-1, 0), 1),))
        datum = DefectDatum(name="theta_x", kind=ExtensionKind.AS_DEFECT,
                            base=L, degree=2, generator=theta_x)
        sigma, _ = sigma_segment(datum)
        assert sigma == normalize(subgroup_cut(ConvexSubgroup(L.value_group, 1)))

    def test_kummer_shift_applied(self):
        # declared schedule toward -vzeta, shifted by vzeta, lands on an open
        # cut above 2*vzeta; cross-checked against sampled schedule values
        G = GroupDescriptor((Component.RAT,), 3)
        vzeta = G.element(Fraction(1, 2))
        sched = DeclaredSchedule(G, limit=-vzeta, scale=G.element(1))
        base = FieldModel(name="declared", char=0, residue_char=3, value_group=G,
                          vp=G.element(1))
        datum = DefectDatum(name="kummer_shifted", kind=ExtensionKind.KUMMER_DEFECT,
                            base=base, degree=3, generator=sched, sigma_shift=vzeta)
        sigma, approach = sigma_segment(datum)
        for v in approach.schedule:
            mirrored = vzeta - v
            assert contains(sigma, mirrored)
        assert not contains(sigma, vzeta * 2)  # the boundary itself stays out
        assert sigma == normalize(subgroup_cut(ConvexSubgroup(G, 1), shift=vzeta * 2))

    def test_non_immediate_rejected(self):
        G = GroupDescriptor((Component.PDIV,), 2)
        base = FieldModel(name="declared", char=0, residue_char=2, value_group=G)
        sched = DeclaredSchedule(G, limit=G.zero(), scale=G.element(-1))
        datum = DefectDatum(name="bad", kind=ExtensionKind.KUMMER_DEFECT,
                            base=base, degree=2, generator=sched)
        with pytest.raises(NotImmediateError):
            sigma_segment(datum)

    def test_nonpositive_declared_sigma_rejected(self):
        from valcuts.residue import GF

        G = GroupDescriptor((Component.PDIV, Component.PDIV), 2)
        base = FieldModel(name="syn", char=2, value_group=G, residue=GF(2))
        bad = [
            element_cut(G.element(-1, 0)),                       # negative minimum
            subgroup_cut(ConvexSubgroup(G, 1), closed=True),     # closed coset
            subgroup_cut(ConvexSubgroup(G, 2), shift=G.element(-1, 0)),
        ]
        for seg in bad:
            datum = DefectDatum(name="bad", kind=ExtensionKind.AS_DEFECT, base=base,
                                degree=2, declared_sigma=seg, synthetic=True)
            with pytest.raises(StructuralError):
                sigma_segment(datum)


class TestClassify:
    @pytest.mark.parametrize("p", [2, 3, 5])
    def test_abhyankar_independent(self, p):
        res = classify(abhyankar_datum(p))
        assert res.kind is DefectKind.INDEPENDENT
        assert res.H_E.is_trivial
        assert res.certificate["criteria"] == {"ideal_route": True, "segment_route": True}

    def test_rank2_theta_x_independent_at_level1(self):
        comp = rank2_composite(3)
        L = comp.composite
        theta_x = PatternSeries(L, L.zero(),
                                (Tail(L.residue.one(), L.value_group.element(-1, 0), 1),))
        res = classify(DefectDatum(name="theta_x", kind=ExtensionKind.AS_DEFECT,
                                   base=L, degree=3, generator=theta_x))
        assert res.kind is DefectKind.INDEPENDENT
        assert res.H_E.level == 1

    def test_rank2_theta_t_independent_at_trivial(self):
        comp = rank2_composite(3)
        L = comp.composite
        theta_t = comp.lift_pattern(abhyankar_root(comp.inner))
        res = classify(DefectDatum(name="theta_t", kind=ExtensionKind.AS_DEFECT,
                                   base=L, degree=3, generator=theta_t))
        assert res.kind is DefectKind.INDEPENDENT
        assert res.H_E.is_trivial

    def test_mixed_characteristic_schedule(self):
        # values -vp/p^(i+1) classify to the trivial subgroup, independent
        p = 5
        G = GroupDescriptor((Component.PDIV,), p)
        base = FieldModel(name="Qp-style", char=0, residue_char=p, value_group=G,
                          vp=G.element(1))
        sched = DeclaredSchedule(G, limit=G.zero(), scale=G.element(1))
        datum = DefectDatum(name="mixed", kind=ExtensionKind.KUMMER_DEFECT,
                            base=base, degree=p, generator=sched)
        for i in range(20):
            assert sched.value_at(i) == G.element(Fraction(-1, p ** (i + 1)))
        res = classify(datum)
        assert res.kind is DefectKind.INDEPENDENT and res.H_E.is_trivial

    def test_synthetic_principal_sigma_dependent(self):
        G = GroupDescriptor((Component.PDIV,), 2)
        base = FieldModel(name="synthetic", char=2, value_group=G, residue=GF(2))
        datum = DefectDatum(name="dep", kind=ExtensionKind.AS_DEFECT, base=base,
                            degree=2, declared_sigma=element_cut(G.element(1)),
                            synthetic=True)
        res = classify(datum)
        assert res.kind is DefectKind.DEPENDENT
        assert not res.ram_ideal.same_values(res.max_ideal)
        assert res.certificate["synthetic"] is True

    def test_synthetic_shifted_subgroup_cut_dependent(self):
        G = GroupDescriptor((Component.PDIV, Component.PDIV), 2)
        base = FieldModel(name="synthetic2", char=2, value_group=G, residue=GF(2))
        sigma = subgroup_cut(ConvexSubgroup(G, 2), shift=G.element(1, 0))
        datum = DefectDatum(name="dep2", kind=ExtensionKind.AS_DEFECT, base=base,
                            degree=2, declared_sigma=sigma, synthetic=True)
        res = classify(datum)
        assert res.kind is DefectKind.DEPENDENT
        assert res.H_E.is_trivial  # invariance of a shifted point cut

    def test_sigma_independent_of_generator_translate(self):
        # theta and theta + c generate the same extension and the same segment
        p = 2
        m = perfect_model(p)
        theta = abhyankar_root(m)
        base_res = classify(abhyankar_datum(p))
        rng = random.Random(4)
        for _ in range(10):
            c = m.zero()
            for _ in range(rng.randint(0, 3)):
                e = m.value_group.element(Fraction(rng.randint(-6, 6), p ** rng.randint(0, 2)))
                c = c + m.monomial(1, e)
            shifted = theta + c
            res = classify(DefectDatum(name="shifted", kind=ExtensionKind.AS_DEFECT,
                                       base=m, degree=p, generator=shifted))
            assert res.sigma == base_res.sigma
            assert res.H_E == base_res.H_E

    def test_drvg_base_forces_independent(self):
        # no discrete component: every pattern-built instance is independent
        for p, rank in itertools.product((2, 3), (1, 2, 3)):
            G = GroupDescriptor((Component.PDIV,) * rank, p)
            m = FieldModel(name=f"drvg_{p}_{rank}", char=p, value_group=G, residue=GF(p))
            for cls in range(rank):
                theta = PatternSeries(m, m.zero(),
                                      (Tail(m.residue.one(), G.unit(cls, -1), 1),))
                res = classify(DefectDatum(name="w", kind=ExtensionKind.AS_DEFECT,
                                           base=m, degree=p, generator=theta))
                assert res.kind is DefectKind.INDEPENDENT


class TestDefectless:
    def test_dense_step_case(self):
        # vK = q * Z[1/p] inside vL = Z[1/p]: dense class, trivial H_E
        G = GroupDescriptor((Component.PDIV,), 3)
        datum = DefectlessDatum(name="dense", group=G, q=2, star_index=0,
                                x0_value=G.element(1))
        res = defectless_analyze(datum)
        assert res.case is DefectlessCase.DL2B
        assert res.H_E.is_trivial
        assert res.max_ideal.values == normalize(element_cut(G.zero(), closed=False))
        assert not res.max_ideal.is_principal
        assert res.certificate["q_times_x0_in_vK"] is True

    def test_discrete_step_case(self):
        G = GroupDescriptor((Component.INT,), 2)
        datum = DefectlessDatum(name="discrete", group=G, q=2, star_index=0,
                                x0_value=G.element(1))
        res = defectless_analyze(datum)
        assert res.case is DefectlessCase.DL2C
        assert res.max_ideal.is_principal  # discrete quotient attains its minimum

    def test_largest_common_subgroup_rank2(self):
        # brute-force level enumeration puts H_E right below the star class
        G = GroupDescriptor((Component.PDIV, Component.PDIV), 3)
        datum = DefectlessDatum(name="rank2", group=G, q=2, star_index=0,
                                x0_value=G.element(1, 0))
        res = defectless_analyze(datum)
        assert res.H_E.level == 1
        datum2 = DefectlessDatum(name="rank2b", group=G, q=2, star_index=1,
                                 x0_value=G.element(0, 1))
        assert defectless_analyze(datum2).H_E.is_trivial

    def test_as_generator_ram_ideal(self):
        # I_E = (1/theta) at value -v(theta), principal
        G = GroupDescriptor((Component.PDIV,), 3)  # descriptor prime 3 != q
        datum = DefectlessDatum(name="as", group=G, q=2, star_index=0,
                                x0_value=G.element(-1),
                                subkind=DefectlessKind.ARTIN_SCHREIER, residue_char=2)
        res = defectless_analyze(datum)
        assert res.ram_ideal.values == element_cut(G.element(1))
        assert res.ram_ideal.is_principal

    def test_kummer_positive_value_ram_ideal(self):
        # I_E = (zeta_q - 1) at value vp/(q-1)
        G = GroupDescriptor((Component.PDIV,), 2)
        datum = DefectlessDatum(name="kummer2a", group=G, q=3, star_index=0,
                                x0_value=G.element(1),
                                subkind=DefectlessKind.KUMMER_2A, residue_char=3,
                                vp=G.element(6))
        res = defectless_analyze(datum)
        assert res.ram_ideal.values == element_cut(G.element(3))

    def test_kummer_one_unit_ram_ideal(self):
        G = GroupDescriptor((Component.PDIV,), 2)
        datum = DefectlessDatum(name="kummer2b", group=G, q=3, star_index=0,
                                x0_value=G.element(1),
                                subkind=DefectlessKind.KUMMER_2B, residue_char=3,
                                vp=G.element(6), v_eta_minus_1=G.element(1))
        res = defectless_analyze(datum)
        assert res.ram_ideal.values == element_cut(G.element(2))

    def test_value_in_vK_rejected(self):
        G = GroupDescriptor((Component.PDIV,), 3)
        with pytest.raises(WrongCaseError):
            DefectlessDatum(name="bad", group=G, q=2, star_index=0,
                            x0_value=G.element(2))

    def test_divisible_class_rejected(self):
        G = GroupDescriptor((Component.RAT,), 3)
        with pytest.raises(InconsistentDatumError):
            DefectlessDatum(name="bad", group=G, q=2, star_index=0,
                            x0_value=G.element(Fraction(1, 5)))
        Gp = GroupDescriptor((Component.PDIV,), 3)
        with pytest.raises(InconsistentDatumError):
            DefectlessDatum(name="bad", group=Gp, q=3, star_index=0,
                            x0_value=Gp.element(1))

    def test_wild_value_only_rejected(self):
        G = GroupDescriptor((Component.PDIV,), 3)
        with pytest.raises(InconsistentDatumError):
            defectless_analyze(DefectlessDatum(name="bad", group=G, q=2, star_index=0,
                                               x0_value=G.element(1), residue_char=2))

    def test_coinitiality_of_witness_values(self):
        G = GroupDescriptor((Component.PDIV,), 3)
        datum = DefectlessDatum(name="dense", group=G, q=2, star_index=0,
                                x0_value=G.element(1))
        res = defectless_analyze(datum)
        samples = [G.element(Fraction(n, 3**d) * 2)
                   for n in range(-20, 21) for d in range(0, 4)]
        floor = G.element(Fraction(1, 27))
        assert coinitial_in_max_ideal(res, samples, floor)
