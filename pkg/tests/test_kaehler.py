"""Differential presentations, zero tests, annihilators."""

from __future__ import annotations

from fractions import Fraction

from valcuts.extension import (
    DefectDatum,
    DefectKind,
    DefectlessDatum,
    DefectlessKind,
    ExtensionKind,
    classify,
    defectless_analyze,
)
from valcuts.kaehler import (
    PresentationForm,
    annihilate,
    containment_holds,
    maximality_witness,
    present,
)
from valcuts.ogroup import Component, ConvexSubgroup, GroupDescriptor
from valcuts.residue import GF
from valcuts.segment import IdealDescriptor, element_cut, subgroup_cut

from test_extension import abhyankar_datum


def below_boundary_candidates(group, boundary_gamma, depth=3, spread=4):
    """Values strictly below a principal boundary, for maximality probes."""
    p = group.prime
    out = []
    for d in range(depth + 1):
        step = group.element(*([Fraction(1, p**d)] + [0] * (group.rank - 1)))
        for k in range(1, spread):
            out.append(boundary_gamma - step * k)
    return out


class TestDefectPresentations:
    def test_independent_is_zero_with_full_ring_annihilator(self):
        res = classify(abhyankar_datum(3))
        pres = annihilate(present(res), res)
        assert pres.form is PresentationForm.RAM_QUOTIENT
        assert pres.is_zero
        assert pres.annihilator.values == element_cut(res.group.zero())
        assert containment_holds(pres)

    def test_synthetic_dependent_principal_sigma(self):
        G = GroupDescriptor((Component.PDIV,), 2)
        from valcuts.gpsfield import FieldModel

        base = FieldModel(name="syn", char=2, value_group=G, residue=GF(2))
        datum = DefectDatum(name="dep", kind=ExtensionKind.AS_DEFECT, base=base,
                            degree=2, declared_sigma=element_cut(G.element(1)),
                            synthetic=True)
        res = classify(datum)
        pres = annihilate(present(res), res)
        assert res.kind is DefectKind.DEPENDENT
        assert not pres.is_zero
        # attained infimum keeps the plain power as annihilator
        assert pres.annihilator.values == element_cut(G.element(1))
        assert containment_holds(pres)
        assert maximality_witness(pres, below_boundary_candidates(G, G.element(1)))

    def test_synthetic_dependent_open_cut_gets_improved_annihilator(self):
        G = GroupDescriptor((Component.PDIV,), 3)
        from valcuts.gpsfield import FieldModel

        base = FieldModel(name="syn2", char=3, value_group=G, residue=GF(3))
        sigma = subgroup_cut(ConvexSubgroup(G, 1), shift=G.element(1))
        datum = DefectDatum(name="dep2", kind=ExtensionKind.AS_DEFECT, base=base,
                            degree=3, declared_sigma=sigma, synthetic=True)
        res = classify(datum)
        pres = annihilate(present(res), res)
        assert res.kind is DefectKind.DEPENDENT
        # unattained infimum at 2 * shift is realized by a base-field value
        assert pres.annihilator.values == element_cut(G.element(2))
        assert pres.annihilator.values != pres.numerator.power(2).values
        assert containment_holds(pres)
        assert maximality_witness(pres, below_boundary_candidates(G, G.element(2)))

    def test_is_zero_iff_independent(self):
        from valcuts.gpsfield import FieldModel

        G = GroupDescriptor((Component.PDIV, Component.PDIV), 2)
        base = FieldModel(name="grid", char=2, value_group=G, residue=GF(2))
        segs = [
            subgroup_cut(ConvexSubgroup(G, 1)),
            subgroup_cut(ConvexSubgroup(G, 2)),
            subgroup_cut(ConvexSubgroup(G, 2), shift=G.element(1, 0)),
            element_cut(G.element(0, 1)),
            element_cut(G.element(2, -1)),
        ]
        for seg in segs:
            datum = DefectDatum(name="case", kind=ExtensionKind.AS_DEFECT, base=base,
                                degree=2, declared_sigma=seg, synthetic=True)
            res = classify(datum)
            pres = present(res)
            assert pres.is_zero == (res.kind is DefectKind.INDEPENDENT)


class TestDefectlessPresentations:
    def test_as_defectless_never_zero(self):
        G = GroupDescriptor((Component.PDIV,), 3)
        datum = DefectlessDatum(name="as", group=G, q=2, star_index=0,
                                x0_value=G.element(-1),
                                subkind=DefectlessKind.ARTIN_SCHREIER, residue_char=2)
        res = defectless_analyze(datum)
        pres = annihilate(present(res), res)
        assert pres.form is PresentationForm.RAM_MAX_QUOTIENT
        assert not pres.is_zero
        # dense class: M_E nonprincipal over the coarse ring, so the
        # annihilator is the coarsening shifted by (q-1) * v(1/theta)
        assert pres.annihilator.values == element_cut(G.element(1))
        assert containment_holds(pres)
        assert maximality_witness(pres, below_boundary_candidates(G, G.element(1)))

    def test_as_defectless_discrete_class(self):
        G = GroupDescriptor((Component.INT,), 3)
        datum = DefectlessDatum(name="as_d", group=G, q=3, star_index=0,
                                x0_value=G.element(-1),
                                subkind=DefectlessKind.ARTIN_SCHREIER, residue_char=3)
        res = defectless_analyze(datum)
        pres = annihilate(present(res), res)
        # M_E principal: annihilator is the full power (I*M)^(q-1)
        assert pres.annihilator.values == pres.numerator.power(2).values
        assert containment_holds(pres)

    def test_tame_dense_is_zero(self):
        G = GroupDescriptor((Component.PDIV,), 3)
        datum = DefectlessDatum(name="tame", group=G, q=2, star_index=0,
                                x0_value=G.element(1))
        res = defectless_analyze(datum)
        pres = annihilate(present(res), res)
        assert pres.form is PresentationForm.MAX_QUOTIENT
        assert pres.is_zero
        assert pres.annihilator.values == element_cut(G.zero())

    def test_tame_discrete_nonzero_max_ideal_annihilator(self):
        G = GroupDescriptor((Component.INT,), 3)
        datum = DefectlessDatum(name="tame_d", group=G, q=2, star_index=0,
                                x0_value=G.element(1))
        res = defectless_analyze(datum)
        pres = annihilate(present(res), res)
        assert not pres.is_zero
        assert pres.annihilator.values == res.max_ideal.power(1).values
        assert pres.annihilator_is_max_ideal  # q = 2 and M_E = M_L
        assert containment_holds(pres)

    def test_wild_kummer_value_case(self):
        G = GroupDescriptor((Component.PDIV,), 2)
        datum = DefectlessDatum(name="kummer", group=G, q=3, star_index=0,
                                x0_value=G.element(1),
                                subkind=DefectlessKind.KUMMER_2A, residue_char=3,
                                vp=G.element(6))
        res = defectless_analyze(datum)
        pres = annihilate(present(res), res)
        # vp lands above H_E, so q sits inside M_E and the module is nonzero
        assert not pres.is_zero
        assert pres.annihilator.values == element_cut(G.element(6))
        assert containment_holds(pres)
        assert maximality_witness(pres, below_boundary_candidates(G, G.element(6)))

    def test_wild_kummer_one_unit_nonzero(self):
        G = GroupDescriptor((Component.PDIV,), 2)
        datum = DefectlessDatum(name="kummer2b", group=G, q=3, star_index=0,
                                x0_value=G.element(1),
                                subkind=DefectlessKind.KUMMER_2B, residue_char=3,
                                vp=G.element(6), v_eta_minus_1=G.element(1))
        res = defectless_analyze(datum)
        pres = annihilate(present(res), res)
        assert pres.form is PresentationForm.RAM_MAX_QUOTIENT
        assert not pres.is_zero
        assert containment_holds(pres)

    def test_max_ideal_never_annihilates_over_dense_groups(self):
        # with no discrete component the maximal ideal is never principal,
        # so the reported annihilator is never M_L
        G = GroupDescriptor((Component.PDIV,), 2)
        m_l = IdealDescriptor.maximal_ideal(G)
        cases = []
        datum = DefectlessDatum(name="as", group=G, q=3, star_index=0,
                                x0_value=G.element(-1),
                                subkind=DefectlessKind.ARTIN_SCHREIER, residue_char=3)
        res = defectless_analyze(datum)
        cases.append(annihilate(present(res), res))
        res2 = classify(abhyankar_datum(2))
        cases.append(annihilate(present(res2), res2))
        for pres in cases:
            assert not pres.annihilator_is_max_ideal
            assert not pres.annihilator.same_values(m_l)
