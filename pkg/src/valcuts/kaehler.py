"""Differential-module presentations as quotients of ideal value sets.

The module of relative differentials of a prime-degree extension of
valuation rings is presented by a numerator ideal and an exponent: the
defect case uses I/I^p, wildly ramified defectless extensions use
(I*M)/(I*M)^p, and tamely ramified value extensions use M/M^q.  Zero tests
and annihilators are decided exactly on the value-set descriptors.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .errors import StructuralError
from .extension import (
    DefectClassification,
    DefectlessAnalysis,
    DefectlessKind,
)
from .ogroup import ConvexSubgroup, quotient_has_smallest_positive
from .segment import (
    CutKind,
    IdealDescriptor,
    coarsening_value_set,
    is_subset,
    to_json,
)


class PresentationForm(str, Enum):
    RAM_QUOTIENT = "I/I^p"
    RAM_MAX_QUOTIENT = "IM/(IM)^p"
    MAX_QUOTIENT = "M/M^q"


@dataclass(frozen=True)
class OmegaPresentation:
    numerator: IdealDescriptor
    denominator_exponent: int
    form: PresentationForm
    is_zero: bool
    provenance: str
    annihilator: IdealDescriptor | None = None
    annihilator_is_max_ideal: bool = False

    def power_values(self) -> IdealDescriptor:
        return self.numerator.power(self.denominator_exponent)

    def to_json(self) -> dict:
        out = {
            "form": self.form.value,
            "numerator": to_json(self.numerator.values),
            "exponent": self.denominator_exponent,
            "is_zero": self.is_zero,
            "provenance": self.provenance,
        }
        if self.annihilator is not None:
            out["annihilator"] = to_json(self.annihilator.values)
            out["annihilator_is_max_ideal"] = self.annihilator_is_max_ideal
        return out


def present(result: DefectClassification | DefectlessAnalysis) -> OmegaPresentation:
    """Select the presentation form and decide the zero test for the instance."""
    if isinstance(result, DefectClassification):
        num = result.ram_ideal
        power = num.power(result.datum.degree)
        return OmegaPresentation(
            numerator=num,
            denominator_exponent=result.datum.degree,
            form=PresentationForm.RAM_QUOTIENT,
            is_zero=num.same_values(power),
            provenance=f"defect:{result.kind.value}",
        )
    if not isinstance(result, DefectlessAnalysis):
        raise StructuralError("present expects a classified or analyzed extension")
    datum = result.datum
    wild = datum.residue_char == datum.q
    if datum.subkind is DefectlessKind.ARTIN_SCHREIER:
        num = result.ram_ideal.multiply(result.max_ideal, label="I_E*M_E")
        return OmegaPresentation(num, datum.q, PresentationForm.RAM_MAX_QUOTIENT,
                                 is_zero=False, provenance="defectless:artin_schreier")
    if not wild:
        # tame value extension: q is a unit, so the zero test reduces to
        # whether M_E is principal over the coarse ring
        zero = not result.max_ideal.is_principal_over(result.H_E)
        return OmegaPresentation(result.max_ideal, datum.q, PresentationForm.MAX_QUOTIENT,
                                 is_zero=zero, provenance="defectless:tame_value")
    if datum.subkind is DefectlessKind.KUMMER_2B:
        num = result.ram_ideal.multiply(result.max_ideal, label="I_E*M_E")
        return OmegaPresentation(num, datum.q, PresentationForm.RAM_MAX_QUOTIENT,
                                 is_zero=False, provenance="defectless:kummer_one_unit")
    # wild Kummer with a positive-value generator
    q_in_max = result.max_ideal.contains_value(datum.vp)
    zero = (not q_in_max) and not result.max_ideal.is_principal_over(result.H_E)
    num = result.ram_ideal.multiply(result.max_ideal, label="I_E*M_E")
    return OmegaPresentation(num, datum.q, PresentationForm.RAM_MAX_QUOTIENT,
                             is_zero=zero, provenance="defectless:kummer_value")


def annihilate(pres: OmegaPresentation,
               result: DefectClassification | DefectlessAnalysis) -> OmegaPresentation:
    """Attach the annihilator ideal; the full ring exactly when the module is zero."""
    group = pres.numerator.group
    if pres.is_zero:
        ann = IdealDescriptor.ring(group, label="ann")
        return replace(pres, annihilator=ann)
    if isinstance(result, DefectClassification):
        ann = _dependent_defect_annihilator(pres, result)
        return replace(pres, annihilator=ann)

    datum = result.datum
    n = datum.q
    if pres.form is PresentationForm.MAX_QUOTIENT:
        # nonzero forces M_E principal over the coarse ring; a = 1
        ann = result.max_ideal.power(n - 1, label="ann")
        is_max = n == 2 and result.H_E.is_trivial
        return replace(pres, annihilator=ann, annihilator_is_max_ideal=is_max)

    a_value = _principal_generator_value(result.ram_ideal)
    if result.max_ideal.is_principal_over(result.H_E):
        ann = pres.numerator.power(n - 1, label="ann")
    else:
        base = IdealDescriptor(coarsening_value_set(result.H_E), label="O_E")
        ann = base.shifted(a_value * (n - 1), label="ann")
    is_max = (n == 2
              and not result.max_ideal.contains_value(a_value)
              and result.H_E.is_trivial
              and IdealDescriptor.maximal_ideal(group).is_principal)
    return replace(pres, annihilator=ann, annihilator_is_max_ideal=is_max)


def _principal_generator_value(ideal: IdealDescriptor):
    if not ideal.is_principal:
        raise StructuralError("expected a principal ramification ideal")
    return ideal.values.gamma


def _dependent_defect_annihilator(pres: OmegaPresentation,
                                  result: DefectClassification) -> IdealDescriptor:
    """I_E^(p-1), improved to a*O(I_E) when the quotient value set of
    I_E^(p-1) has an unattained infimum realized by a base-field value."""
    p = result.datum.degree
    power = result.ram_ideal.power(p - 1, label="I_E^(p-1)")
    v = power.values
    if v.kind is CutKind.ELEMENT or v.closed:
        return power
    H = ConvexSubgroup(v.group, v.level)
    if quotient_has_smallest_positive(v.group, H) and not H.is_trivial:
        # the quotient attains the infimum one step up; no improvement
        return power
    # the extension is immediate, so vK = vL realizes the infimum shift
    if H.is_trivial:
        return IdealDescriptor.principal(v.shift, label="ann")
    return IdealDescriptor(coarsening_value_set(H), label="ann").shifted(v.shift, label="ann")


def containment_holds(pres: OmegaPresentation) -> bool:
    """ann * numerator lands inside the denominator power, at value level."""
    if pres.annihilator is None:
        raise StructuralError("annihilator not attached")
    prod = pres.annihilator.multiply(pres.numerator)
    return is_subset(prod.values, pres.power_values().values)


def maximality_witness(pres: OmegaPresentation, candidates) -> bool:
    """Every candidate value strictly below the annihilator fails containment.

    Candidates are group elements; those already inside the annihilator's
    value set are skipped.  Returns True when each outside candidate g has
    some witness value x of the numerator with g + x outside the power.
    """
    if pres.annihilator is None:
        raise StructuralError("annihilator not attached")
    power = pres.power_values()
    for g in candidates:
        if pres.annihilator.contains_value(g):
            continue
        shifted = pres.numerator.shifted(g)
        if is_subset(shifted.values, power.values):
            return False
    return True
