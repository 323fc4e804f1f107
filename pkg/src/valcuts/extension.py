"""Prime-degree extension records and their classification.

Defect extensions carry an immediate generator: either a pattern series
(equal characteristic) or a declared approximation schedule (mixed
characteristic, where exact p-adic arithmetic is out of reach but the
schedule values are known in closed form).  Synthetic instances may declare
the positive value segment directly; their certificates say so.

Classification evaluates two independence criteria that must agree:
the ideal route (ramification ideal equals the coarsening's maximal ideal,
the latter nonprincipal over the coarse ring) and the segment route (the
value segment is exactly everything above its invariance group, whose
quotient has no smallest positive element).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import (
    InconsistentDatumError,
    InternalConsistencyError,
    NotImmediateError,
    StructuralError,
    WrongCaseError,
)
from .gpsfield import ApproachResult, FieldModel, PatternSeries, approach_segment
from .ogroup import (
    Component,
    ConvexSubgroup,
    GroupDescriptor,
    GroupElement,
    Position,
    is_prime,
    position,
    quotient_has_smallest_positive,
)
from .segment import (
    CutKind,
    Direction,
    IdealDescriptor,
    Segment,
    contains,
    invariance_ring,
    negate,
    normalize,
    seq_cut,
    shift,
    subgroup_cut,
    to_json,
)


class ExtensionKind(str, Enum):
    AS_DEFECT = "as_defect"          # Artin-Schreier, equal characteristic p
    KUMMER_DEFECT = "kummer_defect"  # Kummer, mixed characteristic, zeta_p in K
    DEFECTLESS_VALUE = "defectless_value"  # defectless with (vL : vK) = q


class DefectKind(str, Enum):
    INDEPENDENT = "independent"
    DEPENDENT = "dependent"


@dataclass(frozen=True)
class DeclaredSchedule:
    """Approximation values limit - scale/p^(k+1), declared in closed form."""

    group: GroupDescriptor
    limit: GroupElement
    scale: GroupElement
    start: int = 0

    def __post_init__(self):
        if self.limit.group != self.group or self.scale.group != self.group:
            raise StructuralError("schedule data live in a different value group")

    def value_at(self, k: int) -> GroupElement:
        return self.limit - self.scale * Fraction(1, self.group.prime ** (k + 1))

    def approach(self, depth: int) -> ApproachResult:
        schedule = tuple(self.value_at(k) for k in range(self.start, self.start + depth))
        for a, b in zip(schedule, schedule[1:]):
            if not a < b:
                raise NotImmediateError(
                    f"declared values do not increase strictly: {a} then {b}")
        seg = normalize(seq_cut(self.limit, self.scale, start=1,
                                direction=Direction.INITIAL))
        return ApproachResult(seg, schedule, depth)


@dataclass(frozen=True)
class DefectDatum:
    """A Galois defect extension of prime degree over its base model."""

    name: str
    kind: ExtensionKind
    base: FieldModel
    degree: int
    generator: PatternSeries | DeclaredSchedule | None = None
    sigma_shift: GroupElement | None = None   # v(sigma a - a)
    declared_sigma: Segment | None = None     # synthetic instances only
    synthetic: bool = False

    def __post_init__(self):
        if self.kind is ExtensionKind.DEFECTLESS_VALUE:
            raise StructuralError("defectless data use DefectlessDatum")
        if not is_prime(self.degree):
            raise StructuralError("extension degree must be prime")
        if self.generator is None and self.declared_sigma is None:
            raise StructuralError("datum needs a generator or a declared segment")
        if self.sigma_shift is None:
            object.__setattr__(self, "sigma_shift", self.group.zero())

    @property
    def group(self) -> GroupDescriptor:
        return self.base.value_group

    def approach(self, depth: int) -> ApproachResult | None:
        if isinstance(self.generator, PatternSeries):
            return approach_segment(self.generator, self.base, depth=depth)
        if isinstance(self.generator, DeclaredSchedule):
            return self.generator.approach(depth)
        return None


def _require_positive_final(seg: Segment) -> Segment:
    seg = normalize(seg)
    if not seg.is_final:
        raise StructuralError("the value segment of the extension must be final")
    if seg.kind is CutKind.ELEMENT:
        ok = seg.gamma.sign() > 0
    elif seg.closed:
        ok = False  # the closed coset always reaches below zero
    else:
        ok = seg.shift.is_zero or position(seg.shift, seg.subgroup()) is Position.ABOVE
    if not ok:
        raise StructuralError("the value segment must consist of positive values")
    return seg


def sigma_segment(datum: DefectDatum, depth: int = 12) -> tuple[Segment, ApproachResult | None]:
    """The final segment of values v((sigma b - b)/b), b ranging over units.

    Computed as sigma_shift - v(a - K) from the generator's approach segment;
    synthetic data may declare it directly.
    """
    if datum.declared_sigma is not None:
        return _require_positive_final(datum.declared_sigma), None
    approach = datum.approach(depth)
    seg = shift(negate(approach.segment), datum.sigma_shift)
    return _require_positive_final(seg), approach


@dataclass(frozen=True)
class DefectClassification:
    datum: DefectDatum
    kind: DefectKind
    H_E: ConvexSubgroup
    sigma: Segment
    ram_ideal: IdealDescriptor
    max_ideal: IdealDescriptor
    certificate: dict

    @property
    def group(self) -> GroupDescriptor:
        return self.datum.group


def classify(datum: DefectDatum, depth: int = 12) -> DefectClassification:
    """Defect classification with both independence criteria evaluated."""
    sigma, approach = sigma_segment(datum, depth)
    ram = IdealDescriptor(sigma, label="I_E")
    H, max_ideal = invariance_ring(ram)
    quotient_dense = not quotient_has_smallest_positive(datum.group, H)

    ideal_route = ram.same_values(max_ideal) and not max_ideal.is_principal_over(H)
    canonical = normalize(subgroup_cut(H, closed=False)) if not H.is_whole_group else None
    segment_route = (canonical is not None and sigma == canonical and quotient_dense)
    if ideal_route != segment_route:
        raise InternalConsistencyError(
            f"independence criteria disagree on {datum.name}: "
            f"ideal={ideal_route} segment={segment_route}")

    kind = DefectKind.INDEPENDENT if ideal_route else DefectKind.DEPENDENT
    certificate = {
        "extension": datum.name,
        "kind": datum.kind.value,
        "degree": datum.degree,
        "sigma_segment": to_json(sigma),
        "H_E_level": H.level,
        "criteria": {"ideal_route": ideal_route, "segment_route": segment_route},
        "truncation_depth": depth,
        "synthetic": datum.synthetic,
        "sigma_shift": [str(c) for c in datum.sigma_shift.coords],
        "ostrowski": {"degree": datum.degree, "defect": datum.degree,
                      "ramification_index": 1, "residue_degree": 1},
    }
    if approach is not None:
        certificate["schedule"] = [[str(c) for c in v.coords] for v in approach.schedule]
        certificate["approach_segment"] = to_json(approach.segment)
    return DefectClassification(datum, kind, H, sigma, ram, max_ideal, certificate)


# --------------------------------------------------------------------------
# Defectless extensions with (vL : vK) = q.
#
# The value group vL is scaled so that it is carried by a single descriptor:
# vK is the index-q sublattice obtained by multiplying the component at
# star_index by q.  In particular q*vx0 lies in vK by construction; the
# inconsistent-datum error fires for component kinds that cannot carry an
# index-q extension at all.

class DefectlessCase(str, Enum):
    DL2A = "no_next_subgroup"        # needs infinite rank; kept for completeness
    DL2B = "dense_archimedean_step"
    DL2C = "discrete_archimedean_step"


class DefectlessKind(str, Enum):
    ARTIN_SCHREIER = "artin_schreier"  # q = residue char, generator value <= 0
    KUMMER_2A = "kummer_value"         # generator of positive value outside vK
    KUMMER_2B = "kummer_one_unit"      # one-unit generator, q = residue char
    VALUE_ONLY = "value_only"          # no generator data; ideals except I_E


@dataclass(frozen=True)
class DefectlessDatum:
    name: str
    group: GroupDescriptor           # vL after scaling
    q: int                           # prime degree = (vL : vK)
    star_index: int                  # class where vK has index q
    x0_value: GroupElement           # vx0, not in vK
    subkind: DefectlessKind = DefectlessKind.VALUE_ONLY
    residue_char: int = 0
    vp: GroupElement | None = None            # value of p when residue char divides it
    v_eta_minus_1: GroupElement | None = None  # one-unit case
    henselian: bool = True

    def __post_init__(self):
        if not is_prime(self.q):
            raise InconsistentDatumError("degree q must be prime")
        if not 0 <= self.star_index < self.group.rank:
            raise StructuralError("star_index outside the value group")
        kind = self.group.components[self.star_index]
        if kind is Component.RAT:
            raise InconsistentDatumError(
                "a divisible class cannot carry an index-q value extension")
        if kind is Component.PDIV and self.group.prime == self.q:
            raise InconsistentDatumError(
                "the class is q-divisible, so q*vx0 in vK forces vx0 in vK")
        if self.x0_value.group != self.group:
            raise StructuralError("vx0 lives in a different value group")
        if self.in_vK(self.x0_value):
            raise WrongCaseError("vx0 lies in vK; the extension is not value-driven")

    def in_vK(self, x: GroupElement) -> bool:
        c = x.coords[self.star_index] / self.q
        return self.group.coordinate_allowed(self.star_index, c)


@dataclass(frozen=True)
class DefectlessAnalysis:
    datum: DefectlessDatum
    H_E: ConvexSubgroup
    case: DefectlessCase
    max_ideal: IdealDescriptor
    ram_ideal: IdealDescriptor | None
    certificate: dict


def defectless_analyze(datum: DefectlessDatum) -> DefectlessAnalysis:
    """H_E, the case split, M_E, and the ramification ideal where defined."""
    group = datum.group

    def chain_member_of_vK(k: int) -> bool:
        # vK constrains the star class only, so H_k sits inside vK exactly
        # when its generating axis units all pass the membership test
        return all(datum.in_vK(group.unit(i)) for i in range(k, group.rank))

    # largest common convex subgroup = smallest level whose chain member
    # lies inside vK (levels shrink the subgroup as they grow)
    level = next(k for k in range(group.rank + 1) if chain_member_of_vK(k))
    H = ConvexSubgroup(group, level)
    case = (DefectlessCase.DL2B if group.is_dense_at(datum.star_index)
            else DefectlessCase.DL2C)
    if H.is_whole_group:
        raise InconsistentDatumError("vK and vL share no proper convex structure")
    if H.is_trivial:
        max_ideal = IdealDescriptor.maximal_ideal(group, label="M_E")
    else:
        max_ideal = IdealDescriptor(subgroup_cut(H, closed=False), label="M_E")

    ram = _defectless_ram_ideal(datum)
    certificate = {
        "extension": datum.name,
        "kind": ExtensionKind.DEFECTLESS_VALUE.value,
        "subkind": datum.subkind.value,
        "degree": datum.q,
        "H_E_level": H.level,
        "case": case.value,
        "x0_value": [str(c) for c in datum.x0_value.coords],
        "q_times_x0_in_vK": datum.in_vK(datum.x0_value * datum.q),
        "max_ideal": to_json(max_ideal.values),
        "ostrowski": {"degree": datum.q, "defect": 1,
                      "ramification_index": datum.q, "residue_degree": 1},
    }
    if ram is not None:
        certificate["ram_ideal"] = to_json(ram.values)
    return DefectlessAnalysis(datum, H, case, max_ideal, ram, certificate)


def _defectless_ram_ideal(datum: DefectlessDatum) -> IdealDescriptor | None:
    wild = datum.residue_char == datum.q
    if datum.subkind is DefectlessKind.VALUE_ONLY:
        if wild:
            raise InconsistentDatumError(
                "wildly ramified defectless data need generator information")
        return None
    if datum.subkind is DefectlessKind.ARTIN_SCHREIER:
        if not wild:
            raise WrongCaseError("Artin-Schreier defectless data need q = residue char")
        if datum.x0_value.sign() > 0:
            raise WrongCaseError("the generator must have value <= 0")
        return IdealDescriptor.principal(-datum.x0_value, label="I_E")
    if datum.subkind is DefectlessKind.KUMMER_2B and not wild:
        raise WrongCaseError("a one-unit Kummer generator needs q = residue char")
    if not wild:
        return None  # tame q-th root of unity has value 0: no wild ramification ideal
    if datum.vp is None:
        raise InconsistentDatumError("wild Kummer data must declare the value of p")
    zeta_value = datum.vp * Fraction(1, datum.q - 1)
    if datum.subkind is DefectlessKind.KUMMER_2A:
        if datum.x0_value.sign() <= 0:
            raise WrongCaseError("the generator must have positive value")
        return IdealDescriptor.principal(zeta_value, label="I_E")
    if datum.v_eta_minus_1 is None:
        raise InconsistentDatumError("one-unit Kummer data must declare v(eta - 1)")
    if datum.in_vK(datum.v_eta_minus_1):
        raise WrongCaseError("v(eta - 1) must fall outside vK")
    # the equality edge v(eta - 1) = v(zeta - 1) is accepted, not rejected
    if not datum.v_eta_minus_1 <= zeta_value:
        raise WrongCaseError("one-unit case needs v(eta - 1) <= v(zeta_q - 1)")
    return IdealDescriptor.principal(zeta_value - datum.v_eta_minus_1, label="I_E")


def coinitial_in_max_ideal(analysis: DefectlessAnalysis, sample_values, floor) -> bool:
    """Whether {vc + vx0 : vc sampled, vc + vx0 > 0} reaches below `floor`
    inside the value set of M_E; the sampled witnesses certify coinitiality
    down to the truncation the samples cover."""
    datum = analysis.datum
    hits = [vc + datum.x0_value for vc in sample_values
            if (vc + datum.x0_value).sign() > 0]
    if not all(contains(analysis.max_ideal.values, h) for h in hits):
        return False
    return any(h <= floor for h in hits)
