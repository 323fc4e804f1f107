"""Build plans realizing a chosen set of subprincipal convex subgroups.

Over the p-divisible hull of a rank-n lexicographic sum of integer chains,
each subprincipal level j in 1..n is realized as the invariance group of a
degree-p witness: the root of X^p - X - 1/t_(j-1) given as a geometric tail
over the class j-1 (equal characteristic), or, for level 1 in the mixed
case, the declared schedule -vp/p^(i+1) of the root of X^p - X - 1/p.

Levels outside the selection carry declared exclusion markers: the closure
step that kills their witnesses (a maximal purely wild extension, which is
a tame field) is recorded, not machine-checked.  Reports therefore separate
VERIFIED positive checks from DECLARED negative ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import InvalidSelectionError, VerificationError
from .extension import (
    DeclaredSchedule,
    DefectDatum,
    DefectKind,
    ExtensionKind,
    classify,
)
from .gpsfield import FieldModel, PatternSeries, Tail, parse_element
from .ogroup import Component, ConvexSubgroup, GroupDescriptor, convex_subgroups
from .residue import GF


class CharCase(str, Enum):
    EQUAL = "equal"
    MIXED = "mixed"


@dataclass(frozen=True)
class Witness:
    level: int
    kind: str                      # "pattern" or "declared"
    datum: DefectDatum


@dataclass(frozen=True)
class Exclusion:
    level: int
    note: str


@dataclass(frozen=True)
class ConstructionPlan:
    index_size: int
    selected: frozenset[int]
    prime: int
    char_case: CharCase
    group: GroupDescriptor
    model: FieldModel
    generators: tuple       # v(t_i) = unit at class i
    witnesses: tuple[Witness, ...]
    exclusions: tuple[Exclusion, ...]
    decompositions: tuple[dict, ...]

    def chain_bijection(self) -> tuple[tuple[int, int], ...]:
        """Input index i maps to subgroup level i + 1; note the order reversal:
        increasing index means decreasing subgroup."""
        return tuple((i, i + 1) for i in range(self.index_size))


def build(n: int, selected, p: int, char_case: CharCase = CharCase.EQUAL) -> ConstructionPlan:
    if n < 1:
        raise InvalidSelectionError("the index chain must be nonempty")
    levels = frozenset(int(j) for j in selected)
    group = GroupDescriptor((Component.PDIV,) * n, p)
    chain = convex_subgroups(group)
    for j in levels:
        if not (0 <= j <= n) or not chain[j].is_subprincipal:
            raise InvalidSelectionError(f"level {j} is not subprincipal")
    char_case = CharCase(char_case)

    if char_case is CharCase.EQUAL:
        model = FieldModel(
            name=f"k(t_0..t_{n - 1})^h perfect hull, p={p}",
            char=p, value_group=group, residue=GF(p))
    else:
        # rank n >= 1 always has the largest proper convex subgroup H_1,
        # below which the equal-characteristic residue construction runs
        model = FieldModel(
            name=f"mixed p-adic tower over k(t_1..t_{n - 1}), p={p}",
            char=0, residue_char=p, value_group=group, vp=group.unit(0))

    witnesses = []
    exclusions = []
    for j in sorted(levels):
        if char_case is CharCase.MIXED and j == 1:
            sched = DeclaredSchedule(group, limit=group.zero(), scale=model.vp)
            datum = DefectDatum(name=f"level{j}_root_of_X^p-X-1/p",
                                kind=ExtensionKind.KUMMER_DEFECT, base=model,
                                degree=p, generator=sched)
            witnesses.append(Witness(j, "declared", datum))
        else:
            if char_case is CharCase.MIXED:
                kind = ExtensionKind.KUMMER_DEFECT
                name = f"level{j}_residue_root_of_X^p-X-1/t_{j - 1}"
                sched = DeclaredSchedule(group, limit=group.zero(),
                                         scale=group.unit(j - 1))
                datum = DefectDatum(name=name, kind=kind, base=model, degree=p,
                                    generator=sched)
                witnesses.append(Witness(j, "declared", datum))
            else:
                theta = PatternSeries(
                    model, model.zero(),
                    (Tail(model.residue.one(), group.unit(j - 1, -1), 1),))
                datum = DefectDatum(name=f"level{j}_root_of_X^p-X-1/t_{j - 1}",
                                    kind=ExtensionKind.AS_DEFECT, base=model,
                                    degree=p, generator=theta)
                witnesses.append(Witness(j, "pattern", datum))
    for j in range(1, n + 1):
        if j not in levels:
            note = ("maximal purely wild closure at the p-adic step"
                    if char_case is CharCase.MIXED and j == 1
                    else f"maximal purely wild closure over class {j - 1}; "
                    "a tame field admits no defect extension")
            exclusions.append(Exclusion(j, note))

    decomps = tuple(
        {"index": i, "coarse_level": i, "class_level": i + 1} for i in range(n))
    return ConstructionPlan(n, levels, p, char_case, group, model,
                            tuple(group.unit(i) for i in range(n)),
                            tuple(witnesses), tuple(exclusions), decomps)


@dataclass(frozen=True)
class WitnessReport:
    level: int
    passed: bool
    found_level: int
    defect_kind: str
    schedule: tuple
    identity_checked: bool


@dataclass(frozen=True)
class VerificationReport:
    plan: ConstructionPlan
    witnesses: tuple[WitnessReport, ...]
    exclusions: tuple[Exclusion, ...]
    chain_ok: bool
    divisible_ok: bool

    @property
    def passed(self) -> bool:
        return self.chain_ok and self.divisible_ok and all(w.passed for w in self.witnesses)

    def to_json(self) -> dict:
        return {
            "index_size": self.plan.index_size,
            "selected": sorted(self.plan.selected),
            "prime": self.plan.prime,
            "char_case": self.plan.char_case.value,
            "witnesses": [
                {"level": w.level, "passed": w.passed, "found_level": w.found_level,
                 "defect": w.defect_kind, "identity_checked": w.identity_checked,
                 "schedule": [[str(c) for c in v.coords] for v in w.schedule],
                 "status": "VERIFIED"}
                for w in self.witnesses
            ],
            "exclusions": [
                {"level": e.level, "note": e.note, "status": "DECLARED"}
                for e in self.exclusions
            ],
            "chain_order_isomorphic": self.chain_ok,
            "chain_bijection": [list(pair) for pair in self.plan.chain_bijection()],
            "no_discrete_component": self.divisible_ok,
            "passed": self.passed,
        }


def _check_witness_identity(plan: ConstructionPlan, witness: Witness) -> bool:
    """theta^p - theta - 1/t = 0, exactly, for pattern witnesses."""
    if witness.kind != "pattern":
        return False
    theta = witness.datum.generator
    model = plan.model
    coords = ["0"] * plan.group.rank
    coords[witness.level - 1] = "-1"
    one_over_t = parse_element(model, f"t^({','.join(coords)})")
    residue = theta.frobenius() - theta - one_over_t
    return not residue.has_tails and residue.as_series().is_zero


def verify(plan: ConstructionPlan, depth: int = 10) -> VerificationReport:
    """Classify every selected witness and check it lands on its level.

    Raises VerificationError when a positive check fails; the report with
    the offending schedule values rides along on the exception.
    """
    reports = []
    for w in plan.witnesses:
        res = classify(w.datum, depth=depth)
        ok = (res.kind is DefectKind.INDEPENDENT and res.H_E.level == w.level)
        identity = _check_witness_identity(plan, w)
        schedule = tuple(plan.group.element(*[_f(c) for c in row])
                         for row in res.certificate.get("schedule", []))
        reports.append(WitnessReport(w.level, ok, res.H_E.level, res.kind.value,
                                     schedule, identity))
    chain_ok = _chain_order_isomorphic(plan)
    divisible_ok = all(k is not Component.INT for k in plan.group.components)
    report = VerificationReport(plan, tuple(reports), plan.exclusions,
                                chain_ok, divisible_ok)
    if not report.passed:
        bad = [w for w in reports if not w.passed]
        raise VerificationError(
            f"witness checks failed at levels {[w.level for w in bad]}; "
            f"schedules: {[[str(v) for v in w.schedule] for w in bad]}",
            report=report)
    return report


def _f(coord_str: str):
    from fractions import Fraction

    return Fraction(coord_str)


def _chain_order_isomorphic(plan: ConstructionPlan) -> bool:
    """The recorded bijection i -> H_(i+1) maps the input chain onto the
    subprincipal chain, reversing order against inclusion."""
    chain = convex_subgroups(plan.group)
    pairs = plan.chain_bijection()
    if len(pairs) != plan.index_size:
        return False
    for i, level in pairs:
        if not chain[level].is_subprincipal:
            return False
    for (i1, l1), (i2, l2) in zip(pairs, pairs[1:]):
        if not (i1 < i2 and l1 < l2):
            return False
        # smaller index must give the strictly larger subgroup
        probe = plan.group.unit(l1)
        if not (ConvexSubgroup(plan.group, l1).contains(probe)
                and not ConvexSubgroup(plan.group, l2).contains(probe)):
            return False
    return True
