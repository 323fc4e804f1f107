"""Standard worked scenarios shared by the command line and the test suite.

Each scenario bundles a field model, its distinguished immediate element(s),
the classified extension data, and a formula environment, so reports and
definability checks all draw from one construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .extension import (
    DeclaredSchedule,
    DefectClassification,
    DefectDatum,
    ExtensionKind,
    classify,
)
from .formlang import FormulaModel, ImmediateElement
from .gpsfield import (
    Composition,
    FieldModel,
    PatternSeries,
    Tail,
    approach_segment,
    compose_valuation,
)
from .ogroup import Component, GroupDescriptor
from .residue import GF


@dataclass(frozen=True)
class Scenario:
    name: str
    model: FieldModel
    data: tuple[DefectDatum, ...]
    results: tuple[DefectClassification, ...]
    fmodel: FormulaModel
    composition: Composition | None = None

    def result(self, name: str) -> DefectClassification:
        for r in self.results:
            if r.datum.name == name:
                return r
        raise KeyError(name)


def perfect_series_model(p: int, rank: int = 1, name: str | None = None) -> FieldModel:
    group = GroupDescriptor((Component.PDIV,) * rank, p)
    return FieldModel(name=name or f"F{p}((t))^(1/p^inf)", char=p,
                      value_group=group, residue=GF(p))


def wild_root(model: FieldModel, class_index: int = 0) -> PatternSeries:
    """Root of X^p - X - 1/t for the generator of the given archimedean class."""
    gamma = model.value_group.unit(class_index, -1)
    return PatternSeries(model, model.zero(), (Tail(model.residue.one(), gamma, 1),))


def abhyankar(p: int, depth: int = 12) -> Scenario:
    model = perfect_series_model(p)
    theta = wild_root(model)
    datum = DefectDatum(name="theta", kind=ExtensionKind.AS_DEFECT, base=model,
                        degree=p, generator=theta)
    res = classify(datum, depth=depth)
    approach = approach_segment(theta, model, depth=depth)
    fmodel = FormulaModel(
        model=model,
        immediates=(ImmediateElement("theta", approach.segment, approach.schedule,
                                     carrier=theta,
                                     facts=frozenset({"as_generator"})),),
        constants={"t": model.monomial(1, model.value_group.element(1))},
    )
    return Scenario(f"abhyankar_p{p}", model, (datum,), (res,), fmodel)


def example_e1(p: int, depth: int = 12) -> Scenario:
    """Rank-2 composition with wild witnesses over both archimedean classes."""
    inner = perfect_series_model(p, name="K")
    outer = FieldModel(name="K((x))^(1/p^inf)", char=p,
                       value_group=GroupDescriptor((Component.PDIV,), p),
                       residue=None, residue_name="K")
    comp = compose_valuation(outer, inner)
    L = comp.composite
    theta_x = wild_root(L, class_index=0)
    theta_t = comp.lift_pattern(wild_root(inner))
    data = (
        DefectDatum(name="theta_x", kind=ExtensionKind.AS_DEFECT, base=L,
                    degree=p, generator=theta_x),
        DefectDatum(name="theta_t", kind=ExtensionKind.AS_DEFECT, base=L,
                    degree=p, generator=theta_t),
    )
    results = tuple(classify(d, depth=depth) for d in data)
    ax = approach_segment(theta_x, L, depth=depth)
    fmodel = FormulaModel(
        model=L,
        immediates=(ImmediateElement("theta", ax.segment, ax.schedule,
                                     carrier=theta_x,
                                     facts=frozenset({"as_generator"})),),
        constants={"t": L.monomial(1, L.value_group.element(0, 1))},
    )
    return Scenario(f"example_e1_p{p}", L, data, results, fmodel, composition=comp)


def example_e2(p: int, depth: int = 12) -> Scenario:
    """The e1 shape with a tame-closure step killing the coarse-class witness:
    only the fine-class extension survives, realizing the trivial subgroup."""
    base = example_e1(p, depth=depth)
    datum = base.data[1]
    res = base.result("theta_t")
    approach = approach_segment(datum.generator, base.model, depth=depth)
    fmodel = FormulaModel(
        model=base.model,
        immediates=(ImmediateElement("theta", approach.segment, approach.schedule,
                                     carrier=datum.generator,
                                     facts=frozenset({"as_generator"})),),
        constants=dict(base.fmodel.constants),
    )
    return Scenario(f"example_e2_p{p}", base.model, (datum,), (res,), fmodel,
                    composition=base.composition)


def kummer_mixed(p: int, depth: int = 12) -> Scenario:
    """Mixed characteristic: the degree-p root of X^p - X - 1/p enters through
    its declared schedule -vp/p^(i+1); the Kummer generator eta enters through
    the schedule approaching v(zeta_p - 1) from below."""
    group = GroupDescriptor((Component.RAT,), p)
    vp = group.element(p - 1)  # scaled so v(zeta_p - 1) = 1 is exact
    model = FieldModel(name=f"mixed deeply ramified, p={p}", char=0,
                       residue_char=p, value_group=group, vp=vp)
    zeta_value = vp * Fraction(1, p - 1)
    root_sched = DeclaredSchedule(group, limit=group.zero(), scale=vp)
    eta_sched = DeclaredSchedule(group, limit=zeta_value, scale=vp)
    data = (
        DefectDatum(name="wild_root", kind=ExtensionKind.KUMMER_DEFECT, base=model,
                    degree=p, generator=root_sched),
        DefectDatum(name="eta", kind=ExtensionKind.KUMMER_DEFECT, base=model,
                    degree=p, generator=eta_sched, sigma_shift=zeta_value),
    )
    results = tuple(classify(d, depth=depth) for d in data)
    eta_approach = eta_sched.approach(depth)
    fmodel = FormulaModel(
        model=model,
        immediates=(ImmediateElement("eta", eta_approach.segment,
                                     eta_approach.schedule, carrier=None,
                                     facts=frozenset({"kummer_generator",
                                                      "one_unit"})),),
        constants={},
    )
    return Scenario(f"kummer_mixed_p{p}", model, data, results, fmodel)


SCENARIOS = {
    "abhyankar": abhyankar,
    "example-e1": example_e1,
    "example-e2": example_e2,
    "kummer-mixed": kummer_mixed,
}


def series_samples(model: FieldModel, count: int, seed: int):
    """Deterministic monomial samples (label, carrier, valuation) over a model."""
    import random

    from .errors import StructuralError

    rng = random.Random(seed)
    g = model.value_group
    p = g.prime
    out = [("1", model.one(), g.zero())]
    while len(out) < count:
        coords = [Fraction(rng.randint(-12, 12), p ** rng.randint(0, 3))
                  for _ in range(g.rank)]
        try:
            e = g.element(*coords)
        except StructuralError:
            continue
        out.append((f"t^{e}", model.monomial(1, e), e))
    return out


def declared_samples(group: GroupDescriptor, count: int, seed: int):
    """Value-only samples for models without series arithmetic."""
    import random

    from .formlang import DeclaredValue

    rng = random.Random(seed)
    out = [("v=0", DeclaredValue(group.zero()), group.zero())]
    while len(out) < count:
        v = group.element(Fraction(rng.randint(-12, 12), rng.randint(1, 9)))
        out.append((f"v={v}", DeclaredValue(v), v))
    return out


def samples_for(scenario: Scenario, count: int, seed: int):
    if scenario.model.series_capable:
        return series_samples(scenario.model, count, seed)
    return declared_samples(scenario.model.value_group, count, seed)
