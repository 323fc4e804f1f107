"""Truncated generalized-power-series fields with pattern-series elements.

A SeriesElement is a finite sum of monomials c * t^g with exact group-element
exponents.  A PatternSeries adds geometric exponent tails sum_{i>=k0} c *
t^(g/p^i); these represent immediate elements intentionally, so valuations of
differences against finite-support elements are computable exactly: only
finitely many tail terms can ever interact with a finite support.

Fields of residue characteristic p with char 0 carry no series arithmetic
here; they enter the extension layer through declared approximation
schedules only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import NotImmediateError, StructuralError
from .ogroup import ConvexSubgroup, GroupDescriptor, GroupElement
from .residue import FqElement, FqField
from .segment import Direction, Segment, normalize, seq_cut


class _Infinity:
    """Sentinel for v(0); larger than every group element."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __repr__(self):
        return "INF"


INF = _Infinity()


@dataclass(frozen=True)
class FieldModel:
    """A valued field of generalized power series, or a declared shell.

    henselian and perfect_hull are declared assumptions recorded in reports;
    they are never inferred.  residue_name names the residue field of the
    coarse valuation when the model is the top of a composition.
    """

    name: str
    char: int
    value_group: GroupDescriptor
    residue: FqField | None = None
    residue_char: int | None = None
    perfect_hull: bool = True
    henselian: bool = True
    residue_name: str | None = None
    vp: GroupElement | None = None

    def __post_init__(self):
        if self.char > 0:
            if self.residue_char not in (None, self.char):
                raise StructuralError("equal characteristic requires residue_char == char")
            object.__setattr__(self, "residue_char", self.char)
            if self.residue is not None and self.residue.p != self.char:
                raise StructuralError("residue field characteristic mismatch")
        elif self.residue_char is None:
            raise StructuralError("characteristic 0 models must declare residue_char")
        if self.vp is not None and self.vp.group != self.value_group:
            raise StructuralError("vp must live in the value group")

    @property
    def series_capable(self) -> bool:
        return self.char > 0 and self.residue is not None

    def _require_series(self):
        if not self.series_capable:
            raise StructuralError(f"model {self.name} carries no series arithmetic")

    def zero(self) -> "SeriesElement":
        self._require_series()
        return SeriesElement(self, ())

    def monomial(self, coeff, exponent: GroupElement) -> "SeriesElement":
        self._require_series()
        if isinstance(coeff, int):
            coeff = self.residue.element(coeff)
        if exponent.group != self.value_group:
            raise StructuralError("exponent lives in a different value group")
        if coeff.is_zero:
            return self.zero()
        return SeriesElement(self, ((exponent, coeff),))

    def one(self) -> "SeriesElement":
        return self.monomial(1, self.value_group.zero())

    def element(self, terms: dict) -> "SeriesElement":
        out = self.zero()
        for exponent, coeff in terms.items():
            out = out + self.monomial(coeff, exponent)
        return out


@dataclass(frozen=True)
class SeriesElement:
    model: FieldModel
    terms: tuple[tuple[GroupElement, FqElement], ...]

    def __post_init__(self):
        object.__setattr__(self, "terms",
                           tuple(sorted(self.terms, key=lambda t: t[0].coords)))

    def _check(self, other):
        if not isinstance(other, SeriesElement) or other.model != self.model:
            raise StructuralError("series from different field models")

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def valuation(self):
        """Minimum exponent of the support; INF for zero."""
        if not self.terms:
            return INF
        return self.terms[0][0]

    def support(self) -> tuple[GroupElement, ...]:
        return tuple(e for e, _ in self.terms)

    def __add__(self, other):
        if isinstance(other, PatternSeries):
            return other + self
        self._check(other)
        acc = dict(self.terms)
        for e, c in other.terms:
            s = acc.get(e, self.model.residue.zero()) + c
            if s.is_zero:
                acc.pop(e, None)
            else:
                acc[e] = s
        return SeriesElement(self.model, tuple(acc.items()))

    def __neg__(self):
        return SeriesElement(self.model, tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other):
        if isinstance(other, PatternSeries):
            return (-other) + self
        return self + (-other)

    def __mul__(self, other):
        self._check(other)
        acc: dict = {}
        zero = self.model.residue.zero()
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = e1 + e2
                s = acc.get(e, zero) + c1 * c2
                if s.is_zero:
                    acc.pop(e, None)
                else:
                    acc[e] = s
        return SeriesElement(self.model, tuple(acc.items()))

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = self.model.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def inverse(self) -> "SeriesElement":
        if len(self.terms) != 1:
            raise StructuralError("only monomials can be inverted exactly")
        e, c = self.terms[0]
        return SeriesElement(self.model, ((-e, c.inverse()),))

    def frobenius(self) -> "SeriesElement":
        p = self.model.char
        return SeriesElement(self.model, tuple((e * p, c**p) for e, c in self.terms))

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*t^{e}" for e, c in self.terms)


@dataclass(frozen=True)
class Tail:
    """The geometric tail sum_{i >= start} coeff * t^(gamma / p^i)."""

    coeff: FqElement
    gamma: GroupElement
    start: int

    def __post_init__(self):
        if self.gamma.is_zero:
            raise StructuralError("tail base exponent must be nonzero")
        if self.coeff.is_zero:
            raise StructuralError("tail coefficient must be nonzero")

    def exponent(self, i: int) -> GroupElement:
        p = self.coeff.field.p
        if i >= 0:
            return self.gamma * Fraction(1, p**i)
        return self.gamma * (p ** (-i))

    def leading_exponent(self) -> GroupElement:
        return self.exponent(self.start)


def _merge_tails(model: FieldModel, tails, extra_finite):
    """Combine tails sharing a base exponent; spilled head terms go finite."""
    by_gamma: dict = {}
    finite = extra_finite
    for t in tails:
        if t.gamma.group != model.value_group:
            raise StructuralError("tail exponent lives in a different value group")
        for i in range(len(t.gamma.coords)):
            if t.gamma.coords[i] != 0 and not model.value_group.is_dense_at(i):
                raise StructuralError("tail exponents need a divisible component")
        if t.gamma in by_gamma:
            prev = by_gamma[t.gamma]
            lo, hi = sorted((prev, t), key=lambda x: x.start)
            for i in range(lo.start, hi.start):
                finite = finite + model.monomial(lo.coeff, lo.exponent(i))
            c = lo.coeff + hi.coeff
            if c.is_zero:
                del by_gamma[t.gamma]
            else:
                by_gamma[t.gamma] = Tail(c, t.gamma, hi.start)
        else:
            by_gamma[t.gamma] = t
    ordered = tuple(sorted(by_gamma.values(), key=lambda t: t.gamma.coords))
    return ordered, finite


@dataclass(frozen=True)
class PatternSeries:
    """finite_part plus geometric tails; an intentionally immediate element."""

    model: FieldModel
    finite_part: SeriesElement
    tails: tuple[Tail, ...]

    def __post_init__(self):
        self.model._require_series()
        tails, finite = _merge_tails(self.model, self.tails, self.finite_part)
        object.__setattr__(self, "tails", tails)
        object.__setattr__(self, "finite_part", finite)

    @property
    def has_tails(self) -> bool:
        return bool(self.tails)

    def in_base_field(self) -> bool:
        return not self.has_tails

    def as_series(self) -> SeriesElement:
        if self.has_tails:
            raise StructuralError("pattern with tails is not a finite series")
        return self.finite_part

    def __add__(self, other):
        if isinstance(other, PatternSeries):
            if other.model != self.model:
                raise StructuralError("patterns from different field models")
            return PatternSeries(self.model, self.finite_part + other.finite_part,
                                 self.tails + other.tails)
        return PatternSeries(self.model, self.finite_part + other, self.tails)

    def __neg__(self):
        return PatternSeries(
            self.model, -self.finite_part,
            tuple(Tail(-t.coeff, t.gamma, t.start) for t in self.tails))

    def __sub__(self, other):
        if isinstance(other, PatternSeries):
            return self + (-other)
        return self + (-other)

    def __radd__(self, other):
        return self + other

    def frobenius(self) -> "PatternSeries":
        p = self.model.char
        return PatternSeries(
            self.model, self.finite_part.frobenius(),
            tuple(Tail(t.coeff**p, t.gamma, t.start - 1) for t in self.tails))

    def pow_char_power(self, n: int) -> "PatternSeries":
        """n-th power for n a power of the characteristic (via Frobenius)."""
        p = self.model.char
        out = self
        while n > 1:
            if n % p:
                raise StructuralError("pattern powers are supported for p-power exponents")
            out = out.frobenius()
            n //= p
        return out

    def partial_sum(self, k: int) -> SeriesElement:
        """finite_part plus every tail term with index <= k."""
        out = self.finite_part
        for t in self.tails:
            for i in range(t.start, k + 1):
                out = out + self.model.monomial(t.coeff, t.exponent(i))
        return out

    def min_tail_gamma(self) -> GroupElement:
        if not self.tails:
            raise StructuralError("pattern has no tails")
        return min((t.gamma for t in self.tails), key=lambda g: g.coords)

    def __str__(self):
        parts = [str(self.finite_part)] if not self.finite_part.is_zero else []
        for t in self.tails:
            parts.append(f"sum_{{i>={t.start}}} {t.coeff}*t^({t.gamma}/p^i)")
        return " + ".join(parts) if parts else "0"


def val_diff(theta: PatternSeries, c: SeriesElement) -> GroupElement:
    """v(theta - c), exact, for finite-support c.

    Tails are expanded just far enough that the minimum is witnessed either
    by an explicit term or by an uncontested tail remainder.
    """
    if c.model != theta.model:
        raise StructuralError("operands from different field models")
    if not theta.has_tails:
        raise StructuralError("val_diff needs at least one tail")
    model = theta.model
    diff = theta - c
    explicit = diff.finite_part
    tails = diff.tails
    if not tails:
        v = explicit.valuation()
        if v is INF:
            raise StructuralError("difference is zero; the element is not immediate")
        return v
    depth = max(t.start for t in tails)
    for _ in range(64):
        remainders = [t.exponent(depth + 1) for t in tails]
        lead_rem = min(remainders, key=lambda g: g.coords)
        expanded = explicit
        for t in tails:
            for i in range(t.start, depth + 1):
                expanded = expanded + model.monomial(t.coeff, t.exponent(i))
        e0 = expanded.valuation()
        if e0 is INF:
            return lead_rem
        if e0 < lead_rem:
            return e0
        if lead_rem < e0:
            return lead_rem
        depth += 1  # explicit term sits exactly on the remainder boundary
    raise RuntimeError("valuation search did not settle")  # pragma: no cover


@dataclass(frozen=True)
class ApproachResult:
    """v(theta - K) as a normalized cut plus the schedule certificate."""

    segment: Segment
    schedule: tuple[GroupElement, ...]
    depth: int


def approach_segment(theta: PatternSeries, K: FieldModel, depth: int = 12) -> ApproachResult:
    """The initial segment v(theta - K), with the first `depth` schedule values.

    The schedule values v(theta - b_k) must increase strictly; otherwise
    v(theta - K) would attain a maximum and theta would not be immediate.
    """
    if K.value_group != theta.model.value_group:
        raise StructuralError("base field has a different value group")
    if not theta.has_tails:
        raise NotImmediateError("element has finite support over the base field")
    k_lo = max(0, min(t.start for t in theta.tails) - 1)
    schedule = tuple(val_diff(theta, theta.partial_sum(k))
                     for k in range(k_lo, k_lo + depth))
    for a, b in zip(schedule, schedule[1:]):
        if not a < b:
            raise NotImmediateError(
                f"approximation values do not increase strictly: {a} then {b}")
    gamma_min = theta.min_tail_gamma()
    if gamma_min.sign() > 0:
        raise NotImmediateError("tail exponents decrease; v(theta - K) has a maximum")
    seg = normalize(seq_cut(theta.model.value_group.zero(), -gamma_min,
                            start=1, direction=Direction.INITIAL))
    return ApproachResult(seg, schedule, depth)


# --------------------------------------------------------------------------
# Composition of valuations: v = w o wbar, value groups concatenated with the
# coarse group in front.

@dataclass(frozen=True)
class Composition:
    outer: FieldModel
    inner: FieldModel | None
    composite: FieldModel

    @property
    def coarse_level(self) -> int:
        return self.outer.value_group.rank if self.inner is not None else self.composite.value_group.rank

    def coarse_subgroup(self) -> ConvexSubgroup:
        """H of the coarsening realizing the outer valuation: w(a) = v(a)/H."""
        return ConvexSubgroup(self.composite.value_group, self.coarse_level)

    def lift_element(self, x: GroupElement) -> GroupElement:
        if self.inner is None:
            return x
        if x.group != self.inner.value_group:
            raise StructuralError("element does not live in the inner value group")
        pad = (Fraction(0),) * self.outer.value_group.rank
        return GroupElement(self.composite.value_group, pad + x.coords)

    def lift_subgroup(self, H: ConvexSubgroup) -> ConvexSubgroup:
        if self.inner is None:
            return H
        if H.group != self.inner.value_group:
            raise StructuralError("subgroup does not live in the inner value group")
        return ConvexSubgroup(self.composite.value_group, self.coarse_level + H.level)

    def lift_segment(self, s: Segment) -> Segment:
        """Transfer a cut of the inner value group across the decomposition."""
        if self.inner is None:
            return normalize(s)
        s = normalize(s)
        if s.kind.value == "element":
            from .segment import element_cut

            return element_cut(self.lift_element(s.gamma), closed=s.closed,
                               direction=s.direction)
        from .segment import subgroup_cut

        return normalize(subgroup_cut(
            ConvexSubgroup(self.composite.value_group, self.coarse_level + s.level),
            shift=self.lift_element(s.shift), closed=s.closed, direction=s.direction))

    def project_coarse(self, x: GroupElement) -> GroupElement:
        """w(a) = v(a)/H: drop the fine coordinates."""
        if x.group != self.composite.value_group:
            raise StructuralError("element does not live in the composite value group")
        return GroupElement(self.outer.value_group, x.coords[: self.coarse_level])

    def lift_pattern(self, theta: PatternSeries) -> PatternSeries:
        if self.inner is None:
            return theta
        if theta.model != self.inner:
            raise StructuralError("pattern does not live in the inner model")
        finite = SeriesElement(
            self.composite,
            tuple((self.lift_element(e), c) for e, c in theta.finite_part.terms))
        tails = tuple(Tail(t.coeff, self.lift_element(t.gamma), t.start)
                      for t in theta.tails)
        return PatternSeries(self.composite, finite, tails)


def compose_valuation(outer: FieldModel, inner: FieldModel | None) -> Composition:
    """Compose the coarse valuation of `outer` with the valuation on its residue field.

    With a trivial inner valuation the composite is the outer model itself and
    every segment transfers unchanged.
    """
    if inner is None:
        return Composition(outer, None, outer)
    if outer.residue_name != inner.name:
        raise StructuralError(
            f"residue field of {outer.name} is {outer.residue_name!r}, not {inner.name!r}")
    og, ig = outer.value_group, inner.value_group
    if og.prime != ig.prime:
        raise StructuralError("value groups use different primes")
    group = GroupDescriptor(og.components + ig.components, og.prime)
    vp = None
    if outer.vp is not None:
        vp = GroupElement(group, outer.vp.coords + (Fraction(0),) * ig.rank)
    composite = FieldModel(
        name=f"{outer.name} o {inner.name}",
        char=outer.char,
        value_group=group,
        residue=inner.residue,
        residue_char=inner.residue_char,
        perfect_hull=outer.perfect_hull and inner.perfect_hull,
        henselian=outer.henselian and inner.henselian,
        vp=vp,
    )
    return Composition(outer, inner, composite)


# --------------------------------------------------------------------------
# Text grammar for elements:  coeff 't^' exponent ('+' ...), exponents exact
# rationals or coordinate tuples.

_TERM_RE = re.compile(
    r"^\s*(?P<coeff>-?\d+)?\s*\*?\s*(?:t(?:\^(?P<exp>\([^)]*\)|-?\d+(?:/\d+)?))?)?\s*$"
)


def parse_element(model: FieldModel, text: str) -> SeriesElement:
    model._require_series()
    out = model.zero()
    depth = 0
    parts, cur = [], []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "+" and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    for part in parts:
        if not part.strip():
            raise StructuralError(f"empty term in element text: {text!r}")
        m = _TERM_RE.match(part)
        if not m or (m.group("coeff") is None and "t" not in part):
            raise StructuralError(f"cannot parse element term: {part!r}")
        coeff = int(m.group("coeff")) if m.group("coeff") else 1
        exp_text = m.group("exp")
        if "t" not in part:
            exponent = model.value_group.zero()
        elif exp_text is None:
            exponent = model.value_group.element(*([1] + [0] * (model.value_group.rank - 1)))
        elif exp_text.startswith("("):
            coords = [Fraction(x.strip()) for x in exp_text[1:-1].split(",")]
            exponent = model.value_group.element(*coords)
        else:
            if model.value_group.rank != 1:
                raise StructuralError("scalar exponent in a higher-rank value group")
            exponent = model.value_group.element(Fraction(exp_text))
        out = out + model.monomial(coeff, exponent)
    return out
