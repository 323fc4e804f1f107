"""First-order formulas over a valued field with a base-field predicate.

Grammar (extends the published core with a sign on valuation expressions and
a symbolic exponent, both of which the standard definition texts need):

    formula := quant | bool
    quant   := ("forall" | "exists") ident "in" ("L" | "K" | "L\\K") ":" formula
    bool    := bool ("and" | "or" | "->") bool | "not" bool | "(" formula ")" | atom
    atom    := vexpr rel vexpr | term "=" term | "inK(" term ")"
    vexpr   := ["-"] "v(" term ")" | rational
    rel     := "<" | "<=" | "=" | ">=" | ">"
    term    := ident | constant | integer | term ("+"|"-"|"*") term
             | term "^" (integer | "p") | "1/" term | "(" term ")"

Evaluation is three-valued.  A quantifier over the base field K is answered
exactly (ORACLE mode) when its body compares a valuation of a recognized
shape in the bound variable c against a computable value: v(x - c),
v(x^p - x - c^p + c), or v(x^p - c^p), possibly inside a product with
c-free factors.  Everything else falls back to bounded witness enumeration
(BOUNDED mode), where UNKNOWN is a first-class outcome.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .errors import (
    EvaluationUnsupported,
    ParseError,
    StructuralError,
    UnsupportedDensityError,
)
from .gpsfield import INF, FieldModel, PatternSeries, SeriesElement, val_diff
from .ogroup import ConvexSubgroup, GroupElement, Position, position
from .segment import (
    CutKind,
    Direction,
    IdealDescriptor,
    Segment,
    contains,
    negate,
    normalize,
    scale_int,
)

# --------------------------------------------------------------------------
# AST


class Domain(str, Enum):
    L = "L"
    K = "K"
    L_MINUS_K = "L\\K"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int | str   # an integer or the symbolic prime "p"


@dataclass(frozen=True)
class Recip:
    term: object


@dataclass(frozen=True)
class VOf:
    term: object
    negated: bool = False


@dataclass(frozen=True)
class RatConst:
    value: Fraction


@dataclass(frozen=True)
class ValAtom:
    left: object   # VOf | RatConst
    rel: str
    right: object


@dataclass(frozen=True)
class EqAtom:
    left: object
    right: object


@dataclass(frozen=True)
class InK:
    term: object


@dataclass(frozen=True)
class Not:
    body: object


@dataclass(frozen=True)
class BinOp:
    op: str   # "and" | "or" | "->"
    left: object
    right: object


@dataclass(frozen=True)
class Quant:
    kind: str  # "forall" | "exists"
    var: str
    domain: Domain
    body: object


# --------------------------------------------------------------------------
# Lexer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<int>\d+)|(?P<op><=|>=|->|[()^+\-*/\\:<>=,]))"
)

_KEYWORDS = {"forall", "exists", "in", "and", "or", "not", "inK", "v", "L", "K"}


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise ParseError(f"unexpected character {text[pos]!r}", pos)
            break
        if m.group("name"):
            tokens.append(("name", m.group("name"), m.start("name")))
        elif m.group("int"):
            tokens.append(("int", m.group("int"), m.start("int")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self, offset=0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.next()
        if text != value:
            raise ParseError(f"expected {value!r}, found {text or 'end of input'!r}", pos)

    def at(self, value):
        return self.peek()[1] == value

    def formula(self):
        return self.implies()

    def implies(self):
        left = self.disjunct()
        if self.at("->"):
            self.next()
            return BinOp("->", left, self.implies())
        return left

    def disjunct(self):
        left = self.conjunct()
        while self.at("or"):
            self.next()
            left = BinOp("or", left, self.conjunct())
        return left

    def conjunct(self):
        left = self.unary()
        while self.at("and"):
            self.next()
            left = BinOp("and", left, self.unary())
        return left

    def unary(self):
        if self.at("not"):
            self.next()
            return Not(self.unary())
        if self.peek()[1] in ("forall", "exists"):
            return self.quant()
        if self.at("("):
            save = self.i
            self.next()
            try:
                inner = self.formula()
                self.expect(")")
                return inner
            except ParseError:
                self.i = save
        return self.atom()

    def quant(self):
        kind = self.next()[1]
        name_tok = self.next()
        if name_tok[0] != "name" or name_tok[1] in _KEYWORDS:
            raise ParseError("expected a variable name", name_tok[2])
        self.expect("in")
        dom_tok = self.next()
        if dom_tok[1] == "L" and self.at("\\"):
            self.next()
            self.expect("K")
            domain = Domain.L_MINUS_K
        elif dom_tok[1] in ("L", "K"):
            domain = Domain(dom_tok[1])
        else:
            raise ParseError("expected a domain L, K, or L\\K", dom_tok[2])
        self.expect(":")
        return Quant(kind, name_tok[1], domain, self.formula())

    def atom(self):
        if self.at("inK"):
            self.next()
            self.expect("(")
            t = self.term()
            self.expect(")")
            return InK(t)
        if self._vexpr_ahead():
            left = self.vexpr()
            rel_tok = self.next()
            if rel_tok[1] not in ("<", "<=", "=", ">=", ">"):
                raise ParseError("expected a comparison", rel_tok[2])
            right = self.vexpr()
            return ValAtom(left, rel_tok[1], right)
        left = self.term()
        self.expect("=")
        return EqAtom(left, self.term())

    def _vexpr_ahead(self):
        k, t, _ = self.peek()
        if t == "v" and self.peek(1)[1] == "(":
            return True
        if t == "-" and self.peek(1)[1] == "v" and self.peek(2)[1] == "(":
            return True
        if k == "int":
            # a rational is a vexpr unless it starts a term comparison
            j = self.i
            depth = 0
            while j < len(self.tokens):
                tok = self.tokens[j][1]
                if tok in ("<", "<=", ">=", ">"):
                    return True
                if tok == "=" and depth == 0:
                    return False
                if tok == "(":
                    depth += 1
                if tok == ")":
                    depth -= 1
                if tok in (":", "and", "or", "->", ""):
                    break
                j += 1
            return False
        return False

    def vexpr(self):
        if self.at("-") and self.peek(1)[1] == "v" and self.peek(2)[1] == "(":
            self.next()
            self.next()
            self.next()
            t = self.term()
            self.expect(")")
            return VOf(t, negated=True)
        if self.at("v") and self.peek(1)[1] == "(":
            self.next()
            self.next()
            t = self.term()
            self.expect(")")
            return VOf(t)
        return RatConst(self._rational())

    def _rational(self):
        sign = 1
        if self.at("-"):
            self.next()
            sign = -1
        tok = self.next()
        if tok[0] != "int":
            raise ParseError("expected a rational constant", tok[2])
        num = int(tok[1])
        if self.at("/"):
            self.next()
            den_tok = self.next()
            if den_tok[0] != "int":
                raise ParseError("expected a denominator", den_tok[2])
            return Fraction(sign * num, int(den_tok[1]))
        return Fraction(sign * num)

    def term(self):
        left = self.term_factor()
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            right = self.term_factor()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term_factor(self):
        left = self.term_power()
        while self.at("*"):
            self.next()
            left = Mul(left, self.term_power())
        return left

    def term_power(self):
        base = self.term_primary()
        if self.at("^"):
            self.next()
            tok = self.next()
            if tok[0] == "int":
                return Pow(base, int(tok[1]))
            if tok[1] == "p":
                return Pow(base, "p")
            raise ParseError("expected an integer or p as exponent", tok[2])
        return base

    def term_primary(self):
        kind, text, pos = self.peek()
        if text == "(":
            self.next()
            t = self.term()
            self.expect(")")
            return t
        if kind == "int":
            self.next()
            if text == "1" and self.at("/"):
                self.next()
                return Recip(self.term_power())
            return IntLit(int(text))
        if kind == "name":
            if text in ("forall", "exists", "and", "or", "not", "in"):
                raise ParseError(f"unexpected keyword {text!r} in term", pos)
            self.next()
            return Sym(text) if text in ("t", "p", "theta", "eta", "zeta_p") else Var(text)
        raise ParseError(f"unexpected token {text!r} in term", pos)


def parse(text: str):
    p = _Parser(text)
    out = p.formula()
    tok = p.next()
    if tok[0] != "end":
        raise ParseError(f"trailing input {tok[1]!r}", tok[2])
    return out


def print_formula(f) -> str:
    if isinstance(f, Quant):
        return f"{f.kind} {f.var} in {f.domain.value} : {print_formula(f.body)}"
    if isinstance(f, BinOp):
        # quantifier bodies extend maximally, so quantified sides need parens
        return f"({_print_delimited(f.left)} {f.op} {_print_delimited(f.right)})"
    if isinstance(f, Not):
        return f"not ({print_formula(f.body)})"
    if isinstance(f, ValAtom):
        return f"{_print_vexpr(f.left)} {f.rel} {_print_vexpr(f.right)}"
    if isinstance(f, EqAtom):
        return f"{print_term(f.left)} = {print_term(f.right)}"
    if isinstance(f, InK):
        return f"inK({print_term(f.term)})"
    raise StructuralError(f"not a formula node: {f!r}")


def _print_delimited(f) -> str:
    text = print_formula(f)
    return f"({text})" if isinstance(f, Quant) else text


def _print_vexpr(v) -> str:
    if isinstance(v, VOf):
        return f"{'-' if v.negated else ''}v({print_term(v.term)})"
    return str(v.value)


def print_term(t) -> str:
    if isinstance(t, (Var, Sym)):
        return t.name
    if isinstance(t, IntLit):
        return str(t.value)
    if isinstance(t, Add):
        return f"({print_term(t.left)} + {print_term(t.right)})"
    if isinstance(t, Sub):
        return f"({print_term(t.left)} - {print_term(t.right)})"
    if isinstance(t, Mul):
        return f"({print_term(t.left)} * {print_term(t.right)})"
    if isinstance(t, Pow):
        base = print_term(t.base)
        if isinstance(t.base, (Recip, Pow)):
            base = f"({base})"
        return f"{base}^{t.exponent}"
    if isinstance(t, Recip):
        return f"1/{print_term(t.term)}"
    raise StructuralError(f"not a term node: {t!r}")


# --------------------------------------------------------------------------
# Three-valued truth


class Truth(str, Enum):
    TRUE = "TRUE"
    FALSE = "FALSE"
    UNKNOWN = "UNKNOWN"

    @staticmethod
    def of(b: bool) -> "Truth":
        return Truth.TRUE if b else Truth.FALSE

    def negated(self) -> "Truth":
        if self is Truth.TRUE:
            return Truth.FALSE
        if self is Truth.FALSE:
            return Truth.TRUE
        return Truth.UNKNOWN


def _kleene_and(a: Truth, b: Truth) -> Truth:
    if Truth.FALSE in (a, b):
        return Truth.FALSE
    if Truth.UNKNOWN in (a, b):
        return Truth.UNKNOWN
    return Truth.TRUE


def _kleene_or(a: Truth, b: Truth) -> Truth:
    if Truth.TRUE in (a, b):
        return Truth.TRUE
    if Truth.UNKNOWN in (a, b):
        return Truth.UNKNOWN
    return Truth.FALSE


# --------------------------------------------------------------------------
# Models and values

@dataclass(frozen=True)
class ImmediateElement:
    """A distinguished element of L outside K with its approach data."""

    name: str
    segment: Segment                      # v(x - K), initial, normalized
    schedule: tuple[GroupElement, ...]    # v(x - b_k) along the approximants
    carrier: PatternSeries | None = None  # exact series form when available
    facts: frozenset = frozenset()        # e.g. "as_generator", "kummer_generator",
                                          # "one_unit"


@dataclass(frozen=True)
class DeclaredValue:
    """A value-only carrier: nothing but v and membership facts are known."""

    valuation: object                     # GroupElement | INF
    in_base: bool = True


@dataclass(frozen=True)
class Approximant:
    """The k-th schedule approximant b_k of an immediate element."""

    owner: str
    index: int
    carrier: SeriesElement | None = None


@dataclass(frozen=True)
class Budget:
    schedule_depth: int = 12
    exponent_bound: int = 2
    denominator_depth: int = 2
    max_candidates: int = 64


@dataclass(frozen=True)
class FormulaModel:
    """The pair (L, K) with bindings for the formula constants."""

    model: FieldModel
    immediates: tuple[ImmediateElement, ...]
    constants: dict = field(default_factory=dict)   # symbol -> carrier

    @property
    def group(self):
        return self.model.value_group

    @property
    def prime(self) -> int:
        return self.model.char if self.model.char else self.model.residue_char

    def immediate(self, name: str) -> ImmediateElement | None:
        for im in self.immediates:
            if im.name == name:
                return im
        return None

    def zeta_value(self) -> GroupElement:
        if self.model.vp is None:
            raise EvaluationUnsupported("model declares no value for p")
        return self.model.vp * Fraction(1, self.prime - 1)


@dataclass(frozen=True)
class EvalResult:
    value: Truth
    mode: str                  # "oracle" | "bounded"
    witness: str | None = None
    candidates_used: int = 0

    def to_json(self) -> dict:
        return {"value": self.value.value, "mode": self.mode,
                "witness": self.witness, "candidates_used": self.candidates_used}


class _Evaluator:
    def __init__(self, fmodel: FormulaModel, bindings: dict, budget: Budget):
        self.fm = fmodel
        self.bindings = dict(bindings)
        self.budget = budget
        self.bounded_used = False
        self.candidates_used = 0
        self.witness: str | None = None

    # -- term carriers ------------------------------------------------

    def _resolve(self, name: str):
        if name in self.bindings:
            return self.bindings[name]
        if name in self.fm.constants:
            return self.fm.constants[name]
        im = self.fm.immediate(name)
        if im is not None:
            return im
        raise EvaluationUnsupported(f"unbound name {name!r}")

    def term_carrier(self, t):
        """Exact carrier (series or pattern) of a term, when computable."""
        if isinstance(t, (Var, Sym)):
            v = self._resolve(t.name)
            if isinstance(v, ImmediateElement):
                if v.carrier is None:
                    raise EvaluationUnsupported(f"{t.name} has no series form")
                return v.carrier
            if isinstance(v, Approximant):
                if v.carrier is None:
                    raise EvaluationUnsupported("declared approximant has no series form")
                return v.carrier
            if isinstance(v, (SeriesElement, PatternSeries)):
                return v
            raise EvaluationUnsupported(f"{t.name} is value-only")
        if isinstance(t, IntLit):
            if not self.fm.model.series_capable:
                raise EvaluationUnsupported("no series arithmetic on this model")
            return self.fm.model.monomial(t.value, self.fm.group.zero())
        if isinstance(t, Add):
            return self.term_carrier(t.left) + self.term_carrier(t.right)
        if isinstance(t, Sub):
            return self.term_carrier(t.left) - self.term_carrier(t.right)
        if isinstance(t, Mul):
            a, b = self.term_carrier(t.left), self.term_carrier(t.right)
            if isinstance(a, PatternSeries) or isinstance(b, PatternSeries):
                raise EvaluationUnsupported("products of pattern series are not exact")
            return a * b
        if isinstance(t, Pow):
            base = self.term_carrier(t.base)
            e = self._exponent(t.exponent)
            if isinstance(base, PatternSeries):
                return base.pow_char_power(e)
            return base**e
        if isinstance(t, Recip):
            base = self.term_carrier(t.term)
            if isinstance(base, PatternSeries):
                raise EvaluationUnsupported("pattern series are not invertible here")
            return base.inverse()
        raise EvaluationUnsupported(f"no carrier for term {t!r}")

    def _exponent(self, e) -> int:
        return self.fm.prime if e == "p" else int(e)

    def term_valuation(self, t):
        """v(term): multiplicative structure first, carriers as fallback."""
        if isinstance(t, Mul):
            a = self.term_valuation(t.left)
            b = self.term_valuation(t.right)
            return INF if INF in (a, b) else a + b
        if isinstance(t, Recip):
            v = self.term_valuation(t.term)
            if v is INF:
                raise EvaluationUnsupported("1/0 has no valuation")
            return -v
        if isinstance(t, Pow):
            v = self.term_valuation(t.base)
            e = self._exponent(t.exponent)
            return INF if v is INF else v * e
        if isinstance(t, Sub) and t == Sub(Sym("zeta_p"), IntLit(1)):
            return self.fm.zeta_value()
        if isinstance(t, Sym) and t.name == "p" and "p" not in self.fm.constants:
            return self._int_valuation(self.fm.prime)
        if isinstance(t, Sym) and t.name == "zeta_p" and "zeta_p" not in self.fm.constants:
            return self.fm.group.zero()  # a root of unity is a unit
        if isinstance(t, (Var, Sym)):
            v = self._resolve(t.name)
            if isinstance(v, DeclaredValue):
                return v.valuation
            if isinstance(v, ImmediateElement) and v.carrier is None:
                raise EvaluationUnsupported(f"{t.name} is schedule-only")
        if isinstance(t, (Add, Sub)):
            special = self._schedule_difference(t)
            if special is not None:
                return special
            try:
                carrier = self.term_carrier(t)
            except EvaluationUnsupported:
                return self._min_rule(t)
            if isinstance(carrier, PatternSeries):
                return self._pattern_val(carrier)
            return carrier.valuation()
        if isinstance(t, IntLit):
            return self._int_valuation(t.value)
        carrier = self.term_carrier(t)
        if isinstance(carrier, PatternSeries):
            return self._pattern_val(carrier)
        return carrier.valuation()

    def _pattern_val(self, pat: PatternSeries):
        if not pat.has_tails:
            return pat.finite_part.valuation()
        return val_diff(pat, pat.model.zero())

    def _int_valuation(self, n: int):
        p = self.fm.prime
        if n == 0:
            return INF
        if self.fm.model.char:
            return INF if n % p == 0 else self.fm.group.zero()
        if self.fm.model.vp is None:
            raise EvaluationUnsupported("model declares no value for p")
        k = 0
        while n % p == 0:
            n //= p
            k += 1
        return self.fm.model.vp * k

    def _schedule_difference(self, t):
        """v(x - b_k) from the declared schedule of the immediate x."""
        if not isinstance(t, Sub):
            return None
        left, right = t.left, t.right
        for a, b in ((left, right), (right, left)):
            if isinstance(a, (Var, Sym)) and isinstance(b, (Var, Sym)):
                try:
                    xa = self._resolve(a.name)
                    xb = self._resolve(b.name)
                except EvaluationUnsupported:
                    return None
                if isinstance(xa, ImmediateElement) and isinstance(xb, Approximant):
                    if xb.owner != xa.name:
                        raise EvaluationUnsupported(
                            "approximant belongs to a different element")
                    return xa.schedule[xb.index]
        return None

    def _min_rule(self, t):
        a = self.term_valuation(t.left)
        b = self.term_valuation(t.right)
        if a is INF:
            return b
        if b is INF:
            return a
        if a != b:
            return min(a, b)
        raise EvaluationUnsupported("equal valuations; the sum may cancel")

    # -- atoms ----------------------------------------------------------

    def vexpr_value(self, v):
        if isinstance(v, RatConst):
            if v.value == 0:
                return self.fm.group.zero()
            if self.fm.group.rank != 1:
                raise EvaluationUnsupported(
                    "nonzero rational constants need a rank-1 value group")
            return self.fm.group.element(v.value)
        val = self.term_valuation(v.term)
        if v.negated:
            if val is INF:
                raise EvaluationUnsupported("-v(0) has no value")
            return -val
        return val

    def eval_atom(self, atom) -> Truth:
        if isinstance(atom, ValAtom):
            try:
                a = self.vexpr_value(atom.left)
                b = self.vexpr_value(atom.right)
            except EvaluationUnsupported:
                self.bounded_used = True
                return Truth.UNKNOWN
            return Truth.of(_compare_values(a, b, atom.rel))
        if isinstance(atom, EqAtom):
            try:
                a = self.term_carrier(atom.left)
                b = self.term_carrier(atom.right)
            except EvaluationUnsupported:
                try:
                    va = self.term_valuation(atom.left)
                    vb = self.term_valuation(atom.right)
                    if va is not vb and (va is INF or vb is INF or va != vb):
                        return Truth.FALSE  # distinct valuations refute equality
                except EvaluationUnsupported:
                    pass
                self.bounded_used = True
                return Truth.UNKNOWN
            diff = a - b
            if isinstance(diff, PatternSeries):
                return Truth.of(not diff.has_tails and diff.as_series().is_zero)
            return Truth.of(diff.is_zero)
        if isinstance(atom, InK):
            return self._in_base(atom.term)
        raise StructuralError(f"not an atom: {atom!r}")

    def _in_base(self, t) -> Truth:
        if isinstance(t, (Var, Sym)):
            v = self._resolve(t.name)
            if isinstance(v, ImmediateElement):
                if v.carrier is not None:
                    return Truth.of(not v.carrier.has_tails)
                return Truth.FALSE
            if isinstance(v, DeclaredValue):
                return Truth.of(v.in_base)
            if isinstance(v, Approximant):
                return Truth.TRUE
            if isinstance(v, SeriesElement):
                return Truth.TRUE
            if isinstance(v, PatternSeries):
                return Truth.of(not v.has_tails)
        if isinstance(t, Pow) and isinstance(t.base, (Var, Sym)):
            v = self._try_resolve(t.base.name)
            if isinstance(v, ImmediateElement) and "kummer_generator" in v.facts \
                    and self._exponent(t.exponent) == self.fm.prime:
                return Truth.TRUE
        try:
            carrier = self.term_carrier(t)
        except EvaluationUnsupported:
            self.bounded_used = True
            return Truth.UNKNOWN
        if isinstance(carrier, PatternSeries):
            return Truth.of(not carrier.has_tails)
        return Truth.TRUE

    def _try_resolve(self, name):
        try:
            return self._resolve(name)
        except EvaluationUnsupported:
            return None

    # -- quantifiers ------------------------------------------------------

    def eval(self, f) -> Truth:
        if isinstance(f, Quant):
            return self.eval_quant(f)
        if isinstance(f, Not):
            return self.eval(f.body).negated()
        if isinstance(f, BinOp):
            if f.op == "and":
                return _kleene_and(self.eval(f.left), self.eval(f.right))
            if f.op == "or":
                return _kleene_or(self.eval(f.left), self.eval(f.right))
            return _kleene_or(self.eval(f.left).negated(), self.eval(f.right))
        return self.eval_atom(f)

    def eval_quant(self, q: Quant) -> Truth:
        if q.domain is Domain.L_MINUS_K:
            if not self.fm.immediates:
                raise StructuralError(
                    "domain L\\K needs a model with a distinguished immediate element")
            results = []
            for im in self.fm.immediates:
                self.bindings[q.var] = im
                results.append(self.eval(q.body))
            del self.bindings[q.var]
            # the distinguished elements are exhaustive for this model
            agg = Truth.TRUE if q.kind == "forall" else Truth.FALSE
            for r in results:
                agg = _kleene_and(agg, r) if q.kind == "forall" else _kleene_or(agg, r)
            return agg
        if q.domain is Domain.K:
            exact = self._oracle(q)
            if exact is not None:
                return exact
        return self._bounded(q)

    # oracle: the quantified atom compares a recognized shape against a value
    def _oracle(self, q: Quant) -> Truth | None:
        body = q.body
        if not _formula_mentions(body, q.var):
            return self.eval(body)  # constant body over a nonempty domain
        if isinstance(body, BinOp) and body.op == "and":
            for guard, rest in ((body.left, body.right), (body.right, body.left)):
                if not _formula_mentions(guard, q.var):
                    inner = self._oracle(Quant(q.kind, q.var, q.domain, rest))
                    if inner is None:
                        return None
                    return _kleene_and(self.eval(guard), inner)
            return None
        if isinstance(body, BinOp) and body.op == "->":
            if not _formula_mentions(body.left, q.var):
                inner = self._oracle(Quant(q.kind, q.var, q.domain, body.right))
                if inner is None:
                    return None
                return _kleene_or(self.eval(body.left).negated(), inner)
            return None
        if not isinstance(body, ValAtom):
            return None
        mentions_left = _mentions(body.left, q.var)
        cside = body.left if mentions_left else body.right
        other = body.right if mentions_left else body.left
        rel = body.rel if mentions_left else _flip_rel(body.rel)
        if _mentions(other, q.var) or not isinstance(cside, VOf):
            return None
        decomposed = self._decompose(cside.term, q.var)
        if decomposed is None:
            return None
        seg, mult, off, exp, w_extra = decomposed
        try:
            w = self.vexpr_value(other)
        except EvaluationUnsupported:
            return None
        # atom: sign * (w_extra + exp * (mult * s + off)) REL w over s in seg
        if w is INF:
            return Truth.of(rel in ("<", "<="))  # the c side is always finite
        sign = -1 if cside.negated else 1
        if sign < 0:
            rel = _flip_rel(rel)
        rhs = (w * sign) - w_extra - (off * exp)
        k = exp * mult
        if k < 0:
            rel = _flip_rel(rel)
            rhs = -rhs
            k = -k
        try:
            scaled = scale_int(seg, k)
        except UnsupportedDensityError:
            return None
        return _decide(scaled, q.kind, rel, rhs)

    def _decompose(self, term, var):
        """Split v(term) into (segment, mult, offset, factor exponent, cofactor value).

        v(term) = cofactors + e * (mult * s + offset) with s ranging over the
        segment; e is the integer exponent the c-bearing factor carries."""
        factors = _flatten_factors(term)
        with_var = [(f, e) for f, e in factors if _mentions_term(f, var)]
        if len(with_var) != 1:
            return None
        fvar, e = with_var[0]
        shape = self._match_shape(fvar, var)
        if shape is None:
            return None
        seg, mult, off = shape
        w_extra = self.fm.group.zero()
        try:
            for f, ee in factors:
                if f is fvar:
                    continue
                v = self.term_valuation(f)
                if v is INF:
                    return None
                w_extra = w_extra + v * ee
        except EvaluationUnsupported:
            return None
        return seg, mult, off, e, w_extra

    def _canon(self, t):
        """Exponent tokens equal to the prime are normalized to the symbol p."""
        if isinstance(t, Pow) and self._exponent(t.exponent) == self.fm.prime:
            return Pow(t.base, "p")
        return t

    def _is_var_char_pow(self, t, var) -> bool:
        return (isinstance(t, Pow) and t.base == Var(var)
                and self._exponent(t.exponent) == self.fm.prime)

    def _match_shape(self, t, var):
        """Recognized shapes in the quantified variable c:
        x - c, x^p - x - c^p + c, x^p - c^p (x a distinguished element)."""
        terms = [(self._canon(tt), s) for tt, s in _flatten_sum(t)]
        if len(terms) == 2:
            (t1, s1), (t2, s2) = terms
            if s1 != -s2:
                return None
            pos_t, neg_t = (t1, t2) if s1 == 1 else (t2, t1)
            for x_t, c_t in ((pos_t, neg_t), (neg_t, pos_t)):
                im = self._immediate_of(x_t)
                if im is not None and c_t == Var(var):
                    return im.segment, 1, self.fm.group.zero()
            for x_t, c_t in ((pos_t, neg_t), (neg_t, pos_t)):
                im = self._immediate_of_pow(x_t)
                if im is not None and self._is_var_char_pow(c_t, var):
                    if "one_unit" not in im.facts:
                        return None
                    try:
                        vzeta = self.fm.zeta_value()
                    except EvaluationUnsupported:
                        return None
                    # v(x^p - c^p) = vp + v(x - c) needs v(x - c) < v(zeta - 1)
                    if not _initial_below(im.segment, vzeta):
                        return None
                    return im.segment, 1, self.fm.model.vp
            return None
        if len(terms) == 4:
            sgn: dict = {}
            for tt, s in terms:
                key = _term_key(tt)
                sgn[key] = sgn.get(key, 0) + s
            candidates = [im.name for im in self.fm.immediates] + list(self.bindings)
            for x_name in candidates:
                xv = self._try_resolve(x_name)
                if not isinstance(xv, ImmediateElement):
                    continue
                x_node = _name_node(x_name)
                pat = {
                    _term_key(Pow(x_node, "p")): 1,
                    _term_key(x_node): -1,
                    _term_key(Pow(Var(var), "p")): -1,
                    _term_key(Var(var)): 1,
                }
                if sgn == pat or sgn == {k: -v for k, v in pat.items()}:
                    if "as_generator" not in xv.facts:
                        return None
                    # v(y^p - y) = p * v(y) needs every v(x - c) negative
                    if not _initial_below(xv.segment, self.fm.group.zero()):
                        return None
                    return xv.segment, self.fm.prime, self.fm.group.zero()
        return None

    def _immediate_of(self, t):
        if isinstance(t, (Var, Sym)):
            v = self._try_resolve(t.name)
            if isinstance(v, ImmediateElement):
                return v
        return None

    def _immediate_of_pow(self, t):
        if isinstance(t, Pow) and self._exponent(t.exponent) == self.fm.prime:
            return self._immediate_of(t.base)
        return None

    # bounded fallback: enumerate candidate witnesses
    def _bounded(self, q: Quant) -> Truth:
        self.bounded_used = True
        for label, cand in self._candidates():
            self.candidates_used += 1
            self.bindings[q.var] = cand
            r = self.eval(q.body)
            del self.bindings[q.var]
            if q.kind == "exists" and r is Truth.TRUE:
                self.witness = label
                return Truth.TRUE
            if q.kind == "forall" and r is Truth.FALSE:
                self.witness = label
                return Truth.FALSE
        return Truth.UNKNOWN  # the domain is infinite; the pool cannot settle it

    def _candidates(self):
        out = []
        for im in self.fm.immediates:
            for k in range(min(self.budget.schedule_depth, len(im.schedule))):
                carrier = im.carrier.partial_sum(k) if im.carrier is not None else None
                out.append((f"{im.name}~{k}", Approximant(im.name, k, carrier)))
        if self.fm.model.series_capable:
            g = self.fm.group
            p = self.fm.prime
            bound = self.budget.exponent_bound
            out.append(("0", self.fm.model.zero()))
            for d in range(self.budget.denominator_depth + 1):
                den = p**d
                for num in range(-bound * den, bound * den + 1):
                    coords = [Fraction(0)] * g.rank
                    coords[g.rank - 1] = Fraction(num, den)
                    try:
                        e = g.element(*coords)
                    except StructuralError:
                        continue
                    out.append((f"t^{Fraction(num, den)}",
                                self.fm.model.monomial(1, e)))
                    if len(out) >= self.budget.max_candidates:
                        return out[: self.budget.max_candidates]
        return out[: self.budget.max_candidates]


def _name_node(name: str):
    return Sym(name) if name in ("t", "p", "theta", "eta", "zeta_p") else Var(name)


def _term_key(t) -> str:
    return print_term(t)


def _mentions(vexpr, var) -> bool:
    if isinstance(vexpr, RatConst):
        return False
    return _mentions_term(vexpr.term, var)


def _formula_mentions(f, var) -> bool:
    if isinstance(f, Quant):
        return f.var != var and _formula_mentions(f.body, var)
    if isinstance(f, BinOp):
        return _formula_mentions(f.left, var) or _formula_mentions(f.right, var)
    if isinstance(f, Not):
        return _formula_mentions(f.body, var)
    if isinstance(f, ValAtom):
        return _mentions(f.left, var) or _mentions(f.right, var)
    if isinstance(f, EqAtom):
        return _mentions_term(f.left, var) or _mentions_term(f.right, var)
    if isinstance(f, InK):
        return _mentions_term(f.term, var)
    return False


def _mentions_term(t, var) -> bool:
    if isinstance(t, Var):
        return t.name == var
    if isinstance(t, Sym):
        return False
    if isinstance(t, IntLit):
        return False
    if isinstance(t, (Add, Sub, Mul)):
        return _mentions_term(t.left, var) or _mentions_term(t.right, var)
    if isinstance(t, Pow):
        return _mentions_term(t.base, var)
    if isinstance(t, Recip):
        return _mentions_term(t.term, var)
    return False


def _flatten_factors(t, exponent=1):
    if isinstance(t, Mul):
        return _flatten_factors(t.left, exponent) + _flatten_factors(t.right, exponent)
    if isinstance(t, Recip):
        return _flatten_factors(t.term, -exponent)
    if isinstance(t, Pow) and isinstance(t.exponent, int):
        return [(f, e * t.exponent) for f, e in _flatten_factors(t.base, exponent)]
    return [(t, exponent)]


def _flatten_sum(t, sign=1):
    if isinstance(t, Add):
        return _flatten_sum(t.left, sign) + _flatten_sum(t.right, sign)
    if isinstance(t, Sub):
        return _flatten_sum(t.left, sign) + _flatten_sum(t.right, -sign)
    return [(t, sign)]


def _flip_rel(rel: str) -> str:
    return {"<": ">", "<=": ">=", "=": "=", ">=": "<=", ">": "<"}[rel]


def _initial_below(seg: Segment, bound: GroupElement) -> bool:
    """Every member of the initial segment lies strictly below `bound`."""
    from .segment import element_cut, is_subset

    return is_subset(negate(seg), negate(element_cut(bound, closed=False,
                                                     direction=Direction.INITIAL)))


def _compare_values(a, b, rel: str) -> bool:
    if a is INF or b is INF:
        if rel == "=":
            return a is b
        if rel in ("<", "<="):
            return (b is INF) and (a is not INF or rel == "<=")
        return (a is INF) and (b is not INF or rel == ">=")
    return {"<": a < b, "<=": a <= b, "=": a == b, ">=": a >= b, ">": a > b}[rel]


def _decide(seg: Segment, quant: str, rel: str, w) -> Truth:
    """Exact answer to (exists|forall) s in seg: s REL w, for an initial segment."""
    seg = normalize(seg)
    member = contains(seg, w)
    has_max = seg.kind is CutKind.ELEMENT
    at_max = has_max and seg.gamma == w
    if quant == "exists":
        if rel == ">=":
            return Truth.of(member)
        if rel == ">":
            return Truth.of(member and not at_max)
        if rel == "=":
            return Truth.of(member)
        return Truth.TRUE  # <= and <: initial segments are unbounded below
    if rel == "<":
        return Truth.of(not member)
    if rel == "<=":
        return Truth.of(not member or at_max)
    return Truth.FALSE  # >=, >, =: fail far down the segment


def free_variables(f, bound=frozenset()) -> frozenset:
    if isinstance(f, Quant):
        return free_variables(f.body, bound | {f.var})
    if isinstance(f, BinOp):
        return free_variables(f.left, bound) | free_variables(f.right, bound)
    if isinstance(f, Not):
        return free_variables(f.body, bound)
    if isinstance(f, ValAtom):
        out = frozenset()
        if isinstance(f.left, VOf):
            out |= _term_free(f.left.term, bound)
        if isinstance(f.right, VOf):
            out |= _term_free(f.right.term, bound)
        return out
    if isinstance(f, EqAtom):
        return _term_free(f.left, bound) | _term_free(f.right, bound)
    if isinstance(f, InK):
        return _term_free(f.term, bound)
    return frozenset()


def _term_free(t, bound) -> frozenset:
    if isinstance(t, Var):
        return frozenset() if t.name in bound else frozenset({t.name})
    if isinstance(t, (Add, Sub, Mul)):
        return _term_free(t.left, bound) | _term_free(t.right, bound)
    if isinstance(t, Pow):
        return _term_free(t.base, bound)
    if isinstance(t, Recip):
        return _term_free(t.term, bound)
    return frozenset()


def evaluate(phi, fmodel: FormulaModel, bindings: dict | None = None,
             budget: Budget | None = None) -> EvalResult:
    """Three-valued evaluation; exact where the segment oracle applies."""
    ast = parse(phi) if isinstance(phi, str) else phi
    bindings = bindings or {}
    known = set(bindings) | set(fmodel.constants) | {im.name for im in fmodel.immediates}
    unbound = free_variables(ast) - known
    if unbound:
        raise StructuralError(f"unbound variables: {sorted(unbound)}")
    ev = _Evaluator(fmodel, bindings, budget or Budget())
    value = ev.eval(ast)
    mode = "bounded" if ev.bounded_used else "oracle"
    return EvalResult(value, mode, ev.witness, ev.candidates_used)


# --------------------------------------------------------------------------
# Agreement checking of a definition against a directly computed set

@dataclass(frozen=True)
class AgreementReport:
    definition: str
    total: int
    agreements: int
    disagreements: tuple
    unknowns: int

    @property
    def unknown_rate(self) -> float:
        return self.unknowns / self.total if self.total else 0.0

    @property
    def passed(self) -> bool:
        return not self.disagreements

    def to_json(self) -> dict:
        return {
            "definition": self.definition,
            "samples": self.total,
            "agreements": self.agreements,
            "disagreements": list(self.disagreements),
            "unknowns": self.unknowns,
            "unknown_rate": self.unknown_rate,
            "passed": self.passed,
        }


def membership(direct, value) -> bool:
    """Membership of a sample by its valuation, for ideals and coarsenings."""
    if isinstance(direct, IdealDescriptor):
        return direct.contains_value(None if value is INF else value)
    if isinstance(direct, ConvexSubgroup):
        if value is INF:
            return True
        return position(value, direct) is not Position.BELOW
    raise StructuralError("direct object must be an ideal or a convex subgroup")


def check_definition(phi, direct, fmodel: FormulaModel, samples,
                     free_var: str = "b", budget: Budget | None = None,
                     name: str = "") -> AgreementReport:
    """Compare formula truth against descriptor membership on each sample.

    Samples are (label, carrier, valuation) triples; TRUE/FALSE disagreements
    are reported as hard failures, UNKNOWNs are counted against the budget.
    """
    ast = parse(phi) if isinstance(phi, str) else phi
    agreements = 0
    unknowns = 0
    bad = []
    total = 0
    for label, carrier, value in samples:
        total += 1
        res = evaluate(ast, fmodel, bindings={free_var: carrier}, budget=budget)
        want = membership(direct, value)
        if res.value is Truth.UNKNOWN:
            unknowns += 1
            continue
        if (res.value is Truth.TRUE) == want:
            agreements += 1
        else:
            bad.append({"sample": label, "formula": res.value.value,
                        "direct": want})
    return AgreementReport(name or (phi if isinstance(phi, str) else print_formula(ast)),
                           total, agreements, tuple(bad), unknowns)


# Named definition texts used by the command-line reports.
DEFINITIONS = {
    "ram-ideal-as": (
        "exists x in L\\K : exists c in K : inK(x^p - x) and v(b) >= -v(x - c)"),
    "max-ideal": (
        "exists x in L\\K : exists c in K : inK(x^p - x) and -v(x - c) <= v(b)"),
    "coarse-ring-as": "forall c in K : v(theta^p - theta - c^p + c) < v(b)",
    "ram-ideal-kummer": (
        "exists x in L\\K : exists c in K : inK(x^p) and "
        "v(b) >= v((zeta_p - 1) * (1/(x - c)))"),
    "coarse-ring-kummer": (
        "forall c in K : v((eta^p - c^p) * (1/(zeta_p - 1))^p) < v(b)"),
}
