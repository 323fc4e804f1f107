"""Finite-field arithmetic used for series coefficients."""

import pytest

from valcuts.errors import StructuralError
from valcuts.residue import GF


class TestPrimeField:
    def test_basic_arithmetic(self):
        F = GF(5)
        a, b = F.element(3), F.element(4)
        assert (a + b).coeffs == (2,)
        assert (a * b).coeffs == (2,)
        assert (-a).coeffs == (2,)
        assert (a - a).is_zero

    def test_inverse_and_pow(self):
        F = GF(7)
        for n in range(1, 7):
            a = F.element(n)
            assert (a * a.inverse()) == F.one()
            assert a**6 == F.one()

    def test_zero_inverse_rejected(self):
        with pytest.raises(ZeroDivisionError):
            GF(3).zero().inverse()

    def test_frobenius_is_identity_on_prime_field(self):
        F = GF(3)
        for a in F.elements():
            assert a.frobenius() == a


class TestExtensionField:
    @pytest.mark.parametrize("p,m", [(2, 2), (2, 3), (3, 2)])
    def test_field_axioms_exhaustive(self, p, m):
        F = GF(p, m)
        elems = list(F.elements())
        assert len(elems) == p**m
        one, zero = F.one(), F.zero()
        for a in elems:
            assert a + zero == a and a * one == a
            if not a.is_zero:
                assert a * a.inverse() == one
        # multiplicative group order
        for a in elems:
            if not a.is_zero:
                assert a ** (p**m - 1) == one

    def test_frobenius_endomorphism(self):
        F = GF(2, 3)
        elems = list(F.elements())
        for a in elems:
            for b in elems:
                assert (a + b).frobenius() == a.frobenius() + b.frobenius()
                assert (a * b).frobenius() == a.frobenius() * b.frobenius()

    def test_mixed_fields_rejected(self):
        with pytest.raises(StructuralError):
            GF(2).one() + GF(3).one()
        with pytest.raises(StructuralError):
            GF(4)
