"""Shared fixtures and brute-force oracles used across the suite."""

from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from valcuts.ogroup import Component, GroupDescriptor


@pytest.fixture
def pdiv2_rank2() -> GroupDescriptor:
    return GroupDescriptor((Component.PDIV, Component.PDIV), 2)


@pytest.fixture
def pdiv3_rank1() -> GroupDescriptor:
    return GroupDescriptor((Component.PDIV,), 3)


def grid_points(group: GroupDescriptor, bound: int, depth: int):
    """All group elements with |coords| <= bound and denominators p^depth."""
    p = group.prime
    axes = []
    for kind in group.components:
        den = 1 if kind is Component.INT else p**depth
        step = Fraction(1, den)
        axes.append([step * k for k in range(-bound * den, bound * den + 1)])
    for coords in itertools.product(*axes):
        yield group.element(*coords)


def segment_set(seg, points):
    from valcuts.segment import contains

    return frozenset(x for x in points if contains(seg, x))
