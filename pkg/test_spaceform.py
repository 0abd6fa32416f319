import math

import numpy as np
import pytest

from errors import DimensionError, DomainError, ValidationError
from spaceform import (AmbientSpace, SpaceKind, ball_boundary_normal, ball_distance, inner,
                       is_valid, normalize, residual)

SPH = AmbientSpace(SpaceKind.SPHERICAL, 3)
HYP = AmbientSpace(SpaceKind.HYPERBOLIC, 3)


def test_inner_signature():
    e0 = np.array([1.0, 0, 0, 0])
    e1 = np.array([0, 1.0, 0, 0])
    assert inner(HYP, e0, e0) == -1.0
    assert inner(HYP, e0, e1) == 0.0
    assert inner(SPH, e0, e0) == 1.0


def test_inner_bilinear_symmetric():
    rng = np.random.default_rng(3)
    for space in (SPH, HYP):
        x, y, z = rng.normal(size=(3, 4))
        a, b = rng.normal(size=2)
        assert inner(space, x, y) == pytest.approx(inner(space, y, x), abs=1e-14)
        lhs = inner(space, a * x + b * z, y)
        rhs = a * inner(space, x, y) + b * inner(space, z, y)
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_inner_dimension_mismatch():
    with pytest.raises(DimensionError):
        inner(SPH, np.zeros(3), np.zeros(4))


def test_ball_distance():
    assert ball_distance(SPH, SPH.center) == 0.0
    assert ball_distance(HYP, HYP.center) == 0.0
    x = np.array([math.cosh(1), math.sinh(1), 0, 0])
    assert ball_distance(HYP, x) == pytest.approx(1.0, abs=1e-12)
    y = np.array([math.cos(0.7), math.sin(0.7), 0, 0])
    assert ball_distance(SPH, y) == pytest.approx(0.7, abs=1e-12)


def test_ball_distance_domain():
    with pytest.raises(DomainError):
        ball_distance(HYP, np.array([0.5, 0, 0, 0]))
    with pytest.raises(DomainError):
        ball_distance(SPH, np.array([1.5, 0, 0, 0]))


def test_boundary_normal_examples():
    x = np.array([math.cos(0.7), math.sin(0.7), 0, 0])
    N = ball_boundary_normal(SPH, 0.7, x)
    np.testing.assert_allclose(N, [-math.sin(0.7), math.cos(0.7), 0, 0], atol=1e-14)
    y = np.array([math.cosh(1), math.sinh(1), 0, 0])
    N = ball_boundary_normal(HYP, 1.0, y)
    np.testing.assert_allclose(N, [math.sinh(1), math.cosh(1), 0, 0], atol=1e-13)


def test_boundary_normal_identities_random():
    rng = np.random.default_rng(7)
    for space, r in ((SPH, 0.9), (HYP, 1.3)):
        for _ in range(50):
            w = rng.normal(size=3)
            w /= np.linalg.norm(w)
            if space.kind is SpaceKind.SPHERICAL:
                x = np.concatenate([[math.cos(r)], math.sin(r) * w])
            else:
                x = np.concatenate([[math.cosh(r)], math.sinh(r) * w])
            N = ball_boundary_normal(space, r, x)
            assert abs(inner(space, N, N) - 1) <= 1e-12
            assert abs(inner(space, N, x)) <= 1e-12


def test_boundary_normal_precondition():
    with pytest.raises(DomainError):
        ball_boundary_normal(SPH, 0.7, SPH.center)
    with pytest.raises(ValidationError):
        ball_boundary_normal(SPH, 2.0, SPH.center)


def test_normalize_and_validity():
    x = np.array([math.cosh(0.4), math.sinh(0.4), 0, 0]) * (1 + 1e-6)
    assert not is_valid(HYP, x)
    assert residual(HYP, normalize(HYP, x)) < 1e-14
    y = np.array([0.6, 0.8, 0, 0]) * 1.01
    assert residual(SPH, normalize(SPH, y)) < 1e-14


def test_dimension_at_least_two():
    with pytest.raises(ValidationError):
        AmbientSpace(SpaceKind.SPHERICAL, 1)
