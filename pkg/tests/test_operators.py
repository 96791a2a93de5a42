import math

import numpy as np
import pytest

from aareduce.errors import DimensionError, DomainError
from aareduce.operators import (
    CompanionSystem,
    algebraic_sum,
    build_companion,
    builtin_forcing,
    extract_blocks,
    generator_aa_check,
    group_at,
    sampled_forcing,
)
from oracles import taylor_expm


def test_scalar_companion():
    sys = build_companion([[1]], [[0]])
    np.testing.assert_array_equal(sys.calA, [[0, 1], [-1, 0]])
    np.testing.assert_array_equal(sys.calB, np.zeros((2, 2)))


def test_zero_blocks_give_nilpotent_generator():
    sys = build_companion(np.zeros((2, 2)), np.zeros((2, 2)))
    assert np.any(sys.calA != 0)
    np.testing.assert_array_equal(sys.calA @ sys.calA, np.zeros((4, 4)))


def test_damping_block():
    sys = build_companion(np.diag([1.0, 4.0]), np.diag([0.0, 1.0]))
    np.testing.assert_array_equal(sys.calB[2:, 2:], np.diag([0, -2]))
    assert sys.n == 2


def test_mismatched_blocks():
    with pytest.raises(DimensionError):
        CompanionSystem(np.eye(2), np.eye(3))


def test_extract_round_trip():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    b = rng.standard_normal((3, 3))
    sys = build_companion(a, b)
    ra, rb = extract_blocks(sys.calA, sys.calB)
    np.testing.assert_array_equal(ra, a)
    np.testing.assert_array_equal(rb, b)


def test_algebraic_sum():
    a = np.array([[0, 1], [-1, 0]])
    b = np.array([[0, 0], [0, -2]])
    np.testing.assert_array_equal(algebraic_sum(a, b), [[0, 1], [-1, -2]])
    np.testing.assert_array_equal(algebraic_sum(a, np.zeros((2, 2))), a)
    np.testing.assert_array_equal(algebraic_sum(a, b), algebraic_sum(b, a))


def test_system_json_round_trip():
    sys = build_companion(np.diag([1.0, 4.0]), np.diag([0.0, 1.0]))
    back = CompanionSystem.from_json(sys.to_json())
    np.testing.assert_array_equal(back.A, sys.A)
    with pytest.raises(DimensionError):
        CompanionSystem.from_json({**sys.to_json(), "n": 3})


def test_group_half_turn():
    g = np.array([[0, 1], [-1, 0]])
    np.testing.assert_allclose(group_at(g, math.pi), -np.eye(2), atol=1e-9)
    np.testing.assert_allclose(group_at(g, math.pi), taylor_expm(g, math.pi), atol=1e-14)
    np.testing.assert_array_equal(group_at(g, 0.0), np.eye(2))


def test_group_full_period_commensurate():
    sys = build_companion(np.diag([1.0, 4.0]), np.zeros((2, 2)))
    np.testing.assert_allclose(group_at(sys.calA, 2 * math.pi), np.eye(4), atol=1e-9)


def test_rotation_generator_is_aa():
    assert generator_aa_check([[0, 1], [-1, 0]]).is_aa


def test_jordan_generator_is_not_aa():
    check = generator_aa_check([[0, 1], [0, 0]])
    assert not check.is_aa
    assert "defective" in check.offending[0][1]


def test_decaying_generator_is_not_aa():
    check = generator_aa_check(-np.eye(2))
    assert not check.is_aa
    assert check.max_abs_real == pytest.approx(1.0)
    assert check.to_json()["offending"][0]["reason"] == "eigenvalue off the imaginary axis"


def test_builtin_forcings():
    t = np.linspace(0, 3, 7)
    f = builtin_forcing("quasi", 2, sigma1=1.0, sigma2=2.0)
    np.testing.assert_allclose(f.values(t)[:, 0], np.cos(t) + np.cos(2 * t))
    lifted = f.lifted(t)
    assert lifted.shape == (7, 4)
    np.testing.assert_array_equal(lifted[:, :2], 0)
    d = builtin_forcing("decay", 1, direction=[2.0], alpha=0.5)
    np.testing.assert_allclose(d.values([-2.0, 0.0, 2.0])[:, 0], 2 * np.exp(-0.5 * np.array([2, 0, 2])))


def test_builtin_forcing_errors():
    with pytest.raises(DomainError):
        builtin_forcing("cos", 1)
    with pytest.raises(DomainError):
        builtin_forcing("square", 1)
    with pytest.raises(DimensionError):
        builtin_forcing("const", 2, direction=[1.0], c=1)


def test_sampled_forcing_interpolates():
    f = sampled_forcing([0.0, 1.0, 2.0], [[0.0], [2.0], [0.0]])
    np.testing.assert_allclose(f.values([0.5, 1.5, 5.0])[:, 0], [1.0, 1.0, 0.0])
