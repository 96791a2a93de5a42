import math

import numpy as np
import pytest
import scipy.linalg

from aareduce.errors import DimensionError, DomainError, RankError
from aareduce.linalg import (
    DEFAULT_TOL,
    ToleranceConfig,
    eig,
    expm_many,
    fro,
    mat_exp,
    matrix_from_json,
    matrix_to_json,
    null_space,
    numerical_rank,
    orthonormalize,
    range_space,
)
from oracles import pinv_projector, taylor_expm


def test_exp_at_zero_is_identity():
    m = np.random.default_rng(0).standard_normal((5, 5))
    assert np.array_equal(mat_exp(m, 0.0), np.eye(5))


def test_exp_nilpotent():
    np.testing.assert_allclose(mat_exp([[0, 1], [0, 0]], 2.0), [[1, 2], [0, 1]], atol=1e-15)


def test_exp_quarter_rotation():
    got = mat_exp([[0, 1], [-1, 0]], math.pi / 2)
    want = taylor_expm([[0, 1], [-1, 0]], math.pi / 2)
    np.testing.assert_allclose(want, [[0, 1], [-1, 0]], atol=1e-14)
    np.testing.assert_allclose(got, want, atol=1e-14)


@pytest.mark.parametrize("seed", range(10))
def test_exp_against_references(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    m = rng.uniform(-3, 3, (n, n)) + 1j * rng.uniform(-3, 3, (n, n))
    got = mat_exp(m, 1.3)
    scale = np.linalg.norm(got)
    assert fro(got - scipy.linalg.expm(1.3 * m)) <= 1e-12 * scale
    assert fro(got - taylor_expm(m, 1.3)) <= 1e-11 * scale


def test_exp_large_norm():
    m = np.array([[0, 40.0], [-40.0, 0]])
    np.testing.assert_allclose(mat_exp(m, 1.0), scipy.linalg.expm(m), atol=1e-11)


def test_expm_many_matches_single_calls():
    m = np.array([[0, 1], [-4, -0.1]])
    times = [0.0, 0.5, -1.2, 7.0]
    stack = expm_many(m, times)
    for t, e in zip(times, stack):
        np.testing.assert_allclose(e, mat_exp(m, t), rtol=1e-13, atol=1e-14)


def test_exp_rejects_non_square():
    with pytest.raises(DimensionError):
        mat_exp(np.ones((2, 3)))


def test_exp_rejects_nan():
    with pytest.raises(DomainError):
        mat_exp([[np.nan]])


def test_orthonormalize_scaling():
    np.testing.assert_allclose(orthonormalize([[2], [0]]), [[1], [0]])


def test_orthonormalize_preserves_span():
    v = np.array([[1.0, 1.0], [0.0, 1.0]])
    q = orthonormalize(v)
    np.testing.assert_allclose(q.conj().T @ q, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(q @ q.conj().T, pinv_projector(v), atol=1e-14)


def test_orthonormalize_dependent_columns():
    with pytest.raises(RankError) as info:
        orthonormalize([[1, 1], [1, 1]])
    assert info.value.rank == 1


@pytest.mark.parametrize(
    "m, dim",
    [(np.eye(3), 0), (np.zeros((2, 2)), 2), (np.array([[1.0, 0], [0, 0]]), 1)],
)
def test_null_space_dimensions(m, dim):
    k = null_space(m)
    assert k.shape == (m.shape[1], dim)
    if dim:
        ref = scipy.linalg.null_space(m)
        np.testing.assert_allclose(k @ k.conj().T, ref @ ref.conj().T, atol=1e-14)


def test_null_space_direction():
    k = null_space([[1.0, 0], [0, 0]])
    assert abs(abs(k[1, 0]) - 1) < 1e-15 and abs(k[0, 0]) < 1e-15


def test_range_space_cases():
    assert range_space(np.zeros((3, 3))).shape == (3, 0)
    assert range_space(np.eye(4)).shape == (4, 4)
    r = range_space([[0, 0], [0, -2]])
    assert r.shape == (2, 1)
    np.testing.assert_allclose(np.abs(r[:, 0]), [0, 1], atol=1e-15)


def test_rank_nullity_wide_matrix():
    m = np.random.default_rng(1).standard_normal((2, 5))
    assert null_space(m).shape[1] + range_space(m).shape[1] == 5
    assert numerical_rank(m) == 2


def test_eig_diagonal():
    pairs = eig(np.diag([2.0, 3.0]))
    assert [(p.value, p.algebraic, p.geometric) for p in pairs] == [(2, 1, 1), (3, 1, 1)]


def test_eig_rotation():
    pairs = eig([[0, 1], [-1, 0]])
    values = sorted((round(p.value.imag, 12), p.algebraic, p.geometric) for p in pairs)
    assert values == [(-1.0, 1, 1), (1.0, 1, 1)]
    for p in pairs:
        assert abs(p.value.real) < 1e-14


def test_eig_jordan_block():
    (pair,) = eig([[0, 1], [0, 0]])
    assert abs(pair.value) < 1e-12
    assert (pair.algebraic, pair.geometric) == (2, 1)
    assert not pair.semisimple
    np.testing.assert_allclose(np.abs(pair.vectors[:, 0]), [1, 0], atol=1e-12)


def test_eig_repeated_semisimple():
    (pair,) = eig(np.eye(3) * 2)
    assert (pair.algebraic, pair.geometric) == (3, 3)


def test_matrix_json_round_trip():
    m = np.array([[1 + 2j, 3], [0, -1j]])
    obj = matrix_to_json(m)
    assert obj["rows"] == 2 and obj["re"] == [1.0, 3.0, 0.0, 0.0]
    np.testing.assert_array_equal(matrix_from_json(obj), m)


def test_real_matrix_omits_imaginary_part():
    assert "im" not in matrix_to_json(np.eye(2))


def test_matrix_json_shape_mismatch():
    with pytest.raises(DimensionError):
        matrix_from_json({"rows": 2, "cols": 2, "re": [1, 2, 3]})


def test_tolerance_validation():
    with pytest.raises(DomainError):
        ToleranceConfig(algebra_tol=0)
    with pytest.raises(DomainError):
        ToleranceConfig(rank_tol=2.0)
    assert DEFAULT_TOL.algebra_tol == 1e-9


def test_group_law_dimension_sixteen():
    rng = np.random.default_rng(16)
    for _ in range(10):
        m = rng.standard_normal((16, 16))
        m *= 10 / np.linalg.norm(m)
        for s, t in ((0.3, 1.7), (-1.7, 0.3), (1.7, 1.7)):
            es, et = mat_exp(m, s), mat_exp(m, t)
            err = fro(mat_exp(m, s + t) - es @ et)
            assert err <= DEFAULT_TOL.algebra_tol * np.linalg.norm(es) * np.linalg.norm(et)
