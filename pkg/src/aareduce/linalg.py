"""Dense complex matrix kernels.

Matrices are plain two-dimensional ``numpy`` arrays of dtype ``complex128``.
:func:`as_matrix` is the single entry point that validates and converts user
input; every other function assumes its arguments already went through it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError, DomainError, RankError

__all__ = [
    "ToleranceConfig",
    "DEFAULT_TOL",
    "Eigenpair",
    "as_matrix",
    "as_vector",
    "fro",
    "mat_exp",
    "expm_many",
    "orthonormalize",
    "null_space",
    "range_space",
    "numerical_rank",
    "eig",
    "matrix_to_json",
    "matrix_from_json",
]

MAX_EIG_DIM = 512


@dataclass(frozen=True)
class ToleranceConfig:
    """Tolerances used throughout the package.

    ``algebra_tol`` is relative and applies to algebraic identities,
    ``rank_tol`` is the singular-value cutoff relative to the largest singular
    value, and ``ode_tol`` bounds trajectory comparisons.
    """

    algebra_tol: float = 1e-9
    rank_tol: float = 1e-10
    ode_tol: float = 1e-6

    def __post_init__(self):
        for name in ("algebra_tol", "rank_tol", "ode_tol"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be a positive finite number, got {value!r}")
        if self.rank_tol >= 1:
            raise DomainError(f"rank_tol must be < 1, got {self.rank_tol!r}")


DEFAULT_TOL = ToleranceConfig()


def as_matrix(x, name="matrix") -> np.ndarray:
    """Return ``x`` as a finite, two-dimensional complex array."""
    m = np.array(x, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional, got shape {m.shape}")
    if m.shape[0] < 1:
        raise DimensionError(f"{name} must have at least one row, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    return m


def as_vector(x, dim=None, name="vector") -> np.ndarray:
    v = np.array(x, dtype=complex).reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise DimensionError(f"{name} must have length {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} has non-finite entries")
    return v


def _require_square(m, name="matrix"):
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")


def fro(m) -> float:
    """Frobenius norm (Euclidean norm for vectors)."""
    return float(np.linalg.norm(m))


# Degree-13 diagonal Pade coefficients and the 1-norm bound below which the
# approximant is accurate to unit roundoff (Higham 2005).
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def _pade13(x):
    """Pade approximant r13(x) for a stack of matrices of shape (k, n, n)."""
    b = _PADE13
    ident = np.broadcast_to(np.eye(x.shape[-1], dtype=complex), x.shape)
    x2 = x @ x
    x4 = x2 @ x2
    x6 = x4 @ x2
    u = x @ (x6 @ (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * ident)
    v = x6 @ (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * ident
    return np.linalg.solve(v - u, v + u)


def _squarings(norm1):
    if norm1 <= _THETA13:
        return 0
    return max(0, int(math.ceil(math.log2(norm1 / _THETA13))))


def expm_many(m, times) -> np.ndarray:
    """Return ``exp(t*m)`` for every ``t`` in ``times`` as a (k, n, n) array.

    Times sharing a squaring count are evaluated together.
    """
    m = as_matrix(m)
    _require_square(m)
    times = np.asarray(times, dtype=float).reshape(-1)
    n = m.shape[0]
    out = np.empty((times.size, n, n), dtype=complex)
    if times.size == 0:
        return out
    norm1 = float(np.max(np.sum(np.abs(m), axis=0)))
    counts = np.array([_squarings(abs(t) * norm1) for t in times])
    # t = 0 gives the identity exactly rather than a 1-ulp Pade solve.
    out[times == 0] = np.eye(n)
    counts[times == 0] = -1
    for sq in np.unique(counts[counts >= 0]):
        idx = np.nonzero(counts == sq)[0]
        scaled = (times[idx] / 2.0**sq)[:, None, None] * m[None, :, :]
        r = _pade13(scaled)
        for _ in range(int(sq)):
            r = r @ r
        out[idx] = r
    return out


def mat_exp(m, s=1.0) -> np.ndarray:
    """Matrix exponential ``exp(s*m)`` by scaling and squaring.

    A fixed degree-13 Pade approximant is applied to ``s*m / 2**k`` where
    ``k`` brings the 1-norm under the approximant's accuracy bound, and the
    result is squared ``k`` times.

    >>> mat_exp([[0, 1], [0, 0]], 2.0).real
    array([[1., 2.],
           [0., 1.]])
    """
    return expm_many(m, [float(s)])[0]


def _svd(m):
    try:
        return np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"SVD failed: {exc}") from exc


def _rank_from_singular_values(sv, rank_tol):
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rank_tol * sv[0]))


def numerical_rank(m, tol=DEFAULT_TOL) -> int:
    m = as_matrix(m)
    sv = np.linalg.svd(m, compute_uv=False)
    return _rank_from_singular_values(sv, tol.rank_tol)


def null_space(m, tol=DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the kernel, shape (cols, cols - rank)."""
    m = as_matrix(m)
    _, sv, vh = _svd(m)
    rank = _rank_from_singular_values(sv, tol.rank_tol)
    return vh[rank:].conj().T.copy()


def range_space(m, tol=DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the column space, shape (rows, rank)."""
    m = as_matrix(m)
    u, sv, _ = _svd(m)
    rank = _rank_from_singular_values(sv, tol.rank_tol)
    return u[:, :rank].copy()


def orthonormalize(v, tol=DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis for the columns of ``v`` (Householder QR).

    Columns are normalised so the triangular factor has a positive diagonal,
    which makes the result unique: ``[[2], [0]]`` maps to ``[[1], [0]]``.
    Raises :class:`RankError` when the columns are numerically dependent.
    """
    v = as_matrix(v)
    cols = v.shape[1]
    if cols == 0:
        return v.copy()
    if cols > v.shape[0]:
        raise RankError(
            f"cannot orthonormalize {cols} columns in dimension {v.shape[0]}", rank=numerical_rank(v, tol)
        )
    sv = np.linalg.svd(v, compute_uv=False)
    rank = _rank_from_singular_values(sv, tol.rank_tol)
    if rank < cols:
        raise RankError(f"columns are linearly dependent: numerical rank {rank} < {cols}", rank=rank)
    q, r = np.linalg.qr(v)
    d = np.diag(r)
    phase = d / np.abs(d)
    return q * phase.conj()[None, :]


@dataclass(frozen=True)
class Eigenpair:
    """One cluster of numerically equal eigenvalues.

    ``vectors`` is an orthonormal basis of the eigenspace; its column count is
    the geometric multiplicity.
    """

    value: complex
    algebraic: int
    geometric: int
    vectors: np.ndarray

    @property
    def semisimple(self) -> bool:
        return self.algebraic == self.geometric


def _cluster(values, radius):
    """Single-linkage clustering of complex numbers at the given radius."""
    k = len(values)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            if abs(values[i] - values[j]) <= radius:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def eig(m, tol=DEFAULT_TOL, max_dim=MAX_EIG_DIM) -> list[Eigenpair]:
    """Eigenvalues with algebraic and geometric multiplicities.

    Eigenvalues closer than ``rank_tol * ||m||_F`` are merged into one
    cluster whose size is the algebraic multiplicity. The eigenspace is the
    numerical kernel of ``m - lambda*I`` at the cluster mean. Results are
    sorted by real part, then imaginary part.
    """
    m = as_matrix(m)
    _require_square(m)
    n = m.shape[0]
    if n > max_dim:
        raise DimensionError(f"eigen-decomposition limited to dimension {max_dim}, got {n}")
    try:
        values, vecs = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}") from exc
    radius = tol.rank_tol * fro(m)
    pairs = []
    for group in _cluster(values, radius):
        lam = complex(np.mean(values[group]))
        alg = len(group)
        basis = null_space(m - lam * np.eye(n), tol)
        if basis.shape[1] == 0:
            # Kernel test too strict for an ill-conditioned cluster; fall back
            # on the solver's own eigenvectors.
            basis = range_space(vecs[:, group], tol)
        if basis.shape[1] > alg:
            basis = basis[:, -alg:]
        pairs.append(Eigenpair(value=lam, algebraic=alg, geometric=basis.shape[1], vectors=basis))
    pairs.sort(key=lambda p: (round(p.value.real, 12), round(p.value.imag, 12)))
    return pairs


def matrix_to_json(m) -> dict:
    """Serialise as ``{"rows", "cols", "re", "im"}`` (row-major); ``im`` is
    omitted when the matrix is real."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a two-dimensional matrix, got shape {m.shape}")
    out = {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "re": [float(x) for x in m.real.reshape(-1)]}
    if np.any(m.imag != 0):
        out["im"] = [float(x) for x in m.imag.reshape(-1)]
    return out


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros(re.shape)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed matrix JSON: {exc}") from exc
    if rows < 1 or cols < 0:
        raise DimensionError(f"invalid matrix shape ({rows}, {cols})")
    if re.shape != (rows * cols,) or im.shape != (rows * cols,):
        raise DimensionError(
            f"matrix JSON expects flat row-major lists of {rows * cols} entries, got re shape {re.shape}, im shape {im.shape}"
        )
    return as_matrix((re + 1j * im).reshape(rows, cols))
