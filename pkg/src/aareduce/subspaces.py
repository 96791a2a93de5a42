"""Subspaces, orthogonal projectors and invariance tests.

A subspace is stored through an orthonormal basis; its projector is
``P = Q Q^H``. The invariance test checks ``P A P = A P`` and the reducing
test checks the commutator ``P A = A P``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import (
    DEFAULT_TOL,
    as_matrix,
    eig,
    fro,
    matrix_from_json,
    matrix_to_json,
    null_space,
    orthonormalize,
    range_space,
)
from .operators import CompanionSystem, generator_aa_check

__all__ = [
    "Subspace",
    "Check",
    "HypothesisResult",
    "HypothesisReport",
    "projector",
    "complement",
    "is_invariant",
    "is_invariant_by_basis",
    "is_reducing",
    "canonical_invariants",
    "check_hypotheses",
    "eigenpair_subspace",
]


@dataclass(frozen=True)
class Subspace:
    """Subspace of ``C^ambient_dim`` with orthonormal basis columns."""

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        n = int(self.ambient_dim)
        if n < 1:
            raise DimensionError(f"ambient dimension must be positive, got {n}")
        q = np.array(self.basis, dtype=complex)
        if q.size == 0:
            q = np.zeros((n, 0), complex)
        elif q.ndim == 1:
            q = q[:, None]
        if q.ndim != 2 or q.shape[0] != n:
            raise DimensionError(f"basis has {q.shape[0]} rows, ambient dimension is {n}")
        if q.shape[1] > n:
            raise DimensionError(f"basis has {q.shape[1]} columns, more than ambient dimension {n}")
        gram_err = fro(q.conj().T @ q - np.eye(q.shape[1]))
        if gram_err > DEFAULT_TOL.algebra_tol * max(1, q.shape[1]):
            raise DomainError(f"basis columns are not orthonormal (||Q^H Q - I|| = {gram_err:.3e})")
        object.__setattr__(self, "ambient_dim", n)
        object.__setattr__(self, "basis", q)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def is_proper(self) -> bool:
        return 0 < self.dim < self.ambient_dim

    @classmethod
    def span(cls, vectors, tol=DEFAULT_TOL) -> "Subspace":
        """Span of the columns of ``vectors`` (must be independent)."""
        v = as_matrix(vectors, "vectors")
        return cls(v.shape[0], orthonormalize(v, tol))

    @classmethod
    def coordinate(cls, ambient_dim, indices) -> "Subspace":
        """Span of the standard basis vectors with the given indices."""
        eye = np.eye(ambient_dim, dtype=complex)
        return cls(ambient_dim, eye[:, list(indices)])

    @classmethod
    def zero(cls, ambient_dim) -> "Subspace":
        return cls(ambient_dim, np.zeros((ambient_dim, 0), dtype=complex))

    @classmethod
    def whole(cls, ambient_dim) -> "Subspace":
        return cls(ambient_dim, np.eye(ambient_dim, dtype=complex))

    def to_json(self) -> dict:
        return {"ambient_dim": self.ambient_dim, "basis": matrix_to_json(self.basis)}

    @classmethod
    def from_json(cls, obj, tol=DEFAULT_TOL) -> "Subspace":
        """Accepts any spanning basis and orthonormalises it."""
        try:
            n = int(obj["ambient_dim"])
            basis = matrix_from_json(obj["basis"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed subspace JSON: {exc}") from exc
        if basis.shape[0] != n:
            raise DimensionError(f"basis has {basis.shape[0]} rows, ambient_dim is {n}")
        if basis.shape[1] == 0:
            return cls.zero(n)
        return cls(n, orthonormalize(basis, tol))


@dataclass(frozen=True)
class Check:
    flag: bool
    residual: float

    def __bool__(self):
        return self.flag


def projector(S: Subspace) -> np.ndarray:
    return S.basis @ S.basis.conj().T


def complement(S: Subspace, tol=DEFAULT_TOL) -> Subspace:
    """Orthogonal complement."""
    n = S.ambient_dim
    if S.dim == 0:
        return Subspace.whole(n)
    if S.dim == n:
        return Subspace.zero(n)
    return Subspace(n, null_space(S.basis.conj().T, tol))


def _square_for(A, S, name="A"):
    A = as_matrix(A, name)
    if A.shape != (S.ambient_dim, S.ambient_dim):
        raise DimensionError(f"{name} has shape {A.shape}, subspace lives in dimension {S.ambient_dim}")
    return A


def _threshold(A, tol):
    return tol.algebra_tol * max(1.0, fro(A))


def is_invariant(A, S: Subspace, tol=DEFAULT_TOL) -> Check:
    """Projector identity ``P A P = A P``; residual is its Frobenius defect."""
    A = _square_for(A, S)
    P = projector(S)
    AP = A @ P
    residual = fro(P @ AP - AP)
    return Check(residual <= _threshold(A, tol), residual)


def is_invariant_by_basis(A, S: Subspace, tol=DEFAULT_TOL) -> Check:
    """Definition-level check: ``A`` maps every basis vector of ``S`` into ``S``.

    Residual is the largest ``||(I - P) A q||`` over basis columns ``q``.
    """
    A = _square_for(A, S)
    if S.dim == 0:
        return Check(True, 0.0)
    images = A @ S.basis
    leak = images - S.basis @ (S.basis.conj().T @ images)
    residual = float(np.max(np.linalg.norm(leak, axis=0)))
    return Check(residual <= tol.algebra_tol * fro(A), residual)


def is_reducing(A, S: Subspace, tol=DEFAULT_TOL) -> Check:
    """Commutator test ``P A = A P`` for a proper subspace.

    A passing commutator is cross-checked against invariance of ``S`` and of
    its complement; a disagreement raises ``AssertionError`` since the two
    are algebraically equivalent.
    """
    A = _square_for(A, S)
    if not S.is_proper:
        raise DomainError(
            f"a reducing subspace must be proper (0 < dim < {S.ambient_dim}), got dim {S.dim}"
        )
    P = projector(S)
    residual = fro(P @ A - A @ P)
    flag = residual <= _threshold(A, tol)
    if flag:
        # ||PA - AP|| bounds both invariance defects, so this cannot trip
        # unless the tolerances are changed independently.
        assert is_invariant(A, S, tol).flag and is_invariant(A, complement(S, tol), tol).flag
    return Check(flag, residual)


def canonical_invariants(A, tol=DEFAULT_TOL) -> list[Subspace]:
    """The kernel (when nontrivial) followed by every eigenspace.

    The eigenspace of a zero eigenvalue coincides with the kernel and is not
    repeated.
    """
    A = as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"A must be square, got {A.shape}")
    n = A.shape[0]
    out = []
    kernel = null_space(A, tol)
    if kernel.shape[1]:
        out.append(Subspace(n, kernel))
    zero_cut = tol.rank_tol * fro(A)
    for pair in eig(A, tol):
        if kernel.shape[1] and abs(pair.value) <= zero_cut:
            continue
        out.append(Subspace(n, pair.vectors))
    return out


def eigenpair_subspace(M, index=0, tol=DEFAULT_TOL) -> Subspace:
    """Span of the eigenspaces of one eigenvalue and its complex conjugate.

    Eigenvalue clusters are grouped into conjugate pairs, ordered by
    modulus, and the ``index``-th pair is returned. For a companion
    generator with Hermitian ``A`` this is a single decoupled oscillator.
    """
    M = as_matrix(M)
    pairs = eig(M, tol)
    cut = tol.rank_tol * max(1.0, fro(M))
    groups = []
    used = set()
    for i, p in enumerate(pairs):
        if i in used:
            continue
        used.add(i)
        members = [p]
        if abs(p.value.imag) > cut:
            for j, q in enumerate(pairs):
                if j not in used and abs(q.value - p.value.conjugate()) <= cut:
                    used.add(j)
                    members.append(q)
                    break
        groups.append(members)
    groups.sort(key=lambda g: (round(abs(g[0].value), 9), round(abs(g[0].value.imag), 9), round(g[0].value.real, 9)))
    if not 0 <= index < len(groups):
        raise DomainError(f"eigenpair index {index} out of range (have {len(groups)} groups)")
    vectors = np.concatenate([p.vectors for p in groups[index]], axis=1)
    return Subspace(M.shape[0], range_space(vectors, tol))


@dataclass(frozen=True)
class HypothesisResult:
    flag: bool
    residual: float
    note: str = ""

    def to_json(self) -> dict:
        return {"flag": self.flag, "residual": self.residual, "note": self.note}


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of the four standing hypotheses for a system and subspace.

    ``h1``: the group of ``calA`` has almost automorphic orbits.
    ``h2``: ``S`` reduces ``calA``.
    ``h3``: the range of ``calB`` lies in ``S``.
    ``h4``: ``D(A) x N(B)`` is dense, which at finite dimension means ``B = 0``.
    """

    h1_generator_aa: HypothesisResult
    h2_reduces: HypothesisResult
    h3_range_included: HypothesisResult
    h4_kernel_density: HypothesisResult
    spectrum: dict

    @property
    def overall(self) -> bool:
        return all(h.flag for h in self._all())

    @property
    def step1_hypotheses(self) -> bool:
        """h1 to h3, the hypotheses the projected dynamics rely on."""
        return self.h1_generator_aa.flag and self.h2_reduces.flag and self.h3_range_included.flag

    def _all(self):
        return (self.h1_generator_aa, self.h2_reduces, self.h3_range_included, self.h4_kernel_density)

    def to_json(self) -> dict:
        return {
            "h1": self.h1_generator_aa.to_json(),
            "h2": self.h2_reduces.to_json(),
            "h3": self.h3_range_included.to_json(),
            "h4": self.h4_kernel_density.to_json(),
            "overall": self.overall,
            "spectrum": self.spectrum,
        }


def check_hypotheses(sys: CompanionSystem, S: Subspace, tol=DEFAULT_TOL) -> HypothesisReport:
    if S.ambient_dim != 2 * sys.n:
        raise DimensionError(f"subspace lives in dimension {S.ambient_dim}, system state has dimension {2 * sys.n}")
    gen = generator_aa_check(sys.calA, tol)
    h1 = HypothesisResult(
        gen.is_aa,
        gen.max_abs_real,
        "imaginary semisimple spectrum" if gen.is_aa else "; ".join(why for _, why in gen.offending),
    )

    if S.is_proper:
        red = is_reducing(sys.calA, S, tol)
        h2 = HypothesisResult(red.flag, red.residual, "||P calA - calA P||_F")
    else:
        P = projector(S)
        h2 = HypothesisResult(False, fro(P @ sys.calA - sys.calA @ P), "subspace is not proper")

    P = projector(S)
    leak = fro((np.eye(S.ambient_dim) - P) @ sys.calB)
    h3 = HypothesisResult(leak <= _threshold(sys.calB, tol), leak, "||(I - P) calB||_F")

    kernel_dim = null_space(sys.B, tol).shape[1]
    b_zero = kernel_dim == sys.n
    h4 = HypothesisResult(
        b_zero,
        fro(sys.B),
        "holds (B=0)" if b_zero else f"fails (finite-dim degenerate: dim N(B) = {kernel_dim} < {sys.n})",
    )
    return HypothesisReport(h1, h2, h3, h4, gen.to_json())
