"""Block operator matrices of the first-order reformulation.

The second-order equation ``u'' + 2 B u' + A u = f`` becomes
``X' = (calA + calB) X + F`` on pairs ``X = (u, v)`` with ``v = u'``, where

    calA = [[O, I], [-A, O]]      calB = [[O, O], [O, -2B]]      F = (0, f).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import DEFAULT_TOL, Eigenpair, as_matrix, eig, fro, mat_exp, matrix_from_json, matrix_to_json

__all__ = [
    "CompanionSystem",
    "LiftedForcing",
    "GeneratorCheck",
    "build_companion",
    "extract_blocks",
    "algebraic_sum",
    "group_at",
    "generator_aa_check",
    "builtin_forcing",
    "sampled_forcing",
    "FORCING_KINDS",
]


@dataclass(frozen=True)
class CompanionSystem:
    """Holds ``A``, ``B`` and the derived ``calA``, ``calB``.

    Only ``A`` and ``B`` are inputs; the block matrices are rebuilt on
    construction.
    """

    A: np.ndarray
    B: np.ndarray
    calA: np.ndarray = field(init=False, repr=False)
    calB: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = as_matrix(self.A, "A")
        b = as_matrix(self.B, "B")
        if a.shape[0] != a.shape[1] or b.shape[0] != b.shape[1] or a.shape != b.shape:
            raise DimensionError(f"A and B must be square of equal size, got A{a.shape} and B{b.shape}")
        n = a.shape[0]
        ident = np.eye(n, dtype=complex)
        zero = np.zeros((n, n), dtype=complex)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "calA", np.block([[zero, ident], [-a, zero]]))
        object.__setattr__(self, "calB", np.block([[zero, zero], [zero, -2.0 * b]]))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def generator(self) -> np.ndarray:
        """Generator ``calA + calB`` of the full flow."""
        return algebraic_sum(self.calA, self.calB)

    def to_json(self) -> dict:
        return {"n": self.n, "A": matrix_to_json(self.A), "B": matrix_to_json(self.B)}

    @classmethod
    def from_json(cls, obj) -> "CompanionSystem":
        try:
            a, b = obj["A"], obj["B"]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"system JSON needs 'A' and 'B': {exc}") from exc
        system = cls(matrix_from_json(a), matrix_from_json(b))
        if "n" in obj and int(obj["n"]) != system.n:
            raise DimensionError(f"declared n={obj['n']} but matrices have n={system.n}")
        return system


def build_companion(A, B) -> CompanionSystem:
    return CompanionSystem(A, B)


def extract_blocks(calA, calB):
    """Recover ``(A, B)`` from the block matrices."""
    calA = as_matrix(calA, "calA")
    calB = as_matrix(calB, "calB")
    if calA.shape != calB.shape or calA.shape[0] != calA.shape[1] or calA.shape[0] % 2:
        raise DimensionError(f"block matrices must be square of even size, got {calA.shape} and {calB.shape}")
    n = calA.shape[0] // 2
    return -calA[n:, :n], -0.5 * calB[n:, n:]


def algebraic_sum(X, Y) -> np.ndarray:
    X = as_matrix(X)
    Y = as_matrix(Y)
    if X.shape != Y.shape or X.shape[0] != X.shape[1]:
        raise DimensionError(f"algebraic sum needs equal square operands, got {X.shape} and {Y.shape}")
    return X + Y


def group_at(generator, s) -> np.ndarray:
    """Group element ``exp(s * generator)``."""
    return mat_exp(generator, s)


@dataclass(frozen=True)
class GeneratorCheck:
    is_aa: bool
    spectrum: list[Eigenpair]
    offending: list[tuple[Eigenpair, str]]
    max_abs_real: float

    def to_json(self) -> dict:
        return {
            "is_aa": self.is_aa,
            "max_abs_real": self.max_abs_real,
            "spectrum": [_pair_json(p) for p in self.spectrum],
            "offending": [{"eigenvalue": _complex_json(p.value), "reason": why} for p, why in self.offending],
        }


def _complex_json(z):
    return {"re": float(z.real), "im": float(z.imag)}


def _pair_json(p):
    return {"eigenvalue": _complex_json(p.value), "algebraic": p.algebraic, "geometric": p.geometric}


def generator_aa_check(generator, tol=DEFAULT_TOL) -> GeneratorCheck:
    """Certify that every orbit ``s -> exp(s G) U`` is almost periodic.

    In finite dimension that holds exactly when the spectrum is on the
    imaginary axis and every eigenvalue is semisimple; almost periodic orbits
    are in particular almost automorphic.
    """
    g = as_matrix(generator, "generator")
    spectrum = eig(g, tol)
    cutoff = tol.rank_tol * fro(g)
    offending = []
    for p in spectrum:
        if abs(p.value.real) > cutoff:
            offending.append((p, "eigenvalue off the imaginary axis"))
        elif not p.semisimple:
            offending.append((p, f"defective: algebraic {p.algebraic} > geometric {p.geometric}"))
    max_re = max((abs(p.value.real) for p in spectrum), default=0.0)
    return GeneratorCheck(is_aa=not offending, spectrum=spectrum, offending=offending, max_abs_real=float(max_re))


class LiftedForcing:
    """Forcing ``f`` on the state space lifted to ``F(s) = (0, f(s))``.

    ``f`` maps a time to an ``n``-vector. If ``vectorized`` is true it is
    instead called once with an array of times and must return shape
    ``(k, n)``.
    """

    def __init__(self, f, n, vectorized=False, description="custom"):
        self.f = f
        self.n = int(n)
        self.vectorized = vectorized
        self.description = description

    def values(self, times) -> np.ndarray:
        """Samples of ``f`` with shape (len(times), n)."""
        times = np.asarray(times, dtype=float).reshape(-1)
        if self.vectorized:
            out = np.asarray(self.f(times), dtype=complex)
        else:
            out = np.array([np.asarray(self.f(float(t)), dtype=complex).reshape(-1) for t in times])
        out = out.reshape(times.size, -1)
        if out.shape[1] != self.n:
            raise DimensionError(f"forcing returns vectors of length {out.shape[1]}, expected {self.n}")
        return out

    def lifted(self, times) -> np.ndarray:
        """Samples of ``F`` with shape (len(times), 2n); first half is zero."""
        fv = self.values(times)
        return np.concatenate([np.zeros_like(fv), fv], axis=1)

    def __call__(self, s) -> np.ndarray:
        return self.lifted([s])[0]


FORCING_KINDS = ("zero", "const", "cos", "quasi", "decay")


def builtin_forcing(kind, n, direction=None, **params) -> LiftedForcing:
    """Scalar profile times a fixed direction in the state space.

    ``zero``; ``const`` with ``c``; ``cos`` with ``omega``; ``quasi`` with
    ``sigma1``, ``sigma2`` (sum of two cosines); ``decay`` with ``alpha``
    (``exp(-alpha |s|)``, integrable).
    """
    d = np.ones(n, dtype=complex) if direction is None else np.asarray(direction, dtype=complex).reshape(-1)
    if d.shape != (n,):
        raise DimensionError(f"forcing direction must have length {n}, got {d.shape[0]}")

    def need(key):
        if key not in params:
            raise DomainError(f"forcing '{kind}' needs parameter '{key}'")
        return float(params[key])

    if kind == "zero":
        profile = lambda s: np.zeros_like(s)
        label = "zero"
    elif kind == "const":
        c = need("c")
        profile = lambda s: np.full_like(s, c)
        label = f"const {c:g}"
    elif kind == "cos":
        w = need("omega")
        profile = lambda s: np.cos(w * s)
        label = f"cos {w:g}"
    elif kind == "quasi":
        w1, w2 = need("sigma1"), need("sigma2")
        profile = lambda s: np.cos(w1 * s) + np.cos(w2 * s)
        label = f"quasi {w1:g} {w2:g}"
    elif kind == "decay":
        alpha = need("alpha")
        if alpha <= 0:
            raise DomainError("decay rate alpha must be positive")
        profile = lambda s: np.exp(-alpha * np.abs(s))
        label = f"decay {alpha:g}"
    else:
        raise DomainError(f"unknown forcing kind {kind!r}; expected one of {FORCING_KINDS}")
    return LiftedForcing(lambda s: profile(s)[:, None] * d[None, :], n, vectorized=True, description=label)


def sampled_forcing(times, values) -> LiftedForcing:
    """Piecewise-linear forcing through samples ``values[k]`` at ``times[k]``.

    Outside the sampled range the end values are held.
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    values = np.asarray(values, dtype=complex)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] != times.size or times.size < 2:
        raise DimensionError("sampled forcing needs at least two samples and one value row per time")
    if np.any(np.diff(times) <= 0):
        raise DomainError("sampled forcing times must be strictly increasing")

    def f(s):
        cols = [np.interp(s, times, values[:, j].real) + 1j * np.interp(s, times, values[:, j].imag)
                for j in range(values.shape[1])]
        return np.stack(cols, axis=1)

    return LiftedForcing(f, values.shape[1], vectorized=True, description="sampled")
