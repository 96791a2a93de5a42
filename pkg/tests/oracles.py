"""Independent reference computations used by the tests."""

import numpy as np


def taylor_expm(m, s=1.0, terms=40):
    """Power series with plain scaling and squaring; no Padé."""
    m = np.asarray(m, dtype=complex) * s
    norm = np.linalg.norm(m, 1)
    k = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0.5 else 0
    x = m / 2**k
    term = np.eye(m.shape[0], dtype=complex)
    total = term.copy()
    for j in range(1, terms):
        term = term @ x / j
        total = total + term
    for _ in range(k):
        total = total @ total
    return total


def pinv_projector(v):
    v = np.asarray(v, dtype=complex)
    return v @ np.linalg.pinv(v)


def rk4_second_order(A, B, u0, du0, f, h, steps):
    """Classical RK4 directly on u'' = f - 2 B u' - A u, tracking (u, u')."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)

    def rhs(t, u, w):
        return w, f(t) - 2 * B @ w - A @ u

    u = np.asarray(u0, dtype=complex)
    w = np.asarray(du0, dtype=complex)
    out = [u.copy()]
    for k in range(steps):
        t = k * h
        a1, b1 = rhs(t, u, w)
        a2, b2 = rhs(t + h / 2, u + h / 2 * a1, w + h / 2 * b1)
        a3, b3 = rhs(t + h / 2, u + h / 2 * a2, w + h / 2 * b2)
        a4, b4 = rhs(t + h, u + h * a3, w + h * b3)
        u = u + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        w = w + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        out.append(u.copy())
    return np.array(out)


def brute_almost_periods(values, eps, max_shift):
    """Every shift k (in samples) with sup_t |f(t + k) - f(t)| <= eps."""
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[:, None]
    hits = []
    for k in range(1, max_shift + 1):
        d = np.max(np.linalg.norm(values[k:] - values[:-k], axis=1))
        if d <= eps:
            hits.append(k)
    return hits


def random_unitary(rng, n):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
