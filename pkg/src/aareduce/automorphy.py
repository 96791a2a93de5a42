"""Diagnostics for almost periodic / almost automorphic sampled signals.

Almost automorphy is an asymptotic property over all real sequences, so no
finite computation decides it. The checks here are falsifiable surrogates:

* boundedness of the sampled range (necessary),
* a covering-number saturation score for relative compactness,
* a scan for epsilon-almost periods on the sampling grid,
* a finite Bochner-type test: pick a Cauchy subsequence of shifted copies
  and require the back-shifted limit to reproduce the signal.

A ``FAIL`` verdict always rests on a violated check; ``AP_LIKE`` and
``AA_PLAUSIBLE`` are heuristic.

Norms are Euclidean on sample vectors and sup over time.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DimensionError, DomainError, WindowError

__all__ = [
    "SampledSignal",
    "Verdict",
    "AutomorphyVerdict",
    "range_bounded",
    "almost_period_scan",
    "bochner_test",
    "derivative_aa_check",
    "integral_aa_check",
    "classify",
    "compactness_proxy",
    "default_shifts",
    "read_signal_csv",
    "write_signal_csv",
]

MIN_SAMPLES = 16
MIN_OVERLAP = 0.25


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled vector-valued signal.

    ``values`` has shape (count, m); a one-dimensional array is treated as
    a scalar signal.
    """

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise DimensionError(f"signal values must be (count, m), got shape {v.shape}")
        if not np.iscomplexobj(v):
            v = v.astype(float)
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError(f"dt must be positive, got {self.dt!r}")
        if v.shape[0] < MIN_SAMPLES:
            raise DomainError(f"a signal needs at least {MIN_SAMPLES} samples, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise DomainError("signal has non-finite samples")
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "values", v)

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.count)

    @property
    def length(self) -> float:
        return self.dt * (self.count - 1)

    @classmethod
    def from_function(cls, f, t0, t1, dt) -> "SampledSignal":
        """Sample a vectorised ``f`` on ``t0, t0 + dt, ..., t1``."""
        k = int(round((t1 - t0) / dt))
        t = t0 + dt * np.arange(k + 1)
        return cls(t0, dt, np.asarray(f(t)))


def _norms(x):
    """Euclidean norm along the last axis."""
    if np.iscomplexobj(x):
        return np.sqrt(np.sum(x.real**2 + x.imag**2, axis=-1))
    return np.sqrt(np.sum(x * x, axis=-1))


def _real_view(x):
    """Real array with the same row norms (complex columns split in two)."""
    if np.iscomplexobj(x):
        return np.concatenate([x.real, x.imag], axis=-1)
    return np.asarray(x, dtype=float)


def _sup_distance(a, b):
    return float(np.max(_norms(a - b))) if len(a) else 0.0


@dataclass(frozen=True)
class BoundResult:
    flag: bool
    sup_estimate: float


def range_bounded(sig: SampledSignal, bound_cap=math.inf) -> BoundResult:
    sup = float(np.max(_norms(sig.values)))
    return BoundResult(sup <= bound_cap, sup)


@dataclass(frozen=True)
class AlmostPeriodScan:
    """Epsilon-almost periods found on the grid.

    ``gaps`` are consecutive differences of ``0, p_1, p_2, ...``.
    ``first_recurrence`` is the first almost period after the run of small
    shifts ``dt, 2dt, ...`` that qualify only through continuity; it is
    ``None`` when the scan saw no genuine return.
    """

    eps: float
    periods: np.ndarray
    gaps: list
    max_gap: float | None
    first_recurrence: float | None
    scan_limit: float


def almost_period_scan(sig: SampledSignal, eps) -> AlmostPeriodScan:
    """Every grid shift ``0 < tau <= length/2`` with
    ``sup_t ||f(t + tau) - f(t)|| <= eps`` over the overlapping samples."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps!r}")
    v = _real_view(sig.values)
    kmax = (sig.count - 1) // 2
    # A strided subsample of the differences gives a lower bound on the sup,
    # so rejecting on it is exact; only survivors get the full comparison.
    stride = max(1, min(16, sig.count // 256))
    eps2 = eps * eps
    hits = []
    for k in range(1, kmax + 1):
        d = v[k::stride] - v[:-k:stride]
        if float(np.max(np.einsum("ij,ij->i", d, d))) > eps2:
            continue
        if stride > 1:
            d = v[k:] - v[:-k]
            if float(np.max(np.einsum("ij,ij->i", d, d))) > eps2:
                continue
        hits.append(k)
    periods = sig.dt * np.asarray(hits, dtype=float)
    if not hits:
        return AlmostPeriodScan(eps, periods, [], None, None, kmax * sig.dt)
    anchored = np.concatenate([[0.0], periods])
    gaps = [float(g) for g in np.diff(anchored)]
    run = 0
    while run < len(hits) and hits[run] == run + 1:
        run += 1
    if run < len(hits):
        first = float(periods[run])
    else:
        # every scanned shift qualifies (e.g. a constant signal)
        first = float(periods[0]) if run == kmax else None
    return AlmostPeriodScan(eps, periods, gaps, max(gaps), first, kmax * sig.dt)


def _shift_index(sig, s, interpolate):
    k = s / sig.dt
    if interpolate:
        return k
    return int(round(k))


def _shifted(sig, k, start, count):
    """Samples ``f(t_start + j dt + k dt)`` for ``j < count``; ``k`` may be
    fractional (linear interpolation)."""
    v = sig.values
    if float(k).is_integer():
        k = int(k)
        return v[start + k:start + k + count]
    base = int(math.floor(k))
    w = k - base
    lo = v[start + base:start + base + count]
    hi = v[start + base + 1:start + base + 1 + count]
    return (1 - w) * lo + w * hi


@dataclass(frozen=True)
class BochnerResult:
    passed: bool
    selected: list
    limit_signal: SampledSignal | None
    cauchy_residual: float
    back_residual: float
    eps: float

    @property
    def cauchy_found(self) -> bool:
        return len(self.selected) >= 2


def _interp_error(sig):
    if sig.count < 3:
        return 0.0
    second = np.diff(sig.values, n=2, axis=0) / sig.dt**2
    return float(np.max(_norms(second))) * sig.dt**2 / 8


def bochner_test(sig: SampledSignal, shifts, eps, interpolate=False) -> BochnerResult:
    """Finite surrogate of the subsequence criterion.

    Shifts are snapped to the grid unless ``interpolate`` is set, in which
    case linear interpolation is used and its error bound added to ``eps``.
    The first shift anchors the subsequence; later shifts are kept when
    their shifted copy is within ``eps/2`` of the anchor on the common
    window, so kept copies are pairwise within ``eps``. ``g`` is the copy
    for the last kept shift, and the test passes when
    ``sup ||g(t - s_n) - f(t)|| <= eps`` for every earlier kept ``s_n``.
    """
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps!r}")
    shifts = [float(s) for s in shifts]
    if not shifts:
        raise DomainError("bochner_test needs at least one shift")
    if min(shifts) < 0:
        raise DomainError("shifts must be nonnegative")
    ks = [_shift_index(sig, s, interpolate) for s in shifts]
    kmax = int(math.ceil(max(ks)))
    overlap = sig.count - kmax - (0 if float(max(ks)).is_integer() else 1)
    if overlap < MIN_OVERLAP * sig.count:
        raise WindowError(
            f"largest shift {max(shifts):g} leaves {overlap} of {sig.count} samples; need {MIN_OVERLAP:.0%}"
        )
    tol = eps + (_interp_error(sig) if interpolate else 0.0)
    anchor = _shifted(sig, ks[0], 0, overlap)
    stride = max(1, min(16, overlap // 256))
    coarse_anchor = anchor[::stride]
    selected = [0]
    cauchy = 0.0
    for i in range(1, len(ks)):
        copy = _shifted(sig, ks[i], 0, overlap)
        # the strided sup is a lower bound, so rejecting on it is exact
        if _sup_distance(copy[::stride], coarse_anchor) > tol / 2:
            continue
        d = _sup_distance(copy, anchor)
        if d <= tol / 2:
            selected.append(i)
            cauchy = max(cauchy, d)
    last = ks[selected[-1]]
    limit = _shifted(sig, last, 0, overlap)
    back = 0.0
    base = sig.values[:overlap]
    for i in selected[:-1]:
        # g(t - s_n) = f(t + s_last - s_n); the index stays within the signal
        # because s_last - s_n <= kmax.
        back = max(back, _sup_distance(_shifted(sig, last - ks[i], 0, overlap), base))
    enough = len(selected) >= min(2, len(ks))
    limit_sig = SampledSignal(sig.t0, sig.dt, limit) if overlap >= MIN_SAMPLES else None
    return BochnerResult(
        passed=bool(enough and back <= tol),
        selected=[shifts[i] for i in selected],
        limit_signal=limit_sig,
        cauchy_residual=2 * cauchy,
        back_residual=back,
        eps=tol,
    )


def default_shifts(sig: SampledSignal, max_candidates=20000) -> list:
    """Grid shifts over ``[length/8, 0.7 length]``, every grid point unless
    that exceeds ``max_candidates``."""
    lo = max(1, int(math.ceil((sig.count - 1) / 8)))
    hi = int(math.floor(0.7 * (sig.count - 1)))
    stride = max(1, int(math.ceil((hi - lo + 1) / max_candidates)))
    return [k * sig.dt for k in range(lo, hi + 1, stride)]


def compactness_proxy(sig: SampledSignal, eps, max_points=4000) -> float:
    """Covering-number saturation score in [0, 1].

    Greedy ``eps``-covers are built for the first half and for the whole
    sampled range; the score is their size ratio. A relatively compact
    range is already covered by the first half (score near 1); a drifting
    signal needs new balls throughout (score near 1/2).
    """
    v = sig.values
    step = max(1, sig.count // max_points)
    pts = v[::step]
    centers = []
    half_count = None
    half = len(pts) // 2
    for i, p in enumerate(pts):
        if i == half:
            half_count = len(centers)
        if centers:
            if float(np.min(_norms(np.asarray(centers) - p))) <= eps:
                continue
        centers.append(p)
    if half_count is None:
        half_count = len(centers)
    return half_count / len(centers) if centers else 1.0


class Verdict(str, enum.Enum):
    AP_LIKE = "AP_LIKE"
    AA_PLAUSIBLE = "AA_PLAUSIBLE"
    FAIL = "FAIL"


_RANK = {Verdict.FAIL: 0, Verdict.AA_PLAUSIBLE: 1, Verdict.AP_LIKE: 2}


def weakest(verdicts) -> Verdict:
    return min(verdicts, key=_RANK.__getitem__)


@dataclass(frozen=True)
class AutomorphyVerdict:
    range_bounded: bool
    sup_estimate: float
    compactness_proxy: float
    almost_period_gap: float | None
    first_recurrence: float | None
    bochner_pass: bool
    back_residual: float
    verdict: Verdict
    reasons: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "range_bounded": self.range_bounded,
            "sup_estimate": self.sup_estimate,
            "compactness_proxy": self.compactness_proxy,
            "almost_period_gap": self.almost_period_gap if self.almost_period_gap is not None else "none found",
            "first_recurrence": self.first_recurrence,
            "bochner_pass": self.bochner_pass,
            "back_residual": self.back_residual,
            "reasons": list(self.reasons),
        }


def _range_growth(sig):
    norms = _norms(sig.values)
    first = float(np.max(norms[: sig.count // 2 + 1]))
    whole = float(np.max(norms))
    return whole / first if first > 0 else (1.0 if whole == 0 else math.inf)


GROWTH_LIMIT = 1.25
COMPACTNESS_FLOOR = 0.75


def classify(sig: SampledSignal, eps=0.1, bound_cap=math.inf, shifts=None) -> AutomorphyVerdict:
    """Combine the surrogates into a three-valued verdict.

    ``FAIL`` needs a concrete violation: the range exceeds ``bound_cap``,
    the sup over the whole window exceeds the first-half sup by more than
    ``GROWTH_LIMIT`` (the range is still growing), or shifted copies
    converge but the back-shifted limit does not return to the signal.
    Otherwise the verdict is ``AP_LIKE`` when epsilon-almost periods were
    found and a Cauchy subsequence closed the Bochner test, and
    ``AA_PLAUSIBLE`` when the evidence is inconclusive.
    """
    bound = range_bounded(sig, bound_cap)
    growth = _range_growth(sig)
    proxy = compactness_proxy(sig, eps)
    scan = almost_period_scan(sig, eps)
    boch = bochner_test(sig, default_shifts(sig) if shifts is None else shifts, eps)
    failures, notes = [], []
    if not bound.flag:
        failures.append(f"range not bounded: sup {bound.sup_estimate:.6g} > cap {bound_cap:.6g}")
    if growth > GROWTH_LIMIT:
        failures.append(f"range still growing: whole-window sup is {growth:.6g}x the first-half sup")
    if boch.cauchy_found and not boch.passed:
        failures.append(f"back-shifted limit misses the signal by {boch.back_residual:.6g} > {boch.eps:.6g}")
    if not boch.cauchy_found:
        notes.append("no Cauchy subsequence among the shifted copies")
    elif float(np.max(np.diff(boch.selected))) <= 1.5 * sig.dt:
        notes.append("Cauchy subsequence consists of neighbouring shifts only")
    if proxy < COMPACTNESS_FLOOR:
        notes.append(f"covering number not saturated (proxy {proxy:.3g})")
    if scan.max_gap is None:
        notes.append(f"no {eps:g}-almost period up to {scan.scan_limit:g}")
    elif scan.first_recurrence is None:
        notes.append(f"only continuity-range almost periods (<= {scan.periods[-1]:g}) within the window")
    if failures:
        verdict = Verdict.FAIL
    elif scan.max_gap is not None and boch.passed:
        verdict = Verdict.AP_LIKE
    else:
        verdict = Verdict.AA_PLAUSIBLE
    return AutomorphyVerdict(
        range_bounded=bound.flag,
        sup_estimate=bound.sup_estimate,
        compactness_proxy=proxy,
        almost_period_gap=scan.max_gap,
        first_recurrence=scan.first_recurrence,
        bochner_pass=boch.passed,
        back_residual=boch.back_residual,
        verdict=verdict,
        reasons=failures + notes,
    )


@dataclass(frozen=True)
class DerivativeCheck:
    derivative: SampledSignal
    modulus: float
    kinks: list
    uniformly_continuous: bool
    verdict: AutomorphyVerdict | None
    note: str


def derivative_aa_check(sig: SampledSignal, eps=0.1, classify_derivative=True) -> DerivativeCheck:
    """Differentiate and test the derivative.

    The derivative uses second-order central differences (one-sided at the
    ends). ``modulus`` is the largest jump between neighbouring derivative
    samples, an estimate of its modulus of continuity at ``dt``; jumps above
    ``eps`` are listed in ``kinks``. An almost automorphic signal with a
    uniformly continuous derivative has an almost automorphic derivative,
    so the derivative is then run through :func:`classify`.
    """
    d = np.gradient(sig.values, sig.dt, axis=0, edge_order=2)
    deriv = SampledSignal(sig.t0, sig.dt, d)
    jumps = _norms(np.diff(d, axis=0))
    modulus = float(np.max(jumps))
    kink_idx = np.nonzero(jumps > eps)[0]
    kinks = [float(sig.t0 + (i + 0.5) * sig.dt) for i in kink_idx]
    smooth = modulus <= eps
    verdict = classify(deriv, eps) if classify_derivative else None
    if smooth:
        note = "derivative uniformly continuous on the grid; its almost automorphy follows from that of the signal"
    else:
        note = f"derivative jumps by up to {modulus:.6g} (> {eps:g}) at {len(kinks)} places; no conclusion transfers"
    return DerivativeCheck(deriv, modulus, kinks, smooth, verdict, note)


@dataclass(frozen=True)
class IntegralCheck:
    primitive: SampledSignal
    range_bounded: bool
    sup_estimate: float
    growth_ratio: float
    note: str


def integral_aa_check(sig: SampledSignal, bound_cap) -> IntegralCheck:
    """Primitive ``F(t) = int_{t0}^t f`` by the cumulative trapezoid rule.

    For almost automorphic ``f``, ``F`` is almost automorphic exactly when
    its range is bounded. ``growth_ratio`` compares the sup of ``F`` on the
    whole window to the sup on the first half (about 2 for linear drift);
    the range counts as bounded when it is under ``bound_cap`` and the
    ratio is at most ``GROWTH_LIMIT``.
    """
    prim = cumulative_trapezoid(sig.values, dx=sig.dt, axis=0, initial=0)
    F = SampledSignal(sig.t0, sig.dt, prim)
    bound = range_bounded(F, bound_cap)
    half = float(np.max(_norms(prim[: sig.count // 2 + 1])))
    growth = bound.sup_estimate / half if half > 0 else 1.0
    if not bound.flag:
        note = f"primitive exceeds the cap ({bound.sup_estimate:.6g} > {bound_cap:.6g}): not almost automorphic"
    elif growth > GROWTH_LIMIT:
        note = f"primitive still growing ({growth:.6g}x the first-half sup): not almost automorphic"
    else:
        note = "primitive bounded on the window: consistent with an almost automorphic primitive"
    return IntegralCheck(F, bound.flag and growth <= GROWTH_LIMIT, bound.sup_estimate, growth, note)


def write_signal_csv(sig: SampledSignal, path):
    """Header ``t,v1,...,vm``; complex signals use ``vk_re,vk_im`` pairs."""
    v = sig.values
    complex_out = np.iscomplexobj(v) and np.any(v.imag != 0)
    m = v.shape[1]
    if complex_out:
        header = ["t"] + [f"v{j + 1}_{part}" for j in range(m) for part in ("re", "im")]
    else:
        header = ["t"] + [f"v{j + 1}" for j in range(m)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, row in zip(sig.times, v):
            if complex_out:
                cells = [x for z in row for x in (z.real, z.imag)]
            else:
                cells = list(np.real(row))
            w.writerow([_fmt(t)] + [_fmt(x) for x in cells])


def _fmt(x):
    return f"{float(x):.12g}"


def read_signal_csv(path) -> SampledSignal:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip() != "t":
        raise DomainError(f"{path}: header must start with 't'")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise DomainError(f"{path}: non-numeric cell ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != len(header):
        raise DomainError(f"{path}: every row needs {len(header)} cells")
    if data.shape[0] < MIN_SAMPLES:
        raise DomainError(f"{path}: a signal needs at least {MIN_SAMPLES} samples")
    t = data[:, 0]
    dts = np.diff(t)
    dt = float(np.mean(dts))
    if dt <= 0 or np.max(np.abs(dts - dt)) > 1e-6 * max(dt, 1e-300) + 1e-9 * np.max(np.abs(t)):
        raise DomainError(f"{path}: samples must be uniformly spaced in t")
    cols = header[1:]
    if cols and all(c.endswith(("_re", "_im")) for c in cols):
        values = data[:, 1::2] + 1j * data[:, 2::2]
    else:
        values = data[:, 1:]
    return SampledSignal(float(t[0]), dt, values)
