"""Joint spectral radius brackets and the zero-temperature scan.

Upper bounds come from word-norm maxima: max ||A_w||^(1/n) over length-n
words is valid for every n.  Lower bounds come from the quantified gap
between the maxima at lengths n*d and n (constant d^(d+1)), optionally
sharpened by the classical spectral-radius floor max rho(A_w)^(1/n) —
standard theory rather than a power-sum inequality, so it carries its own
provenance tag.  The zero-temperature scan maps norm-pressure brackets
through x -> exp(x/s), whose s -> inf limit is the joint spectral radius.
"""

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from . import _engine, linalg, pressure
from .errors import BudgetExhaustedError, InvalidInputError
from .measure import FiniteMatrixMeasure, WordBudget
from .pressure import PressureBracket

__all__ = [
    "MatrixSet",
    "jsr_upper",
    "jsr_lower_bochi",
    "jsr_bracket",
    "ScanPoint",
    "ScanResult",
    "zero_temperature_scan",
]

PROVENANCE_BOCHI = "bochi-lower-bound"
PROVENANCE_FLOOR = "spectral-floor"


class MatrixSet:
    """Non-empty finite set of real d x d matrices (the JSR alphabet)."""

    __slots__ = ("_weights", "_mats", "_engine_caches")

    def __init__(self, matrices):
        mats = [linalg.as_matrix(m) for m in matrices]
        if not mats:
            raise InvalidInputError("need at least one matrix")
        d = mats[0].shape[0]
        for m in mats[1:]:
            if m.shape[0] != d:
                raise InvalidInputError(
                    f"all matrices must share one dimension, got {m.shape[0]} and {d}"
                )
        self._mats = np.stack(mats)
        self._mats.setflags(write=False)
        self._weights = np.ones(len(mats))
        self._weights.setflags(write=False)
        self._engine_caches = {}

    @classmethod
    def from_measure(cls, mu):
        return cls(list(mu.matrices))

    @property
    def dimension(self):
        return self._mats.shape[1]

    @property
    def n_atoms(self):
        return self._mats.shape[0]

    @property
    def matrices(self):
        return self._mats

    def __repr__(self):
        return f"MatrixSet(n={self.n_atoms}, d={self.dimension})"


def _coerce_set(source):
    if isinstance(source, MatrixSet):
        return source
    if isinstance(source, FiniteMatrixMeasure):
        return MatrixSet.from_measure(source)
    return MatrixSet(list(source))


def jsr_upper(source, n, budget=None, workers=1):
    """(max word norm at length n)^(1/n) and an achieving word.

    A valid upper bound on the joint spectral radius for every n.  The word
    is a tuple of atom indices, or None when every length-n product is zero
    (the bound is then 0.0 and exact).
    """
    ms = _coerce_set(source)
    if budget is None:
        budget = WordBudget()
    log_max, word = _engine.max_norm_word(ms, n, budget, workers=workers)
    if log_max == -math.inf:
        return 0.0, None
    return math.exp(log_max / n), word


def jsr_lower_bochi(source, n, budget=None, workers=1):
    """Norm-gap lower bound on the joint spectral radius at block length n.

    (max_{|w|=nd} ||A_w|| / (d^(d+1) (max_{|w|=n} ||A_w||)^(d-1)))^(1/n),
    valid for every n; 0.0 when the long products all vanish.
    """
    ms = _coerce_set(source)
    if budget is None:
        budget = WordBudget()
    d = ms.dimension
    clock = _engine.RunClock(budget.wall_clock_cap)
    long_max, _ = _engine.max_norm_word(ms, n * d, budget, clock=clock, workers=workers)
    if long_max == -math.inf:
        return 0.0
    short_max, _ = _engine.max_norm_word(ms, n, budget, clock=clock, workers=workers)
    log_lower = (long_max - (d + 1) * math.log(d) - (d - 1) * short_max) / n
    return math.exp(log_lower)


def _spectral_floor(mats, cap):
    """max rho(A_w)^(1/len) over all words with alphabet^len <= cap.

    Depth is additionally capped at log2(cap) so one-matrix alphabets
    terminate; non-finite products (overflow in a long power) are skipped.
    """
    n_atoms = len(mats)
    d = mats[0].shape[0]
    best = 0.0
    prods = [np.eye(d)]
    length = 0
    depth_cap = max(1, int(math.log2(cap))) if cap >= 1 else 0
    while length < depth_cap and n_atoms ** (length + 1) <= cap:
        length += 1
        prods = [p @ m for p in prods for m in mats]
        for prod in prods:
            if not np.all(np.isfinite(prod)):
                continue
            rho = float(np.max(np.abs(np.linalg.eigvals(prod))))
            if rho > 0.0:
                best = max(best, rho ** (1.0 / length))
    return best


def jsr_bracket(
    source, eps=None, budget=None, use_spectral_floor=True, floor_cap=4096, workers=1
):
    """Two-sided bracket on the joint spectral radius (linear scale).

    Sweeps n = 1, 2, ... while n*d-length enumeration stays within budget,
    keeping the best upper and lower bounds seen.  certified when the
    endpoints coincide exactly or the gap reaches eps (when given);
    budget_exhausted otherwise — the bracket is still valid.  provenance
    names the source of the final lower endpoint.
    """
    ms = _coerce_set(source)
    if budget is None:
        budget = WordBudget()
    if eps is not None and not (float(eps) > 0.0):
        raise InvalidInputError(f"eps must be positive when given, got {eps}")
    t0 = time.monotonic()
    d = ms.dimension
    n_atoms = ms.n_atoms
    clock = _engine.RunClock(budget.wall_clock_cap)
    lo, up = 0.0, math.inf
    lo_from = PROVENANCE_BOCHI
    n_used = 0
    words = 0
    status = "budget_exhausted"
    if use_spectral_floor:
        floor = _spectral_floor(list(ms._mats), floor_cap)
        if floor > lo:
            lo = floor
            lo_from = PROVENANCE_FLOOR
    try:
        n = 1
        while _engine.feasible(budget, n * d, n_atoms):
            clock.check()
            short_max, _ = _engine.max_norm_word(ms, n, budget, clock=clock, workers=workers)
            long_max, _ = _engine.max_norm_word(ms, n * d, budget, clock=clock, workers=workers)
            words += _engine.nominal_words(n, n_atoms) + _engine.nominal_words(n * d, n_atoms)
            if short_max == -math.inf or long_max == -math.inf:
                # some power of the whole family vanished: radius is exactly 0
                up = 0.0
                lo = 0.0
                lo_from = PROVENANCE_BOCHI
                n_used = n
                status = "certified"
                break
            up = min(up, math.exp(short_max / n), math.exp(long_max / (n * d)))
            bochi = math.exp(
                (long_max - (d + 1) * math.log(d) - (d - 1) * short_max) / n
            )
            if bochi > lo:
                lo = bochi
                lo_from = PROVENANCE_BOCHI
            # eigenvalue round-off in the spectral floor can overshoot an
            # exact norm upper by a few ulps; keep lo <= up unconditionally
            lo = min(lo, up)
            n_used = n
            if up == lo or (eps is not None and up - lo <= float(eps)):
                status = "certified"
                break
            n += 1
    except BudgetExhaustedError:
        pass
    return PressureBracket(
        lo, up, n_used, status, words, time.monotonic() - t0, lo_from
    )


@dataclass(frozen=True)
class ScanPoint:
    """One scanned exponent: norm-pressure bracket and its exp(x/s) image."""

    s: float
    m_lower: float
    m_upper: float
    radius_lower: float
    radius_upper: float
    status: str
    n_used: int
    words_evaluated: int


@dataclass(frozen=True)
class ScanResult:
    points: tuple
    jsr: PressureBracket


_DEFAULT_SCAN_GRID = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


def zero_temperature_scan(mu, s_list=None, eps=0.5, budget=None, workers=1):
    """Brackets of exp(M(mu,s)/s) along a grid of growing exponents.

    As s grows these converge to the joint spectral radius of the support
    from above (for unit-mass measures); the report carries a jsr_bracket
    of the support for comparison.  Each grid point gets its own
    norm-pressure bracket at tolerance eps, mapped through x -> exp(x/s);
    per-point statuses are preserved.
    """
    if not isinstance(mu, FiniteMatrixMeasure):
        raise InvalidInputError("expected a FiniteMatrixMeasure")
    if s_list is None:
        s_list = _DEFAULT_SCAN_GRID
    s_values = [float(s) for s in s_list]
    if not s_values:
        raise InvalidInputError("need at least one exponent to scan")
    for a, b in zip(s_values, s_values[1:]):
        if not (a < b):
            raise InvalidInputError("scan exponents must be strictly increasing")
    if any(not (s > 0.0 and math.isfinite(s)) for s in s_values):
        raise InvalidInputError("scan exponents must be positive and finite")
    if budget is None:
        budget = WordBudget()
    points = []
    for s in s_values:
        br = pressure.bracket(mu, s, eps, budget=budget, workers=workers)
        radius_lower = 0.0 if br.lower == -math.inf else math.exp(br.lower / s)
        radius_upper = math.inf if br.upper == math.inf else math.exp(br.upper / s)
        if br.upper == -math.inf:
            radius_upper = 0.0
        points.append(
            ScanPoint(
                s, br.lower, br.upper, radius_lower, radius_upper,
                br.status, br.n_used, br.words_evaluated,
            )
        )
    support = jsr_bracket(
        MatrixSet.from_measure(mu), eps=None, budget=budget, workers=workers
    )
    return ScanResult(tuple(points), support)
