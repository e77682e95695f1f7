"""Certified two-sided brackets for the norm pressure and the p-radius.

The norm pressure of a finitely supported matrix measure mu at exponent s is

    M(mu, s) = inf_n (1/n) log S_n,   S_n = sum over length-n words of
                                            (product of weights) * ||A_w||^s.

Subadditivity makes every (1/n) log S_n an upper bound; an a priori product
inequality with the explicit constant K(d, s) = d^(2+(d+1)s) * max(d^(1-s), 1)
turns the pair (S_n, S_{n d}) into a lower bound.  Running the two families
over increasing n yields a monotone sandwich that certifies M to any
requested width, or detects M = -inf exactly from the length-d sum.
"""

import math
import time
from dataclasses import dataclass

from . import _engine
from .errors import BudgetExhaustedError, InvalidInputError
from .measure import FiniteMatrixMeasure, WordBudget

__all__ = [
    "PressureBracket",
    "norm_constant",
    "log_norm_constant",
    "upper_bound",
    "lower_bound",
    "detect_minus_infinity",
    "bracket",
    "p_radius_bracket",
]

PROVENANCE_NORM = "norm-power-bound"

_CERTIFIED = "certified"
_MINUS_INF = "minus_infinity"
_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class PressureBracket:
    """A certified interval, log scale unless the producing op says otherwise.

    status is one of "certified" (width <= requested eps), "minus_infinity"
    (the quantity is exactly -inf; both endpoints are -inf), or
    "budget_exhausted" (still a valid containment, just wider than asked).
    words_evaluated counts nominal words N^n summed over the distinct word
    lengths actually evaluated.
    """

    lower: float
    upper: float
    n_used: int
    status: str
    words_evaluated: int = 0
    wall_time: float = 0.0
    provenance: str = ""

    @property
    def width(self):
        if self.lower == self.upper:
            return 0.0
        return self.upper - self.lower

    def contains(self, x):
        return self.lower <= x <= self.upper


def _validate_s(s):
    s = float(s)
    if not (s > 0.0 and math.isfinite(s)):
        raise InvalidInputError(f"exponent s must be positive and finite, got {s}")
    return s


def _validate_mu(mu):
    if not isinstance(mu, FiniteMatrixMeasure):
        raise InvalidInputError("expected a FiniteMatrixMeasure")
    return mu


def norm_constant(d, s):
    """The norm-product inequality constant K(d,s) = d^(2+(d+1)s) * max(d^(1-s), 1).

    Combined into a single power of d so the float result is exact whenever
    the exponent is integral (e.g. K(2,1) = 32, K(3,2) = 59049, K(2,0.5) = 16).
    Overflows to inf for extreme s*d; algorithms use log_norm_constant.
    """
    d, s = _validate_d_s(d, s)
    try:
        return float(d) ** (2.0 + (d + 1) * s + max(1.0 - s, 0.0))
    except OverflowError:
        return math.inf


def log_norm_constant(d, s):
    """log of norm_constant(d, s), safe for exponents that would overflow."""
    d, s = _validate_d_s(d, s)
    return (2.0 + (d + 1) * s + max(1.0 - s, 0.0)) * math.log(d)


def _validate_d_s(d, s):
    if not (isinstance(d, int) and d >= 1):
        raise InvalidInputError(f"dimension must be a positive integer, got {d}")
    return d, _validate_s(s)


def upper_bound(mu, s, n, budget=None, workers=1):
    """(1/n) log S_n: a valid upper bound on M(mu,s) for every n >= 1."""
    _validate_mu(mu)
    s = _validate_s(s)
    if budget is None:
        budget = WordBudget()
    sn = float(_engine.weighted_sums(mu, n, "norm", [s], budget, workers=workers)[0])
    return sn / n


def lower_bound(mu, s, n, budget=None, workers=1):
    """(1/n) [log S_{nd} - log K(d,s) - (d-1) log S_n]: a valid lower bound.

    Sound for every n >= 1; -inf when the length-nd sum vanishes.
    """
    _validate_mu(mu)
    s = _validate_s(s)
    if budget is None:
        budget = WordBudget()
    d = mu.dimension
    snd = float(_engine.weighted_sums(mu, n * d, "norm", [s], budget, workers=workers)[0])
    if snd == -math.inf:
        return -math.inf
    sn = float(_engine.weighted_sums(mu, n, "norm", [s], budget, workers=workers)[0])
    return (snd - log_norm_constant(d, s) - (d - 1) * sn) / n


def detect_minus_infinity(mu, s=1.0, budget=None, workers=1):
    """True iff M(mu,s) = -inf, decided exactly from the length-d power sum.

    M(mu,s) = -inf exactly when every length-d product vanishes; and if the
    length-d sum is positive, every longer sum is positive too.  The zero
    test is structural: products are stored frexp-normalized, so a vanishing
    product is an exact zero matrix, never an underflow artifact.
    """
    _validate_mu(mu)
    s = _validate_s(s)
    if budget is None:
        budget = WordBudget()
    d = mu.dimension
    sd = float(_engine.weighted_sums(mu, d, "norm", [s], budget, workers=workers)[0])
    return sd == -math.inf


def bracket(mu, s, eps, budget=None, workers=1):
    """Certified bracket for M(mu,s) to width < eps, within the budget.

    Evaluates the length-d sum first: if it vanishes, returns the exact
    minus_infinity verdict at cost N^d words.  Otherwise runs the sandwich
    over n = 1, 2, ... keeping the running min of the upper family and the
    running max of the lower family, so the bracket only ever shrinks.
    """
    _validate_mu(mu)
    s = _validate_s(s)
    eps = float(eps)
    if not (eps > 0.0):
        raise InvalidInputError(f"eps must be positive, got {eps}")
    if budget is None:
        budget = WordBudget()
    t0 = time.monotonic()
    clock = _engine.RunClock(budget.wall_clock_cap)
    d = mu.dimension
    n_atoms = mu.n_atoms
    log_k = log_norm_constant(d, s)
    sums = {}
    words = 0

    def get(n):
        nonlocal words
        if n not in sums:
            sums[n] = float(
                _engine.weighted_sums(mu, n, "norm", [s], budget, clock=clock, workers=workers)[0]
            )
            words += _engine.nominal_words(n, n_atoms)
        return sums[n]

    lo = -math.inf
    up = math.inf
    n_used = 0
    status = _EXHAUSTED
    try:
        if get(d) == -math.inf:
            return PressureBracket(
                -math.inf, -math.inf, d, _MINUS_INF, words,
                time.monotonic() - t0, PROVENANCE_NORM,
            )
        n = 1
        while _engine.feasible(budget, n * d, n_atoms):
            clock.check()
            sn = get(n)
            snd = get(n * d)
            up = min(up, sn / n)
            if snd > -math.inf:
                lo = max(lo, (snd - log_k - (d - 1) * sn) / n)
            n_used = n
            if up - lo < eps:
                status = _CERTIFIED
                break
            n += 1
    except BudgetExhaustedError:
        pass
    return PressureBracket(lo, up, n_used, status, words, time.monotonic() - t0, PROVENANCE_NORM)


def p_radius_bracket(source, p, eps, budget=None, workers=1):
    """Certified bracket for the p-radius, on the linear scale.

    The p-radius of unit-weight atoms (A_1,...,A_N) is
    N^(-1/p) exp(M(mu,p)/p); the M-bracket maps through that monotone
    transform, so certification (eps on the log-scale M-gap) carries over.
    ``source`` may be a FiniteMatrixMeasure with unit weights, or an iterable
    of matrices.  A minus_infinity verdict maps to the exact bracket [0, 0].
    """
    if isinstance(source, FiniteMatrixMeasure):
        mu = source
    else:
        mu = FiniteMatrixMeasure.from_matrices(list(source))
    if not mu.has_unit_weights:
        raise InvalidInputError("p-radius requires every atom weight to equal 1 exactly")
    p = float(p)
    if not (p >= 1.0 and math.isfinite(p)):
        raise InvalidInputError(f"p must satisfy p >= 1, got {p}")
    mb = bracket(mu, p, eps, budget=budget, workers=workers)
    scale = mu.n_atoms ** (-1.0 / p)

    def to_radius(x):
        return 0.0 if x == -math.inf else scale * math.exp(x / p)

    return PressureBracket(
        to_radius(mb.lower), to_radius(mb.upper), mb.n_used, mb.status,
        mb.words_evaluated, mb.wall_time, mb.provenance,
    )
