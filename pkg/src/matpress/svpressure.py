"""Certified brackets for the singular-value pressure P(mu, s).

P is defined like the norm pressure but with the singular-value function
phi^s in place of ||.||^s.  The bracketing routes depend on (d, s):

* s >= d: phi^s = |det|^(s/d) is multiplicative, so P equals the exact
  one-step value log sum w_i |det A_i|^(s/d) (determinant branch);
* s <= 1: phi^s = ||.||^s, so the norm-pressure machinery applies verbatim;
* d = 2, 1 < s < 2: a planar product inequality with the piecewise constant
  planar_constant(s) plays the role the norm inequality plays for M.  It is
  proved by passing to the determinant-tilted companion measure
  (see measure.hat_measure_2d), for which phi^s sums become norm sums;
* d >= 3, rational s = k + p/q in (1, d): the exterior/Kronecker lift of
  linalg.lift turns phi^s sums into norm sums in dimension d', giving a
  product inequality with explicit constant (lift route);
* d >= 3, irrational s: upper bounds directly at s; lower bounds at the
  nearest feasible rational s+ >= s after rescaling atoms into the unit
  ball, where phi-monotonicity in s makes the transfer sound.
"""

import math
import time
from fractions import Fraction

from . import _engine, linalg, pressure
from .errors import BudgetExhaustedError, DimensionCapError, InvalidInputError
from .measure import FiniteMatrixMeasure, WordBudget, scale_measure, restrict_invertible
from .pressure import PressureBracket, log_norm_constant

__all__ = [
    "LiftSpec",
    "planar_constant",
    "log_planar_constant",
    "lift_params",
    "upper_bound",
    "lower_bound_2d",
    "lower_bound_lift",
    "det_pressure",
    "bracket",
    "continuity_at_one",
]

PROVENANCE_PLANAR = "planar-sv-bound"
PROVENANCE_LIFT = "lift-sv-bound"
PROVENANCE_DET = "determinant-branch"

CONTINUOUS = "continuous_at_1"
DISCONTINUOUS = "discontinuous_at_1"
INCONCLUSIVE = "inconclusive"


from dataclasses import dataclass


@dataclass(frozen=True)
class LiftSpec:
    """Parameters of the lift route at rational s = k + p/q (lowest terms).

    d_prime is the lifted ambient dimension C(d,k)^(q-p) * C(d,k+1)^p and
    log_constant the log of the product-inequality constant
    K = d'^(2 + (d'+1)/q) * (d'+1)^((q-1)/q).
    """

    k: int
    p: int
    q: int
    d_prime: int
    log_constant: float

    @property
    def constant(self):
        try:
            return math.exp(self.log_constant)
        except OverflowError:
            return math.inf


def planar_constant(s):
    """Constant of the 2D phi^s product inequality, piecewise in s.

    2^(3+2s) on (0,1], 2^(7-2s) on [1,2), 1 on [2,inf); both middle branches
    give 32 at s = 1.  The (1,2) branch mirrors the (0,1) branch through the
    determinant-tilted companion measure at exponent 2-s.
    """
    s = float(s)
    if not (s > 0.0 and math.isfinite(s)):
        raise InvalidInputError(f"exponent s must be positive and finite, got {s}")
    if s <= 1.0:
        return 2.0 ** (3.0 + 2.0 * s)
    if s < 2.0:
        return 2.0 ** (7.0 - 2.0 * s)
    return 1.0


def log_planar_constant(s):
    return math.log(planar_constant(s))


def _exact_fraction(s, q_cap):
    """s as an exact Fraction with denominator <= q_cap, else None."""
    if isinstance(s, Fraction):
        frac = s
    elif isinstance(s, (int,)):
        frac = Fraction(s)
    elif isinstance(s, float):
        if not math.isfinite(s):
            return None
        frac = Fraction(s).limit_denominator(q_cap)
        if frac != Fraction(s):
            return None
    else:
        return None
    return frac if frac.denominator <= q_cap else None


def lift_params(d, s, q_cap=6, dim_cap=256):
    """LiftSpec for rational s = k + p/q with 0 < k < d.

    ``s`` may be a Fraction, an integer, or a float that is exactly a
    rational with denominator <= q_cap (pass a Fraction for thirds etc.).
    Raises DimensionCapError when d' would exceed dim_cap, and
    InvalidInputError for s outside [1, d) or denominators above q_cap.
    """
    if not (isinstance(d, int) and d >= 2):
        raise InvalidInputError(f"lift route needs integer dimension d >= 2, got {d}")
    frac = _exact_fraction(s, q_cap)
    if frac is None:
        raise InvalidInputError(
            f"s={s!r} is not an exact rational with denominator <= {q_cap}"
        )
    if not (1 <= frac < d):
        raise InvalidInputError(
            f"lift route needs 1 <= s < d (so that 0 < floor(s) < d), got s={frac}"
        )
    k = int(frac)
    rem = frac - k
    p, q = rem.numerator, rem.denominator
    d_prime = math.comb(d, k) ** (q - p) * math.comb(d, k + 1) ** p
    if d_prime > dim_cap:
        raise DimensionCapError(
            f"lifted dimension {d_prime} exceeds cap {dim_cap} for d={d}, s={frac}"
        )
    log_constant = (2.0 + (d_prime + 1) / q) * math.log(d_prime) + (
        (q - 1) / q
    ) * math.log(d_prime + 1)
    return LiftSpec(k=k, p=p, q=q, d_prime=d_prime, log_constant=log_constant)


def _phi_sum(mu, s, n, budget, clock=None, workers=1):
    return float(
        _engine.weighted_sums(mu, n, "phi", [float(s)], budget, clock=clock, workers=workers)[0]
    )


def upper_bound(mu, s, n, budget=None, workers=1):
    """(1/n) log Phi_n(s): a valid upper bound on P(mu,s) for every n."""
    if budget is None:
        budget = WordBudget()
    s = float(s)
    if not (s > 0.0 and math.isfinite(s)):
        raise InvalidInputError(f"exponent s must be positive and finite, got {s}")
    return _phi_sum(mu, s, n, budget, workers=workers) / n


def lower_bound_2d(mu, s, n, budget=None, workers=1):
    """(1/n) [log Phi_2n - log planar_constant(s) - log Phi_n], d = 2 only."""
    if mu.dimension != 2:
        raise InvalidInputError("lower_bound_2d needs a 2x2 measure")
    if budget is None:
        budget = WordBudget()
    s = float(s)
    log_kt = log_planar_constant(s)
    phi_2n = _phi_sum(mu, s, 2 * n, budget, workers=workers)
    if phi_2n == -math.inf:
        return -math.inf
    phi_n = _phi_sum(mu, s, n, budget, workers=workers)
    return (phi_2n - log_kt - phi_n) / n


def lower_bound_lift(mu, s, n, budget=None, q_cap=6, dim_cap=256, workers=1):
    """(1/n) [log Phi_{n d'} - log K - (d'-1) log Phi_n] via the lift route.

    Operates directly on phi^s power sums of mu (no lifted matrices are
    materialized); measure.lifted_measure provides the independent
    cross-check route used in the tests.
    """
    if budget is None:
        budget = WordBudget()
    spec = lift_params(mu.dimension, s, q_cap=q_cap, dim_cap=dim_cap)
    s_val = float(spec.k) + spec.p / spec.q
    phi_nd = _phi_sum(mu, s_val, n * spec.d_prime, budget, workers=workers)
    if phi_nd == -math.inf:
        return -math.inf
    phi_n = _phi_sum(mu, s_val, n, budget, workers=workers)
    return (phi_nd - spec.log_constant - (spec.d_prime - 1) * phi_n) / n


def det_pressure(mu, s):
    """Exact pressure log sum w_i |det A_i|^(s/d) for s >= d.

    phi^s is multiplicative there, so the one-step sum already equals P.
    Returns -inf when every atom is singular.
    """
    if not isinstance(mu, FiniteMatrixMeasure):
        raise InvalidInputError("expected a FiniteMatrixMeasure")
    s = float(s)
    d = mu.dimension
    if not (s >= d):
        raise InvalidInputError(f"det_pressure needs s >= d = {d}, got {s}")
    ratio = s / d
    best = -math.inf
    vals = []
    for w, m in zip(mu._weights, mu._mats):
        det = abs(linalg._det(m))
        v = -math.inf if det == 0.0 else math.log(w) + ratio * math.log(det)
        vals.append(v)
        best = max(best, v)
    if best == -math.inf:
        return -math.inf
    return best + math.log(sum(math.exp(v - best) for v in vals))


class _SumCounter:
    """Per-driver cache of phi sums with nominal word accounting."""

    def __init__(self, budget, clock, workers):
        self.budget = budget
        self.clock = clock
        self.workers = workers
        self.store = {}
        self.words = 0

    def get(self, mu, s, n):
        key = (id(mu), float(s), n)
        if key not in self.store:
            self.store[key] = _phi_sum(
                mu, s, n, self.budget, clock=self.clock, workers=self.workers
            )
            self.words += _engine.nominal_words(n, mu.n_atoms)
        return self.store[key]


def bracket(mu, s, eps, budget=None, q_cap=6, dim_cap=256, workers=1):
    """Certified bracket for P(mu,s) to width < eps, routed by (d, s).

    ``s`` may be a float, int, or Fraction; exact rationals unlock the lift
    route for d >= 3.  Statuses follow pressure.bracket; provenance records
    which inequality produced the lower bound.
    """
    if not isinstance(mu, FiniteMatrixMeasure):
        raise InvalidInputError("expected a FiniteMatrixMeasure")
    s_float = float(s)
    if not (s_float > 0.0 and math.isfinite(s_float)):
        raise InvalidInputError(f"exponent s must be positive and finite, got {s}")
    eps = float(eps)
    if not (eps > 0.0):
        raise InvalidInputError(f"eps must be positive, got {eps}")
    if budget is None:
        budget = WordBudget()
    d = mu.dimension

    if s_float >= d:
        t0 = time.monotonic()
        v = det_pressure(mu, s_float)
        status = "minus_infinity" if v == -math.inf else "certified"
        return PressureBracket(
            v, v, 1, status, mu.n_atoms, time.monotonic() - t0, PROVENANCE_DET
        )

    if s_float <= 1.0:
        # phi^s = ||.||^s below exponent 1, so P = M with the same brackets
        return pressure.bracket(mu, s_float, eps, budget=budget, workers=workers)

    if d == 2:
        return _bracket_planar(mu, s_float, eps, budget, workers)

    s_frac = _exact_fraction(s, q_cap)
    if s_frac is not None:
        spec = lift_params(d, s_frac, q_cap=q_cap, dim_cap=dim_cap)
        return _bracket_lift(mu, float(s_frac), spec, eps, budget, workers)
    return _bracket_irrational(mu, s_float, eps, budget, q_cap, dim_cap, workers)


def _bracket_planar(mu, s, eps, budget, workers):
    t0 = time.monotonic()
    clock = _engine.RunClock(budget.wall_clock_cap)
    sums = _SumCounter(budget, clock, workers)
    log_kt = log_planar_constant(s)
    lo, up = -math.inf, math.inf
    n_used = 0
    status = "budget_exhausted"
    try:
        # Phi is submultiplicative, so a vanishing length-2 sum forces P = -inf;
        # conversely the tilted-measure identity makes Phi_2 > 0 propagate.
        if sums.get(mu, s, 2) == -math.inf:
            return PressureBracket(
                -math.inf, -math.inf, 2, "minus_infinity",
                sums.words, time.monotonic() - t0, PROVENANCE_PLANAR,
            )
        n = 1
        while _engine.feasible(budget, 2 * n, mu.n_atoms):
            clock.check()
            phi_n = sums.get(mu, s, n)
            phi_2n = sums.get(mu, s, 2 * n)
            up = min(up, phi_n / n)
            if phi_2n > -math.inf:
                lo = max(lo, (phi_2n - log_kt - phi_n) / n)
            n_used = n
            if up - lo < eps:
                status = "certified"
                break
            n += 1
    except BudgetExhaustedError:
        pass
    return PressureBracket(
        lo, up, n_used, status, sums.words, time.monotonic() - t0, PROVENANCE_PLANAR
    )


def _bracket_lift(mu, s_val, spec, eps, budget, workers):
    t0 = time.monotonic()
    clock = _engine.RunClock(budget.wall_clock_cap)
    sums = _SumCounter(budget, clock, workers)
    dp = spec.d_prime
    lo, up = -math.inf, math.inf
    n_used = 0
    status = "budget_exhausted"
    try:
        if _engine.feasible(budget, dp, mu.n_atoms) and sums.get(mu, s_val, dp) == -math.inf:
            return PressureBracket(
                -math.inf, -math.inf, dp, "minus_infinity",
                sums.words, time.monotonic() - t0, PROVENANCE_LIFT,
            )
        n = 1
        while _engine.feasible(budget, n * dp, mu.n_atoms):
            clock.check()
            phi_n = sums.get(mu, s_val, n)
            phi_nd = sums.get(mu, s_val, n * dp)
            up = min(up, phi_n / n)
            if phi_nd > -math.inf:
                lo = max(lo, (phi_nd - spec.log_constant - (dp - 1) * phi_n) / n)
            n_used = n
            if up - lo < eps:
                status = "certified"
                break
            n += 1
    except BudgetExhaustedError:
        pass
    return PressureBracket(
        lo, up, n_used, status, sums.words, time.monotonic() - t0, PROVENANCE_LIFT
    )


def _bracket_irrational(mu, s, eps, budget, q_cap, dim_cap, workers):
    # Upper bounds need nothing special.  Lower bounds transfer from the
    # smallest feasible rational s+ >= s, after scaling atoms into the unit
    # ball where phi-monotonicity in the exponent holds; the scaling shifts
    # P by exactly s*log(c) and is undone on the way out.
    t0 = time.monotonic()
    clock = _engine.RunClock(budget.wall_clock_cap)
    d = mu.dimension
    max_norm = max(linalg.operator_norm(m) for m in mu._mats)
    if max_norm > 1.0:
        c = 1.0 / max_norm
        mu_c = scale_measure(mu, c)
    else:
        c = 1.0
        mu_c = mu
    shift = s * math.log(c)  # P(mu_c, t) = P(mu, t) + t*log(c)

    candidates = []
    for q in range(1, q_cap + 1):
        frac = Fraction(math.ceil(s * q), q)
        if frac >= d:
            candidates.append((frac, None))
            continue
        try:
            candidates.append((frac, lift_params(d, frac, q_cap=q_cap, dim_cap=dim_cap)))
        except (InvalidInputError, DimensionCapError):
            continue
    if not candidates:
        raise DimensionCapError(
            f"no rational exponent >= {s} with denominator <= {q_cap} fits the dimension cap"
        )
    # prefer the closest rational whose lifted dimension can actually be
    # enumerated under this budget; a tight but unevaluable exponent would
    # leave the lower endpoint at -inf
    workable = [
        (frac, spec)
        for frac, spec in candidates
        if spec is None or _engine.feasible(budget, spec.d_prime, mu.n_atoms)
    ]
    s_plus, spec = min(workable or candidates, key=lambda item: item[0])

    sums = _SumCounter(budget, clock, workers)
    lo, up = -math.inf, math.inf
    n_used = 0
    status = "budget_exhausted"
    try:
        if spec is None:
            # s+ crossed the ambient dimension: determinant branch is exact there
            v = det_pressure(mu_c, float(s_plus))
            if v > -math.inf:
                lo = v - shift
        n = 1
        while _engine.feasible(budget, n, mu.n_atoms):
            clock.check()
            up = min(up, sums.get(mu, s, n) / n)
            if up == -math.inf:
                return PressureBracket(
                    -math.inf, -math.inf, n, "minus_infinity",
                    sums.words, time.monotonic() - t0, PROVENANCE_LIFT,
                )
            if spec is not None and _engine.feasible(budget, n * spec.d_prime, mu.n_atoms):
                phi_n = sums.get(mu_c, float(s_plus), n)
                phi_nd = sums.get(mu_c, float(s_plus), n * spec.d_prime)
                if phi_nd > -math.inf:
                    lb = (phi_nd - spec.log_constant - (spec.d_prime - 1) * phi_n) / n
                    lo = max(lo, lb - shift)
            n_used = n
            if up - lo < eps:
                status = "certified"
                break
            n += 1
    except BudgetExhaustedError:
        pass
    return PressureBracket(
        lo, up, n_used, status, sums.words, time.monotonic() - t0, PROVENANCE_LIFT
    )


def continuity_at_one(mu, eps, budget=None, workers=1):
    """2D diagnostic for the jump of P(., 1) against the invertible part.

    P on 2x2 measures is discontinuous at (mu, 1) exactly when
    P(mu, 1) > P(mu0, 1), mu0 being the restriction of mu to its invertible
    atoms.  Returns "discontinuous_at_1" when the mu-bracket certifies
    strictly above the mu0-bracket, "continuous_at_1" when both pressures
    provably sit in one interval of width < eps, "inconclusive" on budget
    exhaustion.  An empty invertible part counts as P(mu0, 1) = -inf.
    """
    if not isinstance(mu, FiniteMatrixMeasure):
        raise InvalidInputError("expected a FiniteMatrixMeasure")
    if mu.dimension != 2:
        raise InvalidInputError("the continuity diagnostic is 2D only")
    eps = float(eps)
    if not (eps > 0.0):
        raise InvalidInputError(f"eps must be positive, got {eps}")
    if budget is None:
        budget = WordBudget()
    mu0 = restrict_invertible(mu)
    if mu0 is None:
        # P(mu0,1) = -inf: the jump exists unless P(mu,1) = -inf as well
        if pressure.detect_minus_infinity(mu, 1.0, budget=budget, workers=workers):
            return CONTINUOUS
        return DISCONTINUOUS
    clock = _engine.RunClock(budget.wall_clock_cap)
    log_k = log_norm_constant(2, 1.0)
    caches = ({}, {})

    def endpoints(which, m, n):
        store = caches[which]
        if n not in store:
            store[n] = float(
                _engine.weighted_sums(m, n, "norm", [1.0], budget, clock=clock, workers=workers)[0]
            )
        return store[n]

    up_mu = up_0 = math.inf
    lo_mu = lo_0 = -math.inf
    try:
        n = 1
        while _engine.feasible(budget, 2 * n, mu.n_atoms):
            clock.check()
            s_mu, s2_mu = endpoints(0, mu, n), endpoints(0, mu, 2 * n)
            s_0, s2_0 = endpoints(1, mu0, n), endpoints(1, mu0, 2 * n)
            up_mu = min(up_mu, s_mu / n)
            lo_mu = max(lo_mu, (s2_mu - log_k - s_mu) / n)
            up_0 = min(up_0, s_0 / n)
            lo_0 = max(lo_0, (s2_0 - log_k - s_0) / n)
            if lo_mu > up_0:
                return DISCONTINUOUS
            if max(up_mu, up_0) - min(lo_mu, lo_0) < eps:
                return CONTINUOUS
            n += 1
    except BudgetExhaustedError:
        pass
    return INCONCLUSIVE
