"""Dense small-matrix primitives: singular values, singular-value functions,
exterior powers, Kronecker lifts, spectral radius.

Everything here works on plain float64 numpy arrays.  Matrices are small
(ambient dimension is a few dozen at most even after lifting), so the
quadratic/cubic loops below are never a bottleneck; the hot paths in
``_engine`` use their own batched kernels.
"""

import itertools
import math

import numpy as np

from .errors import DimensionCapError, InvalidInputError, ToleranceNotMetError

__all__ = [
    "as_matrix",
    "singular_values",
    "operator_norm",
    "spectral_radius",
    "phi",
    "exterior_power",
    "kronecker",
    "lift",
]


def as_matrix(a, d=None):
    """Validate and return ``a`` as a finite square float64 array.

    Raises InvalidInputError on anything that is not a finite square
    two-dimensional real matrix (or whose size differs from ``d`` if given).
    """
    try:
        m = np.array(a, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"not a numeric matrix: {exc}") from None
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InvalidInputError(f"expected a nonempty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix entries must be finite")
    if d is not None and m.shape[0] != d:
        raise InvalidInputError(f"expected a {d}x{d} matrix, got {m.shape[0]}x{m.shape[0]}")
    return m


def _jacobi_eigvalsh(s_mat, sweep_cap=64, tol=1e-14):
    # Cyclic-by-row Jacobi eigenvalue iteration for a symmetric matrix.
    # Convergence: off-diagonal Frobenius mass <= tol * ||S||_F.
    a = np.array(s_mat, dtype=np.float64)
    d = a.shape[0]
    if d == 1:
        return a[0, :1].copy()
    ref = tol * np.linalg.norm(a)
    for _ in range(sweep_cap):
        off = math.sqrt(2.0) * np.linalg.norm(a[np.triu_indices(d, 1)])
        if off <= ref:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = c * a[:, p] - s * a[:, q]
                col_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = col_p, col_q
                row_p = c * a[p, :] - s * a[q, :]
                row_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = row_p, row_q
    return np.sort(np.diag(a))[::-1].copy()


def singular_values(a):
    """Singular values of ``a`` in descending order, via Jacobi iteration on A^T A.

    Small negative eigenvalues produced by roundoff are clamped to zero
    before the square root, so the result is always nonnegative.
    """
    a = as_matrix(a)
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return np.zeros(a.shape[0])
    # Pre-scaling keeps A^T A away from overflow/underflow for extreme inputs.
    b = a / scale
    eig = _jacobi_eigvalsh(b.T @ b)
    return scale * np.sqrt(np.maximum(eig, 0.0))


def operator_norm(a):
    """Spectral norm (largest singular value)."""
    return float(singular_values(a)[0])


def spectral_radius(a, rel_tol=1e-10, max_squarings=64):
    """Spectral radius via scaled repeated squaring of the matrix.

    Tracks log ||A^(2^m)|| / 2^m, which decreases to log rho(A); stops when
    two consecutive estimates agree to ``rel_tol`` (log scale, i.e. relative
    agreement of the radius).  Exact zero is returned as soon as a power
    vanishes, which happens at m <= ceil(log2 d) for nilpotent input.
    """
    a = as_matrix(a)
    if a.shape[0] == 1:
        return abs(float(a[0, 0]))
    nrm = float(np.linalg.norm(a))
    if nrm == 0.0:
        return 0.0
    b = a / nrm
    log_scale = math.log(nrm)
    est = log_scale
    for m in range(1, max_squarings + 1):
        b = b @ b
        nrm = float(np.linalg.norm(b))
        if nrm == 0.0:
            return 0.0
        b /= nrm
        log_scale = 2.0 * log_scale + math.log(nrm)
        new_est = log_scale / (1 << m)
        done = abs(new_est - est) <= rel_tol
        est = new_est
        if done:
            return math.exp(est)
    raise ToleranceNotMetError(
        f"spectral radius did not stabilise to {rel_tol} within {max_squarings} squarings"
    )


def phi(a, s):
    """Singular-value function of ``a`` at exponent ``s > 0``.

    For k <= s <= k+1 (k = floor(s)) this is sigma_1 ... sigma_k * sigma_{k+1}^(s-k);
    for s >= d it is |det a|^(s/d).  Continuous and submultiplicative in ``a``
    for every fixed s.
    """
    a = as_matrix(a)
    s = float(s)
    if not (s > 0.0 and math.isfinite(s)):
        raise InvalidInputError(f"exponent s must be positive and finite, got {s}")
    d = a.shape[0]
    sig = singular_values(a)
    if s >= d:
        return float(np.prod(sig)) ** (s / d)
    k = int(s)
    out = float(np.prod(sig[:k])) if k else 1.0
    if s > k:
        out *= float(sig[k]) ** (s - k)
    return out


def _det(a):
    # Explicit cofactor formulas up to 3x3; LAPACK beyond.  The explicit
    # forms keep the exterior-power multiplicativity tests at ~1 ulp.
    d = a.shape[0]
    if d == 1:
        return float(a[0, 0])
    if d == 2:
        return float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    if d == 3:
        return float(
            a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
            - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
            + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
        )
    return float(np.linalg.det(a))


def exterior_power(a, k):
    """k-th exterior power: the C(d,k) x C(d,k) matrix of k x k minors.

    Rows and columns are indexed by k-subsets of {0,...,d-1} in lexicographic
    order.  exterior_power(a, 0) is the 1x1 identity and exterior_power(a, d)
    is the 1x1 determinant.  Multiplicative: (AB)^wedge = A^wedge B^wedge.
    """
    a = as_matrix(a)
    d = a.shape[0]
    if not isinstance(k, (int, np.integer)) or not 0 <= k <= d:
        raise InvalidInputError(f"exterior power order must be an integer in [0, {d}], got {k}")
    k = int(k)
    if k == 0:
        return np.ones((1, 1))
    if k == 1:
        return a.copy()
    subsets = list(itertools.combinations(range(d), k))
    out = np.empty((len(subsets), len(subsets)))
    for i, rows in enumerate(subsets):
        sub = a[np.ix_(rows, range(d))]
        for j, cols in enumerate(subsets):
            out[i, j] = _det(sub[:, cols])
    return out


def kronecker(a, b):
    """Kronecker product of two square matrices (norm-multiplicative)."""
    return np.kron(as_matrix(a), as_matrix(b))


def lift(a, k, p, q, dim_cap=256):
    """Kronecker/exterior lift whose operator norm encodes phi^(k + p/q).

    Returns (a^wedge k)^(tensor (q-p)) tensor (a^wedge (k+1))^(tensor p).
    The defining identity, exact in exact arithmetic:

        operator_norm(lift(a, k, p, q)) ** (1/q) == phi(a, k + p/q)

    and the lift of a product is the product of the lifts, so power sums of
    phi^s at rational s reduce to norm power sums in the lifted dimension.

    Preconditions: 0 < k < d, 0 <= p < q, gcd(p, q) = 1.  Raises
    DimensionCapError when the lifted dimension C(d,k)^(q-p) * C(d,k+1)^p
    would exceed ``dim_cap``.
    """
    a = as_matrix(a)
    d = a.shape[0]
    if not (isinstance(k, (int, np.integer)) and 0 < k < d):
        raise InvalidInputError(f"lift order k must satisfy 0 < k < {d}, got {k}")
    if not (isinstance(p, (int, np.integer)) and isinstance(q, (int, np.integer))):
        raise InvalidInputError("lift exponents p, q must be integers")
    if not (0 <= p < q):
        raise InvalidInputError(f"lift exponents must satisfy 0 <= p < q, got p={p} q={q}")
    if p and math.gcd(int(p), int(q)) != 1:
        raise InvalidInputError(f"lift exponents must be coprime, got p={p} q={q}")
    k, p, q = int(k), int(p), int(q)
    dim = math.comb(d, k) ** (q - p) * math.comb(d, k + 1) ** p
    if dim > dim_cap:
        raise DimensionCapError(
            f"lifted dimension {dim} exceeds cap {dim_cap} (d={d}, k={k}, p={p}, q={q})"
        )
    lo = exterior_power(a, k)
    hi = exterior_power(a, k + 1) if p else None
    out = np.ones((1, 1))
    for _ in range(q - p):
        out = np.kron(out, lo)
    for _ in range(p):
        out = np.kron(out, hi)
    return out
