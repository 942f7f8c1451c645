"""Dense matrix kernel: elementwise powers, fourth-power norms, SVD, and the
polar projection onto the orthogonal group.

All functions operate on plain float64 ``numpy.ndarray`` values and are pure;
matrices that must be orthogonal are certified with :func:`require_orthogonal`
rather than wrapped in a dedicated class.  The SVD is delegated to LAPACK via
``numpy.linalg.svd``; singular values come back non-negative and descending,
which is the convention every caller in this package relies on.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NonConvergenceError,
    NonFiniteError,
    OrthogonalityError,
    RankDeficientError,
)

# Certification tolerance for matrices produced by this package:
# ||W^T W - I||_F <= DEFAULT_ORTHO_TOL * sqrt(n).
DEFAULT_ORTHO_TOL = 1e-8

# Below sigma_min <= RANK_TOL * sigma_max the polar factor is not unique.
RANK_TOL = 1e-12


def as_matrix(a) -> np.ndarray:
    """Coerce to a 2-D float64 array and reject empty or non-finite input."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D array, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatchError(f"empty matrix of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("matrix contains NaN or Inf entries")
    return m


def matmul(a, b) -> np.ndarray:
    """Dense product ``a @ b`` with an explicit dimension check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatchError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def hadamard_power(m, r: int) -> np.ndarray:
    """Elementwise r-th power, ``out[i, j] = m[i, j] ** r``.

    Odd r preserves signs, which is what the stretching step of the solver
    uses to sparsify while keeping orientation.
    """
    if int(r) != r or r < 1:
        raise InvalidParameterError(f"power must be an integer >= 1, got {r}")
    return as_matrix(m) ** int(r)


def l4_norm_4th(m) -> float:
    """Sum of fourth powers of all entries."""
    m = as_matrix(m)
    return float(np.sum(m**4))


def l2k_norm(m, order_2k: int) -> float:
    """Sum of ``order_2k``-th powers of all entries; ``order_2k`` must be even >= 2."""
    if int(order_2k) != order_2k or order_2k < 2 or order_2k % 2 != 0:
        raise InvalidParameterError(f"order must be an even integer >= 2, got {order_2k}")
    m = as_matrix(m)
    return float(np.sum(m ** int(order_2k)))


def orthogonality_defect(w) -> float:
    """``||W^T W - I||_F``, the certification residual used across the package."""
    w = as_matrix(w)
    if w.shape[0] != w.shape[1]:
        raise DimensionMismatchError(f"orthogonality defined for square matrices, got {w.shape}")
    n = w.shape[0]
    return float(np.linalg.norm(w.T @ w - np.eye(n)))


def require_orthogonal(w, tol: float = DEFAULT_ORTHO_TOL) -> np.ndarray:
    """Validate that ``w`` is orthogonal to within ``tol * sqrt(n)`` and return it.

    ``tol`` can be loosened for inputs that are only known at reduced
    precision (for instance matrices transcribed at four decimals).
    """
    w = as_matrix(w)
    defect = orthogonality_defect(w)
    bound = tol * np.sqrt(w.shape[0])
    if defect > bound:
        raise OrthogonalityError(
            f"orthogonality defect {defect:.3e} exceeds {bound:.3e} (tol={tol:.1e})"
        )
    return w


class SvdResult(NamedTuple):
    """Thin SVD ``input = u @ diag(sigma) @ v.T`` with sigma descending >= 0."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


def svd(m) -> SvdResult:
    """Thin singular value decomposition of a dense matrix.

    For square input both factors are orthogonal; for rectangular input they
    have orthonormal columns.  Raises :class:`NonConvergenceError` if the
    LAPACK iteration gives up, which signals pathological input.
    """
    m = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NonConvergenceError(f"SVD did not converge: {exc}") from exc
    return SvdResult(u=u, sigma=s, v=vt.T)


def project_orthogonal(m) -> np.ndarray:
    """Polar projection: the orthogonal matrix closest to ``m`` in Frobenius norm.

    Computed as ``U @ V.T`` from the SVD.  The result is scale invariant
    (``project(c * m) == project(m)`` for c > 0) and equivariant under right
    multiplication by orthogonal matrices.  Raises
    :class:`RankDeficientError` when ``sigma_min <= RANK_TOL * sigma_max``,
    where the minimizer stops being unique.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"polar projection needs a square matrix, got {m.shape}")
    u, s, v = svd(m)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficientError(
            f"singular value ratio {s[-1]:.3e}/{s[0]:.3e} below {RANK_TOL:.0e}; "
            "nearest orthogonal matrix is not unique"
        )
    return u @ v.T


def nearest_signed_permutation(w) -> tuple[np.ndarray, float]:
    """Greedy nearest signed permutation and its normalized squared distance.

    Entries are scanned in order of decreasing magnitude; each (row, column)
    pair is claimed at most once and receives the sign of the winning entry.
    On a matrix whose columns each have one dominant entry this reproduces the
    column-wise argmax construction; ties and collisions resolve greedily so
    the function always returns a valid signed permutation.

    Returns ``(p, ||w - p||_F**2 / n)``.
    """
    w = as_matrix(w)
    if w.shape[0] != w.shape[1]:
        raise DimensionMismatchError(f"need a square matrix, got {w.shape}")
    n = w.shape[0]
    order = np.argsort(np.abs(w), axis=None)[::-1]
    p = np.zeros((n, n))
    rows_used = np.zeros(n, dtype=bool)
    cols_used = np.zeros(n, dtype=bool)
    placed = 0
    for flat in order:
        i, j = divmod(int(flat), n)
        if rows_used[i] or cols_used[j]:
            continue
        p[i, j] = 1.0 if w[i, j] >= 0 else -1.0
        rows_used[i] = True
        cols_used[j] = True
        placed += 1
        if placed == n:
            break
    dist_sq_over_n = float(np.linalg.norm(w - p) ** 2) / n
    return p, dist_sq_over_n
