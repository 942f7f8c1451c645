"""Synthetic data generation and the whitening reduction to the orthogonal case.

The generative model is ``Y = D X`` where ``D`` is an n-by-n orthogonal
dictionary and every entry of ``X`` (n-by-p) is an independent
Bernoulli(theta) gate times a standard normal value, so theta controls the
sparsity of the codes.

Reproducibility contract
------------------------
The package pins numpy's PCG64 generator (``numpy.random.default_rng``).
Given the same seed every generator below is bit-identical across runs.  The
normative stream order is documented per function; for batch experiments
per-trial seeds are split as ``base_seed ^ trial_index`` (see
:func:`trial_seed`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, RankDeficientError
from .linalg import RANK_TOL, as_matrix, svd

DEFAULT_SEED = 42


def make_rng(seed: int) -> np.random.Generator:
    """The package-wide pinned generator (PCG64)."""
    return np.random.default_rng(seed)


def trial_seed(base_seed: int, index: int) -> int:
    """Documented seed-splitting rule for independent trials: ``base ^ index``."""
    if index < 0:
        raise InvalidParameterError(f"trial index must be >= 0, got {index}")
    return int(base_seed) ^ int(index)


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the sparse generative model."""

    n: int
    p: int
    theta: float
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.n < 2:
            raise InvalidParameterError(f"n must be >= 2, got {self.n}")
        if self.p < self.n:
            raise InvalidParameterError(f"p must be >= n, got p={self.p} n={self.n}")
        if not (0.0 < self.theta < 1.0):
            raise InvalidParameterError(f"theta must lie in (0, 1), got {self.theta}")


@dataclass(frozen=True)
class DatasetBundle:
    """A generated dataset: ``observations = dictionary @ codes``."""

    dictionary: np.ndarray
    codes: np.ndarray
    observations: np.ndarray
    params: ModelParams


def gen_bernoulli_gaussian(n: int, p: int, theta: float, rng: np.random.Generator) -> np.ndarray:
    """Sample an n-by-p sparse matrix of gated Gaussians.

    Stream order (normative): one row-major block of uniforms for the
    Bernoulli gates, then one row-major block of standard normals for the
    values.  Entry (i, j) is ``gate[i, j] * value[i, j]``.
    """
    if not (0.0 < theta < 1.0):
        raise InvalidParameterError(f"theta must lie in (0, 1), got {theta}")
    if n < 1 or p < 1:
        raise InvalidParameterError(f"need n >= 1 and p >= 1, got n={n} p={p}")
    gates = rng.random((n, p)) < theta
    values = rng.standard_normal((n, p))
    return gates * values


def gen_haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an n-by-n orthogonal matrix from the Haar distribution.

    QR of a standard Gaussian matrix, with the signs of R's diagonal absorbed
    into Q so the factorization is unique and the law is exactly Haar.
    """
    if n < 2:
        raise InvalidParameterError(f"n must be >= 2, got {n}")
    g = rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def synthesize(params: ModelParams, rng: np.random.Generator | None = None) -> DatasetBundle:
    """Generate a full dataset bundle from ``params``.

    Stream order: dictionary first (Haar), then codes (Bernoulli-Gaussian).
    With the default ``rng=None`` the stream starts at ``params.seed``, making
    the bundle a pure function of ``params``; passing an explicit generator
    lets callers keep drawing from the same stream afterwards (for example to
    initialize a solver).
    """
    if rng is None:
        rng = make_rng(params.seed)
    dictionary = gen_haar_orthogonal(params.n, rng)
    codes = gen_bernoulli_gaussian(params.n, params.p, params.theta, rng)
    observations = dictionary @ codes
    return DatasetBundle(dictionary=dictionary, codes=codes, observations=observations, params=params)


def precondition(y, theta: float) -> np.ndarray:
    """Whiten observations so the effective dictionary becomes orthogonal.

    Returns ``((1/(p*theta)) * Y Y^T)^(-1/2) @ Y``, computed from the thin SVD
    of Y (scale the left factor by ``sqrt(p*theta)/sigma``) rather than by
    eigensolving the Gram matrix, which keeps the conditioning of Y itself.
    After this step ``(1/(p*theta)) * Ybar Ybar^T`` equals the identity to
    working precision by construction.

    Raises :class:`RankDeficientError` when Y has (numerical) rank below n,
    where the inverse square root is undefined.
    """
    y = as_matrix(y)
    if not (0.0 < theta < 1.0):
        raise InvalidParameterError(f"theta must lie in (0, 1), got {theta}")
    n, p = y.shape
    if p < n:
        raise RankDeficientError(f"need at least n={n} samples, got p={p}")
    u, s, v = svd(y)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficientError(
            f"observations have rank < {n} (sigma ratio {s[-1]:.3e}/{s[0]:.3e})"
        )
    return np.sqrt(p * theta) * (u @ v.T)
