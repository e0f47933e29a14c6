"""Matrix-free block-to-pixel mapping and its adjoint.

Under constant block cardinality ``ell`` the mapping sending a block
distribution ``pi`` to the pixel distribution it induces is linear,

    (M pi)_i = (1 / ell) * sum_{k : i in I_k} pi_k,

so ``M`` is an ``n x m`` matrix with entries ``1/ell`` on the incidences.
Both products are gathers/scatters over the incidence lists.
"""

from __future__ import annotations

import math

import numpy as np

from blocksampler.blocks_dictionary import BlockDictionary
from blocksampler.errors import InputError

DENSE_SIZE_LIMIT = 10**7
SIMPLEX_ATOL = 1e-12


def _vector(x, size: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (size,):
        raise InputError(f"{name} must have shape ({size},), got {x.shape}")
    return x


def apply(dictionary: BlockDictionary, pi) -> np.ndarray:
    """Pixel density ``M pi`` induced by block weights ``pi``."""
    pi = _vector(pi, dictionary.m, "pi")
    return dictionary.incidence @ pi / dictionary.ell


def apply_adjoint(dictionary: BlockDictionary, q) -> np.ndarray:
    """``M* q``: the mean of ``q`` over each block."""
    q = _vector(q, dictionary.n, "q")
    return dictionary.incidence_t @ q / dictionary.ell


def operator_norm_p_to_inf(dictionary: BlockDictionary, p: float) -> float:
    """``||M*||_{p -> inf} = ell ** (-1/p)`` (``1`` for ``p = inf``)."""
    return norm_p_to_inf(dictionary.ell, p)


def norm_p_to_inf(ell: int, p: float) -> float:
    if not p >= 1:
        raise InputError(f"norm exponent must be in [1, inf], got {p}")
    if math.isinf(p):
        return 1.0
    return float(ell) ** (-1.0 / p)


def brute_force_norm_p_to_inf(dictionary: BlockDictionary, p: float) -> float:
    """Max over columns of ``||M[:, k]||_q`` with ``1/p + 1/q = 1``, on the dense matrix."""
    if not p >= 1:
        raise InputError(f"norm exponent must be in [1, inf], got {p}")
    q = 1.0 / (1.0 - 1.0 / p) if p > 1 else math.inf
    dense = build_dense(dictionary)
    return float(np.max(np.linalg.norm(dense, ord=q, axis=0)))


def build_dense(dictionary: BlockDictionary) -> np.ndarray:
    """Dense ``n x m`` matrix of the mapping; for small test instances only."""
    if dictionary.n * dictionary.m > DENSE_SIZE_LIMIT:
        raise InputError(f"dense matrix of size {dictionary.n}x{dictionary.m} exceeds the {DENSE_SIZE_LIMIT} guard")
    return dictionary.incidence.toarray() / dictionary.ell


def norm_2_to_2(dictionary: BlockDictionary, iters: int = 100, tol: float = 1e-8) -> float:
    """Spectral norm of ``M*`` by power iteration on ``M M*``."""
    x = np.ones(dictionary.n) / math.sqrt(dictionary.n)
    lam = 0.0
    for _ in range(iters):
        y = apply(dictionary, apply_adjoint(dictionary, x))
        new = float(np.linalg.norm(y))
        if new == 0.0:
            return 0.0
        x = y / new
        if abs(new - lam) <= tol * new:
            lam = new
            break
        lam = new
    return math.sqrt(lam)


def check_probability(x, size: int | None = None, name: str = "vector", atol: float = SIMPLEX_ATOL) -> np.ndarray:
    """Return ``x`` as a float array after checking it lies on the simplex."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or (size is not None and x.size != size):
        raise InputError(f"{name} must be a vector of length {size}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError(f"{name} has non-finite entries")
    if np.any(x < 0):
        raise InputError(f"{name} has negative entries")
    total = float(x.sum())
    if abs(total - 1.0) > atol:
        raise InputError(f"{name} sums to {total!r}, not 1")
    return x
