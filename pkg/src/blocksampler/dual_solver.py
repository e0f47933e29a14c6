"""Entropy-regularised total-variation fit of a block distribution.

Primal problem over the simplex of block weights::

    F(pi) = ||M pi - p||_1 + alpha * sum_j pi_j log pi_j

It is solved through its smooth dual over the unit sup-norm ball::

    J(q) = <p, q> + alpha * log sum_k exp(-(M* q)_k / alpha)

with Nesterov's accelerated scheme for smooth problems in a normed space.
The primal point is recovered as the softmax ``pi(q) = softmax(-M* q / alpha)``.
The norm on block space (``e_norm``), the norm on pixel space (``f_norm``) and
the prox-function are configurable; they change the Lipschitz constant, the
two subproblems of each iteration, and the certified convergence bound.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import xlogy

from blocksampler.blocks_dictionary import BlockDictionary
from blocksampler.errors import InputError, NumericalError, UnsupportedError
from blocksampler.linop import apply, apply_adjoint, check_probability, norm_2_to_2, norm_p_to_inf

logger = logging.getLogger(__name__)

PROX_KINDS = ("half_sq_l2", "d_pprime", "d_eps")
# entropy's convexity modulus on the simplex, identical for every l^p norm
SIGMA_ENTROPY = 1.0
PRIMAL_ATOL = 1e-9


def _parse_norm(value) -> float:
    if isinstance(value, str):
        value = value.strip().lower()
        if value in ("inf", "infinity", "∞"):
            return math.inf
        value = float(value)
    return float(value)


@dataclass(frozen=True)
class SolverConfig:
    """Metric choices and iteration budget.

    ``eps`` applies to ``d_eps`` and defaults to ``1/n`` when left as ``None``.
    ``lipschitz_divisor > 1`` shrinks the Lipschitz constant heuristically;
    the certified bounds no longer hold in that case.
    """

    alpha: float = 1e-2
    e_norm: int = 1
    f_norm: float = 2.0
    prox: str = "half_sq_l2"
    pprime: float = 2.0
    eps: float | None = None
    lipschitz_divisor: float = 1.0
    max_iters: int = 1000
    gap_tol: float = 0.0
    log_every: int = 1

    def __post_init__(self):
        object.__setattr__(self, "f_norm", _parse_norm(self.f_norm))
        if not self.alpha > 0:
            raise InputError(f"alpha must be > 0, got {self.alpha}")
        if self.e_norm not in (1, 2):
            raise InputError(f"e_norm must be 1 or 2, got {self.e_norm}")
        if self.f_norm not in (1.0, 2.0, math.inf):
            raise InputError(f"f_norm must be 1, 2 or inf, got {self.f_norm}")
        if self.prox not in PROX_KINDS:
            raise InputError(f"prox must be one of {PROX_KINDS}, got {self.prox!r}")
        if self.prox == "d_pprime" and not 1 < self.pprime <= 2:
            raise InputError(f"pprime must lie in (1, 2], got {self.pprime}")
        if self.prox == "d_eps" and self.eps is not None and not self.eps > 0:
            raise InputError(f"eps must be > 0, got {self.eps}")
        if not self.lipschitz_divisor >= 1:
            raise InputError(f"lipschitz_divisor must be >= 1, got {self.lipschitz_divisor}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InputError(f"max_iters must be a positive integer, got {self.max_iters}")
        if self.gap_tol < 0:
            raise InputError(f"gap_tol must be >= 0, got {self.gap_tol}")
        if self.log_every < 1:
            raise InputError(f"log_every must be >= 1, got {self.log_every}")

    def resolved_eps(self, n: int) -> float:
        return self.eps if self.eps is not None else 1.0 / n

    def to_dict(self) -> dict:
        out = asdict(self)
        out["f_norm"] = "inf" if math.isinf(self.f_norm) else self.f_norm
        return out


@dataclass
class ConvergenceTrace:
    """Per-iteration records of the dual value, primal value, gap and bound."""

    iters: list[int] = field(default_factory=list)
    J: list[float] = field(default_factory=list)
    F: list[float] = field(default_factory=list)
    gap: list[float] = field(default_factory=list)
    bound: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    status: str = "running"

    def append(self, k: int, j: float, f: float, bound: float, seconds: float) -> None:
        self.iters.append(k)
        self.J.append(j)
        self.F.append(f)
        self.gap.append(f + j)
        self.bound.append(bound)
        self.seconds.append(seconds)

    def __len__(self) -> int:
        return len(self.iters)

    @property
    def final_gap(self) -> float:
        return self.gap[-1]

    def best_gap(self) -> float:
        return min(self.gap)

    def first_iter_below(self, tol: float) -> int | None:
        """First logged iteration whose gap is ``<= tol``, or ``None``."""
        for k, g in zip(self.iters, self.gap):
            if g <= tol:
                return k
        return None

    def to_csv(self, path, include_seconds: bool = True) -> None:
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iter", "J", "F", "gap", "bound", "seconds"])
            for row in zip(self.iters, self.J, self.F, self.gap, self.bound, self.seconds):
                k, j, f, g, b, s = row
                writer.writerow([k, repr(j), repr(f), repr(g), repr(b), repr(s) if include_seconds else ""])

    @classmethod
    def from_csv(cls, path) -> ConvergenceTrace:
        trace = cls(status="loaded")
        with open(path, newline="", encoding="ascii") as fh:
            for row in csv.DictReader(fh):
                trace.iters.append(int(row["iter"]))
                trace.J.append(float(row["J"]))
                trace.F.append(float(row["F"]))
                trace.gap.append(float(row["gap"]))
                trace.bound.append(float(row["bound"]))
                trace.seconds.append(float(row["seconds"]) if row["seconds"] else math.nan)
        return trace


class SolveResult(NamedTuple):
    pi: np.ndarray
    q: np.ndarray
    trace: ConvergenceTrace


# -- objective pieces ---------------------------------------------------------

def entropy(pi) -> float:
    """Neg-entropy ``sum pi_j log pi_j`` with ``0 log 0 = 0``."""
    pi = np.asarray(pi, dtype=float)
    if np.any(pi < 0):
        raise InputError("entropy of a vector with negative entries")
    return float(np.sum(xlogy(pi, pi)))


def eval_F(pi, dictionary: BlockDictionary, p, alpha: float) -> float:
    """Primal objective ``||M pi - p||_1 + alpha * entropy(pi)``."""
    pi = check_probability(pi, dictionary.m, "pi", atol=PRIMAL_ATOL)
    p = np.asarray(p, dtype=float)
    return float(np.abs(apply(dictionary, pi) - p).sum() + alpha * entropy(pi))


def _softmax_neg(adj: np.ndarray, alpha: float) -> np.ndarray:
    s = adj * (-1.0 / alpha)
    s -= s.max()
    np.exp(s, out=s)
    s /= s.sum()
    return s


def _logsumexp_neg(adj: np.ndarray, alpha: float) -> float:
    s = adj * (-1.0 / alpha)
    top = s.max()
    return float(top + math.log(np.exp(s - top).sum()))


def primal_from_dual(q, dictionary: BlockDictionary, alpha: float) -> np.ndarray:
    """Block weights ``pi_j proportional to exp(-(M* q)_j / alpha)``."""
    return _softmax_neg(apply_adjoint(dictionary, q), alpha)


def eval_J(q, dictionary: BlockDictionary, p, alpha: float) -> float:
    """Dual objective ``<p, q> + alpha * logsumexp(-M* q / alpha)``.

    This is the sign for which ``min F = max -J`` and ``grad J = p - M pi(q)``.
    """
    q = np.asarray(q, dtype=float)
    adj = apply_adjoint(dictionary, q)
    return float(np.dot(p, q) + alpha * _logsumexp_neg(adj, alpha))


def grad_J(q, dictionary: BlockDictionary, p, alpha: float) -> np.ndarray:
    """``p - M pi(q)``."""
    return np.asarray(p, dtype=float) - apply(dictionary, primal_from_dual(q, dictionary, alpha))


# -- metric constants ---------------------------------------------------------

def dual_operator_norm(dictionary: BlockDictionary, e_norm: int, f_norm: float) -> float:
    """``||M*||`` from pixel space (``l^f_norm``) to the dual of block space (``l^e_norm``)."""
    f_norm = _parse_norm(f_norm)
    if e_norm == 1:
        return norm_p_to_inf(dictionary.ell, f_norm)
    if e_norm == 2:
        if f_norm == 2:
            return norm_2_to_2(dictionary)
        if math.isinf(f_norm):
            # M* is entrywise nonnegative, so the sup over the cube is attained at the all-ones vector
            return math.sqrt(dictionary.m)
        # l1 -> l2: largest column of M*
        degrees = np.diff(dictionary.incidence.indptr)
        return math.sqrt(float(degrees.max())) / dictionary.ell
    raise InputError(f"e_norm must be 1 or 2, got {e_norm}")


def lipschitz_constant(dictionary: BlockDictionary, config: SolverConfig) -> float:
    """Gradient Lipschitz constant ``||M*||^2 / (alpha * sigma_E)``, divided by the configured divisor."""
    norm = dual_operator_norm(dictionary, config.e_norm, config.f_norm)
    return norm * norm / (config.alpha * SIGMA_ENTROPY) / config.lipschitz_divisor


def prox_modulus(config: SolverConfig, n: int) -> float:
    """Strong-convexity modulus of the prox-function w.r.t. the pixel-space norm."""
    if config.f_norm == 1.0 and config.prox != "d_eps":
        # ||x||_2^2 >= ||x||_1^2 / n, and likewise for the p' norms
        pp = 2.0 if config.prox == "half_sq_l2" else config.pprime
        return (pp - 1.0) * n ** (2.0 / pp - 2.0)
    if config.prox == "half_sq_l2":
        return 1.0
    if config.prox == "d_pprime":
        return config.pprime - 1.0
    return config.resolved_eps(n)


def prox_diameter(config: SolverConfig, n: int) -> float:
    """``D = max of the prox-function over the unit sup-norm ball``."""
    if config.prox == "half_sq_l2":
        return n / 2.0
    if config.prox == "d_pprime":
        return n ** (2.0 / config.pprime) / 2.0
    return 0.5 + config.resolved_eps(n) * n / 2.0


def _bound_constant(config: SolverConfig, dictionary: BlockDictionary) -> float:
    norm = dual_operator_norm(dictionary, config.e_norm, config.f_norm)
    n = dictionary.n
    return norm * norm * prox_diameter(config, n) / (config.alpha * SIGMA_ENTROPY * prox_modulus(config, n))


def theoretical_bound(k: int, config: SolverConfig, dictionary: BlockDictionary) -> float:
    """Certified bound on ``J(y_k) - min J`` after iteration ``k`` (0-based)."""
    return 4.0 * _bound_constant(config, dictionary) / ((k + 1) * (k + 2))


def primal_error_bound(k: int, config: SolverConfig, dictionary: BlockDictionary) -> float:
    """Certified bound on ``||pi_k - pi*||_E^2``."""
    return 8.0 * _bound_constant(config, dictionary) / (config.alpha * SIGMA_ENTROPY * (k + 1) * (k + 2))


# -- the two subproblems ------------------------------------------------------

def _first_crossing(candidates: np.ndarray, upper: np.ndarray) -> int:
    hit = candidates <= upper
    return int(np.argmax(hit)) if hit.any() else -1


def nesterov_step_y(q, g, L: float, f_norm) -> np.ndarray:
    """Minimise ``<g, y - q> + (L/2) ||y - q||_F^2`` over the unit sup-norm ball."""
    f_norm = _parse_norm(f_norm)
    q = np.asarray(q, dtype=float)
    g = np.asarray(g, dtype=float)
    if f_norm == 2:
        return np.clip(q - g / L, -1.0, 1.0)
    if math.isinf(f_norm):
        # y(t) = clip(q - t sign(g)); phi'(t) = L t - sum_{room_i > t} |g_i| is nondecreasing
        direction = np.where(g >= 0, 1.0, -1.0)
        room = np.maximum(np.where(direction > 0, q + 1.0, 1.0 - q), 0.0)
        order = np.argsort(room, kind="stable")
        r = room[order]
        suffix = np.cumsum(np.abs(g)[order][::-1])[::-1]
        j = _first_crossing(suffix / L, r)
        if j < 0:
            t = r[-1]
        else:
            t = max(suffix[j] / L, r[j - 1] if j > 0 else 0.0)
        return np.clip(q - t * direction, -1.0, 1.0)
    raise UnsupportedError("the l1 pixel-space geometry is not supported for the gradient step")


def _pprime_step(w: np.ndarray, c: float, pprime: float) -> np.ndarray:
    # minimise c/2 ||z||_{p'}^2 + <w, z> over the cube via the norm s = ||z||_{p'}:
    # for fixed s the stationarity condition is separable with a closed form
    absw = np.abs(w)
    if not absw.any():
        return np.zeros_like(w)
    expo = 1.0 / (pprime - 1.0)

    def z_of(s: float) -> np.ndarray:
        scale = c * s ** (2.0 - pprime)
        if scale == 0:
            mag = (absw > 0).astype(float)
        else:
            mag = np.minimum(1.0, (absw / scale) ** expo)
        return -np.sign(w) * mag

    def h(s: float) -> float:
        return float(np.linalg.norm(z_of(s), ord=pprime)) - s

    hi = w.size ** (1.0 / pprime)
    if h(hi) >= 0:
        return z_of(hi)
    s = brentq(h, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return z_of(s)


def _deps_step(w: np.ndarray, L: float, eps: float) -> np.ndarray:
    # t = ||z||_inf; for fixed t, z = clip(-w/L, -t, t);
    # phi'(t) = (L/eps) t - sum_{|w_i|/L > t} (|w_i| - L t) is continuous and increasing
    absw = np.abs(w)
    if not absw.any():
        return np.zeros_like(w)
    order = np.argsort(absw, kind="stable")
    aw = absw[order]
    b = aw / L
    suffix = np.cumsum(aw[::-1])[::-1]
    count = np.arange(w.size, 0, -1, dtype=float)
    cand = suffix / (L / eps + L * count)
    j = _first_crossing(cand, b)
    t = max(cand[j], b[j - 1] if j > 0 else 0.0)
    t = min(t, 1.0)
    return np.clip(-w / L, -t, t)


def nesterov_step_z(w, L: float, sigma_d: float, prox: str, pprime: float = 2.0, eps: float | None = None) -> np.ndarray:
    """Minimise ``(L / sigma_d) d(z) + <w, z>`` over the unit sup-norm ball.

    ``w`` is the running weighted sum of past gradients.
    """
    w = np.asarray(w, dtype=float)
    if prox == "half_sq_l2":
        return np.clip(-sigma_d * w / L, -1.0, 1.0)
    if prox == "d_pprime":
        return _pprime_step(w, L / sigma_d, pprime)
    if prox == "d_eps":
        if eps is None or not eps > 0:
            raise InputError("d_eps requires eps > 0")
        return _deps_step(w, L, eps)
    raise InputError(f"unknown prox kind {prox!r}")


# -- the accelerated scheme ---------------------------------------------------

def solve(dictionary: BlockDictionary, p, config: SolverConfig, callback=None) -> SolveResult:
    """Run the accelerated dual scheme from ``q0 = 0``.

    Returns the primal weights recovered from the logged ``y_k`` with the
    smallest dual value, that ``y_k``, and the trace. ``callback(k, y)`` is
    called at every logged iteration if given.
    """
    n, m = dictionary.n, dictionary.m
    p = check_probability(p, n, "p", atol=PRIMAL_ATOL)
    if config.f_norm == 1.0:
        raise UnsupportedError("the l1 pixel-space geometry is not supported for the gradient step")
    alpha = config.alpha
    L = lipschitz_constant(dictionary, config)
    sigma_d = prox_modulus(config, n)
    eps = config.resolved_eps(n)
    bound_const = 4.0 * _bound_constant(config, dictionary)
    inc, inc_t, inv_ell = dictionary.incidence, dictionary.incidence_t, 1.0 / dictionary.ell
    logger.debug("solve: n=%d m=%d L=%.6g sigma_d=%.6g", n, m, L, sigma_d)

    q = np.zeros(n)
    w = np.zeros(n)
    trace = ConvergenceTrace()
    best_j, best_y, best_adj = math.inf, q, np.zeros(m)
    start = time.perf_counter()
    last = config.max_iters - 1
    status = "max_iters"
    for k in range(config.max_iters):
        adj_q = (inc_t @ q) * inv_ell
        g = p - (inc @ _softmax_neg(adj_q, alpha)) * inv_ell
        y = nesterov_step_y(q, g, L, config.f_norm)
        w += 0.5 * (k + 1) * g
        z = nesterov_step_z(w, L, sigma_d, config.prox, config.pprime, eps)

        if k % config.log_every == 0 or k == last:
            adj_y = (inc_t @ y) * inv_ell
            j_val = float(p @ y) + alpha * _logsumexp_neg(adj_y, alpha)
            pi_y = _softmax_neg(adj_y, alpha)
            f_val = float(np.abs((inc @ pi_y) * inv_ell - p).sum()) + alpha * float(np.sum(xlogy(pi_y, pi_y)))
            if not (math.isfinite(j_val) and math.isfinite(f_val)):
                raise NumericalError(f"non-finite objective at iteration {k}")
            trace.append(k, j_val, f_val, bound_const / ((k + 1) * (k + 2)), time.perf_counter() - start)
            if j_val < best_j:
                best_j, best_y, best_adj = j_val, y, adj_y
            if callback is not None:
                callback(k, y)
            if config.gap_tol > 0 and f_val + j_val <= config.gap_tol:
                status = "converged"
                break

        q = (2.0 / (k + 3)) * z + ((k + 1.0) / (k + 3)) * y

    if status != "converged" and len(trace) > 1 and trace.gap[-1] > trace.gap[0]:
        status = "diverged"
        logger.warning("duality gap grew from %.3g to %.3g", trace.gap[0], trace.gap[-1])
    trace.status = status
    return SolveResult(_softmax_neg(best_adj, alpha), best_y.copy(), trace)
