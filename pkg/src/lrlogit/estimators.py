"""Estimators for the matrix logistic model and decoder-based risk measurement.

Two fitting routes share one descent engine: unconstrained gradient descent
on the negative log-likelihood (convex), and projected gradient descent that
truncates each iterate to its best rank-r approximation.  A scikit-learn
style wrapper exposes the same engine as a classifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ._util import TAG_INIT, TAG_TRIAL, dumps_17g, substream
from .model import Dataset, grad_neg_loglik, neg_loglik, sample_dataset, sigmoid
from .validation import check_binary_responses, check_matrix_covariates

STEP_FIXED = "fixed"
STEP_BACKTRACKING = "backtracking"

INIT_ZERO = "zero"
INIT_GAUSSIAN = "gaussian"

_MIN_STEP = 1e-18
_RANK_REL_TOL = 1e-10


@dataclass(frozen=True)
class FitOptions:
    """Knobs for the descent engine.

    ``step_rule`` is ``"backtracking"`` (Armijo with shrink factor ``beta``
    and slope fraction ``c``; ``eta`` is the initial trial step, re-grown
    after each accepted step) or ``"fixed"`` (constant step ``eta``).
    ``init`` is ``"zero"`` or ``"gaussian"`` with ``init_scale``/``init_seed``.
    """

    max_iters: int = 300
    step_rule: str = STEP_BACKTRACKING
    eta: float = 1.0
    beta: float = 0.5
    c: float = 1e-4
    tol_grad: float = 1e-4
    rank: int | None = None
    init: str = INIT_ZERO
    init_scale: float = 1.0
    init_seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("need max_iters >= 1")
        if self.tol_grad <= 0 or self.eta <= 0:
            raise ValueError("tolerances and steps must be > 0")
        if not (0.0 < self.beta < 1.0):
            raise ValueError("need 0 < beta < 1")
        if not (0.0 < self.c < 1.0):
            raise ValueError("need 0 < c < 1")
        if self.step_rule not in (STEP_FIXED, STEP_BACKTRACKING):
            raise ValueError("unknown step rule")
        if self.init not in (INIT_ZERO, INIT_GAUSSIAN):
            raise ValueError("unknown init")
        if self.rank is not None and self.rank < 1:
            raise ValueError("rank must be >= 1 when set")


@dataclass(frozen=True)
class FitResult:
    """Fitted coefficient matrix plus convergence diagnostics."""

    B_hat: np.ndarray
    iterations: int
    final_grad_norm: float
    converged: bool
    objective_trace: tuple

    def to_dict(self):
        return {
            "B_hat": self.B_hat.ravel(),
            "m1": self.B_hat.shape[0],
            "m2": self.B_hat.shape[1],
            "iterations": self.iterations,
            "final_grad_norm": self.final_grad_norm,
            "converged": self.converged,
            "objective_trace": list(self.objective_trace),
        }

    def to_json(self):
        return dumps_17g(self.to_dict())

    @staticmethod
    def from_dict(doc):
        m1, m2 = int(doc["m1"]), int(doc["m2"])
        b = np.asarray(doc["B_hat"], dtype=float).reshape(m1, m2)
        b.setflags(write=False)
        return FitResult(
            B_hat=b,
            iterations=int(doc["iterations"]),
            final_grad_norm=float(doc["final_grad_norm"]),
            converged=bool(doc["converged"]),
            objective_trace=tuple(float(v) for v in doc["objective_trace"]),
        )


def svd_truncate(M, rank):
    """Best rank-``rank`` approximation in Frobenius norm (SVD truncation)."""
    u, s, vt = np.linalg.svd(np.asarray(M, dtype=float), full_matrices=False)
    k = min(rank, s.size)
    return (u[:, :k] * s[:k]) @ vt[:k]


def numerical_rank(M, rel_tol=_RANK_REL_TOL):
    """Count of singular values above ``rel_tol`` times the largest."""
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def _initial_matrix(shape, opts):
    if opts.init == INIT_ZERO:
        return np.zeros(shape)
    rng = substream(opts.init_seed, TAG_INIT)
    return rng.standard_normal(shape) * opts.init_scale


def _descent(dataset, opts, rank, B0=None):
    """Shared engine: gradient descent with optional rank projection.

    The step is accepted when
    ``f(cand) <= f(B) - (c/eta) * ||B - cand||_F^2``, which reduces to the
    classic Armijo rule when no projection is active; only decreasing steps
    are ever taken, so the objective trace is nonincreasing.  Convergence is
    declared on the step-mapping norm ``||B - cand||_F / eta``, which equals
    the gradient norm in the unconstrained case.
    """
    m1, m2 = dataset.shape
    B = _initial_matrix((m1, m2), opts) if B0 is None else np.array(B0, dtype=float)
    if rank is not None:
        B = svd_truncate(B, rank)
    f = neg_loglik(B, dataset)
    trace = [f]
    grad = grad_neg_loglik(B, dataset)
    eta = opts.eta
    iterations = 0
    converged = False
    for iterations in range(1, opts.max_iters + 1):
        if opts.step_rule == STEP_FIXED:
            cand = B - opts.eta * grad
            if rank is not None:
                cand = svd_truncate(cand, rank)
            step_norm = float(np.linalg.norm(B - cand))
            if step_norm / opts.eta <= opts.tol_grad:
                converged = True
                break
            B = cand
            f = neg_loglik(B, dataset)
        else:
            eta = min(eta * 2.0, 1e12)
            accepted = False
            while eta >= _MIN_STEP:
                cand = B - eta * grad
                if rank is not None:
                    cand = svd_truncate(cand, rank)
                f_cand = neg_loglik(cand, dataset)
                move_sq = float(np.sum((B - cand) ** 2))
                if f_cand <= f - (opts.c / eta) * move_sq:
                    accepted = True
                    break
                eta *= opts.beta
            if not accepted:
                break
            if math.sqrt(move_sq) / eta <= opts.tol_grad:
                B, f = cand, f_cand
                trace.append(f)
                converged = True
                break
            B, f = cand, f_cand
        trace.append(f)
        grad = grad_neg_loglik(B, dataset)
        if np.linalg.norm(grad) <= opts.tol_grad:
            converged = True
            break
    B.setflags(write=False)
    return FitResult(
        B_hat=B,
        iterations=iterations,
        final_grad_norm=float(np.linalg.norm(grad_neg_loglik(B, dataset))),
        converged=converged,
        objective_trace=tuple(trace),
    )


def fit_full(dataset, opts=None, B0=None):
    """Unconstrained maximum-likelihood fit by gradient descent."""
    opts = opts or FitOptions()
    return _descent(dataset, opts, rank=None, B0=B0)


def fit_lowrank(dataset, rank, opts=None, B0=None):
    """Projected gradient descent: each iterate is truncated to rank ``rank``."""
    m1, m2 = dataset.shape
    if not (1 <= rank <= min(m1, m2)):
        raise ValueError(f"need 1 <= rank <= {min(m1, m2)}")
    opts = opts or FitOptions()
    return _descent(dataset, opts, rank=rank, B0=B0)


# ---------------------------------------------------------------------------
# decoding and Monte-Carlo risk
# ---------------------------------------------------------------------------

DECODE_RULE_HALF_MIN = "half_min"
DECODE_RULE_THRESHOLD = "threshold"


def min_distance_decode(B_hat, packing):
    """Index of the packing element nearest to ``B_hat`` in Frobenius norm.

    Ties are broken toward the smallest index.
    """
    if len(packing) == 0:
        raise ValueError("empty packing")
    B_hat = np.asarray(B_hat, dtype=float)
    dists = np.array([np.sum((B_hat - el) ** 2) for el in packing.dense_elements()])
    return int(np.argmin(dists))


def decode_certificate(B_hat, packing, index, rule=DECODE_RULE_HALF_MIN, delta=None):
    """Whether ``B_hat`` is inside the chosen correctness radius of element ``index``.

    ``half_min`` is the geometric guarantee: strictly closer than half the
    minimum pairwise distance.  ``threshold`` is the literal mixed-unit rule
    ``||B_hat - B_index||_F^2 < sqrt(2*delta)``, kept for inspection; its
    ``delta`` defaults to the packing's certified separation level
    ``kappa * epsilon**2 * r / (8*(r-1))``.
    """
    B_hat = np.asarray(B_hat, dtype=float)
    sq = float(np.sum((B_hat - packing.elements[index].dense()) ** 2))
    if rule == DECODE_RULE_HALF_MIN:
        return math.sqrt(sq) < 0.5 * math.sqrt(packing.min_pairwise_sq)
    if rule == DECODE_RULE_THRESHOLD:
        if delta is None:
            delta = packing.distance_floor() / 8.0
        return sq < math.sqrt(2.0 * delta)
    raise ValueError(f"unknown rule {rule!r}")


def _resolve_fit(fit_method, rank, opts):
    if callable(fit_method):
        return fit_method
    if fit_method == "oracle":
        return None
    if fit_method == "full":
        return lambda ds: fit_full(ds, opts).B_hat
    if fit_method == "lowrank":
        return lambda ds: fit_lowrank(ds, rank, opts).B_hat
    raise ValueError(f"unknown fit method {fit_method!r}")


@dataclass(frozen=True)
class DecoderStats:
    """Monte-Carlo decoding error rate with per-index tallies."""

    error_rate: float
    trials: int
    errors_by_index: np.ndarray
    draws_by_index: np.ndarray


def decoder_error_rate(packing, n, sigma, trials, fit_method="lowrank", seed=0,
                       opts=None):
    """Estimate the decoder's error probability under uniformly drawn truths.

    Each trial draws an index uniformly, simulates a dataset from that
    element, fits (``"full"``, ``"lowrank"``, ``"oracle"`` or a callable
    ``dataset -> B_hat``), decodes, and counts mismatches.  Per-trial
    substreams make the result independent of execution order.
    """
    if trials < 1:
        raise ValueError("need trials >= 1")
    L = len(packing)
    dense = packing.dense_elements()
    fit = _resolve_fit(fit_method, packing.r, opts)
    errors = np.zeros(L, dtype=int)
    draws = np.zeros(L, dtype=int)
    for trial in range(trials):
        rng = substream(seed, TAG_TRIAL, trial)
        l = int(rng.integers(L))
        draws[l] += 1
        if fit is None:
            b_hat = dense[l]
        else:
            ds = sample_dataset(dense[l], n, sigma, int(rng.integers(2**63)),
                                truth_index=l)
            b_hat = fit(ds)
        if min_distance_decode(b_hat, packing) != l:
            errors[l] += 1
    errors.setflags(write=False)
    draws.setflags(write=False)
    return DecoderStats(
        error_rate=float(errors.sum() / trials),
        trials=trials,
        errors_by_index=errors,
        draws_by_index=draws,
    )


@dataclass(frozen=True)
class RiskSummary:
    """Squared-Frobenius estimation error over Monte-Carlo trials."""

    mean_sq_frob: float
    median: float
    stderr: float
    trials: int
    sq_errors: np.ndarray


def empirical_risk(B_true, n, sigma, trials, fit_method="lowrank", seed=0,
                   opts=None, rank=None):
    """Mean/median squared error of repeated fits against a fixed truth."""
    if trials < 2:
        raise ValueError("need trials >= 2")
    B_true = np.asarray(B_true, dtype=float)
    if rank is None:
        rank = numerical_rank(B_true)
    fit = _resolve_fit(fit_method, max(rank, 1), opts)
    sq = np.empty(trials)
    for trial in range(trials):
        rng = substream(seed, TAG_TRIAL, trial)
        if fit is None:
            b_hat = B_true
        else:
            ds = sample_dataset(B_true, n, sigma, int(rng.integers(2**63)))
            b_hat = fit(ds)
        sq[trial] = float(np.sum((b_hat - B_true) ** 2))
    sq.setflags(write=False)
    return RiskSummary(
        mean_sq_frob=float(np.mean(sq)),
        median=float(np.median(sq)),
        stderr=float(np.std(sq, ddof=1) / np.sqrt(trials)),
        trials=trials,
        sq_errors=sq,
    )


# ---------------------------------------------------------------------------
# scikit-learn style front end
# ---------------------------------------------------------------------------

class MatrixLogisticRegression(BaseEstimator, ClassifierMixin):
    """Logistic regression on matrix covariates with an optional rank cap.

    Parameters
    ----------
    rank : int or None
        When set, iterates are projected onto rank-``rank`` matrices
        (projected gradient descent); ``None`` fits the full matrix.
    matrix_shape : tuple or None
        Required when ``fit`` receives 2-D inputs of flattened (row-major)
        matrices; 3-D inputs of shape (n, m1, m2) need no shape hint.
    max_iters, tol_grad, step_rule, eta, beta, c, init, init_scale, init_seed
        Forwarded to the descent engine; see :class:`FitOptions`.

    Attributes
    ----------
    coef_ : ndarray of shape (m1, m2)
        Fitted coefficient matrix.
    converged_ : bool
    n_iter_ : int
    objective_trace_ : tuple of float
    """

    def __init__(self, rank=None, matrix_shape=None, max_iters=300,
                 tol_grad=1e-4, step_rule=STEP_BACKTRACKING, eta=1.0,
                 beta=0.5, c=1e-4, init=INIT_ZERO, init_scale=1.0,
                 init_seed=0):
        self.rank = rank
        self.matrix_shape = matrix_shape
        self.max_iters = max_iters
        self.tol_grad = tol_grad
        self.step_rule = step_rule
        self.eta = eta
        self.beta = beta
        self.c = c
        self.init = init
        self.init_scale = init_scale
        self.init_seed = init_seed

    def _options(self):
        return FitOptions(
            max_iters=self.max_iters,
            step_rule=self.step_rule,
            eta=self.eta,
            beta=self.beta,
            c=self.c,
            tol_grad=self.tol_grad,
            rank=self.rank,
            init=self.init,
            init_scale=self.init_scale,
            init_seed=self.init_seed,
        )

    def fit(self, X, y):
        X = check_matrix_covariates(X, self.matrix_shape)
        y = check_binary_responses(y, X.shape[0])
        if self.rank is not None and not (1 <= self.rank <= min(X.shape[1:])):
            raise ValueError(
                f"rank {self.rank} outside [1, {min(X.shape[1:])}] for "
                f"{X.shape[1]}x{X.shape[2]} covariates"
            )
        dataset = Dataset(X=X, y=y, sigma=1.0, seed=0)
        result = _descent(dataset, self._options(), rank=self.rank)
        self.coef_ = result.B_hat
        self.converged_ = result.converged
        self.n_iter_ = result.iterations
        self.objective_trace_ = result.objective_trace
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X):
        self._check_fitted()
        X = check_matrix_covariates(X, self.coef_.shape)
        return X.reshape(X.shape[0], -1) @ self.coef_.ravel()

    def predict_proba(self, X):
        p1 = sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.decision_function(X) >= 0.0).astype(int)

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise ValueError("estimator is not fitted; call fit first")
