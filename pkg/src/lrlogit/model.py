"""Matrix-covariate logistic model: sampling, likelihood, divergence bounds.

Covariates are matrices with i.i.d. zero-mean Gaussian entries; responses are
Bernoulli with success probability ``sigmoid(<B, X>)`` (no intercept: the
analyzed model drops it).  Divergences between two coefficient hypotheses are
estimated by Monte Carlo over covariates and bounded in closed form through
the half-normal mean of ``|<X, B - B'>|``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ._util import (
    TAG_DATASET,
    TAG_HALF_NORMAL,
    dumps_17g,
    read_json,
    substream,
    write_json,
)

SQRT_2_OVER_PI = float(np.sqrt(2.0 / np.pi))


def sigmoid(t):
    """Numerically stable logistic function.

    Exactly satisfies ``sigmoid(t) + sigmoid(-t) == 1`` for finite t: the
    negative branch is computed as one minus the positive branch, whose
    subtraction from 1 is exact in IEEE arithmetic.
    """
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    out[~pos] = 1.0 - 1.0 / (1.0 + np.exp(arr[~pos]))
    return float(out[0]) if scalar else out


def softplus(t):
    """log(1 + exp(t)) without overflow (log-sum-exp form)."""
    return np.logaddexp(0.0, t)


@dataclass(frozen=True)
class Dataset:
    """n covariate matrices with Bernoulli responses.

    ``X`` has shape (n, m1, m2); ``y`` is a {0,1} vector; ``truth_index``
    optionally records which packing element generated the responses.
    """

    X: np.ndarray
    y: np.ndarray
    sigma: float
    seed: int
    truth_index: int | None = None

    def __post_init__(self):
        if self.X.ndim != 3 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X must be (n, m1, m2) aligned with y")
        if self.n < 1:
            raise ValueError("need n >= 1")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("covariates must be finite")
        if not np.all((self.y == 0) | (self.y == 1)):
            raise ValueError("responses must be 0/1")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def shape(self):
        return self.X.shape[1], self.X.shape[2]

    @property
    def X_flat(self):
        return self.X.reshape(self.n, -1)


def sample_dataset(B, n, sigma, seed, truth_index=None):
    """Draw a dataset from the logistic model with coefficient matrix ``B``.

    Entries of each covariate are i.i.d. N(0, sigma^2); responses are
    Bernoulli(sigmoid(<B, X_i>)).  Bitwise reproducible per seed.
    """
    B = np.asarray(B, dtype=float)
    if n < 1:
        raise ValueError("need n >= 1")
    if sigma <= 0:
        raise ValueError("need sigma > 0")
    m1, m2 = B.shape
    rng = substream(seed, TAG_DATASET)
    X = rng.standard_normal((n, m1, m2)) * sigma
    p = sigmoid(X.reshape(n, -1) @ B.ravel())
    y = (rng.random(n) < p).astype(np.uint8)
    X.setflags(write=False)
    y.setflags(write=False)
    return Dataset(X=X, y=y, sigma=float(sigma), seed=int(seed),
                   truth_index=truth_index)


def neg_loglik(B, dataset):
    """Negative Bernoulli log-likelihood of ``B`` on the dataset.

    Computed as ``sum(softplus(-t_i) + (1 - y_i) * t_i)`` with
    ``t_i = <B, X_i>``, which is finite for any finite inputs.
    """
    t = dataset.X_flat @ np.asarray(B, dtype=float).ravel()
    return float(np.sum(softplus(-t) + (1.0 - dataset.y) * t))


def grad_neg_loglik(B, dataset):
    """Gradient of :func:`neg_loglik`: ``sum_i (sigmoid(t_i) - y_i) X_i``."""
    B = np.asarray(B, dtype=float)
    t = dataset.X_flat @ B.ravel()
    residual = sigmoid(t) - dataset.y
    return (dataset.X_flat.T @ residual).reshape(B.shape)


@dataclass(frozen=True)
class KLReport:
    """Monte-Carlo divergence estimate with its closed-form ceiling (nats)."""

    mc_estimate: float
    mc_stderr: float
    analytic_upper: float
    n_samples_used: int


def kl_conditional(B_l, B_lp, dataset):
    """Divergence between the response laws of two hypotheses, given covariates.

    Sums the per-sample Bernoulli relative entropy
    ``sigma_l (t_l - t_l') - (t_l - t_l') + log1pexp(-t_l') - log1pexp(-t_l)``
    over the dataset's covariates; the standard error treats the per-sample
    terms as i.i.d. draws.  ``analytic_upper`` is :func:`kl_upper_bound` at
    the dataset's size and covariate scale.
    """
    bl = np.asarray(B_l, dtype=float).ravel()
    blp = np.asarray(B_lp, dtype=float).ravel()
    t_l = dataset.X_flat @ bl
    t_lp = dataset.X_flat @ blp
    diff = t_l - t_lp
    terms = sigmoid(t_l) * diff - diff + softplus(-t_lp) - softplus(-t_l)
    n = dataset.n
    estimate = float(np.sum(terms))
    stderr = float(np.std(terms, ddof=1) * np.sqrt(n)) if n > 1 else 0.0
    upper = kl_upper_bound(B_l, B_lp, n, dataset.sigma)
    return KLReport(estimate, stderr, upper, n)


def kl_upper_bound(B_l, B_lp, n, sigma):
    """Closed-form ceiling ``n * sigma * ||B_l - B_l'||_F * sqrt(2/pi)`` (nats)."""
    if sigma <= 0:
        raise ValueError("need sigma > 0")
    delta = np.asarray(B_l, dtype=float) - np.asarray(B_lp, dtype=float)
    return float(n * sigma * np.linalg.norm(delta) * SQRT_2_OVER_PI)


def half_normal_check(B_l, B_lp, sigma, n_mc, seed):
    """Empirical vs analytic mean of ``|<X, B_l - B_l'>|`` over fresh covariates.

    The covariate draws depend only on (shape, sigma, n_mc, seed), so scaling
    the difference matrix scales the empirical mean pointwise.
    """
    if n_mc < 10_000:
        raise ValueError("need n_mc >= 10^4 for a meaningful check")
    delta = (np.asarray(B_l, dtype=float) - np.asarray(B_lp, dtype=float)).ravel()
    rng = substream(seed, TAG_HALF_NORMAL)
    total = 0.0
    remaining = int(n_mc)
    chunk = 20_000
    while remaining > 0:
        k = min(chunk, remaining)
        X = rng.standard_normal((k, delta.size)) * sigma
        total += float(np.sum(np.abs(X @ delta)))
        remaining -= k
    empirical = total / n_mc
    analytic = float(sigma * np.linalg.norm(delta) * SQRT_2_OVER_PI)
    return empirical, analytic


def cmi_upper_bound(epsilon, r, n, sigma):
    """Ceiling on the response/index conditional mutual information, in nats.

    ``n * (2/r) * sqrt(2/pi) * sigma * epsilon`` for a packing at scale
    ``epsilon``; linear in each of n, sigma, epsilon.
    """
    if r < 2:
        raise ValueError("need r >= 2")
    return float(n * (2.0 / r) * SQRT_2_OVER_PI * sigma * epsilon)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<qqqqqd")  # m1, m2, n, seed, truth_index(-1=none), sigma


def dataset_to_dict(ds):
    return {
        "m1": ds.shape[0],
        "m2": ds.shape[1],
        "n": ds.n,
        "sigma": ds.sigma,
        "seed": ds.seed,
        "truth_index": ds.truth_index,
        "X": [x.ravel() for x in ds.X],
        "y": ds.y,
    }


def dataset_from_dict(doc):
    m1, m2, n = int(doc["m1"]), int(doc["m2"]), int(doc["n"])
    X = np.asarray(doc["X"], dtype=float).reshape(n, m1, m2)
    y = np.asarray(doc["y"], dtype=np.uint8)
    X.setflags(write=False)
    y.setflags(write=False)
    idx = doc.get("truth_index")
    return Dataset(X=X, y=y, sigma=float(doc["sigma"]), seed=int(doc["seed"]),
                   truth_index=None if idx is None else int(idx))


def dataset_to_json(ds):
    return dumps_17g(dataset_to_dict(ds))


def save_dataset_json(path, ds):
    return write_json(path, dataset_to_dict(ds))


def load_dataset_json(path):
    return dataset_from_dict(read_json(path))


def dataset_to_bytes(ds):
    """Compact little-endian layout: int64 header, float64 sigma, X, y bytes."""
    m1, m2 = ds.shape
    idx = -1 if ds.truth_index is None else int(ds.truth_index)
    header = _HEADER.pack(m1, m2, ds.n, ds.seed, idx, ds.sigma)
    body = np.ascontiguousarray(ds.X, dtype="<f8").tobytes()
    return header + body + ds.y.astype(np.uint8).tobytes()


def dataset_from_bytes(buf):
    m1, m2, n, seed, idx, sigma = _HEADER.unpack_from(buf, 0)
    off = _HEADER.size
    nx = n * m1 * m2 * 8
    X = np.frombuffer(buf, dtype="<f8", count=n * m1 * m2, offset=off).reshape(n, m1, m2)
    y = np.frombuffer(buf, dtype=np.uint8, count=n, offset=off + nx)
    X = X.copy()
    y = y.copy()
    X.setflags(write=False)
    y.setflags(write=False)
    return Dataset(X=X, y=y, sigma=float(sigma), seed=int(seed),
                   truth_index=None if idx < 0 else int(idx))


def save_dataset_binary(path, ds):
    data = dataset_to_bytes(ds)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def load_dataset_binary(path):
    with open(path, "rb") as fh:
        return dataset_from_bytes(fh.read())
