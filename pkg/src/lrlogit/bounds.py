"""Closed-form risk-floor arithmetic: constants, Fano inequality, scale maps.

All mutual-information quantities are kept in nats internally and reported in
bits where the Fano side of the sandwich lives; the risk floor itself is in
Frobenius-norm units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import cmi_upper_bound

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

DEFAULT_DECODER_ERROR = 1.0 / math.sqrt(2.0)

VARIANT_THEOREM = "theorem"   # exponent term r*(m1 + m2 - 2)
VARIANT_APPENDIX = "appendix"  # exponent term r*(m1 + m2 - 1)
VARIANTS = (VARIANT_THEOREM, VARIANT_APPENDIX)


def bound_constants():
    """The three constants (c1, c2, c3) of the risk-floor formula."""
    c1 = (1.0 - 1.0 / 10.0) ** 2
    c2 = math.log2(math.e) * (math.sqrt(2.0) - 1.0) / (4.0 * math.sqrt(2.0))
    c3 = (3.0 * (math.sqrt(2.0) - 1.0) / math.sqrt(8.0)) * math.log2(1.5)
    return c1, c2, c3


@dataclass(frozen=True)
class BoundInputs:
    """Problem parameters feeding the minimax risk floor."""

    m1: int
    m2: int
    r: int
    n: int
    sigma: float
    variant: str = VARIANT_THEOREM

    def __post_init__(self):
        if self.m1 < 2 or self.m2 < 2:
            raise ValueError("need m1, m2 >= 2")
        if not (2 <= self.r <= min(self.m1, self.m2)):
            raise ValueError("need 2 <= r <= min(m1, m2)")
        if self.n < 1:
            raise ValueError("need n >= 1")
        if self.sigma <= 0:
            raise ValueError("need sigma > 0")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")


@dataclass(frozen=True)
class MinimaxBound:
    """Risk floor in Frobenius units; ``vacuous`` means the numerator was <= 0."""

    value: float
    vacuous: bool
    numerator: float


def minimax_lower_bound(inputs):
    """Evaluate the minimax risk floor.

    ``([c2*(c1*r*(m1+m2-2) + c1*(r-1)) - c3] - 1) / (8*n*sigma*sqrt(2/pi))``
    (the ``appendix`` variant replaces m1+m2-2 by m1+m2-1).  A nonpositive
    numerator is reported as value 0 with the vacuous flag set.
    """
    c1, c2, c3 = bound_constants()
    span = inputs.m1 + inputs.m2 - (2 if inputs.variant == VARIANT_THEOREM else 1)
    numerator = (c2 * (c1 * inputs.r * span + c1 * (inputs.r - 1)) - c3) - 1.0
    if numerator <= 0.0:
        return MinimaxBound(0.0, True, numerator)
    value = numerator / (8.0 * inputs.n * inputs.sigma * SQRT_2_OVER_PI)
    return MinimaxBound(value, False, numerator)


@dataclass(frozen=True)
class PackingCardinality:
    """Floored log2 set sizes under both exponent conventions."""

    log2_appendix: int
    log2_theorem: int
    exponent_appendix: float
    exponent_theorem: float


def packing_log_cardinality(m1, m2, r):
    """Floored base-2 log of the certified packing cardinality.

    The ``appendix`` exponent uses r*(m1+m2-1); the theorem-consistent one
    uses r*(m1+m2-2).  Their pre-floor difference is exactly
    ``log2(e)/4 * 0.81 * r``.
    """
    if m1 < 2 or m2 < 2 or r < 2:
        raise ValueError("need m1, m2, r >= 2")
    c1, _, _ = bound_constants()
    scale = math.log2(math.e) / 4.0
    offset = 1.5 * math.log2(1.5)
    exp_app = scale * (c1 * r * (m1 + m2 - 1) + c1 * (r - 1)) - offset
    exp_thm = scale * (c1 * r * (m1 + m2 - 2) + c1 * (r - 1)) - offset
    return PackingCardinality(
        log2_appendix=math.floor(exp_app),
        log2_theorem=math.floor(exp_thm),
        exponent_appendix=exp_app,
        exponent_theorem=exp_thm,
    )


@dataclass(frozen=True)
class FanoInputs:
    """Hypothesis count and decoder error probability for the Fano floor."""

    L: int
    p_err: float

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("need L >= 2")
        if not (0.0 <= self.p_err < 1.0):
            raise ValueError("need 0 <= p_err < 1")


def fano_lower_bound(fano):
    """Information floor ``(1 - p_err) * log2(L) - 1`` in bits."""
    return (1.0 - fano.p_err) * math.log2(fano.L) - 1.0


def delta_epsilon(r, epsilon):
    """Map the packing scale to (separation level delta, risk target eps_star).

    ``delta = epsilon**2 * r / (8 * (r - 1))`` and ``eps_star = sqrt(delta)``;
    ``8 * delta`` is the certified pairwise squared-distance floor at kappa=1.
    """
    if r < 2:
        raise ValueError("need r >= 2")
    if epsilon <= 0:
        raise ValueError("need epsilon > 0")
    delta = epsilon**2 * r / (8.0 * (r - 1))
    return delta, math.sqrt(delta)


@dataclass(frozen=True)
class SandwichReport:
    """Two-sided check on the conditional mutual information, in bits."""

    u1_bits: float
    u2_bits: float
    u2_nats: float
    consistent: bool
    binding: str
    L: int
    p_err: float


def sandwich_check(packing, n, sigma, p_err=DEFAULT_DECODER_ERROR):
    """Compare the Fano floor u1 against the divergence ceiling u2.

    u1 uses the packing's actual cardinality and the decoder error bound
    ``1/sqrt(2)``; u2 converts :func:`cmi_upper_bound` to bits.  ``consistent``
    means u1 <= u2, the inequality the risk floor inverts; ``binding`` names
    the smaller side.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if sigma <= 0:
        raise ValueError("need sigma > 0")
    L = len(packing)
    u1 = fano_lower_bound(FanoInputs(L=L, p_err=p_err))
    u2_nats = cmi_upper_bound(packing.epsilon, packing.r, n, sigma)
    u2_bits = u2_nats * math.log2(math.e)
    return SandwichReport(
        u1_bits=u1,
        u2_bits=u2_bits,
        u2_nats=u2_nats,
        consistent=u1 <= u2_bits,
        binding="fano" if u1 <= u2_bits else "divergence",
        L=L,
        p_err=p_err,
    )
