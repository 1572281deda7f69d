"""Construction and certification of the rank-r hypothesis packing set.

The set is assembled from three seeded codebooks (one sign-vector codebook
driving the diagonal cores, two sign-matrix codebooks driving the left and
right orthonormal factors), a fixed family of random orthogonal bases, and
column-wise Gram-Schmidt orthonormalization.  Every element is stored in
factored form ``B = B1 @ diag(g) @ B2.T`` with orthonormal-column factors and
a nonnegative core, lives on the sphere of squared radius
``epsilon**2 / (r * (r - 1))``, and the whole set is certified by exhaustive
pairwise distance measurement rather than by the probabilistic existence
argument alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import (
    TAG_HYPERCUBE_MATRICES_LEFT,
    TAG_HYPERCUBE_MATRICES_RIGHT,
    TAG_HYPERCUBE_VECTORS,
    TAG_ORTHOGONAL_BASES,
    dumps_17g,
    read_json,
    substream,
    write_json,
)
from .errors import (
    CardinalityTooLarge,
    ConstructionFailed,
    DegenerateCardinality,
    EmptyRange,
    RankDeficient,
)

# Concentration constant (1 - 1/10)^2 shared by all codebook bounds.
C1 = (1.0 - 1.0 / 10.0) ** 2

ORTHONORMALITY_TOL = 1e-10
GRAM_SCHMIDT_TOL = 1e-8
ENERGY_TOL = 1e-10

# Default certification constant for the pairwise-distance lower bound
# min ||B_l - B_l'||_F^2 > kappa * epsilon**2 * r / (r - 1).
DEFAULT_KAPPA = 1.0 / 5.0

DEFAULT_MAX_ATTEMPTS = 64


# ---------------------------------------------------------------------------
# codebook cardinality arithmetic
# ---------------------------------------------------------------------------

def hamming_failure_bound_vectors(count, r):
    """Probability bound that some pair of the sign-vector codebook is too close.

    Returns ``exp(2*ln(count) - ln(2) - 0.5 * 0.81 * (r - 1))`` clipped to
    [0, 1]; values at 1.0 mean the bound is vacuous.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    if r < 2:
        raise ValueError("r must be >= 2")
    return min(1.0, _raw_vector_bound(count, r))


def hamming_failure_bound_matrices(count, m, r):
    """Analogous bound for the (m-1) x r sign-matrix codebook."""
    if count < 2:
        raise ValueError("count must be >= 2")
    if m < 2 or r < 1:
        raise ValueError("need m >= 2 and r >= 1")
    return min(1.0, _raw_matrix_bound(count, m, r))


def _raw_vector_bound(count, r):
    return math.exp(2.0 * math.log(count) - math.log(2.0) - 0.5 * C1 * (r - 1))


def _raw_matrix_bound(count, m, r):
    return math.exp(2.0 * math.log(count) - math.log(2.0) - 0.5 * C1 * (m - 1) * r)


@dataclass(frozen=True)
class MaxCardinalities:
    """Largest codebook sizes certified to coexist, plus the implied set size."""

    F_max: int
    P1_max: int
    P2_max: int
    L_max: int


def max_cardinalities(m1, m2, r):
    """Sufficient-condition cardinality caps for the three codebooks.

    Each cap is ``floor(2**(log2(e)/4 * 0.81 * bits - 0.5*log2(3/2)))`` with
    ``bits`` the number of sign entries in one codeword; ``L_max`` applies the
    corresponding floor expression to the full index set.  Raises
    :class:`DegenerateCardinality` (carrying the computed values) when any cap
    falls below 2.  These caps are far more conservative than the per-codebook
    existence check used by the samplers.
    """
    if m1 < 2 or m2 < 2:
        raise ValueError("need m1, m2 >= 2")
    if r < 2:
        raise ValueError("need r >= 2")
    scale = math.log2(math.e) / 4.0 * C1
    offset = 0.5 * math.log2(1.5)
    f_max = math.floor(2.0 ** (scale * (r - 1) - offset))
    p1_max = math.floor(2.0 ** (scale * (m1 - 1) * r - offset))
    p2_max = math.floor(2.0 ** (scale * (m2 - 1) * r - offset))
    exponent = (
        math.log2(math.e) / 4.0 * (C1 * r * (m1 + m2 - 1) + C1 * (r - 1))
        - 1.5 * math.log2(1.5)
    )
    l_max = 2 ** max(0, math.floor(exponent))
    values = MaxCardinalities(f_max, p1_max, p2_max, l_max)
    if min(f_max, p1_max, p2_max, l_max) < 2:
        raise DegenerateCardinality(
            f"cardinality caps {values} contain a value < 2 at "
            f"(m1={m1}, m2={m2}, r={r})",
            values=values,
        )
    return values


def epsilon_range(d, r):
    """Admissible open-low/closed-high range for the packing scale.

    ``lo = sqrt(8*(r-1)/r)`` and ``hi = d*sqrt((r-1)/r)``; raises
    :class:`EmptyRange` when ``lo >= hi`` (i.e. ``d <= sqrt(8)``).
    """
    if d <= 0:
        raise ValueError("d must be positive")
    if r < 2:
        raise ValueError("r must be >= 2")
    lo = math.sqrt(8.0 * (r - 1) / r)
    hi = d * math.sqrt((r - 1) / r)
    if lo >= hi:
        raise EmptyRange(f"no admissible epsilon for d={d}, r={r} (need d > sqrt(8))")
    return lo, hi


def auto_epsilon(d, r):
    """Geometric midpoint of the admissible scale range."""
    lo, hi = epsilon_range(d, r)
    return math.sqrt(lo * hi)


# ---------------------------------------------------------------------------
# codebooks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypercubeVectorSet:
    """Sign-vector codebook: ``vectors[k]`` has entries +-``entry_magnitude``."""

    vectors: np.ndarray  # (F, r-1)
    entry_magnitude: float
    seed: int


@dataclass(frozen=True)
class HypercubeMatrixSet:
    """Sign-matrix codebook: ``matrices[k]`` has entries +-``entry_magnitude``."""

    matrices: np.ndarray  # (P, m-1, r)
    entry_magnitude: float
    seed: int


def hamming_min(items):
    """Exact minimum pairwise Hamming distance and its argmin pair.

    ``items`` is a sequence (or leading-axis-stacked array) of equally shaped
    arrays; distance is the count of differing entries.  Brute force over all
    unordered pairs.
    """
    arr = np.asarray(items)
    if arr.shape[0] == 0:
        raise ValueError("empty set")
    best = None
    pair = None
    for i in range(arr.shape[0]):
        for j in range(i + 1, arr.shape[0]):
            dist = int(np.count_nonzero(arr[i] != arr[j]))
            if best is None or dist < best:
                best, pair = dist, (i, j)
    if best is None:  # single element: no pair to compare
        return 0, None
    return best, pair


def _ceil_div(a, b):
    return -(-a // b)


def _check_cardinality(count, raw_bound, what):
    # The minimal request (2) is always attempted: exhaustive validation plus
    # resampling covers the regimes where the concentration bound is vacuous.
    if count > 2 and raw_bound >= 1.0:
        raise CardinalityTooLarge(
            f"{what} cardinality {count} exceeds the existence condition "
            f"(failure-probability bound {raw_bound:.3g} >= 1)"
        )


def sample_hypercube_vectors(count, r, seed, max_attempts=DEFAULT_MAX_ATTEMPTS):
    """Draw ``count`` sign vectors of length r-1 with certified separation.

    Entries are i.i.d. uniform over ``{-1, +1}/sqrt(r-1)``.  The whole set is
    resampled from a fresh substream until every pair has Hamming distance at
    least ``ceil((r-1)/20)``, up to ``max_attempts`` times.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    if r < 2:
        raise ValueError("r must be >= 2")
    _check_cardinality(count, _raw_vector_bound(count, r), "sign-vector")
    magnitude = 1.0 / math.sqrt(r - 1)
    threshold = _ceil_div(r - 1, 20)
    for attempt in range(max_attempts):
        rng = substream(seed, TAG_HYPERCUBE_VECTORS, attempt)
        signs = rng.integers(0, 2, size=(count, r - 1)) * 2 - 1
        vectors = signs * magnitude
        dist, _ = hamming_min(vectors)
        if dist >= threshold:
            vectors.setflags(write=False)
            return HypercubeVectorSet(vectors, magnitude, int(seed))
    raise ConstructionFailed(
        f"sign-vector codebook failed validation {max_attempts} times "
        f"(count={count}, r={r}, threshold={threshold})",
        attempts=max_attempts,
    )


def sample_hypercube_matrices(count, m, r, seed, max_attempts=DEFAULT_MAX_ATTEMPTS,
                              _tag=TAG_HYPERCUBE_MATRICES_LEFT):
    """Draw ``count`` sign matrices of shape (m-1, r) with certified separation.

    Alphabet ``+-1/sqrt((m-1)*r)``; entry-wise Hamming threshold
    ``ceil((m-1)*r/20)``.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    if m < 2 or r < 1:
        raise ValueError("need m >= 2 and r >= 1")
    _check_cardinality(count, _raw_matrix_bound(count, m, r), "sign-matrix")
    magnitude = 1.0 / math.sqrt((m - 1) * r)
    threshold = _ceil_div((m - 1) * r, 20)
    for attempt in range(max_attempts):
        rng = substream(seed, _tag, attempt)
        signs = rng.integers(0, 2, size=(count, m - 1, r)) * 2 - 1
        matrices = signs * magnitude
        dist, _ = hamming_min(matrices)
        if dist >= threshold:
            matrices.setflags(write=False)
            return HypercubeMatrixSet(matrices, magnitude, int(seed))
    raise ConstructionFailed(
        f"sign-matrix codebook failed validation {max_attempts} times "
        f"(count={count}, m={m}, r={r}, threshold={threshold})",
        attempts=max_attempts,
    )


# ---------------------------------------------------------------------------
# bases, cores and factors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrthogonalBases:
    """Seeded random orthogonal bases: Q (r x r), U1[j] (m1 x m1), U2[j] (m2 x m2)."""

    Q: np.ndarray
    U1: np.ndarray  # (r, m1, m1)
    U2: np.ndarray  # (r, m2, m2)
    seed: int


def _random_orthogonal(rng, n):
    # QR of a Gaussian square matrix; fixing the sign of diag(R) makes the
    # factorization unique, hence bitwise deterministic per stream.
    while True:
        g = rng.standard_normal((n, n))
        q, rr = np.linalg.qr(g)
        diag = np.diag(rr)
        if np.any(diag == 0.0):  # singular draw; probability ~0
            continue
        q = q * np.sign(diag)
        if orthonormality_residual(q) <= ORTHONORMALITY_TOL:
            return q


def orthonormality_residual(m):
    """Max-entry deviation of ``m.T @ m`` from the identity."""
    m = np.asarray(m)
    gram = m.T @ m
    return float(np.max(np.abs(gram - np.eye(m.shape[1]))))


def sample_orthogonal_bases(m1, m2, r, seed):
    """Deterministic random orthogonal bases for the packing construction.

    One r x r basis for the cores plus r bases of each of R^m1 and R^m2 (one
    per factor column).  Identity bases are deliberately avoided: the
    absolute value applied to the cores would collapse all of them to a
    single point under the trivial basis.
    """
    if min(m1, m2, r) < 1:
        raise ValueError("dimensions must be positive")
    rng = substream(seed, TAG_ORTHOGONAL_BASES)
    q = _random_orthogonal(rng, r)
    u1 = np.stack([_random_orthogonal(rng, m1) for _ in range(r)])
    u2 = np.stack([_random_orthogonal(rng, m2) for _ in range(r)])
    for arr in (q, u1, u2):
        arr.setflags(write=False)
    return OrthogonalBases(q, u1, u2, int(seed))


def build_core(s, Q, epsilon):
    """Diagonal core matrix from one sign vector.

    Rotates ``[sqrt(1/(r-1)); s]`` by ``Q``, takes entry-wise absolute values
    (the core must be nonnegative) and scales by ``epsilon / r``.  The
    returned r x r diagonal matrix has squared Frobenius norm
    ``epsilon**2 / (r * (r - 1))``.
    """
    Q = np.asarray(Q, dtype=float)
    r = Q.shape[0]
    s = np.asarray(s, dtype=float)
    if s.shape != (r - 1,):
        raise ValueError(f"sign vector must have length {r - 1}")
    head = math.sqrt(1.0 / (r - 1))
    rotated = Q @ np.concatenate(([head], s))
    return np.diag((epsilon / r) * np.abs(rotated))


def build_factor(s_matrix, u_bases):
    """Orthonormal-column factor from one sign matrix.

    Column j of the pre-factor is ``u_bases[j] @ [1; s_matrix[:, j]]`` (each
    with squared norm (r+1)/r); the output is the Gram-Schmidt
    orthonormalization of those columns in order.

    Raises :class:`RankDeficient` if any Gram-Schmidt residual norm falls
    below 1e-8 (the caller is expected to resample the bases).
    """
    s_matrix = np.asarray(s_matrix, dtype=float)
    m = s_matrix.shape[0] + 1
    r = s_matrix.shape[1]
    if r > m:
        raise ValueError("rank exceeds the factor's ambient dimension")
    if len(u_bases) < r:
        raise ValueError(f"need {r} orthogonal bases, got {len(u_bases)}")
    pre = np.empty((m, r))
    for j in range(r):
        pre[:, j] = u_bases[j] @ np.concatenate(([1.0], s_matrix[:, j]))
    out = np.empty_like(pre)
    out[:, 0] = pre[:, 0] / np.linalg.norm(pre[:, 0])
    for j in range(1, r):
        residual = pre[:, j] - out[:, :j] @ (out[:, :j].T @ pre[:, j])
        norm = np.linalg.norm(residual)
        if norm < GRAM_SCHMIDT_TOL:
            raise RankDeficient(
                f"Gram-Schmidt residual {norm:.3g} below {GRAM_SCHMIDT_TOL} "
                f"at column {j}"
            )
        out[:, j] = residual / norm
    return out


# ---------------------------------------------------------------------------
# packing set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RankRFactorization:
    """One hypothesis in factored form ``B1 @ diag(g) @ B2.T``."""

    B1: np.ndarray  # (m1, r), orthonormal columns
    g_diag: np.ndarray  # (r,), nonnegative
    B2: np.ndarray  # (m2, r), orthonormal columns
    f: int
    p1: int
    p2: int

    def dense(self):
        return (self.B1 * self.g_diag) @ self.B2.T

    @property
    def G(self):
        return np.diag(self.g_diag)


@dataclass(frozen=True)
class PackingSet:
    """A certified collection of separated rank-r hypotheses."""

    elements: tuple
    m1: int
    m2: int
    r: int
    d: float
    epsilon: float
    kappa: float
    seed: int
    min_pairwise_sq: float
    max_pairwise_sq: float

    def __len__(self):
        return len(self.elements)

    def dense_elements(self):
        return [el.dense() for el in self.elements]

    @property
    def energy_target(self):
        return self.epsilon**2 / (self.r * (self.r - 1))

    def distance_floor(self, kappa=None):
        k = self.kappa if kappa is None else kappa
        return k * self.epsilon**2 * self.r / (self.r - 1)

    def distance_ceiling(self):
        return 4.0 * self.epsilon**2 * self.r / (self.r - 1)


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of the exhaustive packing checks, with worst offenders."""

    passed: bool
    kappa: float
    min_required: float
    max_allowed: float
    min_pairwise_sq: float
    max_pairwise_sq: float
    closest_pair: tuple
    farthest_pair: tuple
    energy_target: float
    max_energy_deviation: float
    worst_energy_element: int
    max_orthonormality_residual: float
    checks: dict
    failures: tuple

    def to_dict(self):
        return {
            "passed": self.passed,
            "kappa": self.kappa,
            "min_required": self.min_required,
            "max_allowed": self.max_allowed,
            "min_pairwise_sq": self.min_pairwise_sq,
            "max_pairwise_sq": self.max_pairwise_sq,
            "closest_pair": list(self.closest_pair),
            "farthest_pair": list(self.farthest_pair),
            "energy_target": self.energy_target,
            "max_energy_deviation": self.max_energy_deviation,
            "worst_energy_element": self.worst_energy_element,
            "max_orthonormality_residual": self.max_orthonormality_residual,
            "checks": dict(self.checks),
            "failures": list(self.failures),
        }


def pairwise_sq_distances(dense_list):
    """All pairwise squared Frobenius distances as ((i, j), value) pairs."""
    out = []
    for i in range(len(dense_list)):
        for j in range(i + 1, len(dense_list)):
            out.append(((i, j), float(np.sum((dense_list[i] - dense_list[j]) ** 2))))
    return out


def verify_packing(packing, kappa=None):
    """Exhaustively certify a packing set.

    Recomputes every pairwise squared distance from the dense forms and
    checks, in order: at least two elements with distinct index tuples,
    per-element energy within tolerance of the target and inside the ball,
    factor orthonormality, nonnegative cores, the distance floor
    ``kappa * epsilon**2 * r / (r-1)`` (strict) and the distance ceiling
    ``4 * epsilon**2 * r / (r-1)``.  Never raises; the report carries the
    failures.
    """
    kappa = packing.kappa if kappa is None else float(kappa)
    eps, r = packing.epsilon, packing.r
    min_required = kappa * eps**2 * r / (r - 1)
    max_allowed = 4.0 * eps**2 * r / (r - 1)
    energy_target = packing.energy_target

    failures = []
    checks = {}

    n = len(packing.elements)
    checks["count"] = n >= 2
    if not checks["count"]:
        failures.append(f"need at least 2 elements, have {n}")

    tuples = [(el.f, el.p1, el.p2) for el in packing.elements]
    checks["distinct_indices"] = len(set(tuples)) == n
    if not checks["distinct_indices"]:
        failures.append("duplicate (f, p1, p2) index tuples")

    dense = packing.dense_elements()
    energies = np.array([float(np.sum(b * b)) for b in dense])
    deviations = np.abs(energies - energy_target)
    worst_el = int(np.argmax(deviations)) if n else 0
    checks["energy_matches"] = bool(np.all(deviations <= ENERGY_TOL * (1.0 + energy_target)))
    if not checks["energy_matches"]:
        failures.append(
            f"element {worst_el} energy {energies[worst_el]:.17g} deviates from "
            f"target {energy_target:.17g} by {deviations[worst_el]:.3g}"
        )
    checks["energy_in_ball"] = bool(np.all(energies < packing.d**2))
    if not checks["energy_in_ball"]:
        worst = int(np.argmax(energies))
        failures.append(f"element {worst} energy {energies[worst]:.6g} >= d^2")

    residual = 0.0
    for el in packing.elements:
        residual = max(
            residual,
            orthonormality_residual(el.B1),
            orthonormality_residual(el.B2),
        )
    checks["orthonormal_factors"] = residual <= ORTHONORMALITY_TOL
    if not checks["orthonormal_factors"]:
        failures.append(f"factor orthonormality residual {residual:.3g} > {ORTHONORMALITY_TOL}")

    checks["core_nonnegative"] = all(np.all(el.g_diag >= 0.0) for el in packing.elements)
    if not checks["core_nonnegative"]:
        failures.append("negative core entry")

    dists = pairwise_sq_distances(dense)
    if dists:
        closest = min(dists, key=lambda kv: kv[1])
        farthest = max(dists, key=lambda kv: kv[1])
    else:
        closest = farthest = ((0, 0), float("nan"))
    checks["min_distance"] = bool(dists) and closest[1] > min_required
    if not checks["min_distance"]:
        failures.append(
            f"min pairwise squared distance {closest[1]:.6g} at pair {closest[0]} "
            f"not above required {min_required:.6g}"
        )
    checks["max_distance"] = bool(dists) and farthest[1] <= max_allowed
    if not checks["max_distance"]:
        failures.append(
            f"max pairwise squared distance {farthest[1]:.6g} at pair {farthest[0]} "
            f"exceeds {max_allowed:.6g}"
        )

    return VerificationReport(
        passed=not failures,
        kappa=kappa,
        min_required=min_required,
        max_allowed=max_allowed,
        min_pairwise_sq=closest[1],
        max_pairwise_sq=farthest[1],
        closest_pair=closest[0],
        farthest_pair=farthest[0],
        energy_target=energy_target,
        max_energy_deviation=float(np.max(deviations)) if n else float("nan"),
        worst_energy_element=worst_el,
        max_orthonormality_residual=residual,
        checks=checks,
        failures=tuple(failures),
    )


def _default_factor_count(m, r):
    # Largest codebook size whose failure bound stays below 1, clamped to the
    # desk-scale window [2, 4].
    cap = math.sqrt(2.0) * math.exp(0.25 * C1 * (m - 1) * r)
    return int(min(4, max(2, math.floor(cap))))


def assemble_packing(
    m1,
    m2,
    r,
    d,
    epsilon=None,
    seed=0,
    max_attempts=DEFAULT_MAX_ATTEMPTS,
    *,
    num_cores=2,
    num_left_factors=None,
    num_right_factors=None,
    kappa=DEFAULT_KAPPA,
):
    """Build and certify a packing set.

    ``epsilon=None`` selects the geometric midpoint of the admissible range.
    Codebook sizes default to 2 cores and up to 4 factors per side, giving a
    desk-scale set whose exhaustive verification is cheap.  Each attempt
    redraws the orthogonal bases; every second attempt also redraws the
    codebooks.  Raises :class:`ConstructionFailed` when no attempt passes
    :func:`verify_packing` at the given ``kappa``.
    """
    if r < 2:
        raise DegenerateCardinality(
            f"rank {r} < 2: the sign-vector codebook dimension r-1 vanishes"
        )
    if min(m1, m2) < 2:
        raise ValueError("need m1, m2 >= 2")
    if r > min(m1, m2):
        raise ValueError("need r <= min(m1, m2)")
    lo, hi = epsilon_range(d, r)
    if epsilon is None:
        epsilon = math.sqrt(lo * hi)
    if not (lo < epsilon <= hi):
        raise ValueError(
            f"epsilon={epsilon} outside the admissible range ({lo:.6g}, {hi:.6g}]"
        )
    if num_left_factors is None:
        num_left_factors = _default_factor_count(m1, r)
    if num_right_factors is None:
        num_right_factors = _default_factor_count(m2, r)

    last_report = None
    for attempt in range(max_attempts):
        codebook_round = attempt // 2
        try:
            svec = sample_hypercube_vectors(
                num_cores, r, substream(seed, TAG_HYPERCUBE_VECTORS, codebook_round).integers(2**63)
            )
            smat1 = sample_hypercube_matrices(
                num_left_factors, m1, r,
                substream(seed, TAG_HYPERCUBE_MATRICES_LEFT, codebook_round).integers(2**63),
                _tag=TAG_HYPERCUBE_MATRICES_LEFT,
            )
            smat2 = sample_hypercube_matrices(
                num_right_factors, m2, r,
                substream(seed, TAG_HYPERCUBE_MATRICES_RIGHT, codebook_round).integers(2**63),
                _tag=TAG_HYPERCUBE_MATRICES_RIGHT,
            )
            bases = sample_orthogonal_bases(
                m1, m2, r, substream(seed, TAG_ORTHOGONAL_BASES, attempt).integers(2**63)
            )
            cores = [np.diag(build_core(svec.vectors[f], bases.Q, epsilon))
                     for f in range(num_cores)]
            left = [build_factor(smat1.matrices[p], bases.U1)
                    for p in range(num_left_factors)]
            right = [build_factor(smat2.matrices[p], bases.U2)
                     for p in range(num_right_factors)]
        except (RankDeficient, ConstructionFailed):
            continue

        elements = []
        for f in range(num_cores):
            for p1 in range(num_left_factors):
                for p2 in range(num_right_factors):
                    b1, b2, g = left[p1], right[p2], cores[f]
                    for arr in (b1, b2, g):
                        arr.setflags(write=False)
                    elements.append(RankRFactorization(b1, g, b2, f, p1, p2))
        candidate = PackingSet(
            elements=tuple(elements),
            m1=int(m1),
            m2=int(m2),
            r=int(r),
            d=float(d),
            epsilon=float(epsilon),
            kappa=float(kappa),
            seed=int(seed),
            min_pairwise_sq=float("nan"),
            max_pairwise_sq=float("nan"),
        )
        report = verify_packing(candidate, kappa)
        last_report = report
        if report.passed:
            packing = PackingSet(
                elements=candidate.elements,
                m1=candidate.m1,
                m2=candidate.m2,
                r=candidate.r,
                d=candidate.d,
                epsilon=candidate.epsilon,
                kappa=candidate.kappa,
                seed=candidate.seed,
                min_pairwise_sq=report.min_pairwise_sq,
                max_pairwise_sq=report.max_pairwise_sq,
            )
            return packing, report
    raise ConstructionFailed(
        f"packing failed verification in {max_attempts} attempts "
        f"(kappa={kappa}; last failures: {list(last_report.failures) if last_report else '?'})",
        report=last_report,
        attempts=max_attempts,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def packing_to_dict(packing):
    return {
        "m1": packing.m1,
        "m2": packing.m2,
        "r": packing.r,
        "d": packing.d,
        "epsilon": packing.epsilon,
        "kappa": packing.kappa,
        "seed": packing.seed,
        "elements": [
            {
                "f": el.f,
                "p1": el.p1,
                "p2": el.p2,
                "B1": el.B1.ravel(),
                "G_diag": el.g_diag,
                "B2": el.B2.ravel(),
            }
            for el in packing.elements
        ],
        "min_pairwise_sq": packing.min_pairwise_sq,
        "max_pairwise_sq": packing.max_pairwise_sq,
    }


def packing_from_dict(doc):
    m1, m2, r = int(doc["m1"]), int(doc["m2"]), int(doc["r"])
    elements = []
    for entry in doc["elements"]:
        b1 = np.asarray(entry["B1"], dtype=float).reshape(m1, r)
        b2 = np.asarray(entry["B2"], dtype=float).reshape(m2, r)
        g = np.asarray(entry["G_diag"], dtype=float)
        for arr in (b1, b2, g):
            arr.setflags(write=False)
        elements.append(
            RankRFactorization(b1, g, b2, int(entry["f"]), int(entry["p1"]), int(entry["p2"]))
        )
    return PackingSet(
        elements=tuple(elements),
        m1=m1,
        m2=m2,
        r=r,
        d=float(doc["d"]),
        epsilon=float(doc["epsilon"]),
        kappa=float(doc["kappa"]),
        seed=int(doc["seed"]),
        min_pairwise_sq=float(doc["min_pairwise_sq"]),
        max_pairwise_sq=float(doc["max_pairwise_sq"]),
    )


def packing_to_json(packing):
    return dumps_17g(packing_to_dict(packing))


def save_packing(path, packing):
    return write_json(path, packing_to_dict(packing))


def load_packing(path):
    return packing_from_dict(read_json(path))
