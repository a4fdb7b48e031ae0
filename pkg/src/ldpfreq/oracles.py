"""Single-round LDP frequency oracles.

Implements the three classic protocols for one collection of one categorical
attribute:

    * GRR -- generalized randomized response (direct encoding),
    * SUE -- symmetric unary encoding (basic one-time RAPPOR),
    * OUE -- optimized unary encoding (p fixed at 1/2),

together with the shared unbiased frequency estimator, closed-form
approximate variances, and a brute-force privacy audit for explicit channel
tables.

All randomness is drawn from a caller-supplied ``numpy.random.Generator``;
nothing here touches global RNG state. Perturbation helpers accept either a
single category index or a 1-D array of indices and vectorize over the array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateChannel,
    DomainTooSmall,
    EmptyCollection,
    MalformedChannel,
    NonPositiveEpsilon,
    ValueOutOfDomain,
)

GRR = "grr"
SUE = "sue"
OUE = "oue"
SINGLE_ROUND_FAMILIES = (GRR, SUE, OUE)

#: Families whose reports are one-hot bit vectors rather than category indices.
UE_FAMILIES = (SUE, OUE)

_AUDIT_TOL = 1e-9


@dataclass(frozen=True)
class DomainSpec:
    """Ordered list of categorical attributes and their domain sizes.

    Each entry is a ``(name, k)`` pair; names must be unique and every
    domain size must be at least 2.
    """

    attributes: tuple[tuple[str, int], ...]

    def __post_init__(self):
        attrs = tuple((str(name), int(k)) for name, k in self.attributes)
        object.__setattr__(self, "attributes", attrs)
        names = [name for name, _ in attrs]
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique")
        for name, k in attrs:
            if k < 2:
                raise DomainTooSmall(f"attribute {name!r} has k={k}; need k >= 2")

    @property
    def d(self) -> int:
        return len(self.attributes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.attributes)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(k for _, k in self.attributes)

    def size(self, attr: int) -> int:
        return self.attributes[attr][1]


@dataclass(frozen=True)
class RoundParams:
    """One perturbation channel: family tag, its (p, q) pair and audited epsilon.

    ``k`` is the domain size for GRR and 0 for the unary-encoding families,
    whose probabilities do not depend on it. A noiseless channel may be
    constructed directly with p=1, q=0; its audited epsilon is infinite.
    """

    family: str
    p: float
    q: float
    eps: float
    k: int = 0

    def __post_init__(self):
        if self.family not in SINGLE_ROUND_FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not (0.0 <= self.q < self.p <= 1.0):
            raise ValueError(f"need 0 <= q < p <= 1, got p={self.p}, q={self.q}")
        if self.family == GRR:
            if self.k < 2:
                raise DomainTooSmall(f"GRR needs k >= 2, got {self.k}")
            if abs(self.q - (1.0 - self.p) / (self.k - 1)) > 1e-12:
                raise ValueError("GRR requires q = (1-p)/(k-1)")
        elif self.family == SUE:
            if abs(self.p + self.q - 1.0) > 1e-12:
                raise ValueError("SUE requires p + q = 1")
        elif self.family == OUE:
            if self.p != 0.5:
                raise ValueError("OUE requires p = 1/2")
        audited = audit_params(self)
        if math.isinf(audited) != math.isinf(self.eps) or (
            math.isfinite(audited) and abs(audited - self.eps) > _AUDIT_TOL
        ):
            raise ValueError(
                f"channel audits at eps={audited}, declared eps={self.eps}"
            )


def audit_params(params: RoundParams) -> float:
    """Privacy level of a parameterized channel (log-ratio form).

    GRR channels audit at ln(p/q); unary-encoding channels at
    ln(p(1-q) / ((1-p)q)), the worst case over the two bit positions in
    which two one-hot encodings differ.
    """
    if params.q == 0.0:
        return math.inf
    if params.family == GRR:
        return math.log(params.p / params.q)
    return ue_audit(params.p, params.q)


def make_params(family: str, eps: float, k: int = 0) -> RoundParams:
    """Build a channel's canonical (p, q) for a privacy budget.

    Args:
        family: one of GRR, SUE, OUE.
        eps: the privacy budget, strictly positive.
        k: the domain size; required (>= 2) for GRR, ignored otherwise.

    Returns:
        A validated RoundParams carrying the family's canonical pair.
    """
    if eps <= 0 or not math.isfinite(eps):
        raise NonPositiveEpsilon(f"eps must be positive and finite, got {eps}")
    if family == GRR:
        if k < 2:
            raise DomainTooSmall(f"GRR needs k >= 2, got {k}")
        p = math.exp(eps) / (math.exp(eps) + k - 1)
        q = (1.0 - p) / (k - 1)
        return RoundParams(GRR, p, q, eps, k)
    if family == SUE:
        half = math.exp(eps / 2.0)
        return RoundParams(SUE, half / (half + 1.0), 1.0 / (half + 1.0), eps)
    if family == OUE:
        return RoundParams(OUE, 0.5, 1.0 / (math.exp(eps) + 1.0), eps)
    raise ValueError(f"unknown family {family!r}")


def grr_perturb(values, p: float, k: int, rng: np.random.Generator):
    """Randomized response over k categories: keep with probability p,
    otherwise report one of the k-1 other values uniformly.

    ``values`` may be a scalar index or a 1-D integer array; the output
    matches the input shape.
    """
    v = np.asarray(values)
    if v.size and (v.min() < 0 or v.max() >= k):
        raise ValueOutOfDomain(f"values must lie in [0, {k})")
    keep = rng.random(v.shape) < p
    # a uniform offset in [1, k) walks to any other category with equal mass
    offset = rng.integers(1, k, size=v.shape)
    out = np.where(keep, v, (v + offset) % k)
    if np.isscalar(values) or v.ndim == 0:
        return int(out)
    return out.astype(np.int64)


def ue_encode(values, k: int) -> np.ndarray:
    """One-hot encode a category index (or array of them) into k bits."""
    v = np.asarray(values)
    if v.size and (v.min() < 0 or v.max() >= k):
        raise ValueOutOfDomain(f"values must lie in [0, {k})")
    if v.ndim == 0:
        bits = np.zeros(k, dtype=np.uint8)
        bits[int(v)] = 1
        return bits
    bits = np.zeros((v.size, k), dtype=np.uint8)
    bits[np.arange(v.size), v] = 1
    return bits


def ue_perturb(bits: np.ndarray, p: float, q: float, rng: np.random.Generator) -> np.ndarray:
    """Flip unary-encoded bits independently: a set bit stays 1 with
    probability p, a clear bit turns 1 with probability q."""
    bits = np.asarray(bits)
    probs = np.where(bits == 1, p, q)
    return (rng.random(bits.shape) < probs).astype(np.uint8)


def perturb(value, params: RoundParams, rng: np.random.Generator, k: int | None = None):
    """Sanitize one category index through a single-round channel.

    For GRR the report is another category index; for the unary-encoding
    families it is a k-bit 0/1 vector, where ``k`` must be supplied (the
    channel probabilities do not depend on it).
    """
    if params.family == GRR:
        return grr_perturb(value, params.p, params.k, rng)
    if k is None or k < 2:
        raise ValueOutOfDomain("unary encoding needs the domain size k >= 2")
    return ue_perturb(ue_encode(value, k), params.p, params.q, rng)


def estimate(counts, n, params: RoundParams) -> np.ndarray:
    """Unbiased frequency estimates from observed report counts.

    Args:
        counts: per-value report counts (per-bit one-counts for UE).
        n: total number of reports.
        params: the channel the reports were produced with.

    Returns:
        Raw estimates (N_i - n*q) / (n*(p - q)); they may be negative or
        exceed 1 and are deliberately not clipped here.
    """
    return _estimate_raw(counts, n, params.p, params.q)


def _estimate_raw(counts, n, p: float, q: float) -> np.ndarray:
    if n <= 0:
        raise EmptyCollection("no reports to estimate from")
    if p == q:
        raise DegenerateChannel("p == q carries no information")
    counts = np.asarray(counts, dtype=np.float64)
    return (counts - n * q) / (n * (p - q))


def approx_variance(p: float, q: float, n) -> float:
    """Estimator variance at true frequency 0: q(1-q) / (n (p-q)^2)."""
    if n <= 0:
        raise EmptyCollection("n must be positive")
    if p == q:
        raise DegenerateChannel("p == q carries no information")
    return q * (1.0 - q) / (n * (p - q) ** 2)


def theoretical_variance(family: str, eps: float, k: int, n) -> float:
    """Closed-form approximate variance of a family's estimator.

    Args:
        family: one of GRR, SUE, OUE.
        eps: privacy budget, strictly positive.
        k: domain size (GRR only).
        n: number of reports (may be fractional for budget analyses).
    """
    if eps <= 0:
        raise NonPositiveEpsilon(f"eps must be positive, got {eps}")
    if n <= 0:
        raise EmptyCollection("n must be positive")
    if family == GRR:
        if k < 2:
            raise DomainTooSmall(f"GRR needs k >= 2, got {k}")
        e = math.exp(eps)
        return (e + k - 2.0) / (n * (e - 1.0) ** 2)
    if family == SUE:
        e = math.exp(eps / 2.0)
        return e / (n * (e - 1.0) ** 2)
    if family == OUE:
        e = math.exp(eps)
        return 4.0 * e / (n * (e - 1.0) ** 2)
    raise ValueError(f"unknown family {family!r}")


def grr_channel(p: float, q: float, k: int) -> np.ndarray:
    """Explicit k x k output-given-input table of a GRR channel."""
    table = np.full((k, k), q, dtype=np.float64)
    np.fill_diagonal(table, p)
    return table


def ue_bit_channel(p: float, q: float) -> np.ndarray:
    """2 x 2 per-bit table of a UE channel; rows are input bit 0 and 1."""
    return np.array([[1.0 - q, q], [1.0 - p, p]], dtype=np.float64)


def ue_audit(p: float, q: float) -> float:
    """Privacy level of a UE channel over one-hot inputs.

    Two one-hot encodings differ in exactly two bit positions, so the worst
    output ratio is p(1-q) / ((1-p)q); the remaining bits cancel.
    """
    num = p * (1.0 - q)
    den = (1.0 - p) * q
    if num <= 0.0:
        raise DegenerateChannel("channel assigns no mass to the revealing output")
    if den == 0.0:
        return math.inf
    return math.log(num / den)


def ldp_audit(channel) -> float:
    """Worst-case log-ratio of an explicit channel table.

    Args:
        channel: 2-D array; rows are per-input output distributions.

    Returns:
        max over outputs y and input pairs (v1, v2) of ln(P[y|v1]/P[y|v2]).
        Outputs with zero probability under both inputs are skipped; an
        output possible under one input but not the other yields +inf.
    """
    table = np.asarray(channel, dtype=np.float64)
    if table.ndim != 2:
        raise MalformedChannel("channel must be a 2-D table")
    if np.any(table < 0.0):
        raise MalformedChannel("channel entries must be nonnegative")
    if np.any(np.abs(table.sum(axis=1) - 1.0) > 1e-9):
        raise MalformedChannel("channel rows must sum to 1")
    worst = 0.0
    rows = table.shape[0]
    for i in range(rows):
        for j in range(rows):
            if i == j:
                continue
            a, b = table[i], table[j]
            if np.any((a > 0.0) & (b == 0.0)):
                return math.inf
            both = (a > 0.0) & (b > 0.0)
            if both.any():
                worst = max(worst, float(np.max(np.log(a[both] / b[both]))))
    return worst
