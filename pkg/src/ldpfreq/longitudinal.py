"""Two-round memoization protocols for longitudinal collection.

A client first sanitizes its value once with a strong channel (p1, q1) and
memoizes the result; every subsequent report re-perturbs that memoized value
with a weaker channel (p2, q2). The memoized round bounds what any number of
reports can reveal (eps_inf) while each single report satisfies a lower
eps_1. Five protocols are supported, named by their (round-1, round-2)
building blocks:

    l-grr    GRR twice (small domains),
    l-sue    SUE twice (basic RAPPOR with memoization),
    l-oue    OUE twice,
    l-osue   OUE then SUE,
    l-soue   SUE then OUE.

Given a budget pair (eps_inf, eps_1), round 1 is fixed by eps_inf and the
round-2 pair is solved so the composed single-report channel lands exactly
on eps_1. The symmetric-round-2 protocols admit closed forms; the fixed
p2 = 1/2 protocols reduce to a quadratic in q2 and are only feasible while
eps_1 stays below a supremum determined by round 1 (InfeasibleBudget
otherwise -- the budget is never clamped silently).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import oracles
from .errors import (
    DegenerateChannel,
    DomainTooSmall,
    EmptyCollection,
    InfeasibleBudget,
    ValueOutOfDomain,
)

L_GRR = "l-grr"
L_SUE = "l-sue"
L_OUE = "l-oue"
L_OSUE = "l-osue"
L_SOUE = "l-soue"
LONGITUDINAL_FAMILIES = (L_GRR, L_SUE, L_OUE, L_OSUE, L_SOUE)

#: Families that report one-hot bit vectors.
UE_FAMILIES = (L_SUE, L_OUE, L_OSUE, L_SOUE)

_AUDIT_TOL = 1e-9
_STRUCT_TOL = 1e-12


@dataclass(frozen=True)
class BudgetPair:
    """Longitudinal privacy budget: eps_inf bounds what infinitely many
    reports reveal, eps_1 bounds a single report; 0 < eps_1 < eps_inf."""

    eps_inf: float
    eps_1: float

    def __post_init__(self):
        if not (0.0 < self.eps_1 < self.eps_inf) or not math.isfinite(self.eps_inf):
            raise ValueError(
                f"need 0 < eps_1 < eps_inf, got eps_1={self.eps_1}, eps_inf={self.eps_inf}"
            )


@dataclass(frozen=True)
class LongitudinalParams:
    """The four channel probabilities of a two-round protocol.

    ``k`` is the domain size: it determines q1/q2 for l-grr and is carried
    for the unary-encoding families so clients know the payload length
    (0 when unknown). When ``budget`` is present the parameters are audited
    against it on construction; ``budget=None`` marks a raw channel tuple
    (used e.g. for identity-channel checks) that skips the epsilon audits
    but keeps the structural ones.
    """

    family: str
    p1: float
    q1: float
    p2: float
    q2: float
    k: int = 0
    budget: BudgetPair | None = None

    def __post_init__(self):
        if self.family not in LONGITUDINAL_FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        for name, prob in (("p1", self.p1), ("q1", self.q1), ("p2", self.p2), ("q2", self.q2)):
            if not (0.0 <= prob <= 1.0):
                raise ValueError(f"{name}={prob} outside [0, 1]")
        if self.p1 == self.q1 or self.p2 == self.q2:
            raise DegenerateChannel("a round with p == q carries no information")
        self._check_structure()
        if self.budget is not None:
            self._check_audits()

    def _check_structure(self):
        f = self.family
        if f == L_GRR:
            if self.k < 2:
                raise DomainTooSmall(f"l-grr needs k >= 2, got {self.k}")
            if abs(self.q1 - (1.0 - self.p1) / (self.k - 1)) > _STRUCT_TOL:
                raise ValueError("l-grr requires q1 = (1-p1)/(k-1)")
            if abs(self.q2 - (1.0 - self.p2) / (self.k - 1)) > _STRUCT_TOL:
                raise ValueError("l-grr requires q2 = (1-p2)/(k-1)")
            return
        if f in (L_OSUE, L_OUE) and abs(self.p1 - 0.5) > _STRUCT_TOL:
            raise ValueError(f"{f} starts with an OUE round: p1 = 1/2")
        if f in (L_SUE, L_SOUE) and abs(self.p1 + self.q1 - 1.0) > _STRUCT_TOL:
            raise ValueError(f"{f} starts with an SUE round: p1 + q1 = 1")
        if f in (L_SUE, L_OSUE) and abs(self.p2 + self.q2 - 1.0) > _STRUCT_TOL:
            raise ValueError(f"{f} ends with an SUE round: p2 + q2 = 1")
        if f in (L_OUE, L_SOUE) and abs(self.p2 - 0.5) > _STRUCT_TOL:
            raise ValueError(f"{f} ends with an OUE round: p2 = 1/2")

    def _check_audits(self):
        if self.family == L_GRR:
            round1 = math.log(self.p1 / self.q1)
        else:
            round1 = oracles.ue_audit(self.p1, self.q1)
        if abs(round1 - self.budget.eps_inf) > _AUDIT_TOL:
            raise ValueError(
                f"round 1 audits at {round1}, declared eps_inf={self.budget.eps_inf}"
            )
        single = eps1_of(self.family, self.p1, self.q1, self.p2, self.q2, self.k)
        if abs(single - self.budget.eps_1) > _AUDIT_TOL:
            raise ValueError(
                f"single report audits at {single}, declared eps_1={self.budget.eps_1}"
            )


@dataclass(frozen=True)
class MemoState:
    """A client's permanent memoized round-1 output plus the protocol that
    produced it. ``memoized`` is a category index (l-grr) or a read-only
    k-bit array (unary-encoding families); it never changes once created."""

    family: str
    memoized: int | np.ndarray
    params: LongitudinalParams


def composed_probs(family: str, p1: float, q1: float, p2: float, q2: float) -> tuple[float, float]:
    """(p_s, q_s) of the end-to-end single-report channel.

    For l-grr this is the binary probability-tree form (true value kept vs
    switched); for the UE families it is the per-bit composition.
    """
    if family == L_GRR:
        return p1 * p2 + q1 * q2, p1 * q2 + q1 * p2
    return p1 * p2 + (1.0 - p1) * q2, q1 * p2 + (1.0 - q1) * q2


def eps1_of(family: str, p1: float, q1: float, p2: float, q2: float, k: int = 0) -> float:
    """Single-report privacy level of a two-round protocol.

    l-grr: ln((p1 p2 + q1 q2) / (p1 q2 + q1 p2)). UE families:
    ln(p_s(1-q_s) / ((1-p_s) q_s)) with the per-bit composed pair.
    Numerator and denominator are each formed before the one logarithm.
    """
    ps, qs = composed_probs(family, p1, q1, p2, q2)
    if family == L_GRR:
        num, den = ps, qs
    else:
        num, den = ps * (1.0 - qs), (1.0 - ps) * qs
    if num <= 0.0:
        raise DegenerateChannel("composed channel assigns no mass to the revealing output")
    if den == 0.0:
        return math.inf
    return math.log(num / den)


def round_one_params(family: str, eps_inf: float, k: int = 0) -> tuple[float, float]:
    """The memoization round's (p1, q1) for a family at eps_inf."""
    if family == L_GRR:
        rp = oracles.make_params(oracles.GRR, eps_inf, k)
    elif family in (L_OSUE, L_OUE):
        rp = oracles.make_params(oracles.OUE, eps_inf)
    else:
        rp = oracles.make_params(oracles.SUE, eps_inf)
    return rp.p, rp.q


def eps1_ceiling(family: str, eps_inf: float) -> float:
    """Supremum of reachable eps_1 for the fixed p2 = 1/2 protocols.

    As q2 -> 0 the composed channel tends to (p1/2, q1/2), giving
    ln(p1(2-q1) / (q1(2-p1))); budgets at or above it are infeasible.
    Families with a symmetric second round can reach any eps_1 < eps_inf.
    """
    if family not in (L_OUE, L_SOUE):
        return eps_inf
    p1, q1 = round_one_params(family, eps_inf)
    return math.log(p1 * (2.0 - q1) / (q1 * (2.0 - p1)))


def _solve_q2_fixed_half(p1: float, q1: float, eps_1: float) -> float:
    """Root of the single-report equation in q2 when p2 = 1/2.

    Substituting p_s = p1/2 + (1-p1) q2 and q_s = q1/2 + (1-q1) q2 into the
    UE log-ratio turns it into a quadratic A q2^2 + B q2 + C = 0; the valid
    root lies strictly inside (0, 1/2).
    """
    big_e = math.exp(eps_1)
    a, b = p1 / 2.0, 1.0 - p1
    c, d = q1 / 2.0, 1.0 - q1
    quad_a = b * d * (big_e - 1.0)
    quad_b = b * (1.0 - c) - a * d - big_e * ((1.0 - a) * d - b * c)
    quad_c = a * (1.0 - c) - big_e * c * (1.0 - a)
    disc = quad_b * quad_b - 4.0 * quad_a * quad_c
    if disc < 0.0:
        raise InfeasibleBudget(f"no real q2 for eps_1={eps_1}")
    root = math.sqrt(disc)
    # numerically stable split: one root via the larger-magnitude branch
    if quad_b >= 0.0:
        upper = (-quad_b - root) / (2.0 * quad_a)
        other = quad_c / (quad_a * upper) if upper != 0.0 else math.nan
    else:
        other = (-quad_b + root) / (2.0 * quad_a)
        upper = quad_c / (quad_a * other) if other != 0.0 else math.nan
    candidates = [r for r in (upper, other) if 0.0 < r < 0.5]
    if not candidates:
        raise InfeasibleBudget(f"no q2 in (0, 1/2) for eps_1={eps_1}")
    return min(candidates)


@functools.lru_cache(maxsize=None)
def _solve(family: str, eps_inf: float, eps_1: float, k: int) -> LongitudinalParams:
    budget = BudgetPair(eps_inf, eps_1)
    p1, q1 = round_one_params(family, eps_inf, k)
    if family == L_GRR:
        e1, ei = math.exp(eps_1), math.exp(eps_inf)
        p2 = (e1 * ei - 1.0) / (-k * e1 + (k - 1.0) * ei + e1 + e1 * ei - 1.0)
        if not (0.0 < p2 < 1.0):
            raise InfeasibleBudget(f"l-grr p2={p2} outside (0, 1)")
        q2 = (1.0 - p2) / (k - 1.0)
    elif family == L_OSUE:
        e1, ei = math.exp(eps_1), math.exp(eps_inf)
        p2 = (1.0 - e1 * ei) / (e1 - ei - e1 * ei + 1.0)
        q2 = 1.0 - p2
    elif family == L_SUE:
        # symmetric rounds compose to a symmetric channel, so the composed
        # pair is the SUE pair at eps_1 and p2 follows linearly
        ps = math.exp(eps_1 / 2.0) / (math.exp(eps_1 / 2.0) + 1.0)
        p2 = (ps + p1 - 1.0) / (2.0 * p1 - 1.0)
        q2 = 1.0 - p2
    else:  # L_OUE, L_SOUE: p2 pinned at 1/2
        if eps_1 >= eps1_ceiling(family, eps_inf):
            raise InfeasibleBudget(
                f"{family} cannot reach eps_1={eps_1} at eps_inf={eps_inf} "
                f"(supremum {eps1_ceiling(family, eps_inf):.6f})"
            )
        p2 = 0.5
        q2 = _solve_q2_fixed_half(p1, q1, eps_1)
    if not (0.0 < q2 < 1.0 and 0.0 < p2 < 1.0):
        raise InfeasibleBudget(f"{family} solved outside (0,1): p2={p2}, q2={q2}")
    residual = abs(eps1_of(family, p1, q1, p2, q2, k) - eps_1)
    if residual > 1e-12 * max(1.0, eps_1):
        raise InfeasibleBudget(f"{family} solution residual {residual} too large")
    return LongitudinalParams(family, p1, q1, p2, q2, k, budget)


def solve_params(family: str, budget: BudgetPair, k: int = 0) -> LongitudinalParams:
    """Solve a family's four probabilities for a budget pair.

    Args:
        family: one of the five longitudinal families.
        budget: the (eps_inf, eps_1) pair.
        k: domain size; required for l-grr, carried through for the others
           so later encoding knows the payload length.

    Raises:
        InfeasibleBudget: when no (p2, q2) in (0, 1) reaches eps_1, which
            happens for the fixed p2 = 1/2 families once eps_1 is a large
            enough fraction of eps_inf.
    """
    if family not in LONGITUDINAL_FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if family == L_GRR and k < 2:
        raise DomainTooSmall(f"l-grr needs k >= 2, got {k}")
    return _solve(family, float(budget.eps_inf), float(budget.eps_1), int(k))


def memoize(value, params: LongitudinalParams, rng: np.random.Generator) -> MemoState:
    """Run the permanent first round on a true value.

    The result must be kept for the client's lifetime; all future reports
    re-perturb it instead of the true value.
    """
    if params.k < 2:
        raise ValueOutOfDomain("params carry no domain size; solve with k set")
    if params.family == L_GRR:
        memo = oracles.grr_perturb(value, params.p1, params.k, rng)
    else:
        memo = oracles.ue_perturb(
            oracles.ue_encode(value, params.k), params.p1, params.q1, rng
        )
        memo.setflags(write=False)
    return MemoState(params.family, memo, params)


def report(state: MemoState, rng: np.random.Generator):
    """Fresh second-round perturbation of the memoized value.

    Independent across calls; the memoized value is never touched.
    """
    p = state.params
    if state.family == L_GRR:
        return oracles.grr_perturb(state.memoized, p.p2, p.k, rng)
    return oracles.ue_perturb(state.memoized, p.p2, p.q2, rng)


def estimate_longitudinal(counts, n, params: LongitudinalParams) -> np.ndarray:
    """Unbiased estimates through both rounds:
    (N_i - n q1 (p2-q2) - n q2) / (n (p1-q1)(p2-q2))."""
    if n <= 0:
        raise EmptyCollection("no reports to estimate from")
    if params.p1 == params.q1 or params.p2 == params.q2:
        raise DegenerateChannel("a round with p == q carries no information")
    counts = np.asarray(counts, dtype=np.float64)
    num = counts - n * params.q1 * (params.p2 - params.q2) - n * params.q2
    return num / (n * (params.p1 - params.q1) * (params.p2 - params.q2))


def variance_longitudinal(params: LongitudinalParams, f: float, n) -> float:
    """Exact estimator variance at true frequency f.

    gamma(1-gamma) / (n (p1-q1)^2 (p2-q2)^2) with gamma the probability
    that one report lands on the value in question.
    """
    if not (0.0 <= f <= 1.0):
        raise ValueError(f"f={f} outside [0, 1]")
    if n <= 0:
        raise EmptyCollection("n must be positive")
    p1, q1, p2, q2 = params.p1, params.q1, params.p2, params.q2
    if p1 == q1 or p2 == q2:
        raise DegenerateChannel("a round with p == q carries no information")
    gamma = f * (2.0 * p1 * p2 - 2.0 * p1 * q2 + 2.0 * q2 - 1.0) + p2 * q1 + q2 * (1.0 - q1)
    return gamma * (1.0 - gamma) / (n * (p1 - q1) ** 2 * (p2 - q2) ** 2)


def approx_variance_longitudinal(params: LongitudinalParams, n) -> float:
    """Variance at f = 0, the utility yardstick for protocol comparison."""
    return variance_longitudinal(params, 0.0, n)


def privacy_after(budget: BudgetPair, t: int) -> float:
    """Privacy level disclosed by t observed reports.

    ln((e^(eps_inf + t eps_1) + 1) / (e^eps_inf + e^(t eps_1))), evaluated
    in log-space so large t cannot overflow; tends to eps_inf as t grows
    and never exceeds min(eps_inf, t*eps_1).
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    a, b = budget.eps_inf, t * budget.eps_1
    return float(np.logaddexp(a + b, 0.0) - np.logaddexp(a, b))


def composed_grr_channel(params: LongitudinalParams) -> np.ndarray:
    """Explicit end-to-end k x k channel of an l-grr protocol (the matrix
    product of the two round tables)."""
    c1 = oracles.grr_channel(params.p1, params.q1, params.k)
    c2 = oracles.grr_channel(params.p2, params.q2, params.k)
    return c1 @ c2
