"""Multidimensional budget strategy and the adaptive longitudinal client.

With d attributes a client can either split the budget (eps/d per attribute)
or sample r attributes and spend eps/r on each; the sampled variant with
r = 1 minimizes estimator variance for every protocol, so the client here
samples exactly one attribute for its whole lifetime, picks whichever of
the two candidate longitudinal protocols (l-grr, l-osue) has the smaller
approximate variance at the sampled attribute's domain size, memoizes once,
and then reports any number of rounds.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import longitudinal as lng
from . import oracles
from .errors import DimensionMismatch, InfeasibleBudget, ValueOutOfDomain
from .longitudinal import BudgetPair, LongitudinalParams, MemoState
from .oracles import DomainSpec


def spl_variance(family: str, eps: float, d: int, k: int, n) -> float:
    """Approximate variance when the budget is split eps/d per attribute."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return oracles.theoretical_variance(family, eps / d, k, n)


def smp_variance(family: str, eps: float, d: int, k: int, n, r: int = 1) -> float:
    """Approximate variance when each client reports r sampled attributes
    with budget eps/r; only n*r/d clients land on a given attribute."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if not 1 <= r <= d:
        raise ValueError(f"need 1 <= r <= d, got r={r}")
    return oracles.theoretical_variance(family, eps / r, k, n * r / d)


def optimal_r(family: str, eps: float, d: int, k: int, n) -> int:
    """Number of sampled attributes minimizing smp_variance (ties -> smaller r)."""
    best_r, best_v = 1, smp_variance(family, eps, d, k, n, 1)
    for r in range(2, d + 1):
        v = smp_variance(family, eps, d, k, n, r)
        if v < best_v:
            best_r, best_v = r, v
    return best_r


def _grr_wins(var_grr: float, var_osue: float) -> bool:
    # ties go to l-grr by convention
    return var_grr <= var_osue


def choose_protocol(budget: BudgetPair, k: int) -> LongitudinalParams:
    """Pick the lower-variance candidate between l-grr and l-osue at domain
    size k. Falls back to l-osue with a warning if l-grr is infeasible."""
    osue = lng.solve_params(lng.L_OSUE, budget, k)
    try:
        grr = lng.solve_params(lng.L_GRR, budget, k)
    except InfeasibleBudget:
        warnings.warn(
            f"l-grr infeasible at k={k} for {budget}; falling back to l-osue",
            stacklevel=2,
        )
        return osue
    if _grr_wins(
        lng.approx_variance_longitudinal(grr, 1),
        lng.approx_variance_longitudinal(osue, 1),
    ):
        return grr
    return osue


@dataclass(frozen=True)
class TimedReport:
    """One report: round index t >= 1, the sender's sampled attribute, and
    the payload (category index or 0/1 bit vector)."""

    t: int
    attr: int
    payload: int | np.ndarray


@dataclass(frozen=True)
class ClientState:
    """A longitudinal client after initialization.

    The sampled attribute and chosen protocol never change; the memoized
    round-1 output is reused for every report. The client owns its random
    stream.
    """

    sampled_attr: int
    chosen_family: str
    memo: MemoState
    rng: np.random.Generator


def allomfree_init(
    values, domain: DomainSpec, budget: BudgetPair, rng: np.random.Generator
) -> ClientState:
    """Initialize an adaptive client from its true value tuple.

    Samples one attribute uniformly (once, for the client's lifetime),
    solves both candidate protocols at that attribute's domain size, keeps
    the one with the smaller approximate variance, and memoizes the value.
    """
    values = list(values)
    if len(values) != domain.d:
        raise DimensionMismatch(f"got {len(values)} values for {domain.d} attributes")
    for j, v in enumerate(values):
        if not 0 <= int(v) < domain.size(j):
            raise ValueOutOfDomain(
                f"value {v} outside [0, {domain.size(j)}) for attribute {j}"
            )
    attr = int(rng.integers(domain.d))
    params = choose_protocol(budget, domain.size(attr))
    memo = lng.memoize(int(values[attr]), params, rng)
    return ClientState(attr, params.family, memo, rng)


def allomfree_report(state: ClientState, t: int) -> TimedReport:
    """Produce the round-t report: a fresh second-round perturbation of the
    memoized value, tagged with the client's fixed attribute."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    payload = lng.report(state.memo, state.rng)
    return TimedReport(t, state.sampled_attr, payload)


def format_report_line(client_id: int, rep: TimedReport) -> str:
    """Wire format, one record per line: ``t,client_id,attr,payload`` with
    the payload as an integer (category index) or a 0/1 string (bits)."""
    payload = rep.payload
    if isinstance(payload, np.ndarray):
        text = "".join("1" if b else "0" for b in payload)
    else:
        text = str(int(payload))
    return f"{rep.t},{client_id},{rep.attr},{text}"


def parse_report_line(line: str, ue: bool) -> tuple[int, TimedReport]:
    """Inverse of format_report_line; ``ue`` tells how to decode the payload
    (bit string vs category index), since e.g. "10" is valid as either."""
    t_s, client_s, attr_s, payload_s = line.strip().split(",")
    if ue:
        payload = np.frombuffer(payload_s.encode("ascii"), dtype=np.uint8) - ord("0")
        payload = payload.astype(np.uint8)
    else:
        payload = int(payload_s)
    return int(client_s), TimedReport(int(t_s), int(attr_s), payload)
