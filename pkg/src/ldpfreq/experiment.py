"""Monte Carlo experiment driver, utility metrics, and result emission.

A run simulates the full pipeline once: every user samples one attribute,
memoizes its value under the configured protocol, reports tau rounds, the
server estimates each attribute's histogram per round, and the squared
estimation error is averaged over rounds, attributes, and category values.
Runs repeat with independent noise; the dataset rows stay fixed (only the
privacy noise and the attribute sampling re-randomize).

Everything is a pure function of (config, master seed). Per-run streams are
derived as (seed, run); the attribute assignment of a run is shared by all
protocol/eps combinations so comparisons are paired, while each combination
perturbs with its own child stream.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import longitudinal as lng
from . import oracles
from ._report_io import write_csv
from .datasets import EncodedDataset, SyntheticSpec, load_dataset, synthesize_dataset
from .errors import EmptyCollection, InfeasibleBudget, ShapeMismatch, ZeroBaseline
from .longitudinal import BudgetPair, LongitudinalParams
from .multidim import choose_protocol

#: Protocols the driver knows how to run.
PROTOCOLS = (lng.L_SUE, lng.L_OUE, lng.L_OSUE, lng.L_SOUE, "allomfree")

INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str | Path | SyntheticSpec
    protocols: tuple[str, ...] = PROTOCOLS
    eps_inf_grid: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    eps1_ratio: float = 0.6
    runs: int = 100
    tau: int = 1
    seed: int = 0
    clip: bool = False

    def __post_init__(self):
        object.__setattr__(self, "protocols", tuple(self.protocols))
        object.__setattr__(self, "eps_inf_grid", tuple(float(e) for e in self.eps_inf_grid))
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if not 0.0 < self.eps1_ratio < 1.0:
            raise ValueError(f"eps1 ratio must lie in (0, 1), got {self.eps1_ratio}")
        if any(e <= 0 for e in self.eps_inf_grid):
            raise ValueError("eps_inf grid values must be positive")
        unknown = set(self.protocols) - set(PROTOCOLS)
        if unknown:
            raise ValueError(f"unknown protocols: {sorted(unknown)}")


def mse_avg(true_freqs, estimates, d: int, tau: int) -> float:
    """Squared error averaged over rounds, attributes, and values.

    Args:
        true_freqs: per-attribute true frequency vectors (length d).
        estimates: per round, per attribute estimate vectors
            (tau lists of d arrays; a single round may be passed flat).
        d, tau: expected shape, validated against the inputs.
    """
    if tau == 1 and estimates and not isinstance(estimates[0], (list, tuple)):
        estimates = [estimates]
    if len(true_freqs) != d or len(estimates) != tau:
        raise ShapeMismatch(
            f"expected {d} attributes and {tau} rounds, got "
            f"{len(true_freqs)} and {len(estimates)}"
        )
    total = 0.0
    for per_round in estimates:
        if len(per_round) != d:
            raise ShapeMismatch(f"round carries {len(per_round)} attributes, expected {d}")
        acc = 0.0
        for f, est in zip(true_freqs, per_round):
            if est is None:
                raise EmptyCollection("an attribute received no reports")
            f = np.asarray(f, dtype=np.float64)
            est = np.asarray(est, dtype=np.float64)
            if f.shape != est.shape:
                raise ShapeMismatch(f"shape {est.shape} against truth {f.shape}")
            acc += float(np.mean((f - est) ** 2))
        total += acc / d
    return total / tau


def accuracy_gain(mse_baseline: float, mse_target: float) -> float:
    """Relative improvement (baseline - target) / baseline."""
    if mse_baseline <= 0.0:
        raise ZeroBaseline("baseline MSE must be positive")
    return (mse_baseline - mse_target) / mse_baseline


def sample_attributes(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform attribute assignment: which single attribute each of the n
    clients reports for its whole lifetime."""
    return rng.integers(0, d, size=n)


def protocol_params(protocol: str, budget: BudgetPair, sizes) -> list[LongitudinalParams]:
    """Per-attribute channel parameters for one protocol at one budget.

    The adaptive protocol picks l-grr or l-osue per attribute; the fixed
    protocols solve their own family at each attribute's domain size.
    Raises InfeasibleBudget if any attribute cannot meet the budget.
    """
    if protocol == "allomfree":
        return [choose_protocol(budget, k) for k in sizes]
    return [lng.solve_params(protocol, budget, k) for k in sizes]


def two_round_counts(
    values: np.ndarray, params: LongitudinalParams, rng: np.random.Generator, tau: int
) -> np.ndarray:
    """Memoize a group of clients once and report tau rounds, vectorized.

    Returns a (tau, k) matrix of per-value report counts (per-bit one-counts
    for unary-encoded protocols).
    """
    k = params.k
    out = np.empty((tau, k), dtype=np.int64)
    if params.family == lng.L_GRR:
        memo = oracles.grr_perturb(values, params.p1, k, rng)
        for t in range(tau):
            rep = oracles.grr_perturb(memo, params.p2, k, rng)
            out[t] = np.bincount(rep, minlength=k)
    else:
        memo = oracles.ue_perturb(oracles.ue_encode(values, k), params.p1, params.q1, rng)
        for t in range(tau):
            rep = oracles.ue_perturb(memo, params.p2, params.q2, rng)
            out[t] = rep.sum(axis=0, dtype=np.int64)
    return out


def run_once(
    data: EncodedDataset,
    params_by_attr: list[LongitudinalParams],
    rng: np.random.Generator,
    tau: int = 1,
    assignment: np.ndarray | None = None,
    full: bool = False,
    clip: bool = False,
) -> list[list[np.ndarray | None]]:
    """One simulated collection; returns estimates[t][attr].

    Args:
        assignment: per-user sampled attribute indices; drawn uniformly
            from rng when omitted.
        full: every user reports every attribute (no sampling); used for
            noise-free baselines and diagnostics.
        clip: clip estimates to [0, 1] and renormalize per attribute.
    """
    d = data.domain.d
    if assignment is None and not full:
        assignment = sample_attributes(data.n, d, rng)
    estimates: list[list[np.ndarray | None]] = [[None] * d for _ in range(tau)]
    for j in range(d):
        values = data.rows[:, j] if full else data.rows[assignment == j, j]
        if values.size == 0:
            continue
        counts = two_round_counts(values, params_by_attr[j], rng, tau)
        for t in range(tau):
            est = lng.estimate_longitudinal(counts[t], values.size, params_by_attr[j])
            if clip:
                est = np.clip(est, 0.0, 1.0)
                total = est.sum()
                est = est / total if total > 0 else np.full_like(est, 1.0 / est.size)
            estimates[t][j] = est
    return estimates


def _load(config: ExperimentConfig) -> EncodedDataset:
    if isinstance(config.dataset, SyntheticSpec):
        return synthesize_dataset(config.dataset)
    return load_dataset(config.dataset)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[dict] = field(default_factory=list)  # one per (protocol, eps_inf)
    gains: list[dict] = field(default_factory=list)

    def row(self, protocol: str, eps_inf: float) -> dict | None:
        for r in self.rows:
            if r["protocol"] == protocol and r["eps_inf"] == eps_inf:
                return r
        return None

    @property
    def all_infeasible(self) -> bool:
        return all(r["status"] == INFEASIBLE for r in self.rows)


def run_experiment(config: ExperimentConfig, data: EncodedDataset | None = None) -> ExperimentResult:
    """Full Monte Carlo sweep over (protocol, eps_inf) cells.

    Infeasible cells are reported with status "infeasible" and skipped, not
    silently clamped. Every feasible cell records the per-run MSE_avg plus
    its mean and sample standard deviation; accuracy gains of the adaptive
    protocol against the l-sue and l-oue baselines are attached when those
    protocols are part of the sweep.
    """
    if data is None:
        data = _load(config)
    d = data.domain.d
    sizes = data.domain.sizes

    cells = []  # (protocol, eps_index, params or None)
    for protocol in config.protocols:
        for ei, eps_inf in enumerate(config.eps_inf_grid):
            budget = BudgetPair(eps_inf, config.eps1_ratio * eps_inf)
            try:
                params = protocol_params(protocol, budget, sizes)
            except InfeasibleBudget:
                params = None
            cells.append((protocol, ei, params))

    mse_runs: dict[tuple[str, int], list[float]] = {
        (p, ei): [] for p, ei, params in cells if params is not None
    }
    for run in range(config.runs):
        assignment = sample_attributes(data.n, d, np.random.default_rng([config.seed, run, 0]))
        for pi, protocol in enumerate(config.protocols):
            for ei, _ in enumerate(config.eps_inf_grid):
                key = (protocol, ei)
                if key not in mse_runs:
                    continue
                params = next(c[2] for c in cells if c[0] == protocol and c[1] == ei)
                noise = np.random.default_rng([config.seed, run, 1 + pi, ei])
                est = run_once(
                    data, params, noise, config.tau, assignment=assignment, clip=config.clip
                )
                mse_runs[key].append(mse_avg(data.frequencies, est, d, config.tau))

    result = ExperimentResult(config)
    for protocol, ei, params in cells:
        eps_inf = config.eps_inf_grid[ei]
        row = {
            "protocol": protocol,
            "eps_inf": eps_inf,
            "eps_1": config.eps1_ratio * eps_inf,
            "runs": config.runs,
            "tau": config.tau,
        }
        if params is None:
            row.update(status=INFEASIBLE, mse_avg_mean=None, mse_avg_std=None, mse_avg_runs=[])
        else:
            values = mse_runs[(protocol, ei)]
            row.update(
                status="ok",
                mse_avg_mean=float(np.mean(values)),
                mse_avg_std=float(np.std(values, ddof=1)) if len(values) > 1 else 0.0,
                mse_avg_runs=[float(v) for v in values],
            )
        result.rows.append(row)

    if "allomfree" in config.protocols:
        for baseline in (lng.L_SUE, lng.L_OUE):
            if baseline not in config.protocols:
                continue
            for eps_inf in config.eps_inf_grid:
                base = result.row(baseline, eps_inf)
                target = result.row("allomfree", eps_inf)
                if base["status"] != "ok" or target["status"] != "ok":
                    continue
                result.gains.append(
                    {
                        "eps_inf": eps_inf,
                        "baseline": baseline,
                        "mse_baseline": base["mse_avg_mean"],
                        "mse_allomfree": target["mse_avg_mean"],
                        "gain": accuracy_gain(base["mse_avg_mean"], target["mse_avg_mean"]),
                    }
                )
    return result


RESULT_COLUMNS = (
    "protocol", "eps_inf", "eps_1", "runs", "tau", "status", "mse_avg_mean", "mse_avg_std",
)
GAIN_COLUMNS = ("eps_inf", "baseline", "mse_baseline", "mse_allomfree", "gain")


def write_results(result: ExperimentResult, out_dir, plots: bool = True) -> dict[str, Path]:
    """Emit results.csv, results.json, gains.csv, and (optionally) the MSE
    figure into out_dir; returns the written paths. Output bytes depend only
    on (config, seed): floats are emitted at full precision via repr and
    JSON keys are sorted."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    rows = []
    for r in result.rows:
        if r["status"] == INFEASIBLE:
            rows.append([r["protocol"], repr(r["eps_inf"]), repr(r["eps_1"]), r["runs"],
                         r["tau"], INFEASIBLE, INFEASIBLE, INFEASIBLE])
        else:
            rows.append([r["protocol"], repr(r["eps_inf"]), repr(r["eps_1"]), r["runs"],
                         r["tau"], r["status"], repr(r["mse_avg_mean"]), repr(r["mse_avg_std"])])
    paths["results_csv"] = write_csv(out_dir / "results.csv", RESULT_COLUMNS, rows)

    if result.gains:
        gain_rows = [
            [repr(g["eps_inf"]), g["baseline"], repr(g["mse_baseline"]),
             repr(g["mse_allomfree"]), repr(g["gain"])]
            for g in result.gains
        ]
        paths["gains_csv"] = write_csv(out_dir / "gains.csv", GAIN_COLUMNS, gain_rows)

    config = result.config
    meta = {
        "config": {
            "dataset": (
                {"synthetic": {"sizes": list(config.dataset.sizes),
                               "n": config.dataset.n, "seed": config.dataset.seed}}
                if isinstance(config.dataset, SyntheticSpec)
                else str(config.dataset)
            ),
            "protocols": list(config.protocols),
            "eps_inf_grid": list(config.eps_inf_grid),
            "eps1_ratio": config.eps1_ratio,
            "runs": config.runs,
            "tau": config.tau,
            "clip": config.clip,
        },
        "seed": config.seed,
        "versions": _versions(),
        "results": result.rows,
        "gains": result.gains,
    }
    json_path = out_dir / "results.json"
    json_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    paths["results_json"] = json_path

    if plots:
        from . import plots as _plots

        paths["figure"] = _plots.mse_figure(result.rows, out_dir / "mse_avg.png")
    return paths


def _versions() -> dict[str, str]:
    from importlib.metadata import version

    return {
        "ldpfreq": version("ldpfreq"),
        "numpy": np.__version__,
        "python": ".".join(str(v) for v in sys.version_info[:3]),
    }
