"""Closed-form variance tables over budget grids.

Two deterministic reports, no sampling involved: the longitudinal table
evaluates the approximate two-round variance of every protocol across an
(eps_inf, ratio) grid at the given domain sizes, and the single-round table
does the same for the plain GRR/OUE/SUE oracles. Cells whose budget no
protocol parameterization can reach carry the literal token "infeasible".
"""

from __future__ import annotations

from pathlib import Path

from . import longitudinal as lng
from . import oracles
from ._report_io import write_csv
from .errors import InfeasibleBudget
from .longitudinal import BudgetPair

INFEASIBLE = "infeasible"

#: Column order of the longitudinal table's protocol cells.
UE_COLUMNS = (lng.L_OSUE, lng.L_SUE, lng.L_SOUE, lng.L_OUE)


def longitudinal_rows(n, eps_inf_grid, ratios, k_list) -> list[dict]:
    """Grid of approximate two-round variances.

    One row per (ratio, eps_inf), in the given order; cells are the l-grr
    variance at each domain size in k_list followed by the four
    unary-encoding protocols (whose variance does not depend on k).
    """
    rows = []
    for ratio in ratios:
        for eps_inf in eps_inf_grid:
            budget = BudgetPair(eps_inf, ratio * eps_inf)
            row = {"eps_inf": eps_inf, "eps_1": budget.eps_1, "ratio": ratio}
            for k in k_list:
                row[f"l_grr_k{k}"] = _cell(lng.L_GRR, budget, k, n)
            for family in UE_COLUMNS:
                row[family.replace("-", "_")] = _cell(family, budget, 0, n)
            rows.append(row)
    return rows


def _cell(family: str, budget: BudgetPair, k: int, n):
    try:
        params = lng.solve_params(family, budget, k)
    except InfeasibleBudget:
        return INFEASIBLE
    return lng.approx_variance_longitudinal(params, n)


def single_round_rows(n, eps_grid, k_list) -> list[dict]:
    """Grid of single-round approximate variances (GRR per k, OUE, SUE)."""
    rows = []
    for eps in eps_grid:
        row = {"eps": eps}
        for k in k_list:
            row[f"grr_k{k}"] = oracles.theoretical_variance(oracles.GRR, eps, k, n)
        row["oue"] = oracles.theoretical_variance(oracles.OUE, eps, 0, n)
        row["sue"] = oracles.theoretical_variance(oracles.SUE, eps, 0, n)
        rows.append(row)
    return rows


def emit_variance_tables(
    out_dir,
    n: int = 10000,
    eps_inf_grid=(0.5, 1.0, 2.0, 4.0),
    ratios=(0.6, 0.5, 0.4, 0.3, 0.2, 0.1),
    k_list=(2, 32, 1024),
    plots: bool = True,
) -> dict[str, Path]:
    """Write both variance tables (and their figures) into out_dir.

    Values are emitted at full precision via repr; consumers round for
    display. Returns the written paths.
    """
    out_dir = Path(out_dir)
    long_rows = longitudinal_rows(n, eps_inf_grid, ratios, k_list)
    single_rows = single_round_rows(n, eps_inf_grid, k_list)

    def fmt(v):
        return v if isinstance(v, str) else repr(float(v))

    paths: dict[str, Path] = {}
    header = list(long_rows[0].keys())
    paths["longitudinal_csv"] = write_csv(
        out_dir / "longitudinal_variance.csv",
        header,
        [[fmt(row[c]) for c in header] for row in long_rows],
    )
    header2 = list(single_rows[0].keys())
    paths["single_round_csv"] = write_csv(
        out_dir / "single_round_variance.csv",
        header2,
        [[fmt(row[c]) for c in header2] for row in single_rows],
    )
    if plots:
        from . import plots as _plots

        paths["longitudinal_png"] = _plots.longitudinal_variance_figure(
            long_rows, out_dir / "longitudinal_variance.png"
        )
        paths["single_round_png"] = _plots.single_round_variance_figure(
            single_rows, out_dir / "single_round_variance.png"
        )
    return paths
