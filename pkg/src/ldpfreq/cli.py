"""Command-line harness.

Subcommands:

    tables    emit the closed-form variance tables (CSV + figures)
    simulate  Monte Carlo utility experiment on a CSV or synthetic dataset
    gains     accuracy gain between two result files
    audit     brute-force privacy audit of the channel grids

Exit codes: 0 on success, 2 when every requested (protocol, budget) cell is
infeasible, 1 on errors.
"""

from __future__ import annotations

import csv
import math
import sys
from pathlib import Path

import click

from . import longitudinal as lng
from . import oracles
from ._report_io import write_csv
from .datasets import parse_synthetic_spec
from .errors import LdpError
from .experiment import INFEASIBLE, ExperimentConfig, accuracy_gain, run_experiment, write_results
from .longitudinal import BudgetPair
from .tables import emit_variance_tables

_AUDIT_TOL = 1e-9


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


@click.group()
def main():
    """Locally differentially private frequency estimation harness."""


@main.command()
@click.option("--n", default=10000, show_default=True, help="Number of reports the variances assume.")
@click.option("--eps-inf", "eps_inf", default="0.5,1.0,2.0,4.0", show_default=True)
@click.option("--ratios", default="0.6,0.5,0.4,0.3,0.2,0.1", show_default=True,
              help="eps_1 as a fraction of eps_inf, one table block per value.")
@click.option("--k", "k_list", default="2,32,1024", show_default=True,
              help="Domain sizes for the direct-encoding columns.")
@click.option("--out", default="out", show_default=True, type=click.Path(file_okay=False))
@click.option("--plots/--no-plots", default=True, show_default=True)
@click.pass_context
def tables(ctx, n, eps_inf, ratios, k_list, out, plots):
    """Emit the longitudinal and single-round variance tables."""
    paths = emit_variance_tables(
        out, n=n, eps_inf_grid=_floats(eps_inf), ratios=_floats(ratios),
        k_list=_ints(k_list), plots=plots,
    )
    for name, path in sorted(paths.items()):
        click.echo(f"{name}: {path}")
    with open(paths["longitudinal_csv"]) as fh:
        rows = list(csv.DictReader(fh))
    value_cols = [c for c in rows[0] if c not in ("eps_inf", "eps_1", "ratio")]
    if all(row[c] == INFEASIBLE for row in rows for c in value_cols):
        click.echo("every longitudinal cell is infeasible", err=True)
        ctx.exit(2)


@main.command()
@click.option("--dataset", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Categorical CSV with a header row.")
@click.option("--synthetic", "synthetic", default=None,
              help="Synthetic spec, e.g. 'k=3,5,4;n=12960;seed=7'.")
@click.option("--protocols", default="l-sue,l-oue,l-osue,l-soue,allomfree", show_default=True)
@click.option("--eps-inf", "eps_inf", default="0.5,1.0,2.0,4.0", show_default=True)
@click.option("--ratio", default=0.6, show_default=True, help="eps_1 / eps_inf.")
@click.option("--runs", default=100, show_default=True)
@click.option("--tau", default=1, show_default=True, help="Reports per client.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default="out", show_default=True, type=click.Path(file_okay=False))
@click.option("--clip", is_flag=True, help="Clip estimates to [0,1] and renormalize.")
@click.option("--plots/--no-plots", default=True, show_default=True)
@click.pass_context
def simulate(ctx, dataset, synthetic, protocols, eps_inf, ratio, runs, tau, seed, out, clip, plots):
    """Run the Monte Carlo utility experiment."""
    if (dataset is None) == (synthetic is None):
        raise click.UsageError("exactly one of --dataset / --synthetic is required")
    source = parse_synthetic_spec(synthetic) if synthetic else dataset
    config = ExperimentConfig(
        dataset=source,
        protocols=tuple(protocols.split(",")),
        eps_inf_grid=_floats(eps_inf),
        eps1_ratio=ratio,
        runs=runs,
        tau=tau,
        seed=seed,
        clip=clip,
    )
    result = run_experiment(config)
    paths = write_results(result, out, plots=plots)
    for name, path in sorted(paths.items()):
        click.echo(f"{name}: {path}")
    skipped = [r for r in result.rows if r["status"] == INFEASIBLE]
    for r in skipped:
        click.echo(f"skipped infeasible: {r['protocol']} at eps_inf={r['eps_inf']}", err=True)
    if result.all_infeasible:
        click.echo("every requested (protocol, budget) cell is infeasible", err=True)
        ctx.exit(2)


@main.command()
@click.argument("baseline_csv", type=click.Path(exists=True, dir_okay=False))
@click.argument("target_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--baseline-protocol", default=None, help="Protocol row to read from BASELINE_CSV.")
@click.option("--target-protocol", default=None, help="Protocol row to read from TARGET_CSV.")
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Write gains as CSV instead of printing.")
def gains(baseline_csv, target_csv, baseline_protocol, target_protocol, out):
    """Accuracy gain of TARGET_CSV over BASELINE_CSV per eps_inf."""
    base = _result_rows(baseline_csv, baseline_protocol)
    target = _result_rows(target_csv, target_protocol)
    shared = sorted(set(base) & set(target))
    if not shared:
        raise click.ClickException("no common feasible eps_inf values between the two files")
    rows = []
    for eps in shared:
        rows.append([repr(eps), repr(base[eps]), repr(target[eps]),
                     repr(accuracy_gain(base[eps], target[eps]))])
    header = ("eps_inf", "mse_baseline", "mse_target", "gain")
    if out:
        write_csv(out, header, rows)
        click.echo(f"gains: {out}")
    else:
        click.echo(",".join(header))
        for row in rows:
            click.echo(",".join(row))


def _result_rows(path: str, protocol: str | None) -> dict[float, float]:
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    protocols = sorted({r["protocol"] for r in rows})
    if protocol is None:
        if len(protocols) != 1:
            raise click.ClickException(
                f"{path} carries protocols {protocols}; pick one with --*-protocol"
            )
        protocol = protocols[0]
    elif protocol not in protocols:
        raise click.ClickException(f"{path} has no rows for protocol {protocol!r}")
    out = {}
    for r in rows:
        if r["protocol"] == protocol and r["status"] == "ok":
            out[float(r["eps_inf"])] = float(r["mse_avg_mean"])
    return out


@main.command()
@click.option("--eps", default="0.1,0.5,1.0,2.0,4.0", show_default=True,
              help="Single-round budgets to audit.")
@click.option("--eps-inf", "eps_inf", default="0.5,1.0,2.0,4.0", show_default=True)
@click.option("--ratios", default="0.6,0.5,0.4,0.3,0.2,0.1", show_default=True)
@click.option("--k", "k_list", default="2,4,32", show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@click.pass_context
def audit(ctx, eps, eps_inf, ratios, k_list, out):
    """Brute-force the channel grids and check every audited level.

    Single-round channels and memoization rounds must audit exactly at
    their declared budgets; composed two-round channels must audit exactly
    at eps_1 for the unary-encoding families and for direct encoding over
    binary domains, and never above eps_1 otherwise.
    """
    rows = []
    ok = True
    for e in _floats(eps):
        for k in _ints(k_list):
            p = oracles.make_params(oracles.GRR, e, k)
            rows.append(_audit_row("single", oracles.GRR, e, k,
                                   oracles.ldp_audit(oracles.grr_channel(p.p, p.q, k)), e))
        for family in (oracles.SUE, oracles.OUE):
            p = oracles.make_params(family, e)
            rows.append(_audit_row("single", family, e, 0, oracles.ue_audit(p.p, p.q), e))
    for ei in _floats(eps_inf):
        for ratio in _floats(ratios):
            budget = BudgetPair(ei, ratio * ei)
            for family in lng.LONGITUDINAL_FAMILIES:
                for k in (_ints(k_list) if family == lng.L_GRR else (0,)):
                    try:
                        lp = lng.solve_params(family, budget, k)
                    except LdpError:
                        rows.append(["composed", family, repr(budget.eps_1), k,
                                     INFEASIBLE, INFEASIBLE])
                        continue
                    if family == lng.L_GRR:
                        round1 = oracles.ldp_audit(oracles.grr_channel(lp.p1, lp.q1, k))
                        composed = oracles.ldp_audit(lng.composed_grr_channel(lp))
                        tight = k == 2
                    else:
                        round1 = oracles.ue_audit(lp.p1, lp.q1)
                        ps, qs = lng.composed_probs(family, lp.p1, lp.q1, lp.p2, lp.q2)
                        composed = oracles.ue_audit(ps, qs)
                        tight = True
                    rows.append(_audit_row("round1", family, ei, k, round1, ei))
                    row = _audit_row("composed", family, budget.eps_1, k, composed,
                                     budget.eps_1, tight=tight)
                    rows.append(row)
    for row in rows:
        if row[-1] == "FAIL":
            ok = False
    header = ("kind", "family", "target", "k", "audited", "verdict")
    if out:
        write_csv(out, header, rows)
        click.echo(f"audit: {out}")
    fails = sum(1 for r in rows if r[-1] == "FAIL")
    click.echo(f"audited {len(rows)} channels: {fails} failures")
    if not ok:
        ctx.exit(1)


def _audit_row(kind, family, target, k, audited, expect, tight: bool = True):
    if tight:
        good = math.isfinite(audited) and abs(audited - expect) <= _AUDIT_TOL
    else:
        good = audited <= expect + _AUDIT_TOL
    return [kind, family, repr(float(target)), k, repr(float(audited)),
            "ok" if good else "FAIL"]


if __name__ == "__main__":
    main()
