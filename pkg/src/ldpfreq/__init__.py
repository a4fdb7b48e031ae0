"""Locally differentially private frequency estimation for longitudinal,
multidimensional categorical data.

The library covers the full pipeline: single-round frequency oracles (GRR,
SUE, OUE), two-round memoization protocols with budget solving under an
(eps_inf, eps_1) pair, the adaptive one-attribute-per-client randomizer,
server-side aggregation, and a reproducible Monte Carlo harness with a CLI.
"""

from .aggregator import Aggregator, CountMatrix, EstimateTable
from .datasets import EncodedDataset, SyntheticSpec, load_dataset, synthesize_dataset
from .errors import (
    ConstantColumn,
    DegenerateChannel,
    DimensionMismatch,
    DomainTooSmall,
    EmptyCollection,
    InfeasibleBudget,
    LdpError,
    MalformedChannel,
    MalformedCsv,
    MissingParameters,
    NonPositiveEpsilon,
    ShapeMismatch,
    UnknownAttribute,
    ValueOutOfDomain,
    ZeroBaseline,
)
from .experiment import (
    ExperimentConfig,
    ExperimentResult,
    accuracy_gain,
    mse_avg,
    run_experiment,
    write_results,
)
from .longitudinal import (
    L_GRR,
    L_OSUE,
    L_OUE,
    L_SOUE,
    L_SUE,
    LONGITUDINAL_FAMILIES,
    BudgetPair,
    LongitudinalParams,
    MemoState,
    approx_variance_longitudinal,
    eps1_of,
    estimate_longitudinal,
    memoize,
    privacy_after,
    report,
    solve_params,
    variance_longitudinal,
)
from .multidim import (
    ClientState,
    TimedReport,
    allomfree_init,
    allomfree_report,
    choose_protocol,
    format_report_line,
    optimal_r,
    parse_report_line,
    smp_variance,
    spl_variance,
)
from .oracles import (
    GRR,
    OUE,
    SINGLE_ROUND_FAMILIES,
    SUE,
    DomainSpec,
    RoundParams,
    estimate,
    ldp_audit,
    make_params,
    perturb,
    theoretical_variance,
    ue_audit,
)
from .tables import emit_variance_tables

__version__ = "0.1.0"
