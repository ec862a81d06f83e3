"""Multi-agent simulation of algorithmic recourse under competitive selection.

A fixed number of applicants is accepted each step; rejected applicants
receive minimal-cost recommendations that reach the acceptance threshold and
adapt toward them with noisy effort while new applicants keep arriving.
The package provides the simulation engine, selection and retraining rules,
log-based metrics, and an experiment harness with a CLI.
"""

__version__ = "0.1.0"

from .core import (
    FEATURE_DIM,
    Agent,
    AdaptationMode,
    ConfigError,
    EventLog,
    EventRecord,
    GeneratorCase,
    Group,
    Outcome,
    PopulationSpec,
    RetrainingRule,
    RngStreams,
    SelectionRule,
    SimulationConfig,
    config_hash,
)
from .decision import (
    LinearScorer,
    RetrainResult,
    SelectionResult,
    cns_quotas,
    fit_logistic,
    retrain_cda,
    retrain_grr,
    select_cns,
    select_top_k,
)
from .engine import RunResult, read_run, replay, run, run_dir_name, write_run
from .metrics import (
    MetricsReport,
    OrderingCheck,
    SuccessRecord,
    compute_report,
    demographic_parity,
    demographic_parity_cumulative,
    dttr,
    effort_of,
    etr,
    recourse_cost_ordering,
    retr,
    success_records,
    successful_set,
    ttr,
    wasted_effort,
)
from .population import ArrivalBatch, sample_arrivals, sample_population
from .recourse import (
    Recommendation,
    ThresholdUnreachable,
    adapt,
    adapt_batch,
    recommend,
    recommend_batch,
    sample_effort,
    sample_efforts,
)

__all__ = [
    "FEATURE_DIM",
    "Agent",
    "AdaptationMode",
    "ArrivalBatch",
    "ConfigError",
    "EventLog",
    "EventRecord",
    "GeneratorCase",
    "Group",
    "LinearScorer",
    "MetricsReport",
    "OrderingCheck",
    "Outcome",
    "PopulationSpec",
    "Recommendation",
    "RetrainResult",
    "RetrainingRule",
    "RngStreams",
    "RunResult",
    "SelectionResult",
    "SelectionRule",
    "SimulationConfig",
    "SuccessRecord",
    "ThresholdUnreachable",
    "adapt",
    "adapt_batch",
    "cns_quotas",
    "compute_report",
    "config_hash",
    "demographic_parity",
    "demographic_parity_cumulative",
    "dttr",
    "effort_of",
    "etr",
    "fit_logistic",
    "read_run",
    "recommend",
    "recommend_batch",
    "recourse_cost_ordering",
    "replay",
    "retr",
    "retrain_cda",
    "retrain_grr",
    "run",
    "run_dir_name",
    "sample_arrivals",
    "sample_effort",
    "sample_efforts",
    "sample_population",
    "select_cns",
    "select_top_k",
    "success_records",
    "successful_set",
    "ttr",
    "wasted_effort",
    "write_run",
]
