"""Discrete-event simulation and analysis of work-conserving multi-machine schedulers."""

from .analytics import (
    completion_lower_bound,
    cyclic_partition,
    empirical_cdf,
    fcfs_cross_check,
    lindley_closed_form,
    lindley_waits,
    lower_bounds,
    sample_stability,
    scaled_max_diagnostic,
    size_ratio,
    speed_routing_split,
    stability_stats,
)
from .disciplines import Discipline, DisciplineSpec, priority_order
from .engine import DEFAULT_SEED, audit_trace, check_determinism, job_count_curve, simulate
from .errors import (
    EmptyInstance,
    EmptySample,
    IncompatibleMode,
    IncompleteTrace,
    InvalidInstance,
    LengthMismatch,
    NonTermination,
    SchedError,
    TooLarge,
    UnsupportedDistribution,
    VerificationFailure,
)
from .generators import (
    Distribution,
    StochasticSpec,
    adversarial_ratio_bound,
    gen_adversarial,
    gen_stochastic,
    reference_workload,
    threshold_lift,
)
from .harness import ExperimentResult, ExperimentSpec, convergence_table, run_experiment, reference_experiment
from .model import Event, Fleet, Instance, Job, MetricsReport, Mode, ScheduleTrace, derive_metrics, validate_instance
from .oracles import OracleResult, opt_nonpreemptive, opt_preemptive_m1, verify_2B, verify_jobcount_inequality

__version__ = "0.1.0"
