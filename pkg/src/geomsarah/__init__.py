"""Geom-SARAH: variance-reduced stochastic optimization with geometric epochs."""

from .data import (
    LibSVMParseError,
    SparseDataset,
    dump_libsvm,
    load_libsvm,
    parse_libsvm,
    row_sq_norms,
    synth_logistic,
)
from .objective import LogisticNcvx
from .optimizers import (
    CountingOracle,
    DivergenceError,
    EpochRecord,
    RunTrace,
    geom_sarah_epoch,
    run,
    run_baseline,
    run_geom_sarah,
    theorem1_statistical_check,
)
from .rand import (
    RngStream,
    TailDistribution,
    geom_sample,
    geometrization_identity_check,
    sample_without_replacement,
    tail_index,
)
from .schedules import (
    EpochParams,
    Kind,
    Schedule,
    baseline_schedule,
    e_schedule,
    nonadaptive_schedule,
    q_schedule,
)

__version__ = "0.1.0"
