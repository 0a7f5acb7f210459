# Experiment harness behind the relflat command line
from .config import (
    BatchConfig,
    CsvSpec,
    DatasetSpec,
    IdxSpec,
    MetricsConfig,
    RunConfig,
    TwoMoonsSpec,
    apply_env,
    dump_config,
    load_run_config,
    parse_model,
    read_json,
)
from .datasets import Splits, load_data_argument, provision
from .metrics import COLUMNS, MetricsRow, MetricsWriter
from .trainer import TrainResult, Trainer, full_set_kappa, train
from .gradcheck import GradcheckConfig, GradcheckReport, run_gradcheck, synthetic_batch
from .bench import BENCH_BATCH, BENCH_MODES, BenchRow, bench_csv, parse_sizes, run_bench
from .study import Study, StudyConfig, load_study_config, run_study, summarize

__all__ = [
    "BatchConfig",
    "CsvSpec",
    "DatasetSpec",
    "IdxSpec",
    "MetricsConfig",
    "RunConfig",
    "TwoMoonsSpec",
    "apply_env",
    "dump_config",
    "load_run_config",
    "parse_model",
    "read_json",
    "Splits",
    "load_data_argument",
    "provision",
    "COLUMNS",
    "MetricsRow",
    "MetricsWriter",
    "TrainResult",
    "Trainer",
    "full_set_kappa",
    "train",
    "GradcheckConfig",
    "GradcheckReport",
    "run_gradcheck",
    "synthetic_batch",
    "BENCH_BATCH",
    "BENCH_MODES",
    "BenchRow",
    "bench_csv",
    "parse_sizes",
    "run_bench",
    "Study",
    "StudyConfig",
    "load_study_config",
    "run_study",
    "summarize",
]
