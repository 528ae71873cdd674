"""Benchmark harness: data ingestion, synthetic generators, experiment runs."""

from .data import (Dataset, augment_collinear, minmax_scale, parse_libsvm,
                   parse_libsvm_path)
from .run import (CSV_HEADER, PRESETS, SUMMARY_HEADER, ExperimentConfig,
                  RunReport, SolverResult, build_config, parse_config_file,
                  run_experiment)
from .synth import synth_instance, synth_lrp, synth_lsrp

__all__ = [
    "Dataset", "augment_collinear", "minmax_scale", "parse_libsvm",
    "parse_libsvm_path", "CSV_HEADER", "PRESETS", "SUMMARY_HEADER",
    "ExperimentConfig", "RunReport", "SolverResult", "build_config",
    "parse_config_file", "run_experiment", "synth_instance", "synth_lrp",
    "synth_lsrp",
]
