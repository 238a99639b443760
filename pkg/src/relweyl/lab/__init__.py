"""Experiment runner: configs, h-ladders, convergence fits and reports."""

from relweyl.lab.config import load_config, normalize
from relweyl.lab.experiments import (run, run_classical, run_exponents, run_gse_scaling,
                                     run_ims_check, run_mollify_slopes, run_relative,
                                     run_trace_neg, run_weyl)
from relweyl.lab.fit import ConvergenceFit, fit_rate
from relweyl.lab.report import Report, emit, parse

__all__ = ["load_config", "normalize", "run", "run_classical", "run_exponents",
           "run_gse_scaling", "run_ims_check", "run_mollify_slopes", "run_relative",
           "run_trace_neg", "run_weyl", "ConvergenceFit", "fit_rate", "Report", "emit", "parse"]
