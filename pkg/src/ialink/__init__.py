"""Link-level simulation of interference alignment with limited, delayed
feedback over time-variant channels.

Submodules
----------
config     simulation parameters and flat config-file parsing
channel    time-variant frequency-selective Rayleigh links and pilots
dps        discrete prolate spheroidal basis and dimension rules
predictor  reduced-rank estimation and prediction
feedback   coefficient whitening and direction quantization
ia         closed-form alignment, rotation search, rates and leakage
solver     per-frame design kernel (compiled when available)
analysis   closed-form leakage and rate-loss bounds
baseline   static quantized impulse-response feedback
harness    scenarios, paired Monte Carlo trials, result tables
cli        command line front end
"""

from . import (analysis, baseline, channel, cli, config, dps, feedback,
               harness, ia, predictor, solver, svgplot)
from .config import ConfigError, SimConfig, doppler_from_velocity, read_config
from .harness import (ResultRow, ResultTable, Scenario, emit, from_csv,
                      presets, run_scenario, run_trial, to_csv)

__version__ = "0.1.0"

__all__ = [
    "analysis", "baseline", "channel", "cli", "config", "dps", "feedback",
    "harness", "ia", "predictor", "solver", "svgplot",
    "ConfigError", "SimConfig", "doppler_from_velocity", "read_config",
    "ResultRow", "ResultTable", "Scenario", "emit", "from_csv", "presets",
    "run_scenario", "run_trial", "to_csv",
    "__version__",
]
