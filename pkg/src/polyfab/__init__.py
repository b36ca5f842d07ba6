"""polyfab: function-learning models built from feature expansions,
fabricated weight matrices, and additive residual paths."""

from .errors import (ConfigError, DomainError, PolyfabError, ShapeError,
                     TrainDivergence)
from .expansions import Expansion, make_expansion
from .reconciliations import Reconciliation, make_reconciliation
from .remainders import Remainder, make_remainder
from .distributions import DistributionSpec, MultivariateNormal
from .model import Head, Layer, Model, build_head, build_model
from .train import (Adam, SGD, TrainReport, accuracy, cross_entropy_loss, fit,
                    grad_check, mse_loss)
from .data import (Dataset, FunctionDef, MeanStd, MinMax, builtin_functions,
                   downsample, export_csv, gen_function_dataset, load_csv,
                   load_idx)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DomainError", "PolyfabError", "ShapeError", "TrainDivergence",
    "Expansion", "make_expansion", "Reconciliation", "make_reconciliation",
    "Remainder", "make_remainder", "DistributionSpec", "MultivariateNormal",
    "Head", "Layer", "Model", "build_head", "build_model",
    "Adam", "SGD", "TrainReport", "accuracy", "cross_entropy_loss", "fit",
    "grad_check", "mse_loss",
    "Dataset", "FunctionDef", "MeanStd", "MinMax", "builtin_functions",
    "downsample", "export_csv", "gen_function_dataset", "load_csv", "load_idx",
    "__version__",
]
