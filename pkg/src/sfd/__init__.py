"""Spatial first differences: differenced cross-sectional regression with
spatial orderings, robust inference, simulation and robustness checks."""

from .dataset import Schema, SpatialDataset, TransformSpec, apply_transforms, load_csv
from .differencing import (BiasDecomposition, DifferencedDesign, decompose_bias, difference,
                           spatial_double_difference, spatial_first_difference)
from .errors import (CollinearityError, DomainError, EmptyDesignError, IntegrityError,
                     ParseError, SchemaError, SFDError, StructureError)
from .estimation import FitResult, fit, ols, robinson_fit, with_se
from .inference import SEMethod, yatchew_variance
from .ordering import OrderedPath, assign_channels, order_1d, order_grid
from .simulation import DGPConfig, MonteCarloReport, monte_carlo

__version__ = "0.1.0"

__all__ = [
    "BiasDecomposition", "CollinearityError", "DGPConfig", "DifferencedDesign", "DomainError",
    "EmptyDesignError", "FitResult", "IntegrityError", "MonteCarloReport", "OrderedPath",
    "ParseError", "SEMethod", "SFDError", "Schema", "SchemaError", "SpatialDataset",
    "StructureError", "TransformSpec", "apply_transforms", "assign_channels", "decompose_bias",
    "difference", "fit", "load_csv", "monte_carlo", "ols", "order_1d", "order_grid",
    "robinson_fit", "spatial_double_difference", "spatial_first_difference", "with_se",
    "yatchew_variance",
]
