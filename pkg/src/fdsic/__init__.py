"""Digital self-interference cancellation for full-duplex transceivers."""

__version__ = "0.1.0"

from .architectures import ArchitectureConfig, build_network, preset
from .complexity import ComplexityReport, complexity_of, reduction_table
from .linear import fit_linear, predict_linear
from .metrics import CancellationReport, cancellation_db, evaluate_canceler, psd_welch
from .pipeline import TwoStageCanceler, fit_canceler, load_canceler
from .poly import PolyBasisSpec, fit_poly, predict_poly
from .signals import ComplexSignal, DatasetConfig, dataset_preset, generate_dataset, split_dataset

__all__ = [
    "ArchitectureConfig", "CancellationReport", "ComplexSignal", "ComplexityReport",
    "DatasetConfig", "PolyBasisSpec", "TwoStageCanceler", "build_network", "cancellation_db",
    "complexity_of", "dataset_preset", "evaluate_canceler", "fit_canceler", "fit_linear",
    "fit_poly", "generate_dataset", "load_canceler", "predict_linear", "predict_poly",
    "preset", "psd_welch", "reduction_table", "split_dataset",
]
