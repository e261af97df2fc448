"""Distribution regression on sets of time series with path signatures."""
from __future__ import annotations

__version__ = "0.1.0"

from sigdr._backend import BACKEND
from sigdr.errors import DataError, NumericalError
from sigdr.measures import (expected_signature, pathwise_expected_signature, ses_feature_matrix,
                            ses_features)
from sigdr.parallel import get_threads, set_threads
from sigdr.sigkernel import GramMatrix, kes_gram, mmd_matrix, mmd_sq, pde_solve
from sigdr.signature import pathwise_signature, signature
from sigdr.streams import (Dataset, EmpiricalMeasure, TimeSeries, lead_lag, load_dataset,
                           save_dataset, subsample, time_augment)
from sigdr.tensor import TruncatedTensor, inner, tensor_exp, tensor_mul, term_count

__all__ = [
    "BACKEND", "DataError", "Dataset", "EmpiricalMeasure", "GramMatrix", "NumericalError",
    "TimeSeries", "TruncatedTensor", "expected_signature", "get_threads", "inner",
    "kes_gram", "lead_lag", "load_dataset", "mmd_matrix", "mmd_sq", "pathwise_expected_signature",
    "pathwise_signature", "pde_solve", "save_dataset", "ses_feature_matrix", "ses_features",
    "set_threads", "signature", "subsample", "tensor_exp", "tensor_mul", "term_count",
    "time_augment",
]
