"""Two-level least-squares SVR for inputs with unequal sample sizes."""

from ._kernels import USING_NUMBA
from .errors import (CsvSchemaError, DegenerateInputError, GenerationError, HlsvrError,
                     InputShapeError, IntegrityError, InvalidInputError, ModelFormatError,
                     NumericalFailure, TuningError)
from .hierarchical import (GroupedDataset, HighLevelPolicy, HlsvrModel, fit_hlsvr,
                           predict_batch, predict_hlsvr)
from .lssvr import KernelParams, LssvrModel, fit_lssvr, gram_matrix, predict_lssvr, rbf_kernel
from .tuning import TuningConfig, grid_search_cv

__version__ = "0.1.0"
