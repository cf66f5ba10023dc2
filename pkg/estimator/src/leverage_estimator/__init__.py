"""Neural estimators for the leverage-map parameters."""

__version__ = "0.1.0"

from .data import DataContractError, LengthError, load_series_csv, write_predictions
from .model import (CNN1_PARAM_COUNT, CNN2_PARAM_COUNT, INPUT_LENGTH,
                    build_model, trainable_parameter_count)
from .predict import predict_file
from .train import train_models
