"""Return-prediction models and their training protocol."""
from .base import PredictiveModel
from .baselines import FFNNModel, LinearFit, LRModel, LSTMRNNModel, SVRModel, fit_lr, fit_svr, predict_lr, predict_svr
from .market_attention import MAModel, MAParams, MARNNModel, MARNNParams, ma_forward, marnn_forward
from .training import EpochMetric, EvaluationResult, TrainResult, evaluate, train, train_steps

__all__ = [
    "EpochMetric",
    "EvaluationResult",
    "FFNNModel",
    "LRModel",
    "LSTMRNNModel",
    "LinearFit",
    "MAModel",
    "MAParams",
    "MARNNModel",
    "MARNNParams",
    "PredictiveModel",
    "SVRModel",
    "TrainResult",
    "evaluate",
    "fit_lr",
    "fit_svr",
    "ma_forward",
    "marnn_forward",
    "predict_lr",
    "predict_svr",
    "train",
    "train_steps",
]
