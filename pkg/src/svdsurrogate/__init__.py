"""SVD-compressed neural-network surrogates for many-output simulators."""

from .bundle import SurrogateBundle, load_bundle, save_bundle
from .dataset import (
    DesignMatrix,
    EpochSplit,
    OutputIndexMap,
    OutputMatrix,
    ParameterSpace,
    epoch_split,
    load_design,
    load_matrix,
    load_outputs,
    normalize_inputs,
    sample_design,
    save_design,
    save_matrix,
    save_outputs,
)
from .errors import DataError, TrainingDiverged
from .metrics import EvalReport, evaluate, mse, r2_score
from .mlp import (
    MlpArchitecture,
    MlpWeights,
    NormStats,
    TrainConfig,
    TrainReport,
    forward,
    init_mlp,
    mse_loss,
    predict,
    train,
)
from .pipeline import FitResult, fit_surrogate
from .svd import SvdBasis, info_fraction, project, reconstruct, select_k, truncated_svd
from .synth import SynthConfig, SynthModel, build_model, generate_dataset, simulate
from .tpe import (
    Hyperparams,
    SearchSpace,
    TpeConfig,
    Trial,
    run_random_search,
    run_tuning,
    sample_random,
    split_history,
    suggest,
)

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DesignMatrix",
    "EpochSplit",
    "EvalReport",
    "FitResult",
    "Hyperparams",
    "MlpArchitecture",
    "MlpWeights",
    "NormStats",
    "OutputIndexMap",
    "OutputMatrix",
    "ParameterSpace",
    "SearchSpace",
    "SurrogateBundle",
    "SvdBasis",
    "SynthConfig",
    "SynthModel",
    "TpeConfig",
    "TrainConfig",
    "TrainReport",
    "TrainingDiverged",
    "Trial",
    "build_model",
    "epoch_split",
    "evaluate",
    "fit_surrogate",
    "forward",
    "generate_dataset",
    "info_fraction",
    "init_mlp",
    "load_bundle",
    "load_design",
    "load_matrix",
    "load_outputs",
    "mse",
    "mse_loss",
    "normalize_inputs",
    "predict",
    "project",
    "r2_score",
    "reconstruct",
    "run_random_search",
    "run_tuning",
    "sample_design",
    "sample_random",
    "save_bundle",
    "save_design",
    "save_matrix",
    "save_outputs",
    "select_k",
    "simulate",
    "split_history",
    "suggest",
    "train",
    "truncated_svd",
]
