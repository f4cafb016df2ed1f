"""Small fully connected ReLU networks trained with Adam on tiny datasets.

Training follows a shuffle-heavy protocol suited to very small sample
counts: every epoch reshuffles the training rows, holds out the last
0.3 fraction for validation, takes one full-batch Adam step on the rest,
and tracks the best validation loss for early stopping with exact
best-weight restoration.
"""
from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import DesignMatrix, ParameterSpace, epoch_split, normalize_inputs
from .errors import TrainingDiverged


@dataclass(frozen=True)
class MlpArchitecture:
    """Input width, 1-3 hidden ReLU layers, linear output layer."""

    input_dim: int
    hidden_widths: tuple[int, ...]
    output_dim: int

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input and output dims must be positive")
        if not 1 <= len(self.hidden_widths) <= 3:
            raise ValueError("need between 1 and 3 hidden layers")
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError("hidden widths must be positive")

    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_widths, self.output_dim]
        return list(zip(dims[:-1], dims[1:]))

    def parameter_count(self) -> int:
        return sum(fi * fo + fo for fi, fo in self.layer_dims())


@dataclass(frozen=True)
class MlpWeights:
    """Per-layer weight matrices (fan_in x fan_out) and bias vectors."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def copy(self) -> "MlpWeights":
        return MlpWeights(
            weights=tuple(w.copy() for w in self.weights),
            biases=tuple(b.copy() for b in self.biases),
        )


@dataclass(frozen=True)
class NormStats:
    """Input box bounds plus per-column mean/std of the training targets."""

    input_lower: np.ndarray
    input_upper: np.ndarray
    target_mean: np.ndarray
    target_std: np.ndarray

    @classmethod
    def fit(
        cls, space: ParameterSpace, targets: np.ndarray, standardize: bool = True
    ) -> "NormStats":
        if standardize:
            mean = targets.mean(axis=0)
            std = targets.std(axis=0)
            std = np.where(std < 1e-12, 1.0, std)
        else:
            mean = np.zeros(targets.shape[1])
            std = np.ones(targets.shape[1])
        return cls(
            input_lower=space.lower.copy(),
            input_upper=space.upper.copy(),
            target_mean=mean,
            target_std=std,
        )

    def normalize_inputs(self, raw: np.ndarray) -> np.ndarray:
        return (raw - self.input_lower) / (self.input_upper - self.input_lower)

    def standardize_targets(self, raw: np.ndarray) -> np.ndarray:
        return (raw - self.target_mean) / self.target_std

    def destandardize_targets(self, std_space: np.ndarray) -> np.ndarray:
        return std_space * self.target_std + self.target_mean


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    max_epochs: int = 800
    patience: int = 100
    val_fraction: float = 0.3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    fixed_val: bool = False
    standardize_targets: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not 0 < self.val_fraction < 1:
            raise ValueError("validation fraction must be in (0, 1)")
        if self.patience > self.max_epochs:
            raise ValueError("patience cannot exceed max_epochs")


@dataclass
class TrainReport:
    """Per-epoch loss curves and the early-stopping bookkeeping."""

    fit_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0
    best_val_loss: float = float("inf")
    best_val_indices: np.ndarray | None = None
    seconds: float = 0.0

    def save_loss_curve(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "fit_loss", "val_loss"])
            for i, (f, v) in enumerate(zip(self.fit_losses, self.val_losses), start=1):
                writer.writerow([i, repr(f), repr(v)])


class EarlyStopping:
    """Track the best validation loss and stop after a patience window.

    Improvement means strictly lower loss by any amount. The snapshot taken
    at the best epoch is returned verbatim, so restoration is exact.
    """

    def __init__(self, patience: int):
        self.patience = patience
        self.best_epoch = 0
        self.best_loss = float("inf")
        self.best_weights: MlpWeights | None = None
        self.best_payload = None

    def update(self, epoch: int, val_loss: float, weights: MlpWeights, payload=None) -> bool:
        """Record epoch's result; return True when training should stop."""
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.best_weights = weights.copy()
            self.best_payload = payload
            return False
        return epoch - self.best_epoch >= self.patience


def init_mlp(arch: MlpArchitecture, seed: int) -> MlpWeights:
    """He-uniform weights (bound sqrt(6/fan_in)) and zero biases."""
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in arch.layer_dims():
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpWeights(weights=tuple(weights), biases=tuple(biases))


def forward(weights: MlpWeights, X: np.ndarray) -> np.ndarray:
    """Affine + ReLU through the hidden layers, linear output."""
    h = np.asarray(X, dtype=np.float64)
    if not np.isfinite(h).all():
        raise ValueError("non-finite network input")
    n_layers = len(weights.weights)
    for i in range(n_layers - 1):
        h = np.maximum(h @ weights.weights[i] + weights.biases[i], 0.0)
    return h @ weights.weights[-1] + weights.biases[-1]


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    return float(np.mean((p - t) ** 2))


def loss_gradient(
    weights: MlpWeights, X: np.ndarray, Y: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray], float]:
    """Backpropagated gradient of mse_loss(forward(X), Y).

    Returns (weight grads, bias grads, loss). The ReLU subgradient at
    exactly zero is taken as zero.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    n_layers = len(weights.weights)

    activations = [X]
    h = X
    for i in range(n_layers - 1):
        z = h @ weights.weights[i] + weights.biases[i]
        h = np.maximum(z, 0.0)
        activations.append(h)
    pred = h @ weights.weights[-1] + weights.biases[-1]

    if pred.shape != Y.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {Y.shape}")
    loss = float(np.mean((pred - Y) ** 2))

    delta = 2.0 * (pred - Y) / pred.size
    w_grads: list[np.ndarray] = [np.empty(0)] * n_layers
    b_grads: list[np.ndarray] = [np.empty(0)] * n_layers
    for i in range(n_layers - 1, -1, -1):
        w_grads[i] = activations[i].T @ delta
        b_grads[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights.weights[i].T) * (activations[i] > 0.0)
    return w_grads, b_grads, loss


@dataclass
class AdamState:
    m_weights: list[np.ndarray]
    v_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_biases: list[np.ndarray]

    @classmethod
    def zeros_like(cls, weights: MlpWeights) -> "AdamState":
        return cls(
            m_weights=[np.zeros_like(w) for w in weights.weights],
            v_weights=[np.zeros_like(w) for w in weights.weights],
            m_biases=[np.zeros_like(b) for b in weights.biases],
            v_biases=[np.zeros_like(b) for b in weights.biases],
        )


def adam_step(
    weights: MlpWeights,
    w_grads: list[np.ndarray],
    b_grads: list[np.ndarray],
    state: AdamState,
    t: int,
    config: TrainConfig,
) -> MlpWeights:
    """One Adam update with bias correction; mutates state, returns new weights."""
    if t < 1:
        raise ValueError("Adam step counter starts at 1")
    b1, b2, eps, lr = config.beta1, config.beta2, config.eps, config.learning_rate
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_w = []
    new_b = []
    for i, (w, b) in enumerate(zip(weights.weights, weights.biases)):
        state.m_weights[i] = b1 * state.m_weights[i] + (1 - b1) * w_grads[i]
        state.v_weights[i] = b2 * state.v_weights[i] + (1 - b2) * w_grads[i] ** 2
        state.m_biases[i] = b1 * state.m_biases[i] + (1 - b1) * b_grads[i]
        state.v_biases[i] = b2 * state.v_biases[i] + (1 - b2) * b_grads[i] ** 2
        new_w.append(w - lr * (state.m_weights[i] / c1) / (np.sqrt(state.v_weights[i] / c2) + eps))
        new_b.append(b - lr * (state.m_biases[i] / c1) / (np.sqrt(state.v_biases[i] / c2) + eps))
    return MlpWeights(weights=tuple(new_w), biases=tuple(new_b))


def train(
    arch: MlpArchitecture,
    design: DesignMatrix,
    targets: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator | None = None,
) -> tuple[MlpWeights, NormStats, TrainReport]:
    """Fit the network to raw targets with per-epoch reshuffled validation.

    Each epoch: reshuffle, split off the trailing validation fraction, take
    one full-batch Adam step on the fit rows, then score the validation rows
    with the updated weights. Stops once the validation loss has not improved
    for `patience` epochs and returns the best epoch's weights exactly.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim != 2 or targets.shape[0] != design.n_samples:
        raise ValueError(
            f"targets shape {targets.shape} does not pair with {design.n_samples} design rows"
        )
    if not np.isfinite(targets).all():
        raise ValueError("targets must be finite")
    if arch.input_dim != design.dim or arch.output_dim != targets.shape[1]:
        raise ValueError("architecture dims do not match the data")

    if rng is None:
        rng = np.random.default_rng(config.seed)

    norm = NormStats.fit(design.space, targets, standardize=config.standardize_targets)
    Xn = normalize_inputs(design)
    Tn = norm.standardize_targets(targets)
    m = design.n_samples

    weights = init_mlp(arch, seed=int(rng.integers(0, 2**31 - 1)))
    state = AdamState.zeros_like(weights)
    stopper = EarlyStopping(patience=config.patience)
    report = TrainReport()
    started = time.perf_counter()

    split = None
    for epoch in range(1, config.max_epochs + 1):
        if split is None or not config.fixed_val:
            split = epoch_split(m, config.val_fraction, rng)
        w_grads, b_grads, fit_loss = loss_gradient(
            weights, Xn[split.fit_indices], Tn[split.fit_indices]
        )
        if not np.isfinite(fit_loss):
            raise TrainingDiverged(epoch, config.learning_rate)
        weights = adam_step(weights, w_grads, b_grads, state, epoch, config)
        val_loss = mse_loss(forward(weights, Xn[split.val_indices]), Tn[split.val_indices])
        if not np.isfinite(val_loss):
            raise TrainingDiverged(epoch, config.learning_rate)

        report.fit_losses.append(fit_loss)
        report.val_losses.append(val_loss)
        if stopper.update(epoch, val_loss, weights, payload=split.val_indices.copy()):
            report.stopped_epoch = epoch
            break
    else:
        report.stopped_epoch = config.max_epochs

    assert stopper.best_weights is not None
    report.best_epoch = stopper.best_epoch
    report.best_val_loss = stopper.best_loss
    report.best_val_indices = stopper.best_payload
    report.seconds = time.perf_counter() - started
    return stopper.best_weights, norm, report


def predict(
    weights: MlpWeights,
    arch: MlpArchitecture,
    norm: NormStats,
    X_raw: DesignMatrix | np.ndarray,
) -> np.ndarray:
    """Normalize raw inputs, run the network, and de-standardize the outputs."""
    values = X_raw.values if isinstance(X_raw, DesignMatrix) else np.asarray(X_raw, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != arch.input_dim:
        raise ValueError(f"input shape {values.shape} does not match d={arch.input_dim}")
    if np.any(values < norm.input_lower) or np.any(values > norm.input_upper):
        warnings.warn(
            "inputs outside the training parameter space; predictions are extrapolations",
            stacklevel=2,
        )
    Xn = norm.normalize_inputs(values)
    return norm.destandardize_targets(forward(weights, Xn))
