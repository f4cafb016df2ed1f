"""End-to-end fitting: compress outputs, train the network, build a bundle.

Two modes mirror the comparison the toolkit exists to make: the compressed
path trains on k singular-value scores and expands predictions back to the
full field; the direct path trains one network on every output column.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import SurrogateBundle
from .dataset import DesignMatrix, OutputMatrix
from .mlp import MlpArchitecture, TrainConfig, TrainReport, train
from .svd import SvdBasis, project, select_k, truncated_svd
from .tpe import Hyperparams, SearchSpace, TpeConfig, Trial, run_tuning


@dataclass(frozen=True)
class FitResult:
    bundle: SurrogateBundle
    report: TrainReport
    tuned_params: Hyperparams | None
    tpe_history: list[Trial] | None

    @property
    def parameter_count(self) -> int:
        return self.bundle.arch.parameter_count()


def _slice_basis(full: SvdBasis, k: int) -> SvdBasis:
    return SvdBasis(
        k=k,
        singular_values_all=full.singular_values_all,
        right_vectors=full.right_vectors[:, :k],
        degenerate=full.degenerate,
    )


def make_tuning_objective(
    design: DesignMatrix,
    targets: np.ndarray,
    max_epochs: int = 800,
    patience: int = 100,
    val_fraction: float = 0.3,
    fixed_val: bool = False,
    standardize_targets: bool = True,
):
    """Objective for the tuner: best validation MSE of a full training run."""

    def objective(params: Hyperparams, seed: int) -> float:
        arch = MlpArchitecture(
            input_dim=design.dim,
            hidden_widths=params.hidden_widths(),
            output_dim=targets.shape[1],
        )
        config = TrainConfig(
            learning_rate=params.learning_rate,
            max_epochs=max_epochs,
            patience=patience,
            val_fraction=val_fraction,
            seed=seed,
            fixed_val=fixed_val,
            standardize_targets=standardize_targets,
        )
        _, _, report = train(arch, design, targets, config)
        return report.best_val_loss

    return objective


def fit_surrogate(
    design: DesignMatrix,
    outputs: OutputMatrix,
    *,
    k: int | None = None,
    target_fraction: float | None = None,
    direct: bool = False,
    hidden_widths: tuple[int, ...] = (10, 10),
    learning_rate: float = 0.01,
    max_epochs: int = 800,
    patience: int = 100,
    val_fraction: float = 0.3,
    fixed_val: bool = False,
    standardize_targets: bool | None = None,
    tpe_config: TpeConfig | None = None,
    search_space: SearchSpace | None = None,
    seed: int = 0,
) -> FitResult:
    """Train a surrogate on paired design/output samples.

    Exactly one of ``k`` / ``target_fraction`` chooses the compression rank
    unless ``direct`` is set, which trains on the raw output columns. With a
    ``tpe_config`` the architecture and learning rate come from a tuning run
    instead of the fixed arguments.

    Score targets are z-scored per column by default (their scales span
    orders of magnitude); the direct route trains on raw output units the
    way the uncompressed baseline is usually run.
    """
    if design.n_samples != outputs.n_samples:
        raise ValueError(
            f"{design.n_samples} design rows vs {outputs.n_samples} output rows"
        )
    if direct:
        if k is not None or target_fraction is not None:
            raise ValueError("direct mode ignores k/target_fraction; do not set them")
    elif (k is None) == (target_fraction is None):
        raise ValueError("set exactly one of k or target_fraction")

    basis: SvdBasis | None = None
    if direct:
        targets = outputs.values
    else:
        k_max = min(outputs.n_samples, outputs.n_outputs)
        full_basis, _ = truncated_svd(outputs, k_max)
        if target_fraction is not None:
            k = select_k(full_basis, target_fraction)
        if not 1 <= k <= k_max:
            raise ValueError(f"k={k} outside 1..{k_max}")
        basis = _slice_basis(full_basis, k)
        targets = project(outputs, basis)
        # Directions beyond the numerical rank are exactly null for the
        # training rows; drop the round-off dust there so standardization
        # cannot inflate it into fake targets.
        targets[:, basis.singular_values_all[:k] == 0.0] = 0.0

    if standardize_targets is None:
        standardize_targets = not direct

    tuned: Hyperparams | None = None
    history: list[Trial] | None = None
    if tpe_config is not None:
        space = search_space or SearchSpace()
        objective = make_tuning_objective(
            design, targets, max_epochs, patience, val_fraction, fixed_val,
            standardize_targets=standardize_targets,
        )
        best, history = run_tuning(objective, space, tpe_config)
        tuned = best.params
        hidden_widths = tuned.hidden_widths()
        learning_rate = tuned.learning_rate

    arch = MlpArchitecture(
        input_dim=design.dim,
        hidden_widths=tuple(hidden_widths),
        output_dim=targets.shape[1],
    )
    config = TrainConfig(
        learning_rate=learning_rate,
        max_epochs=max_epochs,
        patience=patience,
        val_fraction=val_fraction,
        seed=seed,
        fixed_val=fixed_val,
        standardize_targets=standardize_targets,
    )
    weights, norm, report = train(arch, design, targets, config)

    metadata = {
        "mode": "direct" if direct else "svd",
        "hidden_widths": list(arch.hidden_widths),
        "learning_rate": learning_rate,
        "max_epochs": max_epochs,
        "patience": patience,
        "val_fraction": val_fraction,
        "fixed_val": fixed_val,
        "standardize_targets": standardize_targets,
        "train_seed": seed,
        "tuned": tuned is not None,
        "best_epoch": report.best_epoch,
        "stopped_epoch": report.stopped_epoch,
        "best_val_loss": report.best_val_loss,
        "parameter_count": arch.parameter_count(),
    }
    if tuned is not None:
        metadata["tuned_params"] = {
            "depth": tuned.depth,
            "width1": tuned.width1,
            "width2": tuned.width2,
            "width3": tuned.width3,
            "learning_rate": tuned.learning_rate,
        }

    bundle = SurrogateBundle(
        space=design.space,
        index_map=outputs.index_map,
        arch=arch,
        weights=weights,
        norm=norm,
        basis=basis,
        metadata=metadata,
    )
    return FitResult(bundle=bundle, report=report, tuned_params=tuned, tpe_history=history)
