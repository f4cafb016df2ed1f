"""Scripted benchmark experiments on the synthetic simulator.

Each experiment runs the full pipeline with derived seeds and returns plain
row dicts, so the results can be tabulated, written to CSV, or asserted on
directly.
"""
from __future__ import annotations

import csv
from pathlib import Path
from statistics import median

import numpy as np

from .errors import TrainingDiverged
from .metrics import evaluate
from .pipeline import fit_surrogate
from .synth import SynthConfig, SynthModel, build_model, generate_dataset
from .tpe import TpeConfig


def derive_seed(*parts: int) -> int:
    """Stable child seed from integer tags (avoids ad-hoc offset collisions)."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0] % (2**31 - 1))


def write_rows_csv(rows: list[dict], path: str | Path) -> None:
    if not rows:
        return
    fields = list(rows[0].keys())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def _test_set(model: SynthModel, m_test: int, seed: int, restrict: bool = False):
    return generate_dataset(model, m_test, derive_seed(seed, 9000, int(restrict)), restrict_viable=restrict)


def case_compare(
    config: SynthConfig,
    *,
    m_train: int = 20,
    direct_sizes: tuple[int, ...] = (20, 50, 100, 200),
    m_test: int = 1000,
    k: int = 5,
    tpe_trials: int = 100,
    seed: int = 0,
) -> list[dict]:
    """Compressed surrogate at one training size versus direct surrogates at
    several, all scored on one shared test set."""
    model = build_model(config)
    test_design, test_outputs = _test_set(model, m_test, seed)

    rows: list[dict] = []
    design, outputs = generate_dataset(model, m_train, derive_seed(seed, 1))
    tpe = TpeConfig(n_trials=tpe_trials, seed=derive_seed(seed, 2))
    fit = fit_surrogate(design, outputs, k=k, tpe_config=tpe, seed=derive_seed(seed, 3))
    report = evaluate(test_outputs, fit.bundle.predict(test_design.values))
    hidden = fit.bundle.arch.hidden_widths
    lr = fit.bundle.metadata["learning_rate"]
    rows.append(
        {
            "case": "svd",
            "m_train": m_train,
            "k": k,
            "hidden": "x".join(map(str, hidden)),
            "learning_rate": lr,
            "r2": report.overall_r2,
            "mse": report.overall_mse,
            "train_seconds": round(fit.report.seconds, 3),
            "parameters": fit.parameter_count,
            "status": "ok",
        }
    )

    for m_direct in direct_sizes:
        d, o = generate_dataset(model, m_direct, derive_seed(seed, 4, m_direct))
        row = {
            "case": "direct",
            "m_train": m_direct,
            "k": "",
            "hidden": "x".join(map(str, hidden)),
            "learning_rate": lr,
            "r2": float("nan"),
            "mse": float("nan"),
            "train_seconds": float("nan"),
            "parameters": "",
            "status": "ok",
        }
        try:
            fit_d = fit_surrogate(
                d,
                o,
                direct=True,
                hidden_widths=hidden,
                learning_rate=lr,
                seed=derive_seed(seed, 5, m_direct),
            )
        except TrainingDiverged as exc:
            row["status"] = f"diverged at epoch {exc.epoch}"
        else:
            rep = evaluate(test_outputs, fit_d.bundle.predict(test_design.values))
            row.update(
                r2=rep.overall_r2,
                mse=rep.overall_mse,
                train_seconds=round(fit_d.report.seconds, 3),
                parameters=fit_d.parameter_count,
            )
        rows.append(row)
    return rows


def ntrain_sweep(
    config: SynthConfig,
    *,
    sizes: tuple[int, ...] = (20, 200, 1000),
    n_seeds: int = 3,
    m_test: int = 1000,
    k: int = 5,
    hidden_widths: tuple[int, ...] = (10, 10),
    learning_rate: float = 0.02,
    seed: int = 0,
) -> list[dict]:
    """Accuracy as the training ensemble grows, repeated over seeds."""
    model = build_model(config)
    test_design, test_outputs = _test_set(model, m_test, seed)

    rows: list[dict] = []
    for m_train in sizes:
        scores = []
        for rep_idx in range(n_seeds):
            d, o = generate_dataset(model, m_train, derive_seed(seed, 10, m_train, rep_idx))
            fit = fit_surrogate(
                d,
                o,
                k=k,
                hidden_widths=hidden_widths,
                learning_rate=learning_rate,
                seed=derive_seed(seed, 11, m_train, rep_idx),
            )
            report = evaluate(test_outputs, fit.bundle.predict(test_design.values))
            scores.append(report.overall_r2)
            rows.append(
                {
                    "m_train": m_train,
                    "replicate": rep_idx,
                    "r2": report.overall_r2,
                    "mse": report.overall_mse,
                    "median_r2": "",
                }
            )
        rows.append(
            {
                "m_train": m_train,
                "replicate": "median",
                "r2": "",
                "mse": "",
                "median_r2": median(scores),
            }
        )
    return rows


def subdomain_compare(
    config: SynthConfig,
    *,
    m_train: int = 20,
    n_seeds: int = 3,
    m_test: int = 1000,
    k: int = 5,
    hidden_widths: tuple[int, ...] = (10, 10),
    learning_rate: float = 0.02,
    seed: int = 0,
) -> list[dict]:
    """Full-domain training versus training and testing in the viable
    subdomain where the threshold rule never forces zeros."""
    model = build_model(config)
    rows: list[dict] = []
    for restrict in (False, True):
        test_design, test_outputs = _test_set(model, m_test, seed, restrict=restrict)
        overall = []
        worst = []
        for rep_idx in range(n_seeds):
            d, o = generate_dataset(
                model, m_train, derive_seed(seed, 20, int(restrict), rep_idx), restrict_viable=restrict
            )
            fit = fit_surrogate(
                d,
                o,
                k=k,
                hidden_widths=hidden_widths,
                learning_rate=learning_rate,
                seed=derive_seed(seed, 21, int(restrict), rep_idx),
            )
            report = evaluate(test_outputs, fit.bundle.predict(test_design.values))
            loc_worst = float(np.nanmin(report.per_location_r2))
            overall.append(report.overall_r2)
            worst.append(loc_worst)
            rows.append(
                {
                    "domain": "restricted" if restrict else "full",
                    "replicate": rep_idx,
                    "r2": report.overall_r2,
                    "worst_location_r2": loc_worst,
                    "median_r2": "",
                    "median_worst_location_r2": "",
                }
            )
        rows.append(
            {
                "domain": "restricted" if restrict else "full",
                "replicate": "median",
                "r2": "",
                "worst_location_r2": "",
                "median_r2": median(overall),
                "median_worst_location_r2": median(worst),
            }
        )
    return rows
