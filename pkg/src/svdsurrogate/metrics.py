"""Prediction scoring: MSE and coefficient of determination (R^2).

R^2 per output column is 1 - sum((y - yhat)^2) / sum((y - ybar)^2) over the
test samples; columns whose truth has zero variance are undefined and get
skipped (the score would divide by zero). Per-location scores average a
location's defined yearly columns, per-year scores average across
locations, and the overall score averages all defined columns.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import OutputIndexMap, OutputMatrix

# A truth column counts as zero-variance when its deviation energy is this
# small relative to its raw energy (catches exact-constant columns that pick
# up rounding dust in the mean).
_ZERO_VAR_REL = 1e-15


@dataclass(frozen=True)
class EvalReport:
    overall_mse: float
    overall_r2: float
    pooled_r2: float
    per_output_r2: np.ndarray  # NaN where skipped
    per_location_r2: np.ndarray
    per_year_r2: np.ndarray
    skipped_outputs: tuple[int, ...]

    def summary_text(self) -> str:
        defined = ~np.isnan(self.per_location_r2)
        lines = [
            f"overall R2 (mean of defined outputs): {self.overall_r2:.6f}",
            f"overall MSE (pooled over all entries): {self.overall_mse:.6g}",
            f"pooled R2: {self.pooled_r2:.6f}",
            f"skipped zero-variance outputs: {len(self.skipped_outputs)}",
        ]
        if defined.any():
            loc_scores = self.per_location_r2
            best = int(np.nanargmax(loc_scores))
            worst = int(np.nanargmin(loc_scores))
            lines.append(f"best location: {best} (R2 {loc_scores[best]:.6f})")
            lines.append(f"worst location: {worst} (R2 {loc_scores[worst]:.6f})")
        return "\n".join(lines) + "\n"


def mse(y: np.ndarray, yhat: np.ndarray) -> float:
    """Mean squared difference over all entries."""
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {yhat.shape}")
    return float(np.mean((y - yhat) ** 2))


def r2_score(y: np.ndarray, yhat: np.ndarray) -> float:
    """Coefficient of determination; NaN when the truth has zero variance."""
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {yhat.shape}")
    if y.ndim != 1 or y.size < 2:
        raise ValueError("need 1-D vectors of length >= 2")
    ss_res = float(np.sum((y - yhat) ** 2))
    dev = y - y.mean()
    ss_tot = float(np.sum(dev**2))
    if ss_tot <= _ZERO_VAR_REL * float(np.sum(y**2)):
        return float("nan")
    return 1.0 - ss_res / ss_tot


def evaluate(
    truth: OutputMatrix | np.ndarray,
    pred: np.ndarray,
    index_map: OutputIndexMap | None = None,
) -> EvalReport:
    """Score q x n predictions against truth, aggregated by output column,
    location (mean over its years), and year (mean over locations)."""
    if isinstance(truth, OutputMatrix):
        t = truth.values
        index_map = truth.index_map
    else:
        t = np.asarray(truth, dtype=np.float64)
        if index_map is None:
            raise ValueError("an OutputIndexMap is required for raw truth arrays")
    p = np.asarray(pred, dtype=np.float64)
    if t.shape != p.shape:
        raise ValueError(f"shape mismatch: truth {t.shape} vs predictions {p.shape}")
    q, n = t.shape
    if q < 2:
        raise ValueError("need at least two samples to score")
    if n != index_map.n_outputs:
        raise ValueError(
            f"index map covers {index_map.n_outputs} outputs but matrices have {n}"
        )

    resid = t - p
    ss_res = np.einsum("ij,ij->j", resid, resid)
    dev = t - t.mean(axis=0)
    ss_tot = np.einsum("ij,ij->j", dev, dev)
    energy = np.einsum("ij,ij->j", t, t)
    skipped = ss_tot <= _ZERO_VAR_REL * energy

    per_output = np.full(n, np.nan)
    ok = ~skipped
    per_output[ok] = 1.0 - ss_res[ok] / ss_tot[ok]

    grid = per_output.reshape(index_map.n_loc, index_map.n_year)
    with np.errstate(invalid="ignore"):
        per_location = np.nanmean(grid, axis=1)
        per_year = np.nanmean(grid, axis=0)
        overall_r2 = float(np.nanmean(per_output))

    tot_res = float(ss_res[ok].sum())
    tot_dev = float(ss_tot[ok].sum())
    pooled = 1.0 - tot_res / tot_dev if tot_dev > 0 else float("nan")

    return EvalReport(
        overall_mse=float(np.mean(resid**2)),
        overall_r2=overall_r2,
        pooled_r2=pooled,
        per_output_r2=per_output,
        per_location_r2=per_location,
        per_year_r2=per_year,
        skipped_outputs=tuple(int(j) for j in np.nonzero(skipped)[0]),
    )


def save_report_csvs(report: EvalReport, index_map: OutputIndexMap, out_dir: str | Path) -> None:
    """Write per-output, per-location, and per-year tables plus a text summary."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(out_dir / "per_output.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["output", "location", "year", "r2"])
        for j, v in enumerate(report.per_output_r2):
            loc, year = index_map.decode(j)
            writer.writerow([j, loc, year, "" if np.isnan(v) else repr(float(v))])

    with open(out_dir / "per_location.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["location", "mean_r2"])
        for loc, v in enumerate(report.per_location_r2):
            writer.writerow([loc, "" if np.isnan(v) else repr(float(v))])

    with open(out_dir / "per_year.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "mean_r2"])
        for year, v in enumerate(report.per_year_r2):
            writer.writerow([year, "" if np.isnan(v) else repr(float(v))])

    (out_dir / "summary.txt").write_text(report.summary_text(), encoding="utf-8")
