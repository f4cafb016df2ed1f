"""Persisted surrogates: a manifest plus binary arrays in one directory.

A bundle directory holds ``manifest.json`` (parameter space, output index
map, architecture, training metadata, array listing) and one ``.smx`` file
per array. Loading a bundle reproduces the prediction operator bitwise;
only the manifest carries timestamps.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .dataset import (
    DesignMatrix,
    OutputIndexMap,
    ParameterSpace,
    load_matrix,
    save_matrix,
)
from .errors import DataError
from .mlp import MlpArchitecture, MlpWeights, NormStats, predict as mlp_predict
from .svd import SvdBasis, reconstruct

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class SurrogateBundle:
    """Everything needed to turn raw parameter rows into full-field outputs."""

    space: ParameterSpace
    index_map: OutputIndexMap
    arch: MlpArchitecture
    weights: MlpWeights
    norm: NormStats
    basis: SvdBasis | None  # None for direct (uncompressed) surrogates
    metadata: dict

    @property
    def is_direct(self) -> bool:
        return self.basis is None

    def predict(self, X_raw: DesignMatrix | np.ndarray) -> np.ndarray:
        """Raw parameters -> q x n outputs (scores are expanded through the
        retained singular vectors unless the surrogate is direct)."""
        scores = mlp_predict(self.weights, self.arch, self.norm, X_raw)
        if self.basis is None:
            return scores
        return reconstruct(scores, self.basis)


def save_bundle(bundle: SurrogateBundle, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    arrays: dict[str, np.ndarray] = {
        "target_mean": bundle.norm.target_mean[None, :],
        "target_std": bundle.norm.target_std[None, :],
    }
    for i, (w, b) in enumerate(zip(bundle.weights.weights, bundle.weights.biases), start=1):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b[None, :]
    if bundle.basis is not None:
        arrays["singular_values"] = bundle.basis.singular_values_all[None, :]
        arrays["right_vectors"] = bundle.basis.right_vectors

    listing = {}
    for name, arr in arrays.items():
        fname = f"{name}.smx"
        save_matrix(arr, out_dir / fname)
        listing[name] = fname

    manifest = {
        "format_version": FORMAT_VERSION,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "mode": "direct" if bundle.basis is None else "svd",
        "k": None if bundle.basis is None else bundle.basis.k,
        "space": bundle.space.to_dict(),
        "index_map": {"n_loc": bundle.index_map.n_loc, "n_year": bundle.index_map.n_year},
        "architecture": {
            "input_dim": bundle.arch.input_dim,
            "hidden_widths": list(bundle.arch.hidden_widths),
            "output_dim": bundle.arch.output_dim,
        },
        "arrays": listing,
        "metadata": bundle.metadata,
    }
    with open(out_dir / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir


def load_bundle(bundle_dir: str | Path) -> SurrogateBundle:
    bundle_dir = Path(bundle_dir)
    manifest_path = bundle_dir / MANIFEST_NAME
    if not manifest_path.exists():
        raise DataError(f"{bundle_dir}: missing {MANIFEST_NAME}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: invalid JSON ({exc})") from None

    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"{manifest_path}: unknown format version {version!r}")

    listing = manifest["arrays"]
    arrays = {name: load_matrix(bundle_dir / fname) for name, fname in listing.items()}

    space = ParameterSpace.from_dict(manifest["space"])
    index_map = OutputIndexMap(**manifest["index_map"])
    arch = MlpArchitecture(
        input_dim=int(manifest["architecture"]["input_dim"]),
        hidden_widths=tuple(manifest["architecture"]["hidden_widths"]),
        output_dim=int(manifest["architecture"]["output_dim"]),
    )

    weights = []
    biases = []
    for i, (fan_in, fan_out) in enumerate(arch.layer_dims(), start=1):
        try:
            w = arrays[f"w{i}"]
            b = arrays[f"b{i}"][0]
        except KeyError as exc:
            raise DataError(f"{bundle_dir}: manifest lists no array {exc}") from None
        if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
            raise DataError(
                f"{bundle_dir}: layer {i} arrays have shape {w.shape}/{b.shape}, "
                f"expected ({fan_in}, {fan_out})"
            )
        weights.append(w)
        biases.append(b)
    mlp_weights = MlpWeights(weights=tuple(weights), biases=tuple(biases))

    norm = NormStats(
        input_lower=space.lower.copy(),
        input_upper=space.upper.copy(),
        target_mean=arrays["target_mean"][0],
        target_std=arrays["target_std"][0],
    )
    if norm.target_mean.shape != (arch.output_dim,):
        raise DataError(f"{bundle_dir}: target stats do not match the output width")

    basis = None
    if manifest["mode"] == "svd":
        k = int(manifest["k"])
        right = arrays["right_vectors"]
        if right.shape != (index_map.n_outputs, k):
            raise DataError(
                f"{bundle_dir}: right vectors have shape {right.shape}, expected "
                f"({index_map.n_outputs}, {k})"
            )
        basis = SvdBasis(
            k=k,
            singular_values_all=arrays["singular_values"][0],
            right_vectors=right,
        )
        if arch.output_dim != k:
            raise DataError(f"{bundle_dir}: network outputs {arch.output_dim} != k={k}")
    elif manifest["mode"] == "direct":
        if arch.output_dim != index_map.n_outputs:
            raise DataError(
                f"{bundle_dir}: direct surrogate outputs {arch.output_dim} != "
                f"{index_map.n_outputs} mapped columns"
            )
    else:
        raise DataError(f"{bundle_dir}: unknown mode {manifest['mode']!r}")

    return SurrogateBundle(
        space=space,
        index_map=index_map,
        arch=arch,
        weights=mlp_weights,
        norm=norm,
        basis=basis,
        metadata=manifest.get("metadata", {}),
    )
