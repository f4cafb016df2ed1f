"""Parameter/output sample containers, input scaling, and file formats.

Two file formats are supported:

* Design CSV: UTF-8, a header row of parameter names, one row per sample.
* Matrix binary (".smx"): magic ``SMX1``, u64 little-endian rows, u64 cols,
  then rows*cols float64 little-endian values in row-major order. Output
  matrices insert u64 n_loc and u64 n_year between the dims and the payload.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

SMX_MAGIC = b"SMX1"


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered box domain: one (name, lower, upper) triple per dimension."""

    names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if len(self.names) < 1:
            raise ValueError("parameter space needs at least one dimension")
        if len(set(self.names)) != len(self.names):
            raise ValueError("parameter names must be unique")
        if lower.shape != (len(self.names),) or upper.shape != (len(self.names),):
            raise ValueError("bounds must match the number of names")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ValueError("bounds must be finite")
        bad = np.nonzero(~(lower < upper))[0]
        if bad.size:
            i = int(bad[0])
            raise ValueError(
                f"dimension {self.names[i]!r} has empty or zero-width range "
                f"[{lower[i]!r}, {upper[i]!r}]"
            )

    @property
    def dim(self) -> int:
        return len(self.names)

    @classmethod
    def from_dims(cls, dims: list[tuple[str, float, float]]) -> "ParameterSpace":
        names = tuple(d[0] for d in dims)
        lower = np.array([d[1] for d in dims], dtype=np.float64)
        upper = np.array([d[2] for d in dims], dtype=np.float64)
        return cls(names, lower, upper)

    @classmethod
    def unit_cube(cls, names: tuple[str, ...]) -> "ParameterSpace":
        d = len(names)
        return cls(tuple(names), np.zeros(d), np.ones(d))

    def contains(self, values: np.ndarray) -> bool:
        v = np.asarray(values, dtype=np.float64)
        return bool(np.all(v >= self.lower) and np.all(v <= self.upper))

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "lower": [float(x) for x in self.lower],
            "upper": [float(x) for x in self.upper],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterSpace":
        return cls(tuple(d["names"]), np.asarray(d["lower"]), np.asarray(d["upper"]))


@dataclass(frozen=True)
class DesignMatrix:
    """m x d matrix of raw parameter samples tied to its ParameterSpace."""

    values: np.ndarray
    space: ParameterSpace

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "values", v)
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError(f"design must be a 2-D matrix with rows, got shape {v.shape}")
        if v.shape[1] != self.space.dim:
            raise ValueError(
                f"design has {v.shape[1]} columns but the space has {self.space.dim} dims"
            )
        if not np.isfinite(v).all():
            r, c = np.argwhere(~np.isfinite(v))[0]
            raise DataError(f"non-finite design entry at row {r}, col {c}")
        if np.any(v < self.space.lower) or np.any(v > self.space.upper):
            mask = (v < self.space.lower) | (v > self.space.upper)
            r, c = np.argwhere(mask)[0]
            raise ValueError(
                f"design entry at row {r}, col {c} ({v[r, c]!r}) outside "
                f"[{self.space.lower[c]!r}, {self.space.upper[c]!r}]"
            )

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class OutputIndexMap:
    """Column layout for location x year outputs: col = loc * n_year + year."""

    n_loc: int
    n_year: int

    def __post_init__(self):
        if self.n_loc < 1 or self.n_year < 1:
            raise ValueError("n_loc and n_year must be positive")

    @property
    def n_outputs(self) -> int:
        return self.n_loc * self.n_year

    def encode(self, loc: int, year: int) -> int:
        if not (0 <= loc < self.n_loc and 0 <= year < self.n_year):
            raise ValueError(f"(loc={loc}, year={year}) out of range")
        return loc * self.n_year + year

    def decode(self, col: int) -> tuple[int, int]:
        if not 0 <= col < self.n_outputs:
            raise ValueError(f"column {col} out of range")
        return divmod(col, self.n_year)

    def columns_for_location(self, loc: int) -> np.ndarray:
        if not 0 <= loc < self.n_loc:
            raise ValueError(f"location {loc} out of range")
        return np.arange(loc * self.n_year, (loc + 1) * self.n_year)


@dataclass(frozen=True)
class OutputMatrix:
    """m x n matrix of simulator outputs with a location/year column index."""

    values: np.ndarray
    index_map: OutputIndexMap

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "values", v)
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError(f"outputs must be a 2-D matrix with rows, got shape {v.shape}")
        if v.shape[1] != self.index_map.n_outputs:
            raise ValueError(
                f"outputs have {v.shape[1]} columns but the index map covers "
                f"{self.index_map.n_outputs}"
            )
        if not np.isfinite(v).all():
            r, c = np.argwhere(~np.isfinite(v))[0]
            raise DataError(f"non-finite output entry at row {r}, col {c}")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class EpochSplit:
    """Disjoint fit/validation index sets drawn for one training epoch."""

    fit_indices: np.ndarray
    val_indices: np.ndarray


def sample_design(space: ParameterSpace, m: int, seed: int) -> DesignMatrix:
    """Draw m parameter rows i.i.d. uniform over the space's box."""
    if m < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    values = rng.uniform(space.lower, space.upper, size=(m, space.dim))
    return DesignMatrix(values, space)


def normalize_inputs(design: DesignMatrix | np.ndarray, space: ParameterSpace | None = None) -> np.ndarray:
    """Map raw parameter values onto the unit hypercube via the space's bounds."""
    if isinstance(design, DesignMatrix):
        values, space = design.values, design.space
    else:
        if space is None:
            raise ValueError("a ParameterSpace is required for raw arrays")
        values = np.asarray(design, dtype=np.float64)
    return (values - space.lower) / (space.upper - space.lower)


def denormalize_inputs(unit_values: np.ndarray, space: ParameterSpace) -> np.ndarray:
    """Inverse of normalize_inputs."""
    u = np.asarray(unit_values, dtype=np.float64)
    return space.lower + u * (space.upper - space.lower)


def epoch_split(m_train: int, fraction: float, rng: np.random.Generator) -> EpochSplit:
    """Shuffle 0..m_train-1 and reserve the last floor(fraction*m) as validation."""
    n_val = math.floor(fraction * m_train)
    if n_val < 1:
        minimum = math.ceil(1.0 / fraction)
        raise ValueError(
            f"m_train={m_train} leaves an empty validation set at fraction "
            f"{fraction}; need m_train >= {minimum}"
        )
    if n_val >= m_train:
        raise ValueError(f"fraction {fraction} leaves no fit samples for m_train={m_train}")
    perm = rng.permutation(m_train)
    return EpochSplit(fit_indices=perm[: m_train - n_val], val_indices=perm[m_train - n_val:])


def save_design(design: DesignMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(design.space.names)
        for row in design.values:
            writer.writerow([repr(float(x)) for x in row])


def load_design(path: str | Path, space: ParameterSpace) -> DesignMatrix:
    """Read a design CSV and validate it against the given space."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty design file") from None
        header = tuple(h.strip() for h in header)
        if header != space.names:
            raise DataError(
                f"{path}: header {header} does not match space dims {space.names}"
            )
        rows = []
        for i, row in enumerate(reader):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {i} has {len(row)} fields, expected {len(header)}"
                )
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise DataError(f"{path}: row {i}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: design file has no sample rows")
    values = np.array(rows, dtype=np.float64)
    if not np.isfinite(values).all():
        r, c = np.argwhere(~np.isfinite(values))[0]
        raise DataError(f"{path}: non-finite value at row {r}, col {c}")
    return DesignMatrix(values, space)


def _write_smx(path: str | Path, values: np.ndarray, extra_header: tuple[int, ...] = ()) -> None:
    v = np.ascontiguousarray(np.asarray(values, dtype="<f8"))
    if v.ndim != 2:
        raise ValueError(f"only 2-D matrices can be written, got shape {v.shape}")
    with open(path, "wb") as fh:
        fh.write(SMX_MAGIC)
        fh.write(struct.pack("<QQ", v.shape[0], v.shape[1]))
        for field in extra_header:
            fh.write(struct.pack("<Q", field))
        fh.write(v.tobytes(order="C"))


def _read_smx(path: str | Path, n_extra: int = 0) -> tuple[np.ndarray, tuple[int, ...]]:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SMX_MAGIC:
            raise DataError(
                f"{path}: unknown format version (magic {magic!r}, expected {SMX_MAGIC!r})"
            )
        head = fh.read(8 * (2 + n_extra))
        if len(head) < 8 * (2 + n_extra):
            raise DataError(f"{path}: truncated header")
        fields = struct.unpack(f"<{2 + n_extra}Q", head)
        rows, cols = fields[0], fields[1]
        expected = rows * cols * 8
        payload = fh.read()
    if len(payload) != expected:
        raise DataError(
            f"{path}: payload holds {len(payload)} bytes but the header claims "
            f"{rows}x{cols} values ({expected} bytes)"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()
    if not np.isfinite(values).all():
        r, c = np.argwhere(~np.isfinite(values))[0]
        raise DataError(f"{path}: non-finite value at row {r}, col {c}")
    return values, tuple(fields[2:])


def save_matrix(values: np.ndarray, path: str | Path) -> None:
    """Write a plain 2-D float64 matrix as .smx."""
    _write_smx(path, values)


def load_matrix(path: str | Path) -> np.ndarray:
    values, _ = _read_smx(path)
    return values


def save_outputs(outputs: OutputMatrix, path: str | Path) -> None:
    _write_smx(
        path,
        outputs.values,
        extra_header=(outputs.index_map.n_loc, outputs.index_map.n_year),
    )


def load_outputs(path: str | Path) -> OutputMatrix:
    values, (n_loc, n_year) = _read_smx(path, n_extra=2)
    index_map = OutputIndexMap(n_loc=int(n_loc), n_year=int(n_year))
    if index_map.n_outputs != values.shape[1]:
        raise DataError(
            f"{path}: header says {n_loc} locations x {n_year} years "
            f"({index_map.n_outputs} columns) but the matrix has {values.shape[1]}"
        )
    return OutputMatrix(values, index_map)
