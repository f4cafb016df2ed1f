"""Truncated SVD compression of output matrices.

The training matrices here are short and wide (tens of rows, tens of
thousands of columns), so the factorization goes through the small Gram
matrix: eigendecompose A A^T (or A^T A when the matrix is tall), take
sigma_i = sqrt(lambda_i), and recover the right singular vectors as
A^T U_K / sigma_i. Columns are sign-fixed so repeated runs produce
identical bases.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import OutputMatrix

# Relative cutoff below which a singular value is treated as zero. The Gram
# route squares the condition number, so zero singular values surface as
# numerical dust near sqrt(machine eps) * sigma_1; the cutoff must sit above
# that floor or the dust leaks garbage right-singular directions.
_RANK_TOL = 1e-7


@dataclass(frozen=True)
class SvdBasis:
    """Retained rank, full singular spectrum, and right singular vectors."""

    k: int
    singular_values_all: np.ndarray
    right_vectors: np.ndarray  # n x k, orthonormal columns
    degenerate: bool = False

    def __post_init__(self):
        s = np.asarray(self.singular_values_all, dtype=np.float64)
        v = np.asarray(self.right_vectors, dtype=np.float64)
        object.__setattr__(self, "singular_values_all", s)
        object.__setattr__(self, "right_vectors", v)
        if s.ndim != 1 or np.any(s < 0) or np.any(np.diff(s) > 0):
            raise ValueError("singular values must be a descending nonnegative vector")
        if v.ndim != 2 or v.shape[1] != self.k:
            raise ValueError(f"right vectors must be n x k, got {v.shape} for k={self.k}")
        if self.k < 1 or self.k > len(s):
            raise ValueError(f"k={self.k} outside 1..{len(s)}")

    @property
    def n_outputs(self) -> int:
        return self.right_vectors.shape[0]


def _as_array(A: OutputMatrix | np.ndarray) -> np.ndarray:
    if isinstance(A, OutputMatrix):
        return A.values
    return np.asarray(A, dtype=np.float64)


def _complete_orthonormal(vectors: np.ndarray, extra: int) -> np.ndarray:
    """Deterministically extend orthonormal columns by Gram-Schmidt on e_0, e_1, ..."""
    n, have = vectors.shape
    cols = [vectors[:, j] for j in range(have)]
    added = 0
    for j in range(n):
        if added == extra:
            break
        cand = np.zeros(n)
        cand[j] = 1.0
        for c in cols:
            cand -= (c @ cand) * c
        norm = np.linalg.norm(cand)
        if norm > 1e-8:
            cols.append(cand / norm)
            added += 1
    if added < extra:
        raise ValueError("cannot complete an orthonormal set of the requested size")
    return np.column_stack(cols[have:])


def _fix_signs(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip paired columns so each right vector's largest-magnitude entry is positive."""
    for j in range(v.shape[1]):
        idx = int(np.argmax(np.abs(v[:, j])))
        if v[idx, j] < 0:
            v[:, j] = -v[:, j]
            if j < u.shape[1]:
                u[:, j] = -u[:, j]
    return u, v


def truncated_svd(A: OutputMatrix | np.ndarray, k: int) -> tuple[SvdBasis, np.ndarray]:
    """Rank-k truncated SVD of A; returns (basis, left vectors U_K).

    The basis keeps the full singular spectrum (length min(m, n)) for
    information-fraction queries even though only k right vectors are stored.
    """
    values = _as_array(A)
    if values.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {values.shape}")
    m, n = values.shape
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k={k} outside 1..min(m,n)={min(m, n)}")

    if m <= n:
        gram = values @ values.T
        eigvals, eigvecs = np.linalg.eigh(gram)
        order = np.argsort(eigvals)[::-1]
        sigma = np.sqrt(np.clip(eigvals[order], 0.0, None))
        left_all = eigvecs[:, order]
    else:
        gram = values.T @ values
        eigvals, eigvecs = np.linalg.eigh(gram)
        order = np.argsort(eigvals)[::-1]
        sigma = np.sqrt(np.clip(eigvals[order], 0.0, None))
        right_all = eigvecs[:, order]

    cutoff = _RANK_TOL * (sigma[0] if sigma[0] > 0 else 1.0)
    rank = int(np.sum(sigma > cutoff))
    degenerate = rank < k
    sigma = np.where(sigma > cutoff, sigma, 0.0)
    kept = min(k, rank)

    if m <= n:
        left = left_all[:, :kept]
        right = values.T @ (left / sigma[:kept]) if kept else np.zeros((n, 0))
    else:
        right = right_all[:, :kept]
        left = values @ (right / sigma[:kept]) if kept else np.zeros((m, 0))

    if kept < k:
        right = np.hstack([right, _complete_orthonormal(right, k - kept)])
        left = np.hstack([left, np.zeros((m, k - kept))])

    left, right = _fix_signs(left, right)
    basis = SvdBasis(
        k=k,
        singular_values_all=sigma,
        right_vectors=right,
        degenerate=degenerate,
    )
    return basis, left


def info_fraction(basis: SvdBasis, k: int, squared: bool = False) -> float:
    """Share of the singular-value sum captured by the first k values.

    The default uses plain sigma sums; ``squared=True`` switches to the
    energy (Frobenius) convention.
    """
    s = basis.singular_values_all
    if not 1 <= k <= len(s):
        raise ValueError(f"k={k} outside 1..{len(s)}")
    weights = s**2 if squared else s
    total = float(weights.sum())
    if total == 0.0:
        return 1.0
    return float(weights[:k].sum() / total)


def select_k(basis: SvdBasis, target_fraction: float, squared: bool = False) -> int:
    """Smallest k whose info fraction reaches the target."""
    if not 0.0 < target_fraction <= 1.0:
        raise ValueError(f"target fraction {target_fraction} outside (0, 1]")
    for k in range(1, len(basis.singular_values_all) + 1):
        if info_fraction(basis, k, squared=squared) >= target_fraction:
            return k
    return len(basis.singular_values_all)


def project(A: OutputMatrix | np.ndarray, basis: SvdBasis) -> np.ndarray:
    """Project output rows onto the retained right singular vectors (m x k scores)."""
    values = _as_array(A)
    if values.ndim != 2 or values.shape[1] != basis.n_outputs:
        raise ValueError(
            f"cannot project shape {values.shape} onto a basis over "
            f"{basis.n_outputs} outputs"
        )
    return values @ basis.right_vectors


def reconstruct(scores: np.ndarray, basis: SvdBasis) -> np.ndarray:
    """Expand k-dimensional score rows back to the full output space (q x n)."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] != basis.k:
        raise ValueError(f"scores shape {s.shape} does not match basis k={basis.k}")
    return s @ basis.right_vectors.T
