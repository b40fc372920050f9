"""Sparse and dense kernels used by the forward and backward passes.

Sparse matrices are ``scipy.sparse.csr_matrix`` with sorted column indices
and no stored zeros. Products with dense operands accumulate each output
row sequentially over the row's nonzeros in column order, so results are
reproducible run to run.
"""
from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.sparse as sp


class ShapeError(ValueError):
    pass


def as_csr(S) -> sp.csr_matrix:
    """Coerce to canonical CSR (float64, sorted indices, no explicit zeros)."""
    S = sp.csr_matrix(S, dtype=np.float64, copy=True)
    S.eliminate_zeros()
    S.sum_duplicates()
    S.sort_indices()
    return S


def is_canonical(S: sp.csr_matrix) -> bool:
    indptr, indices = S.indptr, S.indices
    if indptr[0] != 0 or indptr[-1] != len(indices) or np.any(np.diff(indptr) < 0):
        return False
    if np.any(S.data == 0):
        return False
    for i in range(S.shape[0]):
        row = indices[indptr[i]:indptr[i + 1]]
        if np.any(np.diff(row) <= 0):
            return False
    return True


def _check(cond: bool, msg: str):
    if not cond:
        raise ShapeError(msg)


def spmm(S: sp.csr_matrix, B: np.ndarray) -> np.ndarray:
    """``S @ B`` for sparse ``S`` and dense ``B``."""
    _check(S.shape[1] == B.shape[0], f"spmm: {S.shape} @ {B.shape}")
    return np.asarray(S @ B)


def spmm_transposed(S: sp.csr_matrix, B: np.ndarray) -> np.ndarray:
    """``S.T @ B`` without materializing the transpose."""
    _check(S.shape[0] == B.shape[0], f"spmm_transposed: {S.shape}.T @ {B.shape}")
    return np.asarray(S.T @ B)


def gemm(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    _check(A.ndim == 2 and B.ndim == 2 and A.shape[1] == B.shape[0], f"gemm: {A.shape} @ {B.shape}")
    return A @ B


def row_scale(v: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``diag(v) @ B``; a zero entry zeroes its row."""
    _check(v.ndim == 1 and len(v) == B.shape[0], f"row_scale: {v.shape} vs {B.shape}")
    return v[:, None] * B


def map_elementwise(f: Callable[[np.ndarray], np.ndarray], B: np.ndarray) -> np.ndarray:
    out = f(B)
    _check(out.shape == B.shape, "map_elementwise: function changed the shape")
    return out


def relu(B: np.ndarray) -> np.ndarray:
    return np.maximum(B, 0.0)


def densify(S: sp.spmatrix) -> np.ndarray:
    return S.toarray()
