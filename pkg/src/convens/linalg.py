"""Reusable sparse LU factorization and multi-right-hand-side solves.

Backed by SuperLU (scipy.sparse.linalg.splu): partial pivoting with a
COLAMD column preorder. The factorization is computed once per step
matrix and reused for every ensemble member's right-hand side.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SingularMatrixError


class Factorization:
    """Immutable LU factors of a square sparse matrix."""

    def __init__(self, splu_obj, shape):
        self._lu = splu_obj
        self.shape = shape

    @property
    def L(self):
        return self._lu.L

    @property
    def U(self):
        return self._lu.U

    @property
    def perm_r(self):
        return self._lu.perm_r

    @property
    def perm_c(self):
        return self._lu.perm_c

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.shape[0]:
            raise ValueError(
                f"rhs length {rhs.shape[0]} != matrix dimension {self.shape[0]}")
        return self._lu.solve(rhs)


def _singular_pivot_index(A):
    """Best-effort pivot index for the error report (dense LU, small n only)."""
    n = A.shape[0]
    if n > 500:
        return -1
    M = A.toarray().astype(float)
    for k in range(n):
        piv = int(np.argmax(np.abs(M[k:, k]))) + k
        if M[piv, k] == 0.0:
            return k
        M[[k, piv]] = M[[piv, k]]
        M[k + 1:] -= np.outer(M[k + 1:, k] / M[k, k], M[k])
    return -1


def factorize(A):
    """LU-factorize a square CSR/CSC matrix for repeated solves."""
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    try:
        lu = spla.splu(sp.csc_matrix(A))
    except RuntimeError as err:
        if "singular" in str(err).lower():
            raise SingularMatrixError(str(err), _singular_pivot_index(A)) from err
        raise
    # SuperLU can return NaN factors instead of raising on some singular inputs
    if not np.all(np.isfinite(lu.U.diagonal())):
        raise SingularMatrixError("exactly singular pivot", _singular_pivot_index(A))
    return Factorization(lu, A.shape)


def solve_multi(fact, rhs_block):
    """Solve A x_j = b_j for each column of rhs_block against shared factors.

    Columns are solved one at a time so the result is bitwise identical to
    repeated single-RHS solves.
    """
    rhs_block = np.asarray(rhs_block, dtype=float)
    if rhs_block.ndim == 1:
        return fact.solve(rhs_block)
    if rhs_block.shape[0] != fact.shape[0]:
        raise ValueError(
            f"rhs rows {rhs_block.shape[0]} != matrix dimension {fact.shape[0]}")
    out = np.empty_like(rhs_block)
    for j in range(rhs_block.shape[1]):
        out[:, j] = fact.solve(rhs_block[:, j])
    return out


def replace_rows_identity(A, rows):
    """Return A with the given rows replaced by identity rows (in CSR)."""
    A = sp.csr_matrix(A, copy=True)
    n = A.shape[0]
    mask = np.ones(n, dtype=bool)
    mask[rows] = False
    scale = sp.diags(mask.astype(float))
    out = scale @ A
    out = out + sp.coo_matrix(
        (np.ones(len(rows)), (rows, rows)), shape=A.shape)
    return out.tocsr()


def zero_rows(A, rows):
    A = sp.csr_matrix(A)
    n = A.shape[0]
    mask = np.ones(n, dtype=bool)
    mask[rows] = False
    return (sp.diags(mask.astype(float)) @ A).tocsr()


def write_matrix_market(path, A):
    """Debug dump in Matrix Market coordinate format."""
    from scipy.io import mmwrite
    mmwrite(str(path), sp.coo_matrix(A))
