"""Hot kernels with a numba path and a plain numpy/scipy fallback.

Set ``ZNQED_DISABLE_JIT=1`` before import to force the fallback path.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("ZNQED_DISABLE_JIT", "").strip().lower()
JIT_REQUESTED = _FLAG not in ("1", "true", "yes", "on")

try:
    if not JIT_REQUESTED:
        raise ImportError
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

USE_JIT = HAS_NUMBA and JIT_REQUESTED


def backend() -> str:
    return "numba" if USE_JIT else "numpy"


# fallback kernels ---------------------------------------------------------


def _csr_matvec_np(indptr, indices, data, x, out):
    # scipy's C loop; row sums are accumulated in index order like the jit path
    from scipy.sparse import csr_matrix

    n = indptr.shape[0] - 1
    out[:] = csr_matrix((data, indices, indptr), shape=(n, x.shape[0])) @ x
    return out


def _diag_expect_np(prob, table):
    return prob @ table


def _mgs_np(basis, k, w):
    for j in range(k):
        w -= np.vdot(basis[j], w) * basis[j]
    return w


if USE_JIT:

    @njit(cache=True)
    def _csr_matvec_jit(indptr, indices, data, x, out):
        n = indptr.shape[0] - 1
        for i in range(n):
            acc = 0.0j
            for p in range(indptr[i], indptr[i + 1]):
                acc += data[p] * x[indices[p]]
            out[i] = acc
        return out

    @njit(cache=True)
    def _diag_expect_jit(prob, table):
        dim, m = table.shape
        res = np.zeros(m)
        for i in range(dim):
            p = prob[i]
            if p == 0.0:
                continue
            for k in range(m):
                res[k] += p * table[i, k]
        return res

    @njit(cache=True)
    def _mgs_jit(basis, k, w):
        n = w.shape[0]
        for j in range(k):
            c = 0.0j
            for i in range(n):
                c += basis[j, i].conjugate() * w[i]
            for i in range(n):
                w[i] -= c * basis[j, i]
        return w

    csr_matvec = _csr_matvec_jit
    diag_expect = _diag_expect_jit
    mgs = _mgs_jit
else:
    csr_matvec = _csr_matvec_np
    diag_expect = _diag_expect_np
    mgs = _mgs_np


KERNELS = {
    "numpy": (_csr_matvec_np, _diag_expect_np, _mgs_np),
}
if USE_JIT:
    KERNELS["numba"] = (_csr_matvec_jit, _diag_expect_jit, _mgs_jit)
