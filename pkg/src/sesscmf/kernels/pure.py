"""Pure-NumPy fallback for the ALS row-solve kernels.

Both backends share this contract: each routine performs one half-sweep of
alternating least squares, overwriting `out` row by row with the exact
solution of that row's regularized normal equations. Solutions are clipped
at zero when `nonneg` is set. Rows whose right-hand side is exactly zero
are set to zero without a solve.
"""

import numpy as np
from scipy import linalg

BACKEND_NAME = "pure"


def _solve_spd(A, b, row):
    try:
        return linalg.solve(A, b, assume_a="pos", check_finite=False)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"singular normal-equation system for row {row}"
        ) from exc


def solve_rows_joint(
    out, base, f1, indptr1, indices1, data1, w1, f2, indptr2, indices2, data2, w2, nonneg
):
    """Half-sweep of the joint model: out[r] solves base + the gathered Gram terms.

    Structure 1 contributes w1 * sum_c outer(f1[c]) to the system and
    w1 * sum_c v_c * f1[c] to the right-hand side; structure 2 likewise
    with f2/w2. `base` is the K x K constant part (regularizer, plus the
    full Gram term when zeros are modeled densely).
    """
    k = out.shape[1]
    for r in range(out.shape[0]):
        A = base.copy()
        b = np.zeros(k)
        s, e = indptr1[r], indptr1[r + 1]
        if e > s:
            M = f1[indices1[s:e]]
            A += w1 * (M.T @ M)
            b += w1 * (M.T @ data1[s:e])
        s, e = indptr2[r], indptr2[r + 1]
        if e > s:
            M = f2[indices2[s:e]]
            A += w2 * (M.T @ M)
            b += w2 * (M.T @ data2[s:e])
        if not b.any():
            out[r, :] = 0.0
            continue
        x = _solve_spd(A, b, r)
        if nonneg:
            np.maximum(x, 0.0, out=x)
        out[r, :] = x


def solve_rows_wmf(out, other, gram, indptr, indices, data, alpha, nonneg):
    """Half-sweep of weighted MF with confidence c = 1 + alpha * r.

    `gram` is other.T @ other + lambda * I (the weight-1 background over all
    entries with target 0); each observed entry adds (c - 1) to the Gram
    term and c to the right-hand side.
    """
    for r in range(out.shape[0]):
        A = gram.copy()
        s, e = indptr[r], indptr[r + 1]
        if e > s:
            M = other[indices[s:e]]
            vals = data[s:e]
            A += (alpha * M.T * vals) @ M
            b = M.T @ (1.0 + alpha * vals)
        else:
            out[r, :] = 0.0
            continue
        x = _solve_spd(A, b, r)
        if nonneg:
            np.maximum(x, 0.0, out=x)
        out[r, :] = x
