"""Alternating least squares training for weighted MF and the joint model.

Two training paths share the row-solve kernels:

* ``wmf_train`` fits the implicit-feedback weighted MF objective: every
  matrix cell participates, unobserved cells with target 0 and weight 1,
  observed cells with target 1 and confidence weight 1 + alpha.
* ``joint_train`` fits the joint objective over the observed user-item
  entries plus an item-item matrix factorized in the shared item space:

      sum_{(u,i) in R} (R_ui - x_u . y_i)^2
      + w * sum_{(i,j) in V} (V_ij - y_i . z_j)^2
      + lx * |X|^2 + ly * |Y|^2 + lz * |Z|^2

  Each row update solves its K x K normal equations exactly, so with the
  nonnegativity projection disabled every sweep is a block-coordinate
  descent step and the loss is non-increasing. With ``nonneg`` the solved
  row is clipped at zero immediately after its solve.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse

from . import kernels
from .cooc import SppmiMatrix
from .data import SparseBinaryMatrix


@dataclass(frozen=True)
class Hyperparams:
    factors: int = 10
    lambda_x: float = 0.1
    lambda_y: float = 0.1
    lambda_z: float = 0.1
    alpha: float = 10.0
    shift_k: int = 1
    sweeps: int = 20
    seed: int = 0
    init_scale: float = 0.1
    nonneg: bool = False
    item_item_weight: float = 1.0
    item_item_dense_zeros: bool = False
    tol: float = 1e-6

    def __post_init__(self):
        if self.factors < 1:
            raise ValueError("factors must be >= 1")
        if min(self.lambda_x, self.lambda_y, self.lambda_z) < 0:
            raise ValueError("regularizers must be nonnegative")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.shift_k < 1:
            raise ValueError("shift_k must be >= 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be positive")
        if self.item_item_weight < 0:
            raise ValueError("item_item_weight must be nonnegative")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")

    def with_seed(self, seed: int) -> "Hyperparams":
        return replace(self, seed=seed)


class FactorModel:
    """Latent factor matrices: X (users), Y (items), Z (item contexts, optional).

    Rows are latent vectors, so X has shape (N, K) and the predicted score
    is the inner product X[u] . Y[i].
    """

    __slots__ = ("X", "Y", "Z")

    def __init__(self, X: np.ndarray, Y: np.ndarray, Z: np.ndarray | None = None):
        X = np.ascontiguousarray(X, dtype=np.float64)
        Y = np.ascontiguousarray(Y, dtype=np.float64)
        if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
            raise ValueError("X and Y must be 2-d with the same factor dimension")
        if Z is not None:
            Z = np.ascontiguousarray(Z, dtype=np.float64)
            if Z.shape != Y.shape:
                raise ValueError("Z must have the same shape as Y")
        for name, arr in (("X", X), ("Y", Y), ("Z", Z)):
            if arr is not None and not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        self.X, self.Y, self.Z = X, Y, Z

    @property
    def n_users(self) -> int:
        return self.X.shape[0]

    @property
    def n_items(self) -> int:
        return self.Y.shape[0]

    @property
    def factors(self) -> int:
        return self.X.shape[1]

    @property
    def has_context(self) -> bool:
        return self.Z is not None

    def __repr__(self) -> str:
        ctx = ", with context" if self.has_context else ""
        return (
            f"FactorModel(N={self.n_users}, M={self.n_items}, "
            f"K={self.factors}{ctx})"
        )


@dataclass(frozen=True)
class TrainReport:
    loss_per_sweep: tuple[float, ...]
    converged: bool
    sweeps_run: int


def init_factors(
    n_users: int, n_items: int, hyper: Hyperparams, with_context: bool
) -> FactorModel:
    """Draw factors i.i.d. uniform on [0, init_scale], deterministic per seed."""
    if n_users < 1 or n_items < 1:
        raise ValueError("n_users and n_items must be >= 1")
    rng = np.random.default_rng(hyper.seed)
    k = hyper.factors
    X = rng.random((n_users, k)) * hyper.init_scale
    Y = rng.random((n_items, k)) * hyper.init_scale
    Z = rng.random((n_items, k)) * hyper.init_scale if with_context else None
    return FactorModel(X, Y, Z)


def _as_csr(mat) -> sparse.csr_matrix:
    if isinstance(mat, SparseBinaryMatrix):
        return mat.matrix
    if isinstance(mat, SppmiMatrix):
        return mat.matrix
    return sparse.csr_matrix(mat, dtype=np.float64)


def _kernel_csr(mat: sparse.csr_matrix):
    """(indptr, indices, data) in the dtypes the kernels expect."""
    return (
        np.ascontiguousarray(mat.indptr, dtype=np.int64),
        np.ascontiguousarray(mat.indices, dtype=np.int64),
        np.ascontiguousarray(mat.data, dtype=np.float64),
    )


def _empty_structure(n_rows: int, k: int):
    return (
        np.zeros(n_rows + 1, dtype=np.int64),
        np.zeros(0, dtype=np.int64),
        np.zeros(0, dtype=np.float64),
        np.zeros((1, k), dtype=np.float64),
    )


def _support_preds(mat: sparse.csr_matrix, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Predictions A[row] . B[col] aligned with mat.data order."""
    rows = np.repeat(np.arange(mat.shape[0]), np.diff(mat.indptr))
    return np.einsum("ij,ij->i", A[rows], B[mat.indices])


def wmf_loss(R, X: np.ndarray, Y: np.ndarray, hyper: Hyperparams) -> float:
    """Exact weighted MF objective over the full matrix."""
    R = _as_csr(R)
    gram = (X.T @ X) * (Y.T @ Y)
    background = float(gram.sum())  # sum of squared predictions over all cells
    preds = _support_preds(R, X, Y)
    conf = 1.0 + hyper.alpha * R.data
    observed = float(np.sum(conf * (1.0 - preds) ** 2) - np.sum(preds**2))
    reg = hyper.lambda_x * float(np.sum(X**2)) + hyper.lambda_y * float(np.sum(Y**2))
    return background + observed + reg


def wmf_train(R, hyper: Hyperparams) -> tuple[FactorModel, TrainReport]:
    """Train weighted MF by alternating exact row solves.

    Runs up to ``hyper.sweeps`` full sweeps (users then items), recording
    the objective after each; stops early once the relative loss change
    drops below ``hyper.tol``.
    """
    R = _as_csr(R)
    if R.nnz == 0:
        raise ValueError("R must have non-empty support")
    n_users, n_items = R.shape
    RT = R.T.tocsr()
    args_r = _kernel_csr(R)
    args_rt = _kernel_csr(RT)
    model = init_factors(n_users, n_items, hyper, with_context=False)
    X, Y = model.X, model.Y
    eye = np.eye(hyper.factors)
    losses: list[float] = []
    converged = False
    for _ in range(hyper.sweeps):
        gram_x = Y.T @ Y + hyper.lambda_x * eye
        kernels.solve_rows_wmf(X, Y, gram_x, *args_r, hyper.alpha, hyper.nonneg)
        gram_y = X.T @ X + hyper.lambda_y * eye
        kernels.solve_rows_wmf(Y, X, gram_y, *args_rt, hyper.alpha, hyper.nonneg)
        losses.append(wmf_loss(R, X, Y, hyper))
        if len(losses) > 1 and _small_change(losses[-2], losses[-1], hyper.tol):
            converged = True
            break
    return FactorModel(X, Y), TrainReport(tuple(losses), converged, len(losses))


def _small_change(prev: float, cur: float, tol: float) -> bool:
    return abs(prev - cur) < tol * max(abs(prev), 1e-30)


def _check_joint_shapes(R: sparse.csr_matrix, V: sparse.csr_matrix | None):
    if V is not None:
        if V.shape[0] != V.shape[1]:
            raise ValueError("V must be square")
        if V.shape[0] != R.shape[1]:
            raise ValueError(
                f"item dimension mismatch: R has {R.shape[1]} items, "
                f"V has {V.shape[0]}"
            )


def joint_train(R, V, hyper: Hyperparams) -> tuple[FactorModel, TrainReport]:
    """Train the joint model by cyclic exact row solves (X, Y, then Z).

    X rows solve over the user's observed items; Y rows over the item's
    observed users plus its nonzero contexts; Z rows over the context's
    nonzero partners. With ``hyper.item_item_dense_zeros`` the item-item
    term runs over every (i, j) cell instead of the nonzero support (small
    instances only). With ``hyper.nonneg`` every solved row is clipped at
    zero.
    """
    R = _as_csr(R)
    V = _as_csr(V) if V is not None else sparse.csr_matrix(
        (R.shape[1], R.shape[1]), dtype=np.float64
    )
    _check_joint_shapes(R, V)
    n_users, n_items = R.shape
    k = hyper.factors
    w = hyper.item_item_weight
    RT = R.T.tocsr()
    VT = V.T.tocsr()
    args_r = _kernel_csr(R)
    args_rt = _kernel_csr(RT)
    args_v = _kernel_csr(V)
    args_vt = _kernel_csr(VT)
    empty_u = _empty_structure(n_users, k)
    empty_i = _empty_structure(n_items, k)
    model = init_factors(n_users, n_items, hyper, with_context=True)
    X, Y, Z = model.X, model.Y, model.Z
    eye = np.eye(k)
    losses: list[float] = []
    converged = False
    for _ in range(hyper.sweeps):
        base_x = hyper.lambda_x * eye
        kernels.solve_rows_joint(
            X, base_x, Y, *args_r, 1.0, empty_u[3], *empty_u[:3], 0.0, hyper.nonneg
        )
        base_y = hyper.lambda_y * eye
        if hyper.item_item_dense_zeros:
            base_y = base_y + w * (Z.T @ Z)
        kernels.solve_rows_joint(
            Y, base_y, X, *args_rt, 1.0, Z, *args_v, w, hyper.nonneg
        )
        base_z = hyper.lambda_z * eye
        if hyper.item_item_dense_zeros:
            base_z = base_z + w * (Y.T @ Y)
        kernels.solve_rows_joint(
            Z, base_z, empty_i[3], *empty_i[:3], 0.0, Y, *args_vt, w, hyper.nonneg
        )
        model = FactorModel(X, Y, Z)
        losses.append(joint_loss(R, V, model, hyper))
        if len(losses) > 1 and _small_change(losses[-2], losses[-1], hyper.tol):
            converged = True
            break
    return model, TrainReport(tuple(losses), converged, len(losses))


def joint_loss(R, V, model: FactorModel, hyper: Hyperparams) -> float:
    """Exact joint objective over the sparse supports.

    With ``hyper.item_item_dense_zeros`` the item-item term instead runs
    over every (i, j) cell, with absent entries counted as zeros.
    """
    R = _as_csr(R)
    V = _as_csr(V) if V is not None else None
    if model.X.shape[0] != R.shape[0] or model.Y.shape[0] != R.shape[1]:
        raise ValueError("factor shapes do not match R")
    if V is not None and V.nnz and model.Z is None:
        raise ValueError("model has no context factors but V is non-empty")
    preds = _support_preds(R, model.X, model.Y)
    loss = float(np.sum((R.data - preds) ** 2))
    w = hyper.item_item_weight
    if model.Z is not None:
        if V is None:
            V = sparse.csr_matrix((R.shape[1], R.shape[1]), dtype=np.float64)
        _check_joint_shapes(R, V)
        vpred = _support_preds(V, model.Y, model.Z)
        loss += w * float(np.sum((V.data - vpred) ** 2))
        if hyper.item_item_dense_zeros:
            full = float(np.sum((model.Y.T @ model.Y) * (model.Z.T @ model.Z)))
            loss += w * (full - float(np.sum(vpred**2)))
    loss += hyper.lambda_x * float(np.sum(model.X**2))
    loss += hyper.lambda_y * float(np.sum(model.Y**2))
    if model.Z is not None:
        loss += hyper.lambda_z * float(np.sum(model.Z**2))
    return loss


def joint_grad(
    R, V, model: FactorModel, hyper: Hyperparams
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Analytic gradient of joint_loss with respect to (X, Y, Z); no projection."""
    R = _as_csr(R)
    if model.X.shape[0] != R.shape[0] or model.Y.shape[0] != R.shape[1]:
        raise ValueError("factor shapes do not match R")
    X, Y, Z = model.X, model.Y, model.Z
    resid = R.copy()
    resid.data = R.data - _support_preds(R, X, Y)
    gX = -2.0 * (resid @ Y) + 2.0 * hyper.lambda_x * X
    gY = -2.0 * (resid.T @ X) + 2.0 * hyper.lambda_y * Y
    gZ = None
    if Z is not None:
        V = _as_csr(V) if V is not None else sparse.csr_matrix(
            (R.shape[1], R.shape[1]), dtype=np.float64
        )
        _check_joint_shapes(R, V)
        w = hyper.item_item_weight
        if hyper.item_item_dense_zeros:
            gY += 2.0 * w * (Y @ (Z.T @ Z) - V @ Z)
            gZ = 2.0 * w * (Z @ (Y.T @ Y) - V.T @ Y)
        else:
            vres = V.copy()
            vres.data = V.data - _support_preds(V, Y, Z)
            gY += -2.0 * w * (vres @ Z)
            gZ = -2.0 * w * (vres.T @ Y)
        gZ += 2.0 * hyper.lambda_z * Z
    return gX, gY, gZ


def predict_score(model: FactorModel, user: int, item: int) -> float:
    """Inner product of the user's and item's latent vectors."""
    if not 0 <= user < model.n_users:
        raise IndexError(f"user index {user} out of range")
    if not 0 <= item < model.n_items:
        raise IndexError(f"item index {item} out of range")
    return float(model.X[user] @ model.Y[item])


def recommend_topk(
    model: FactorModel,
    user: int,
    k: int,
    exclude: set[int] | frozenset[int] = frozenset(),
) -> list[tuple[int, float]]:
    """The k highest-scoring items for a user, excluding the given items.

    Returns (item index, score) pairs in descending score order, ties
    broken by ascending item index. Shorter than k if fewer items remain.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 <= user < model.n_users:
        raise IndexError(f"user index {user} out of range")
    scores = model.Y @ model.X[user]
    order = np.argsort(-scores, kind="stable")
    out = []
    for idx in order:
        if int(idx) in exclude:
            continue
        out.append((int(idx), float(scores[idx])))
        if len(out) == k:
            break
    return out
