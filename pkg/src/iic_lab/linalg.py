"""Validated design matrices and the shared linear-algebra kernels.

Everything downstream works with an overparameterized design X (n rows,
d >= n columns, full row rank).  This module owns the rank check and the
three kernels used everywhere else: the Gram log-determinant, application
of the Moore-Penrose pseudoinverse, and a deterministic orthonormal basis
of ker(X).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import BadShape, NonFinite, NotPositiveDefinite, RankDeficient

# Relative threshold for the numerical rank test: singular values above
# RANK_RTOL * sigma_max * max(n, d) count toward the rank.
RANK_RTOL = 1e-10

# Entries below this are treated as zero when fixing kernel-basis signs.
_SIGN_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """An n x d design with d >= n and numerically full row rank."""

    X: np.ndarray
    n: int
    d: int


@dataclass(frozen=True, eq=False)
class KernelBasis:
    """Orthonormal basis Q (d x (d-n)) of ker(X), with a fixed sign convention."""

    Q: np.ndarray


def validate_design(X) -> DesignMatrix:
    """Check shape, finiteness and row rank; return a validated design.

    The numerical rank counts singular values above
    ``1e-10 * sigma_max * max(n, d)``.  Raises ``NonFinite``, ``BadShape``
    (d < n) or ``RankDeficient``.
    """
    X = np.array(X, dtype=float, order="C")
    if X.ndim != 2 or X.size == 0:
        raise BadShape(f"design must be a nonempty 2-d matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFinite("design matrix contains NaN or infinite entries")
    n, d = X.shape
    if d < n:
        raise BadShape(f"need d >= n (overparameterized), got n={n}, d={d}")
    sv = sla.svdvals(X)
    tol = RANK_RTOL * sv[0] * max(n, d) if sv[0] > 0 else 0.0
    rank = int(np.count_nonzero(sv > tol))
    if rank < n:
        raise RankDeficient(f"numerical row rank {rank} < n = {n}")
    return DesignMatrix(X=X, n=n, d=d)


def _gram_cholesky(D: DesignMatrix) -> np.ndarray:
    """Lower Cholesky factor of XX^T; failure signals near rank deficiency."""
    G = D.X @ D.X.T
    try:
        return sla.cholesky(G, lower=True)
    except sla.LinAlgError as exc:
        raise NotPositiveDefinite("Gram matrix XX^T is not positive definite") from exc


def log_det_gram(D: DesignMatrix) -> float:
    """log det(XX^T) via the Cholesky factor (sum of log diagonal entries)."""
    L = _gram_cholesky(D)
    return float(2.0 * np.sum(np.log(np.diag(L))))


def pinv_apply(D: DesignMatrix, Y) -> np.ndarray:
    """Return X^T (XX^T)^{-1} Y, the minimum l2-norm solution of X theta = Y."""
    Y = np.asarray(Y, dtype=float).reshape(-1)
    if Y.shape[0] != D.n:
        raise BadShape(f"Y has length {Y.shape[0]}, expected n = {D.n}")
    if not np.all(np.isfinite(Y)):
        raise NonFinite("Y contains NaN or infinite entries")
    L = _gram_cholesky(D)
    z = sla.cho_solve((L, True), Y)
    return D.X.T @ z


def kernel_basis(D: DesignMatrix) -> KernelBasis:
    """Deterministic orthonormal basis of ker(X).

    Computed from a full QR factorization of X^T (the trailing d - n
    Householder vectors span the kernel), then sign-normalized so the last
    entry of each column that exceeds 1e-12 in magnitude is positive.  For
    d = n the basis is empty (d x 0).
    """
    if D.d == D.n:
        return KernelBasis(Q=np.zeros((D.d, 0)))
    Qfull, _ = sla.qr(D.X.T, mode="full")
    Q = np.ascontiguousarray(Qfull[:, D.n:])
    for k in range(Q.shape[1]):
        col = Q[:, k]
        nz = np.nonzero(np.abs(col) > _SIGN_EPS)[0]
        if nz.size and col[nz[-1]] < 0:
            Q[:, k] = -col
    return KernelBasis(Q=Q)
