"""The information criterion for interpolators and its decomposition.

Every evaluator returns an ``IICBreakdown`` whose total is exactly
``reg_term + sharpness_term``:

* ``iic_ridge``      p = 2 closed form.
* ``iic_smooth``     p >= 2 with the curvature sum and the ambient
  constant ``k1``; defined for d <= n*p/(p-2), with the boundary case
  evaluated as the continuous limit of the formula.
* ``iic_sparse``     p = 1 via the kernel-body volume V0 and ``k2``.
* ``iic_sparse_n1``  exact p = 1, n = 1 closed form.

All factorials, determinants and products of near-unit terms are handled
in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog

from .errors import (
    DegenerateCoordinates,
    DimensionBound,
    DimensionTooHigh,
    InfiniteVolume,
    SupportNotFull,
    SupportRankDeficient,
    TiedMaximum,
    UnboundedBody,
    ZeroCoordinate,
    ZeroNorm,
)
from .interpolate import Interpolator, SolverOptions
from .linalg import DesignMatrix, kernel_basis, log_det_gram

MC_DIM_LIMIT = 6  # default kernel-dimension cap for Monte Carlo volumes


@dataclass(eq=False)
class IICBreakdown:
    """Criterion value split into regularization and sharpness parts."""

    p: float
    total: float
    reg_term: float
    sharpness_term: float
    ambient_constant: float       # k1, k2 or -log n depending on regime
    tau_star: float
    log_det_gram: float
    sum_log_abs_theta: Optional[float] = None  # diagnostic, p >= 2 regime only
    log_v0: Optional[float] = None             # p = 1 regime only
    v0_method: Optional[str] = None            # closed_form | monte_carlo | n1_residue
    log_curvature: Optional[float] = None      # log det of the projected penalty Hessian


@dataclass(eq=False)
class V0Result:
    """Volume of the sign-compatible unit body in ker(X)."""

    value: float
    log_value: float
    method: str                   # closed_form | monte_carlo
    mc_std_error: float = 0.0
    psi: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# ambient constants
# ---------------------------------------------------------------------------

def _log_2gamma(p: float) -> float:
    """log(2 * Gamma(1/p + 1))."""
    return math.log(2.0) + math.lgamma(1.0 / p + 1.0)


def k1(p: float, d: int, n: int) -> float:
    """Dimension-only constant of the p >= 2 criterion.

    Requires ``2d - p(d - n) > 0``; the closed form is
    ``(d-n)/n log(p(p-1)/2pi) + 2d/n log(2 Gamma(1/p+1))
    + (2d - p(d-n))/(np) log(2pe / (2d - p(d-n)))``.
    """
    t = 2.0 * d - p * (d - n)
    if t <= 0:
        raise DimensionBound(f"2d - p(d-n) = {t} must be positive (p={p}, d={d}, n={n})")
    return (
        (d - n) / n * math.log(p * (p - 1.0) / (2.0 * math.pi))
        + 2.0 * d / n * _log_2gamma(p)
        + t / (n * p) * math.log(2.0 * p * math.e / t)
    )


def _k1_boundary(p: float, d: int, n: int) -> float:
    """k1 extended by continuity to 2d - p(d-n) = 0 (third term -> 0)."""
    t = 2.0 * d - p * (d - n)
    if t > 0:
        return k1(p, d, n)
    if t < 0:
        raise DimensionBound(f"2d - p(d-n) = {t} must be nonnegative (p={p}, d={d}, n={n})")
    return (d - n) / n * math.log(p * (p - 1.0) / (2.0 * math.pi)) + 2.0 * d / n * _log_2gamma(p)


def k2(d: int, n: int) -> float:
    """Dimension-only constant of the p = 1 criterion.

    ``-2 log n - (2/n) log(2^{-d} (d-n)!)`` with the factorial as a
    log-gamma to avoid overflow.
    """
    if not d >= n >= 1:
        raise ValueError(f"need d >= n >= 1, got d={d}, n={n}")
    return -2.0 * math.log(n) + 2.0 * d / n * math.log(2.0) - 2.0 / n * math.lgamma(d - n + 1.0)


def tau_star(p: float, d: int, n: int, norm_p_to_p: float) -> float:
    """Optimal prior scale for the given regime; ``norm`` means |theta|_p^p."""
    if norm_p_to_p <= 0:
        raise ZeroNorm("tau* undefined for a zero interpolator")
    if p == 1:
        return norm_p_to_p / n
    if p >= 2:
        t = 2.0 * d - p * (d - n)
        if t <= 0:
            raise DimensionBound(f"2d - p(d-n) = {t} must be positive (p={p}, d={d}, n={n})")
        return 2.0 * p * norm_p_to_p / t
    raise ValueError(f"no formula for p={p} (supported: p = 1 or p >= 2)")


def pac_bayes_bound(free_energy: float, delta: float, s2: float, n: int) -> float:
    """Risk bound ``(F - log delta + s2/2) / sqrt(n)``."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if s2 < 0 or n < 1:
        raise ValueError("need s2 >= 0 and n >= 1")
    return (free_energy - math.log(delta) + 0.5 * s2) / math.sqrt(n)


# ---------------------------------------------------------------------------
# regime evaluators
# ---------------------------------------------------------------------------

def _check_interpolates(D: DesignMatrix, interp: Interpolator):
    if interp.residual > SolverOptions.interp_tol * max(1.0, float(np.linalg.norm(D.X @ interp.theta))):
        raise ValueError("interpolator residual above tolerance; refuse to score a non-interpolator")


def iic_ridge(D: DesignMatrix, interp: Interpolator) -> IICBreakdown:
    """p = 2: reg = log |theta|_2^2, sharp = (1/n) log det(XX^T) - log n."""
    if interp.p != 2:
        raise ValueError(f"iic_ridge expects a p=2 interpolator, got p={interp.p}")
    _check_interpolates(D, interp)
    nrm2 = float(interp.theta @ interp.theta)
    if nrm2 <= 0.0:
        raise ZeroNorm("theta = 0 (Y = 0): log |theta|^2 undefined")
    ldg = log_det_gram(D)
    reg = math.log(nrm2)
    ambient = -math.log(D.n)
    sharp = ldg / D.n + ambient
    return IICBreakdown(
        p=2.0,
        total=reg + sharp,
        reg_term=reg,
        sharpness_term=sharp,
        ambient_constant=ambient,
        tau_star=2.0 * nrm2 / D.n,
        log_det_gram=ldg,
    )


def log_curvature_kernel(D: DesignMatrix, theta, p: float) -> float:
    """log det of the penalty Hessian restricted to ker(X): det(Q^T Lambda Q).

    Lambda = diag(|theta_j|^(p-2)).  This is the curvature factor of the
    small-tau Laplace expansion; it reduces to 0 at p = 2 and to
    ``(p-2) sum_j log|theta_j|`` whenever Lambda commutes with the kernel
    projector (e.g. all |theta_j| equal to one), but not in general.
    """
    if p == 2 or D.d == D.n:
        return 0.0
    lam = np.abs(np.asarray(theta, dtype=float)) ** (p - 2.0)
    Q = kernel_basis(D).Q
    sign, logdet = np.linalg.slogdet((Q.T * lam) @ Q)
    if sign <= 0:
        raise ZeroCoordinate("projected penalty Hessian is singular")
    return float(logdet)


def iic_smooth(D: DesignMatrix, interp: Interpolator, p: float) -> IICBreakdown:
    """p >= 2 regime with the kernel-curvature term and ambient constant k1.

    The sharpness part is ``(1/n) log det(XX^T) + (1/n) log det(Q^T
    Lambda Q) + k1``.  Requires ``d <= n p/(p-2)`` for p > 2 and every
    coordinate nonzero; at the exact dimension bound the regularization
    coefficient vanishes and tau* is infinite.
    """
    if p < 2:
        raise ValueError(f"iic_smooth requires p >= 2, got p={p}")
    _check_interpolates(D, interp)
    n, d = D.n, D.d
    t = 2.0 * d - p * (d - n)
    if t < 0:
        raise DimensionBound(f"d={d} exceeds n*p/(p-2)={n * p / (p - 2.0):.6g}")
    abs_theta = np.abs(interp.theta)
    normp = float(np.sum(abs_theta**p))
    if normp <= 0.0:
        raise ZeroNorm("theta = 0 (Y = 0): log |theta|_p^p undefined")
    tol = SolverOptions.support_tol * float(np.max(abs_theta))
    has_zero = bool(np.any(abs_theta <= tol))
    if p > 2 and has_zero:
        raise ZeroCoordinate(
            "some theta_j = 0 with p > 2: the curvature term degenerates"
        )
    slat = None if has_zero else float(np.sum(np.log(abs_theta)))
    log_curv = log_curvature_kernel(D, interp.theta, p)
    ambient = _k1_boundary(p, d, n)
    ldg = log_det_gram(D)
    reg = (t / (n * p)) * math.log(normp) if t > 0 else 0.0
    sharp = ldg / n + log_curv / n + ambient
    return IICBreakdown(
        p=float(p),
        total=reg + sharp,
        reg_term=reg,
        sharpness_term=sharp,
        ambient_constant=ambient,
        tau_star=(2.0 * p * normp / t) if t > 0 else math.inf,
        log_det_gram=ldg,
        sum_log_abs_theta=slat,
        log_curvature=log_curv,
    )


# ---------------------------------------------------------------------------
# V0: the sign-compatible kernel body
# ---------------------------------------------------------------------------

def v0_closed(D: DesignMatrix, support, signs) -> V0Result:
    """Closed-form V0 for |S| = n via Psi = X_S^{-1} X_C.

    ``V0 = 2^{d-n} sqrt(det(I + Psi^T Psi)) / (d-n)! * prod 1/(1-psi_k^2)``
    with ``psi = Psi^T s``; requires every |psi_k| < 1, otherwise the body
    has infinite volume (the l1 minimizer was not unique).
    """
    support = np.asarray(support, dtype=int)
    signs = np.asarray(signs, dtype=float)
    n, d = D.n, D.d
    if support.size != n:
        raise SupportNotFull(f"closed form needs |S| = n = {n}, got |S| = {support.size}")
    XS = D.X[:, support]
    mask = np.ones(d, dtype=bool)
    mask[support] = False
    XC = D.X[:, mask]
    try:
        Psi = sla.solve(XS, XC)
    except sla.LinAlgError as exc:
        raise SupportRankDeficient("X_S is singular") from exc
    psi = Psi.T @ signs
    if np.any(np.abs(psi) >= 1.0):
        raise InfiniteVolume(
            f"max |psi_k| = {float(np.max(np.abs(psi))):.6g} >= 1: infinite volume"
        )
    m = d - n
    # det(I_m + Psi^T Psi) = det(I_n + Psi Psi^T): use the small Gram.
    sign_det, logdet_small = np.linalg.slogdet(np.eye(n) + Psi @ Psi.T)
    log_value = (
        m * math.log(2.0)
        + 0.5 * logdet_small
        - math.lgamma(m + 1.0)
        - float(np.sum(np.log1p(-(psi**2))))
    )
    return V0Result(
        value=math.exp(log_value) if log_value < 700 else math.inf,
        log_value=log_value,
        method="closed_form",
        mc_std_error=0.0,
        psi=psi,
    )


def _body_bounding_box(Q, support, signs, d):
    """Per-axis bounds of {w : |(Qw)_C|_1 + s.(Qw)_S <= 1} from 2m small LPs."""
    m = Q.shape[1]
    mask = np.ones(d, dtype=bool)
    mask[support] = False
    QC = Q[mask, :]
    QS = Q[support, :]
    c_count = QC.shape[0]
    # variables (w, t) with t >= +-(QC w) and s^T QS w + sum t <= 1
    A_ub = np.zeros((2 * c_count + 1, m + c_count))
    b_ub = np.zeros(2 * c_count + 1)
    A_ub[:c_count, :m] = QC
    A_ub[:c_count, m:] = -np.eye(c_count)
    A_ub[c_count:2 * c_count, :m] = -QC
    A_ub[c_count:2 * c_count, m:] = -np.eye(c_count)
    A_ub[-1, :m] = signs @ QS
    A_ub[-1, m:] = 1.0
    b_ub[-1] = 1.0
    bounds = [(None, None)] * m + [(0, None)] * c_count
    lo = np.empty(m)
    hi = np.empty(m)
    for k in range(m):
        for sgn, out in ((1.0, hi), (-1.0, lo)):
            c = np.zeros(m + c_count)
            c[k] = -sgn  # linprog minimizes
            res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
            if res.status == 3:
                raise UnboundedBody("bounding-box LP unbounded: V0 is infinite")
            if not res.success:
                raise UnboundedBody(f"bounding-box LP failed: {res.message}")
            out[k] = sgn * (-res.fun)
    return lo, hi


def v0_monte_carlo(
    D: DesignMatrix,
    support,
    signs,
    samples: int = 1_000_000,
    seed: int = 0,
    dim_limit: int = MC_DIM_LIMIT,
) -> V0Result:
    """Rejection-sampling estimate of V0 over an LP-derived bounding box.

    The kernel basis is orthonormal, so the Jacobian is one and the body
    volume in w coordinates equals V0.  The box is inflated by 1% per side
    so the acceptance ratio stays strictly inside (0, 1) and the binomial
    standard error is honest.
    """
    support = np.asarray(support, dtype=int)
    signs = np.asarray(signs, dtype=float)
    m = D.d - D.n
    if m > dim_limit:
        raise DimensionTooHigh(f"kernel dimension {m} exceeds the MC limit {dim_limit}")
    if m == 0:
        return V0Result(value=1.0, log_value=0.0, method="monte_carlo", mc_std_error=0.0)
    Q = kernel_basis(D).Q
    lo, hi = _body_bounding_box(Q, support, signs, D.d)
    width = hi - lo
    pad = 0.01 * np.maximum(width, 1e-30)
    lo, hi = lo - pad, hi + pad
    box_vol = float(np.prod(hi - lo))
    mask = np.ones(D.d, dtype=bool)
    mask[support] = False
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    inside = 0
    done = 0
    while done < samples:
        batch = min(200_000, samples - done)
        W = lo + (hi - lo) * rng.random((batch, m))
        Z = W @ Q.T
        g = np.sum(np.abs(Z[:, mask]), axis=1) + Z[:, support] @ signs
        inside += int(np.count_nonzero(g <= 1.0))
        done += batch
    phat = inside / samples
    value = box_vol * phat
    se = box_vol * math.sqrt(max(phat * (1.0 - phat), 0.0) / samples)
    if value <= 0.0:
        raise UnboundedBody("no Monte Carlo sample fell inside the body")
    return V0Result(
        value=value, log_value=math.log(value), method="monte_carlo", mc_std_error=se
    )


# ---------------------------------------------------------------------------
# p = 1 evaluators
# ---------------------------------------------------------------------------

def iic_sparse(D: DesignMatrix, interp: Interpolator, v0: V0Result) -> IICBreakdown:
    """p = 1: reg = 2 log |theta|_1, sharp = (1/n) log det - (2/n) log V0 + k2."""
    if interp.p != 1:
        raise ValueError(f"iic_sparse expects a p=1 interpolator, got p={interp.p}")
    _check_interpolates(D, interp)
    n, d = D.n, D.d
    nrm1 = float(np.sum(np.abs(interp.theta)))
    if nrm1 <= 0.0:
        raise ZeroNorm("theta = 0 (Y = 0): log |theta|_1 undefined")
    ldg = log_det_gram(D)
    ambient = k2(d, n)
    reg = 2.0 * math.log(nrm1)
    sharp = ldg / n - 2.0 / n * v0.log_value + ambient
    return IICBreakdown(
        p=1.0,
        total=reg + sharp,
        reg_term=reg,
        sharpness_term=sharp,
        ambient_constant=ambient,
        tau_star=nrm1 / n,
        log_det_gram=ldg,
        log_v0=v0.log_value,
        v0_method=v0.method,
    )


def iic_sparse_n1(x, Y: float) -> IICBreakdown:
    """Exact p = 1, n = 1 closed form.

    ``reg = 2 log(|Y|/|x|_inf)`` and
    ``sharp = -2 log( (1/(2|x|_inf)) prod_{j != I} x_I^2/(x_I^2 - x_j^2) )``
    where I is the strict argmax of |x_j|.  Requires pairwise distinct
    squares x_j^2.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    d = x.shape[0]
    if Y == 0:
        raise ZeroNorm("Y = 0: theta = 0 and log |theta|_1 undefined")
    sq = np.sort(x**2)
    if sq[-1] <= 0:
        raise ZeroNorm("x = 0 cannot interpolate a nonzero Y")
    if d >= 2 and (sq[-1] - sq[-2]) <= 1e-12 * sq[-1]:
        raise TiedMaximum("no strictly dominant |x_j|")
    if d >= 2 and np.any(np.diff(sq) <= 1e-12 * sq[-1]):
        raise DegenerateCoordinates("some x_j^2 coincide within tolerance")
    I = int(np.argmax(np.abs(x)))
    xmax2 = x[I] ** 2
    nrm1 = abs(Y) / math.sqrt(xmax2)
    reg = 2.0 * math.log(nrm1)
    others = np.delete(x, I) ** 2
    log_prod = float(np.sum(np.log(xmax2) - np.log(xmax2 - others)))
    sharp = -2.0 * (log_prod - math.log(2.0 * math.sqrt(xmax2)))
    ldg = math.log(float(x @ x))
    return IICBreakdown(
        p=1.0,
        total=reg + sharp,
        reg_term=reg,
        sharpness_term=sharp,
        ambient_constant=0.0,  # the n=1 form folds the ambient term into sharpness
        tau_star=nrm1,
        log_det_gram=ldg,
        v0_method="n1_residue",
    )
