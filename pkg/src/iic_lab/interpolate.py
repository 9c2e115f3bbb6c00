"""Minimum l^p-norm interpolators for p = 1 and p >= 2.

Three solvers share one output type:

* ``min_norm_l2``   - closed form through the pseudoinverse.
* ``min_norm_lp``   - damped Newton on the kernel coordinates for p >= 2,
  with a gradient fallback when the Hessian degenerates (p > 2 and a
  coordinate of the iterate sits at zero).
* ``min_norm_l1``   - ADMM on the nonnegative split LP, followed by a
  polish step that re-solves exactly on the detected support and accepts
  only when a dual certificate confirms optimality.  Uniqueness of the l1
  minimizer is decided by the certificate margin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .errors import (
    MaxIterations,
    NotUnique,
    SingularHessian,
    SupportRankDeficient,
)
from .linalg import DesignMatrix, kernel_basis, pinv_apply

_ARMIJO_C = 1e-4
_HESSIAN_ZERO = 1e-12  # coordinate magnitude below which |theta|^(p-2) degenerates


@dataclass
class SolverOptions:
    """Tolerances and budgets shared by the iterative solvers."""

    max_iter: int = 10_000
    grad_tol: float = 1e-10        # p >= 2 acceptance, relative to max(1, |theta|_p^p)
    gap_tol: float = 1e-8          # l1 duality gap, relative to max(1, |theta|_1)
    interp_tol: float = 1e-8       # residual, relative to max(1, |Y|_2)
    support_tol: float = 1e-8      # relative support threshold
    cert_margin_tol: float = 1e-6  # margin enforcing the strict |X_C^T mu|_inf < 1
    rho: float = 1.0               # ADMM penalty
    seed: int = 0                  # l1 initialization stream


@dataclass(eq=False)
class Interpolator:
    """A solution of min |theta|_p subject to X theta = Y, with diagnostics."""

    theta: np.ndarray
    p: float
    support: np.ndarray           # 0-based indices with |theta_j| above threshold
    signs: np.ndarray             # signs of theta on the support
    residual: float               # |X theta - Y|_2
    stationarity: float           # |Q^T grad|_inf for p >= 2, duality gap for p = 1
    iterations: int
    certificate: Optional["CertificateReport"] = None  # populated for p = 1


@dataclass(eq=False)
class CertificateReport:
    """Dual certificate for uniqueness of the l1 minimizer."""

    mu: np.ndarray
    max_abs_offsupport: float
    unique: bool
    margin: float


def detect_support(theta, tol_support: float | None = None):
    """Indices and signs of the coordinates above the support threshold.

    Default threshold is ``1e-8 * |theta|_inf`` (zero for the zero vector).
    """
    theta = np.asarray(theta, dtype=float)
    if tol_support is None:
        tol_support = SolverOptions.support_tol * float(np.max(np.abs(theta), initial=0.0))
    support = np.nonzero(np.abs(theta) > tol_support)[0]
    return support, np.sign(theta[support])


def uniqueness_certificate(
    D: DesignMatrix, support, signs, cert_margin_tol: float = SolverOptions.cert_margin_tol
) -> CertificateReport:
    """Minimum-norm mu with X_S^T mu = s, and the off-support sup-norm test.

    Raises ``SupportRankDeficient`` when the support columns are linearly
    dependent (uniqueness fails outright).  Otherwise ``unique`` is true
    iff ``|X_C^T mu|_inf < 1 - cert_margin_tol``.
    """
    support = np.asarray(support, dtype=int)
    signs = np.asarray(signs, dtype=float)
    if support.size == 0:
        raise ValueError("certificate needs a nonempty support")
    XS = D.X[:, support]
    sv = sla.svdvals(XS)
    if sv[-1] <= 1e-10 * sv[0] * max(XS.shape):
        raise SupportRankDeficient(
            f"support columns {support.tolist()} are (numerically) linearly dependent"
        )
    # Least-norm solution of the underdetermined system X_S^T mu = s,
    # through the small Gram when it is factorizable, else by SVD (the
    # Gram squares the condition number and can fail while X_S itself is
    # still comfortably full rank).
    mu = None
    try:
        L = sla.cholesky(XS.T @ XS, lower=True)
        mu = XS @ sla.cho_solve((L, True), signs)
    except sla.LinAlgError:
        pass
    if mu is None or np.max(np.abs(XS.T @ mu - signs)) > 1e-8:
        mu, *_ = sla.lstsq(XS.T, signs)
    if np.max(np.abs(XS.T @ mu - signs)) > 1e-6:
        raise SupportRankDeficient(
            "X_S^T mu = s not solvable to tolerance; support nearly dependent"
        )
    mask = np.ones(D.d, dtype=bool)
    mask[support] = False
    offsupport = D.X[:, mask]
    max_abs = float(np.max(np.abs(offsupport.T @ mu), initial=0.0))
    unique = max_abs < 1.0 - cert_margin_tol
    return CertificateReport(
        mu=mu, max_abs_offsupport=max_abs, unique=unique, margin=1.0 - max_abs
    )


# ---------------------------------------------------------------------------
# p = 2 and p >= 2
# ---------------------------------------------------------------------------

def min_norm_l2(D: DesignMatrix, Y) -> Interpolator:
    """The unique minimum l2-norm interpolator X^+ Y."""
    Y = np.asarray(Y, dtype=float).reshape(-1)
    theta = pinv_apply(D, Y)
    residual = float(np.linalg.norm(D.X @ theta - Y))
    # Kernel projection of the gradient 2*theta, without forming Q.
    grad_proj = 2.0 * (theta - pinv_apply(D, D.X @ theta))
    support, signs = detect_support(theta)
    return Interpolator(
        theta=theta,
        p=2.0,
        support=support,
        signs=signs,
        residual=residual,
        stationarity=float(np.max(np.abs(grad_proj), initial=0.0)),
        iterations=0,
    )


def _lp_value_grad(theta0, Q, w, p):
    theta = theta0 + Q @ w
    a = np.abs(theta)
    h = float(np.sum(a**p))
    grad = p * (Q.T @ (a ** (p - 1.0) * np.sign(theta)))
    return theta, a, h, grad


def min_norm_lp(
    D: DesignMatrix, Y, p: float, opts: SolverOptions | None = None
) -> Interpolator:
    """Minimize |X^+ Y + Q w|_p^p over the kernel coordinates w, p >= 2.

    Damped Newton with gradient g = p Q^T (|theta|^(p-1) sgn theta) and
    Hessian p(p-1) Q^T diag(|theta|^(p-2)) Q; accepts when
    ``|g|_inf <= grad_tol * max(1, |theta|_p^p)``.  Iterations where the
    Hessian degenerates fall back to Armijo gradient steps.
    """
    if p < 2:
        raise ValueError(f"min_norm_lp requires p >= 2, got p={p}")
    opts = opts or SolverOptions()
    Y = np.asarray(Y, dtype=float).reshape(-1)
    theta0 = pinv_apply(D, Y)
    Q = kernel_basis(D).Q
    m = Q.shape[1]
    w = np.zeros(m)
    theta, a, h, grad = _lp_value_grad(theta0, Q, w, p)
    iterations = 0
    gradient_stalled = False
    while True:
        gnorm = float(np.max(np.abs(grad), initial=0.0))
        if gnorm <= opts.grad_tol * max(1.0, h) or m == 0:
            break
        if iterations >= opts.max_iter:
            if gradient_stalled:
                raise SingularHessian(
                    "Newton system singular and gradient steps stalled"
                )
            raise MaxIterations(f"no convergence in {opts.max_iter} iterations (p={p})")
        direction = None
        if not (p > 2 and np.min(a) < _HESSIAN_ZERO):
            lam = a ** (p - 2.0)
            H = p * (p - 1.0) * (Q.T * lam) @ Q
            try:
                direction = -sla.cho_solve((sla.cholesky(H, lower=True), True), grad)
            except sla.LinAlgError:
                direction = None
        newton_dir = direction is not None
        if direction is None or float(grad @ direction) >= 0.0:
            direction = -grad  # fallback: plain gradient step
            newton_dir = False
        slope = float(grad @ direction)
        if newton_dir and abs(slope) <= 1e-14 * max(1.0, h):
            # predicted decrease below the float resolution of h: Armijo can
            # no longer discriminate, but the unit Newton step is reliable in
            # the quadratic convergence region
            w = w + direction
            theta, a, h, grad = _lp_value_grad(theta0, Q, w, p)
            iterations += 1
            continue
        step = 1.0
        while step > 1e-18:
            w_try = w + step * direction
            theta_t, a_t, h_t, grad_t = _lp_value_grad(theta0, Q, w_try, p)
            if h_t <= h + _ARMIJO_C * step * slope:
                w, theta, a, h, grad = w_try, theta_t, a_t, h_t, grad_t
                break
            step *= 0.5
        else:
            gradient_stalled = True
            raise SingularHessian("line search failed to decrease the objective")
        iterations += 1
    support, signs = detect_support(theta)
    residual = float(np.linalg.norm(D.X @ theta - Y))
    return Interpolator(
        theta=theta,
        p=float(p),
        support=support,
        signs=signs,
        residual=residual,
        stationarity=float(np.max(np.abs(grad), initial=0.0)),
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# p = 1 (basis pursuit)
# ---------------------------------------------------------------------------

def _polish_candidates(theta_hat, n):
    """Candidate supports, tightest first: threshold ladder plus top-k sets."""
    amax = float(np.max(np.abs(theta_hat), initial=0.0))
    if amax == 0.0:
        return []
    seen = set()
    candidates = []
    for rel in (1e-6, 1e-5, 1e-4, 1e-3, 1e-2):
        S = tuple(np.nonzero(np.abs(theta_hat) > rel * amax)[0])
        if 0 < len(S) <= n and S not in seen:
            seen.add(S)
            candidates.append(np.array(S, dtype=int))
    order = np.argsort(-np.abs(theta_hat), kind="stable")
    for k in range(1, n + 1):
        S = tuple(sorted(order[:k]))
        if S not in seen:
            seen.add(S)
            candidates.append(np.array(S, dtype=int))
    return candidates


def _try_polish(D, Y, support, opts):
    """Exact re-solve on a candidate support plus certificate check.

    Returns ``(interpolator, nonunique_evidence)``; the first is None when
    the candidate is rejected, the second is True when the candidate is
    optimal but fails the uniqueness margin.
    """
    XS = D.X[:, support]
    theta_S, *_ = sla.lstsq(XS, Y)
    if np.linalg.norm(XS @ theta_S - Y) > 1e-9 * max(1.0, float(np.linalg.norm(Y))):
        return None, False
    if np.min(np.abs(theta_S)) <= 1e-12 * max(1.0, float(np.max(np.abs(theta_S)))):
        return None, False  # support overshoot: a polished coordinate vanished
    signs = np.sign(theta_S)
    try:
        cert = uniqueness_certificate(D, support, signs, opts.cert_margin_tol)
    except SupportRankDeficient:
        return None, False
    if cert.max_abs_offsupport > 1.0 + 1e-9:
        return None, False  # mu not dual feasible: candidate not certified optimal
    theta = np.zeros(D.d)
    theta[support] = theta_S
    gap = float(np.sum(np.abs(theta_S)) - Y @ cert.mu)
    if abs(gap) > opts.gap_tol * max(1.0, float(np.sum(np.abs(theta_S)))):
        return None, False
    if not cert.unique:
        return None, True
    interp = Interpolator(
        theta=theta,
        p=1.0,
        support=support,
        signs=signs,
        residual=float(np.linalg.norm(D.X @ theta - Y)),
        stationarity=abs(gap),
        iterations=0,
        certificate=cert,
    )
    return interp, False


def _dual_candidates(D, mu_est, n):
    """Supports ranked by dual activity |x_j^T mu|: top-k sets for k <= n."""
    score = np.abs(D.X.T @ mu_est)
    order = np.argsort(-score, kind="stable")
    return [np.array(sorted(order[:k]), dtype=int) for k in range(1, n + 1)]


def min_norm_l1(D: DesignMatrix, Y, opts: SolverOptions | None = None) -> Interpolator:
    """Basis pursuit: min |theta|_1 subject to X theta = Y.

    Runs over-relaxed ADMM with residual-balanced penalty adaptation on
    the split LP (theta = u - v, u, v >= 0, minimize sum) and periodically
    polishes: candidate supports (from the primal iterate and from the
    dual activity pattern |x_j^T mu|) are re-solved exactly and accepted
    only when the dual certificate confirms optimality with a positive
    uniqueness margin.  Raises ``NotUnique`` when the margin test fails
    (multiple l1 minimizers) and ``MaxIterations`` when neither happens
    within the budget.
    """
    opts = opts or SolverOptions()
    Y = np.asarray(Y, dtype=float).reshape(-1)
    d = D.d
    ynorm = float(np.linalg.norm(Y))
    if ynorm <= 1e-14:
        return Interpolator(
            theta=np.zeros(d),
            p=1.0,
            support=np.array([], dtype=int),
            signs=np.array([]),
            residual=0.0,
            stationarity=0.0,
            iterations=0,
        )

    theta_pinv = pinv_apply(D, Y)
    G2 = 2.0 * (D.X @ D.X.T)
    L2 = sla.cholesky(G2, lower=True)
    rho = opts.rho
    alpha = 1.6  # over-relaxation
    rng = np.random.default_rng(opts.seed)
    scale = max(1.0, float(np.max(np.abs(theta_pinv))))
    z = np.concatenate([np.maximum(theta_pinv, 0.0), np.maximum(-theta_pinv, 0.0)])
    z += 0.05 * scale * np.abs(rng.standard_normal(2 * d))
    u = np.zeros(2 * d)

    nonunique_evidence = False
    for it in range(1, opts.max_iter + 1):
        # x-update: project z - u - 1/rho onto {x : [X, -X] x = Y}
        r = z - u - 1.0 / rho
        lam = sla.cho_solve((L2, True), Y - D.X @ (r[:d] - r[d:]))
        corr = D.X.T @ lam
        x = r + np.concatenate([corr, -corr])
        x_rel = alpha * x + (1.0 - alpha) * z
        z_old = z
        z = np.maximum(x_rel + u, 0.0)
        u = u + x_rel - z

        prim_res = float(np.max(np.abs(x - z)))
        dual_res = rho * float(np.max(np.abs(z - z_old)))
        converged = prim_res <= 1e-12 * scale and dual_res <= 1e-12 * scale
        if it % 50 == 0 and not converged:
            # residual balancing keeps the penalty in a productive range
            if prim_res > 10.0 * dual_res and rho < 1e4:
                rho *= 2.0
                u /= 2.0
            elif dual_res > 10.0 * prim_res and rho > 1e-4:
                rho /= 2.0
                u *= 2.0
        if it % 25 == 0 or converged or it == opts.max_iter:
            theta_hat = z[:d] - z[d:]
            candidates = _polish_candidates(theta_hat, D.n)
            seen = {tuple(s) for s in candidates}
            for cand in _dual_candidates(D, rho * lam, D.n):
                if tuple(cand) not in seen:
                    candidates.append(cand)
            for support in candidates:
                interp, evidence = _try_polish(D, Y, support, opts)
                nonunique_evidence = nonunique_evidence or evidence
                if interp is not None:
                    interp.iterations = it
                    return interp
            if nonunique_evidence and converged:
                raise NotUnique(
                    "dual certificate margin below tolerance: "
                    "multiple l1 minimizers interpolate Y"
                )
    if nonunique_evidence:
        raise NotUnique(
            "dual certificate margin below tolerance: "
            "multiple l1 minimizers interpolate Y"
        )
    raise MaxIterations(f"basis pursuit did not certify within {opts.max_iter} iterations")
