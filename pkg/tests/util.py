"""Shared test oracles: brute-force enumeration and instance generators."""

import numpy as np
import scipy.linalg as sla

from iic_lab import validate_design


def random_design(rng, n, d, scale=1.0):
    """Gaussian design, almost surely full row rank."""
    return validate_design(scale * rng.standard_normal((n, d)))


def enumerate_l1(X, Y, tol=1e-9):
    """Exhaustive minimum-l1 search over basic solutions of X theta = Y.

    Every vertex of {theta : X theta = Y} is supported on at most n
    linearly independent columns, so scanning all supports of size <= n
    finds the optimum.  Returns (best_norm, list of optimal theta).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).reshape(-1)
    n, d = X.shape
    from itertools import combinations

    best = np.inf
    argmins = []
    for k in range(0, n + 1):
        for S in combinations(range(d), k):
            if k == 0:
                if np.linalg.norm(Y) <= tol:
                    cand = np.zeros(d)
                else:
                    continue
            else:
                XS = X[:, S]
                if np.linalg.matrix_rank(XS, tol=1e-10) < k:
                    continue
                theta_S, *_ = sla.lstsq(XS, Y)
                if np.linalg.norm(XS @ theta_S - Y) > tol * max(1.0, np.linalg.norm(Y)):
                    continue
                cand = np.zeros(d)
                cand[list(S)] = theta_S
            nrm = float(np.sum(np.abs(cand)))
            if nrm < best - 1e-8:
                best = nrm
                argmins = [cand]
            elif nrm <= best + 1e-8:
                if all(np.max(np.abs(cand - a)) > 1e-6 for a in argmins):
                    argmins.append(cand)
    return best, argmins
