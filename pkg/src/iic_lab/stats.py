"""Rank correlation with bootstrap confidence intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import TooFew, ZeroVariance


@dataclass(eq=False)
class CorrelationReport:
    """Spearman rho with a 95% bootstrap percentile interval."""

    pair: str
    rho: float
    ci_low: float
    ci_high: float
    n_points: int
    n_resamples: int
    seed: int
    n_degenerate_skipped: int = 0


def spearman(a, b) -> float:
    """Pearson correlation of midranks (average ranks for ties)."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise TooFew(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 3:
        raise TooFew(f"need at least 3 points, got {a.shape[0]}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise TooFew("inputs must be finite")
    ra = rankdata(a)
    rb = rankdata(b)
    ra = ra - ra.mean()
    rb = rb - rb.mean()
    va = float(ra @ ra)
    vb = float(rb @ rb)
    if va == 0.0 or vb == 0.0:
        raise ZeroVariance("all ranks tied in one input")
    return float(ra @ rb / np.sqrt(va * vb))


def bootstrap_ci(
    a, b, n_resamples: int = 1000, seed: int = 0, pair: str = ""
) -> CorrelationReport:
    """Paired bootstrap percentile interval (2.5/97.5) for Spearman rho.

    Degenerate resamples (zero rank variance) are redrawn up to 10 times,
    then skipped with a count.  The interval is widened, if necessary, to
    contain the full-sample point estimate.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape[0] != b.shape[0] or a.shape[0] < 4:
        raise TooFew("bootstrap needs paired samples of length >= 4")
    rho = spearman(a, b)
    n = a.shape[0]
    rng = np.random.default_rng(seed)
    rhos = []
    skipped = 0
    for _ in range(n_resamples):
        for _attempt in range(10):
            idx = rng.integers(0, n, size=n)
            try:
                rhos.append(spearman(a[idx], b[idx]))
                break
            except ZeroVariance:
                continue
        else:
            skipped += 1
    if not rhos:
        raise ZeroVariance("every bootstrap resample was degenerate")
    lo, hi = np.percentile(rhos, [2.5, 97.5])
    return CorrelationReport(
        pair=pair,
        rho=rho,
        ci_low=min(float(lo), rho),
        ci_high=max(float(hi), rho),
        n_points=n,
        n_resamples=n_resamples,
        seed=seed,
        n_degenerate_skipped=skipped,
    )
