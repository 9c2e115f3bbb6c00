"""Feature maps that carry a base dataset into the overparameterized regime.

Random Fourier features draw each frequency vector from its own
counter-based substream (Philox keyed by ``(seed, k)``, inverse-CDF
normals), so widening the target dimension while keeping the seed leaves
the earlier frequency pairs bitwise unchanged.  Polynomial features are
graded-lexicographic monomials, standardized column by column.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import DegreeExhausted

_GENERATOR_ID = "philox4x64/inverse_cdf"


@dataclass(frozen=True)
class RFFConfig:
    """Target dimension, Gaussian bandwidth and stream seed."""

    target_dim: int
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.target_dim < 2:
            raise ValueError(f"target_dim must be >= 2, got {self.target_dim}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    @property
    def d_h(self) -> int:
        return self.target_dim // 2


@dataclass(eq=False)
class FeatureMatrix:
    """Mapped features plus the provenance needed to re-apply the map."""

    Z: np.ndarray
    map_kind: str                 # "rff" | "polynomial"
    provenance: dict = field(default_factory=dict)


def median_bandwidth(X0) -> float:
    """Median pairwise distance between rows (the usual bandwidth heuristic)."""
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    n = X0.shape[0]
    if n < 2:
        return 1.0
    sq = np.sum(X0**2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X0 @ X0.T, 0.0)
    pair = np.sqrt(d2[np.triu_indices(n, k=1)])
    med = float(np.median(pair))
    return med if med > 0 else 1.0


def _frequency(seed: int, k: int, d0: int, sigma: float) -> np.ndarray:
    """Frequency vector v_k ~ N(0, sigma^-2 I), from substream (seed, k)."""
    rng = np.random.Generator(
        np.random.Philox(key=np.array([seed, k], dtype=np.uint64))
    )
    u = rng.random(d0)
    return ndtri(np.clip(u, 1e-300, None)) / sigma


def rff_map(X0, cfg: RFFConfig) -> FeatureMatrix:
    """Random Fourier features: interleaved (cos, sin) pairs over d_h = floor(d/2) frequencies.

    Row i becomes ``(1/sqrt(d_h)) * (cos(v_k . x_i), sin(v_k . x_i))_k``,
    so every output row has unit l2 norm.  Frequency k depends only on
    (seed, k): sweeps over increasing target_dim with a shared seed are
    column-nested.
    """
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    n, d0 = X0.shape
    d_h = cfg.d_h
    V = np.stack([_frequency(cfg.seed, k, d0, cfg.sigma) for k in range(d_h)])
    angles = X0 @ V.T  # n x d_h
    Z = np.empty((n, 2 * d_h))
    Z[:, 0::2] = np.cos(angles)
    Z[:, 1::2] = np.sin(angles)
    Z /= np.sqrt(d_h)
    provenance = {
        "map_kind": "rff",
        "target_dim": cfg.target_dim,
        "d_h": d_h,
        "sigma": cfg.sigma,
        "seed": cfg.seed,
        "d0": d0,
        "generator": _GENERATOR_ID,
    }
    return FeatureMatrix(Z=Z, map_kind="rff", provenance=provenance)


def _monomials(d0: int, degree: int):
    """Exponent index tuples in graded lexicographic order."""
    for g in range(1, degree + 1):
        yield from itertools.combinations_with_replacement(range(d0), g)


def poly_map(X0, degree: int, target_dim: int) -> FeatureMatrix:
    """Unit-RMS graded-lex monomial features, exactly target_dim columns.

    Degree-1 coordinates first, then degree-2 monomials (cross terms
    included) in lexicographic order, and so on.  Columns with zero
    variance over the rows are dropped before truncation; surviving
    columns are scaled to unit root-mean-square.  (Scaling without
    centering: subtracting column means puts the all-ones vector in the
    left null space, which would make every resulting design exactly row
    rank deficient.)  Raises ``DegreeExhausted`` when monomials up to
    ``degree`` cannot fill ``target_dim`` columns.
    """
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    n, d0 = X0.shape
    if target_dim < d0:
        raise ValueError(f"target_dim {target_dim} < input dimension {d0}")
    cols, kept, scales = [], [], []
    for idx in _monomials(d0, degree):
        col = np.prod(X0[:, idx], axis=1)
        mean = float(np.mean(col))
        std = float(np.std(col))
        if std <= 1e-12 * max(1.0, abs(mean)):
            continue  # constant column: skip, the next monomial fills the slot
        rms = float(np.sqrt(np.mean(col**2)))
        cols.append(col / rms)
        kept.append(idx)
        scales.append(rms)
        if len(cols) == target_dim:
            break
    if len(cols) < target_dim:
        raise DegreeExhausted(
            f"only {len(cols)} usable monomials up to degree {degree}, "
            f"need {target_dim}"
        )
    Z = np.column_stack(cols)
    provenance = {
        "map_kind": "polynomial",
        "target_dim": target_dim,
        "degree": degree,
        "d0": d0,
        "exponents": kept,
        "scales": np.array(scales),
    }
    return FeatureMatrix(Z=Z, map_kind="polynomial", provenance=provenance)


def apply_map(fm: FeatureMatrix, X0_new) -> np.ndarray:
    """Apply a fitted feature map to new rows.

    RFF re-derives the training frequencies from the recorded seed;
    polynomial maps reuse the recorded monomials and train-set
    standardization.
    """
    X0_new = np.atleast_2d(np.asarray(X0_new, dtype=float))
    prov = fm.provenance
    if fm.map_kind == "rff":
        cfg = RFFConfig(target_dim=prov["target_dim"], sigma=prov["sigma"], seed=prov["seed"])
        return rff_map(X0_new, cfg).Z
    if fm.map_kind == "polynomial":
        cols = []
        for idx, rms in zip(prov["exponents"], prov["scales"]):
            col = np.prod(X0_new[:, idx], axis=1)
            cols.append(col / rms)
        return np.column_stack(cols)
    raise ValueError(f"unknown map kind {fm.map_kind!r}")
