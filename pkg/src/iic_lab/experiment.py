"""Dataset ingestion, dimension sweeps and record emission.

A sweep evaluates one (d, p) cell at a time: build features (nested
frequency draws for RFF so curves over d are not confounded by
resampling), validate the design, solve the interpolator, evaluate the
criterion, and score train/test MSE.  Cells that fail are recorded with
their failure reason, never dropped.  Each cell is a pure function of the
dataset, the config and a seed derived from ``(master_seed, d, p)``, so
records are identical regardless of execution order or thread count.
"""

from __future__ import annotations

import csv
import math
import os
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import (
    BadSize,
    ConfigInvalid,
    DimensionTooHigh,
    IICLabError,
    ParseError,
    TargetMissing,
)
from .features import RFFConfig, apply_map, median_bandwidth, poly_map, rff_map
from .iic import IICBreakdown, iic_ridge, iic_smooth, iic_sparse, v0_closed, v0_monte_carlo
from .interpolate import SolverOptions, min_norm_l1, min_norm_l2, min_norm_lp
from .linalg import validate_design
from .stats import CorrelationReport

CSV_COLUMNS = [
    "d", "p", "iic_total", "reg_term", "sharpness_term", "ambient_constant",
    "tau_star", "log_det_gram", "sum_log_abs_theta", "log_v0", "v0_method",
    "support_size", "certificate_margin", "train_mse", "test_mse",
    "status", "failure_reason",
]

REPORT_COLUMNS = [
    "pair", "rho", "ci_low", "ci_high", "n_points", "n_resamples", "seed",
    "n_degenerate_skipped",
]


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Dataset:
    name: str
    X0: np.ndarray
    y: np.ndarray
    columns: List[str]

    @property
    def n_total(self) -> int:
        return self.X0.shape[0]


def ingest_csv(path, target_column: str | None = None, delimiter: str = ",") -> Dataset:
    """Read a headed CSV into a Dataset; the target defaults to the last column.

    Every non-target cell must parse as a finite number; the first
    offending cell raises ``ParseError`` with a per-row report of all bad
    cells in the message.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(0, "", "", f"{path}: empty file, expected a header row")
        rows = list(reader)
    header = [h.strip() for h in header]
    if target_column is None:
        target_column = header[-1]
    if target_column not in header:
        raise TargetMissing(f"target column {target_column!r} not in header {header}")
    t_idx = header.index(target_column)
    feature_names = [h for i, h in enumerate(header) if i != t_idx]

    bad = []
    X0_rows, y_vals = [], []
    for r, row in enumerate(rows, start=2):  # 1-based file lines, row 1 is the header
        if len(row) != len(header):
            bad.append((r, "<row>", f"{len(row)} fields, expected {len(header)}"))
            continue
        vals = []
        for c, token in enumerate(row):
            try:
                v = float(token)
                if not math.isfinite(v):
                    raise ValueError
            except ValueError:
                bad.append((r, header[c], token))
                continue
            vals.append(v)
        if len(vals) == len(header):
            y_vals.append(vals[t_idx])
            X0_rows.append([v for i, v in enumerate(vals) if i != t_idx])
    if bad:
        report = "; ".join(f"line {r} col {c!r}: {t!r}" for r, c, t in bad[:20])
        r0, c0, t0 = bad[0]
        raise ParseError(r0, c0, t0, f"{path}: {len(bad)} unparseable cell(s): {report}")
    if len(X0_rows) < 3:
        raise BadSize(f"{path}: need at least 3 rows, got {len(X0_rows)}")
    return Dataset(
        name=path.stem,
        X0=np.array(X0_rows, dtype=float),
        y=np.array(y_vals, dtype=float),
        columns=feature_names,
    )


def split(dataset: Dataset, n_train: int, seed: int):
    """Seeded uniform permutation; first n_train rows train, rest test."""
    n_total = dataset.n_total
    if not 1 <= n_train < n_total:
        raise BadSize(f"need 1 <= n_train < {n_total}, got {n_train}")
    perm = np.random.default_rng(seed).permutation(n_total)
    tr, te = perm[:n_train], perm[n_train:]
    train = Dataset(dataset.name + "/train", dataset.X0[tr], dataset.y[tr], dataset.columns)
    test = Dataset(dataset.name + "/test", dataset.X0[te], dataset.y[te], dataset.columns)
    return train, test


def mse(pred, actual) -> float:
    pred = np.asarray(pred, dtype=float).reshape(-1)
    actual = np.asarray(actual, dtype=float).reshape(-1)
    if pred.shape != actual.shape or pred.size == 0:
        raise BadSize(f"length mismatch: {pred.shape} vs {actual.shape}")
    return float(np.mean((pred - actual) ** 2))


# ---------------------------------------------------------------------------
# sweep configuration
# ---------------------------------------------------------------------------

@dataclass
class SweepConfig:
    map_kind: str                       # "rff" | "polynomial"
    d_grid: Sequence[int]
    p_list: Sequence[float]
    n_train: Optional[int] = None
    test_frac: Optional[float] = None
    master_seed: int = 0
    sigma: Optional[float] = None       # rff bandwidth; None = median heuristic
    degree: int = 16                    # polynomial degree cap
    v0_strategy: str = "auto"           # "closed" | "mc" | "auto"
    mc_dim_limit: int = 6
    mc_samples: int = 200_000

    def validate(self):
        if self.map_kind not in ("rff", "polynomial"):
            raise ConfigInvalid(f"unknown map_kind {self.map_kind!r}")
        if self.v0_strategy not in ("auto", "closed", "mc"):
            raise ConfigInvalid(f"unknown v0_strategy {self.v0_strategy!r}")
        d_grid = list(self.d_grid)
        if not d_grid or any(int(d) != d or d < 2 for d in d_grid):
            raise ConfigInvalid("d_grid must be integers >= 2")
        if any(b <= a for a, b in zip(d_grid, d_grid[1:])):
            raise ConfigInvalid("d_grid must be strictly increasing")
        if not self.p_list or any(not (p == 1 or p >= 2) for p in self.p_list):
            raise ConfigInvalid("p_list entries must be 1 or >= 2")
        if (self.n_train is None) == (self.test_frac is None):
            raise ConfigInvalid("exactly one of n_train / test_frac must be set")
        if self.test_frac is not None and not 0.0 < self.test_frac < 1.0:
            raise ConfigInvalid("test_frac must be in (0, 1)")


def load_sweep_config(path):
    """Flat key/value TOML mirroring the SweepConfig fields.

    Two extra keys name the data source: ``csv`` (path) and optional
    ``target`` (column).  Returns ``(config, extras)``.
    """
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    known = {f for f in SweepConfig.__dataclass_fields__}
    extra = {"csv", "target"}
    unknown = set(raw) - known - extra
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
    kwargs = {k: v for k, v in raw.items() if k in known}
    try:
        cfg = SweepConfig(**kwargs)
    except TypeError as exc:
        raise ConfigInvalid(str(exc)) from exc
    cfg.validate()
    return cfg, {k: raw[k] for k in extra if k in raw}


# ---------------------------------------------------------------------------
# sweep execution
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ExperimentRecord:
    d: int
    p: float
    status: str                         # "ok" | "error"
    failure_reason: Optional[str] = None
    breakdown: Optional[IICBreakdown] = None
    train_mse: Optional[float] = None
    test_mse: Optional[float] = None
    support_size: Optional[int] = None
    certificate_margin: Optional[float] = None
    wall_time: float = 0.0


def _derive_seed(master_seed: int, *parts) -> int:
    """Stable 64-bit stream seed from (master_seed, tag, d, p-bits, ...)."""
    entropy = [int(master_seed)]
    for part in parts:
        if isinstance(part, str):
            entropy.append(int.from_bytes(part.encode(), "little"))
        elif isinstance(part, float):
            entropy.append(struct.unpack("<Q", struct.pack("<d", part))[0])
        else:
            entropy.append(int(part))
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, np.uint64)[0])


def _failure(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


def _cell_breakdown(D, interp, p, cfg, mc_seed):
    if p == 2:
        return iic_ridge(D, interp)
    if p > 2:
        return iic_smooth(D, interp, p)
    # p == 1: route through the certificate (min_norm_l1 already enforced
    # uniqueness) and the V0 strategy.
    full_support = interp.support.size == D.n
    strategy = cfg.v0_strategy
    if strategy == "closed" or (strategy == "auto" and full_support):
        v0 = v0_closed(D, interp.support, interp.signs)
    else:
        if D.d - D.n > cfg.mc_dim_limit:
            raise DimensionTooHigh(
                f"|S| = {interp.support.size} < n and d - n = {D.d - D.n} "
                f"exceeds mc_dim_limit = {cfg.mc_dim_limit}: p=1 criterion unavailable"
            )
        v0 = v0_monte_carlo(
            D, interp.support, interp.signs,
            samples=cfg.mc_samples, seed=mc_seed, dim_limit=cfg.mc_dim_limit,
        )
    return iic_sparse(D, interp, v0)


def _run_cell(d_requested, p, Z_train, y_train, Z_test, y_test, cfg) -> ExperimentRecord:
    t0 = time.perf_counter()
    solver_seed = _derive_seed(cfg.master_seed, "cell-solver", d_requested, float(p))
    mc_seed = _derive_seed(cfg.master_seed, "cell-mc", d_requested, float(p))
    record = ExperimentRecord(d=Z_train.shape[1], p=float(p), status="ok")
    try:
        D = validate_design(Z_train)
        # generous iteration cap: near-degenerate certificate margins can need
        # well beyond the library default before the support is identifiable
        opts = SolverOptions(seed=solver_seed, max_iter=50_000)
        if p == 1:
            interp = min_norm_l1(D, y_train, opts)
        elif p == 2:
            interp = min_norm_l2(D, y_train)
        else:
            interp = min_norm_lp(D, y_train, p, opts)
    except IICLabError as exc:
        record.status = "error"
        record.failure_reason = _failure(exc)
        record.wall_time = time.perf_counter() - t0
        return record
    record.support_size = int(interp.support.size)
    if interp.certificate is not None:
        record.certificate_margin = float(interp.certificate.margin)
    record.train_mse = mse(Z_train @ interp.theta, y_train)
    record.test_mse = mse(Z_test @ interp.theta, y_test)
    try:
        record.breakdown = _cell_breakdown(D, interp, p, cfg, mc_seed)
    except IICLabError as exc:
        record.status = "error"
        record.failure_reason = _failure(exc)
    record.wall_time = time.perf_counter() - t0
    return record


def _feature_pair(train, test, cfg, sigma, d):
    if cfg.map_kind == "rff":
        fm = rff_map(train.X0, RFFConfig(target_dim=d, sigma=sigma,
                                         seed=_derive_seed(cfg.master_seed, "features")))
    else:
        fm = poly_map(train.X0, cfg.degree, d)
    return fm.Z, apply_map(fm, test.X0)


def max_cell_threads() -> int:
    """Cell parallelism cap: IIC_LAB_THREADS, defaulting to machine parallelism."""
    env = os.environ.get("IIC_LAB_THREADS", "").strip()
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigInvalid(f"IIC_LAB_THREADS must be an integer, got {env!r}")
        if value < 1:
            raise ConfigInvalid("IIC_LAB_THREADS must be >= 1")
        return value
    return os.cpu_count() or 1


def run_sweep(dataset: Dataset, cfg: SweepConfig, max_workers: int | None = None):
    """Evaluate every (d, p) cell; returns records sorted by (d, p).

    Raises ``ConfigInvalid`` for configuration problems; everything that
    goes wrong inside a cell becomes data on its record.
    """
    cfg.validate()
    n_total = dataset.n_total
    n_train = cfg.n_train
    if n_train is None:
        n_train = n_total - max(1, int(round(cfg.test_frac * n_total)))
    if not 1 <= n_train < n_total:
        raise ConfigInvalid(f"resolved n_train = {n_train} outside [1, {n_total})")
    d_grid = [int(d) for d in cfg.d_grid]
    if min(d_grid) <= n_train:
        raise ConfigInvalid(
            f"every d in d_grid must exceed n_train = {n_train} (post-interpolation regime)"
        )
    train, test = split(dataset, n_train, _derive_seed(cfg.master_seed, "split"))
    sigma = cfg.sigma
    if cfg.map_kind == "rff" and sigma is None:
        sigma = median_bandwidth(train.X0)

    features = {}
    feature_failures = {}
    for d in d_grid:
        try:
            features[d] = _feature_pair(train, test, cfg, sigma, d)
        except IICLabError as exc:
            feature_failures[d] = _failure(exc)

    cells = [(d, float(p)) for d in d_grid for p in cfg.p_list]

    def job(cell):
        d, p = cell
        if d in feature_failures:
            return ExperimentRecord(
                d=d, p=p, status="error", failure_reason=feature_failures[d]
            )
        Z_train, Z_test = features[d]
        return _run_cell(d, p, Z_train, train.y, Z_test, test.y, cfg)

    workers = max_workers if max_workers is not None else max_cell_threads()
    if workers <= 1:
        records = [job(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(job, cells))
    records.sort(key=lambda r: (r.d, r.p))
    return records


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    """Render one CSV field; floats carry 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _record_row(r: ExperimentRecord) -> dict:
    b = r.breakdown
    return {
        "d": r.d,
        "p": float(r.p),
        "iic_total": b.total if b else None,
        "reg_term": b.reg_term if b else None,
        "sharpness_term": b.sharpness_term if b else None,
        "ambient_constant": b.ambient_constant if b else None,
        "tau_star": b.tau_star if b else None,
        "log_det_gram": b.log_det_gram if b else None,
        "sum_log_abs_theta": b.sum_log_abs_theta if b else None,
        "log_v0": b.log_v0 if b else None,
        "v0_method": b.v0_method if b else None,
        "support_size": r.support_size,
        "certificate_margin": r.certificate_margin,
        "train_mse": r.train_mse,
        "test_mse": r.test_mse,
        "status": r.status,
        "failure_reason": r.failure_reason,
    }


def _report_row(rep: CorrelationReport) -> dict:
    return {
        "pair": rep.pair,
        "rho": rep.rho,
        "ci_low": rep.ci_low,
        "ci_high": rep.ci_high,
        "n_points": rep.n_points,
        "n_resamples": rep.n_resamples,
        "seed": rep.seed,
        "n_degenerate_skipped": rep.n_degenerate_skipped,
    }


def _rows_and_columns(items):
    items = list(items)
    if items and isinstance(items[0], CorrelationReport):
        return [_report_row(x) for x in items], REPORT_COLUMNS
    return [_record_row(x) for x in items], CSV_COLUMNS


def _json_token(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isfinite(value):
            return f"{value:.17g}"
        return '"' + _fmt(value) + '"'  # inf/nan are not valid JSON numbers
    if isinstance(value, int):
        return str(value)
    out = str(value).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{out}"'


def emit(items, fmt: str, path) -> None:
    """Write records or correlation reports as CSV or JSON.

    CSV columns are fixed (see ``CSV_COLUMNS``); non-applicable fields are
    empty.  Floats are rendered with 17 significant digits in both
    formats, which round-trips float64 bitwise.
    """
    rows, columns = _rows_and_columns(items)
    path = Path(path)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(row[c]) for c in columns])
    elif fmt == "json":
        lines = []
        for row in rows:
            fields = ", ".join(f'"{c}": {_json_token(row[c])}' for c in columns)
            lines.append("  {" + fields + "}")
        with open(path, "w") as fh:
            fh.write("[\n" + ",\n".join(lines) + "\n]\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
