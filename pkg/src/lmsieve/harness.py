"""Monte Carlo experiments: bias/RMSE tables, averaged bootstrap distributions, figure data."""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytic_bias import hosking_bias_for, lee_ko_bias_plugin
from .arfima import ArfimaSpec, acf as true_acf, irf as true_irf
from .sieve import SIEVE_METHODS, SieveConfig, bootstrap_distributions, kilian_adjust
from .sieve import statistic as sample_statistic
from .simulate import RNG_ALGORITHM, SimConfig, derive_seed, simulate_gaussian

__all__ = [
    "METHODS",
    "TABLE_LAGS",
    "ExperimentConfig",
    "CellResult",
    "ExperimentResult",
    "run_experiment",
    "averaged_bootstrap_distribution",
    "kde",
    "silverman_bandwidth",
    "emit_outputs",
    "load_config",
    "parse_config",
]

log = logging.getLogger(__name__)

METHODS = ("unadjusted", "raw", "prefiltered_splw", "prefiltered_true_d", "kilian", "hosking_asy", "lee_ko")
TABLE_LAGS = (1, 3, 6, 9, 12)
MAX_FAIL_RATE = 0.01


@dataclass
class ExperimentConfig:
    """Monte Carlo design. Each ``(d, phi)`` pair in ``grid`` is crossed with every ``T``."""

    grid: list = field(default_factory=lambda: [(0.4, 0.9)])
    T: list = field(default_factory=lambda: [500])
    R: int = 300
    B: int = 299
    methods: list = field(default_factory=lambda: ["unadjusted", "raw"])
    stats: list = field(default_factory=lambda: ["irf", "acf"])
    lags: list = field(default_factory=lambda: list(TABLE_LAGS))
    profile_lags: int = 99
    order_rule: str = "fixed_log_sq"
    seed: int = 20140101
    sigma2: float = 1.0
    fit_method: str = "burg"
    bandwidth: int | None = None
    kde_points: int = 256
    out: str | None = None

    def __post_init__(self):
        self.grid = [(float(d), float(p)) for d, p in self.grid]
        self.T = [int(t) for t in self.T]
        self.lags = [int(k) for k in self.lags]
        self.methods = list(self.methods)
        self.stats = list(self.stats)
        if self.R < 2 or self.B < 2:
            raise ValueError("R and B must both be at least 2")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if set(self.stats) - {"acf", "irf"}:
            raise ValueError("stats must be drawn from {'acf', 'irf'}")
        if self.order_rule not in ("aic", "fixed_log_sq"):
            raise ValueError("order_rule must be 'aic' or 'fixed_log_sq'")
        for T in self.T:
            if T < 3:
                raise ValueError("T must be at least 3")
            if max(self.lags) > T - 1 or self.profile_lags > T - 1 or min(self.lags) < 1:
                raise ValueError(f"lags must lie within 1..{T - 1}")

    @property
    def sieve_methods(self) -> list:
        return [m for m in self.methods if m in SIEVE_METHODS]

    @property
    def max_lag(self) -> int:
        return max(max(self.lags), self.profile_lags)

    def methods_for(self, stat: str) -> list:
        """Methods that apply to ``stat``, in config order."""
        out = []
        for m in self.methods:
            if m == "kilian" and stat != "irf":
                continue
            if m in ("hosking_asy", "lee_ko") and stat != "acf":
                continue
            out.append(m)
        return out


def _replication(args):
    """Estimates for one Monte Carlo replication; exceptions are returned, not raised."""
    config, cell_index, T, r = args
    d, phi = config.grid[cell_index]
    spec = ArfimaSpec(d=d, ar=(phi,) if phi != 0.0 else (), sigma2=config.sigma2)
    K = config.max_lag
    lags = np.arange(1, K + 1)
    panel_idx = np.asarray(config.lags) - 1
    sim_seed = derive_seed(config.seed, cell_index, T, r)
    boot_seed = derive_seed(sim_seed, 1)
    try:
        y = simulate_gaussian(SimConfig(spec, T, sim_seed))
        est = {}
        draws = {}
        for stat in config.stats:
            est[(stat, "unadjusted")] = sample_statistic(y, stat, lags, config.order_rule, config.fit_method)
        raw_resamples = None
        for method in config.sieve_methods:
            sc = SieveConfig(method=method, B=config.B, order_rule=config.order_rule, fit_method=config.fit_method,
                             true_d=d if method == "prefiltered_true_d" else None, seed=boot_seed,
                             bandwidth=config.bandwidth)
            results, _, resamples = bootstrap_distributions(y, sc, {s: lags for s in config.stats})
            if method == "raw":
                raw_resamples = resamples
            for stat, res in results.items():
                est[(stat, method)] = res.adjusted
                draws[(stat, method)] = np.sort(res.draws[:, panel_idx], axis=0)
        if "kilian" in config.methods and "irf" in config.stats:
            sc = SieveConfig(method="raw", B=config.B, order_rule=config.order_rule, seed=boot_seed)
            reuse = raw_resamples if config.fit_method == "burg" else None
            est[("irf", "kilian")] = kilian_adjust(y, sc, lags, resamples=reuse)
        if "acf" in config.stats:
            rho = est[("acf", "unadjusted")]
            if "hosking_asy" in config.methods and d != 0.0:
                est[("acf", "hosking_asy")] = rho - hosking_bias_for(spec, T, lags)
            if "lee_ko" in config.methods:
                lk = np.full(K, np.nan)
                lk[0] = rho[0] - lee_ko_bias_plugin(y, 1)
                est[("acf", "lee_ko")] = lk
        return r, est, draws, None
    except Exception as exc:  # recorded per replication, surfaced by the caller
        return r, None, None, f"{type(exc).__name__}: {exc}"


@dataclass
class CellResult:
    d: float
    phi: float
    T: int
    lags: np.ndarray
    truth: dict
    estimates: dict
    draws: dict
    n_ok: int
    failures: list

    def errors(self, stat: str, method: str) -> np.ndarray:
        return self.estimates[(stat, method)] - self.truth[stat][None, :]

    def summary(self, stat: str, method: str):
        """Per-lag ``(bias, rmse, mc_se, n_ok)`` ignoring NaN entries."""
        err = self.errors(stat, method)
        n = np.sum(np.isfinite(err), axis=0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            bias = np.nanmean(err, axis=0)
            rmse = np.sqrt(np.nanmean(err ** 2, axis=0))
            sd = np.nanstd(err, axis=0, ddof=1)
        return bias, rmse, sd / np.sqrt(np.maximum(n, 1)), n

    @property
    def failed(self) -> bool:
        total = self.n_ok + len(self.failures)
        return len(self.failures) > MAX_FAIL_RATE * total

    @property
    def label(self) -> str:
        return f"d{self.d:g}_phi{self.phi:g}_T{self.T}"


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    cells: list

    @property
    def failed(self) -> bool:
        return any(c.failed for c in self.cells)


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Simulate every cell ``R`` times and collect the estimates of every method.

    Replications are keyed by ``(base seed, cell, T, r)`` so the output does
    not depend on ``threads`` or on scheduling order.
    """
    cells = []
    K = config.max_lag
    lags = np.arange(1, K + 1)
    pool = ProcessPoolExecutor(max_workers=threads) if threads and threads > 1 else None
    try:
        for ci, (d, phi) in enumerate(config.grid):
            spec = ArfimaSpec(d=d, ar=(phi,) if phi != 0.0 else (), sigma2=config.sigma2)
            truth = {"irf": true_irf(spec, K)[1:], "acf": true_acf(spec, K)[1:]}
            for T in config.T:
                jobs = [(config, ci, T, r) for r in range(config.R)]
                if pool is None:
                    outputs = [_replication(j) for j in jobs]
                else:
                    outputs = list(pool.map(_replication, jobs, chunksize=max(1, config.R // (4 * threads))))
                outputs.sort(key=lambda o: o[0])
                ok = [o for o in outputs if o[3] is None]
                failures = [(o[0], o[3]) for o in outputs if o[3] is not None]
                for r, msg in failures:
                    log.warning("cell d=%g phi=%g T=%d replication %d failed: %s", d, phi, T, r, msg)
                keys = ok[0][1].keys() if ok else []
                estimates = {key: np.vstack([o[1][key] for o in ok]) for key in keys}
                dkeys = ok[0][2].keys() if ok else []
                draws = {key: np.stack([o[2][key] for o in ok]) for key in dkeys}
                cells.append(CellResult(d, phi, T, lags, truth, estimates, draws, len(ok), failures))
    finally:
        if pool is not None:
            pool.shutdown()
    return ExperimentResult(config, cells)


def averaged_bootstrap_distribution(per_replication_draws) -> np.ndarray:
    """Sort each replication's draws, then average the order statistics across replications."""
    arr = np.atleast_2d(np.asarray(per_replication_draws, dtype=float))
    return np.sort(arr, axis=-1).mean(axis=0)


def silverman_bandwidth(samples) -> float:
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    sd = x.std(ddof=1) if n > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    return 0.9 * spread * n ** (-0.2)


def kde(samples, eval_points) -> np.ndarray:
    """Gaussian kernel density estimate with Silverman's rule-of-thumb bandwidth."""
    x = np.asarray(samples, dtype=float)
    x = x[np.isfinite(x)]
    if x.shape[0] < 2:
        raise ValueError("need at least two finite samples")
    bw = silverman_bandwidth(x)
    if not bw > 0:
        raise ValueError("zero bandwidth: samples have no spread")
    grid = np.asarray(eval_points, dtype=float)
    u = (grid[..., None] - x) / bw
    return np.exp(-0.5 * u * u).sum(axis=-1) / (x.shape[0] * bw * math.sqrt(2.0 * math.pi))


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


TABLE_HEADER = ["d", "phi", "T", "order_rule", "method", "k", "bias", "rmse", "mc_se", "n_ok"]


def table_rows(result: ExperimentResult, stat: str):
    """Rows of ``table_<stat>.csv``: one per configured lag plus an ``av`` row."""
    cfg = result.config
    rows = []
    for cell in result.cells:
        for method in cfg.methods_for(stat):
            if (stat, method) not in cell.estimates:
                continue
            bias, rmse, se, n = cell.summary(stat, method)
            head = [cell.d, cell.phi, cell.T, cfg.order_rule, method]
            for k in cfg.lags:
                i = k - 1
                rows.append(head + [k, bias[i], rmse[i], se[i], int(n[i])])
            av = [k for k in TABLE_LAGS if k in cfg.lags]
            if av:
                idx = np.asarray(av) - 1
                rows.append(head + ["av", float(np.mean(bias[idx])), float(np.mean(rmse[idx])),
                                    float(np.mean(se[idx])), float(np.mean(n[idx]))])
    return rows


def _safe_kde(samples, x):
    try:
        return kde(samples, x)
    except ValueError:
        return np.full(x.shape, np.nan)


def _panel(cell: CellResult, cfg: ExperimentConfig, stat: str, k: int, method: str):
    i = k - 1
    j = cfg.lags.index(k)
    mc = cell.estimates[(stat, "unadjusted")][:, i]
    series = {"mc_density": mc,
              "mc_ba_density": cell.estimates[(stat, method)][:, i],
              "bs_av_density": averaged_bootstrap_distribution(cell.draws[(stat, method)][:, :, j])}
    if stat == "acf" and ("acf", "hosking_asy") in cell.estimates:
        series["ba_asy"] = cell.estimates[("acf", "hosking_asy")][:, i]
    if stat == "acf" and k == 1 and ("acf", "lee_ko") in cell.estimates:
        series["ba_lk"] = cell.estimates[("acf", "lee_ko")][:, 0]
    if stat == "irf" and ("irf", "kilian") in cell.estimates:
        series["k_ba_density"] = cell.estimates[("irf", "kilian")][:, i]
    pooled = np.concatenate([v[np.isfinite(v)] for v in series.values()])
    spread = np.ptp(pooled) if pooled.size else 1.0
    pad = 0.1 * spread if spread > 0 else 0.1
    x = np.linspace(pooled.min() - pad, pooled.max() + pad, cfg.kde_points)
    dens = {name: _safe_kde(v, x) for name, v in series.items()}
    header = ["x"] + list(dens)
    rows = [[x[n]] + [dens[c][n] for c in dens] for n in range(x.shape[0])]
    return header, rows


def emit_outputs(result: ExperimentResult, out_dir) -> list:
    """Write tables, figure-panel densities, lag profiles and run metadata.

    Tables go to ``out_dir``; panels and profiles to one subdirectory per
    ``(d, phi, T)`` cell. Returns the written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    written = []
    for stat in cfg.stats:
        path = out / f"table_{stat}.csv"
        _write_csv(path, TABLE_HEADER, table_rows(result, stat))
        written.append(path)
    for cell in result.cells:
        if cell.n_ok == 0:
            continue
        cdir = out / cell.label
        cdir.mkdir(exist_ok=True)
        for stat in cfg.stats:
            adjusted = [m for m in cfg.methods_for(stat) if m in SIEVE_METHODS]
            for pos, method in enumerate(adjusted):
                for k in cfg.lags:
                    header, rows = _panel(cell, cfg, stat, k, method)
                    names = [f"panel_{stat}_{method}_k{k}.csv"]
                    if pos == 0:
                        names.insert(0, f"panel_{stat}_k{k}.csv")
                    for name in names:
                        _write_csv(cdir / name, header, rows)
                        written.append(cdir / name)
            others = [m for m in cfg.methods_for(stat) if m != "unadjusted"]
            header = ["k", "truth", "mc_mean"]
            cols = [cell.truth[stat], np.nanmean(cell.estimates[(stat, "unadjusted")], axis=0)]
            if adjusted:
                header.append("mc_ba_mean")
                cols.append(np.nanmean(cell.estimates[(stat, adjusted[0])], axis=0))
            for m in others:
                if (stat, m) in cell.estimates:
                    header.append(f"mc_ba_mean_{m}")
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", RuntimeWarning)
                        cols.append(np.nanmean(cell.estimates[(stat, m)], axis=0))
            rows = [[k] + [c[k - 1] for c in cols] for k in range(1, cfg.profile_lags + 1)]
            path = cdir / f"profile_{stat}.csv"
            _write_csv(path, header, rows)
            written.append(path)
    meta = {
        "config": asdict(cfg),
        "rng": RNG_ALGORITHM,
        "software": {"package": "lmsieve", "version": __version__, "numpy": np.__version__},
        "infeasible_methods": [m for m in cfg.methods if m == "hosking_asy"],
        "cells": [{"d": c.d, "phi": c.phi, "T": c.T, "n_ok": c.n_ok, "failures": c.failures,
                   "failed": c.failed} for c in result.cells],
    }
    path = out / "run_meta.json"
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written


def _parse_list(value: str, cast):
    return [cast(v) for v in value.replace(";", ",").split(",") if v.strip()]


def _parse_lags(value: str) -> list:
    out = []
    for part in value.replace(";", ",").split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat ``key = value`` text; ``#`` starts a comment.

    Keys are the :class:`ExperimentConfig` fields. ``grid`` is a comma list of
    ``d:phi`` pairs, ``T``/``methods``/``stats`` are comma lists, ``lags``
    accepts ranges such as ``1-12``.
    """
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "grid":
            kwargs[key] = [tuple(float(x) for x in pair.split(":")) for pair in _parse_list(value, str)]
        elif key == "T":
            kwargs[key] = _parse_list(value, int)
        elif key in ("methods", "stats"):
            kwargs[key] = [v.strip() for v in _parse_list(value, str)]
        elif key == "lags":
            kwargs[key] = _parse_lags(value)
        elif key in ("R", "B", "profile_lags", "seed", "kde_points"):
            kwargs[key] = int(value)
        elif key == "bandwidth":
            kwargs[key] = None if value.lower() in ("", "none", "auto") else int(value)
        elif key == "sigma2":
            kwargs[key] = float(value)
        elif key in ("order_rule", "fit_method", "out"):
            kwargs[key] = value
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    if kwargs.get("order_rule") == "logsq":
        kwargs["order_rule"] = "fixed_log_sq"
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    with open(os.fspath(path)) as fh:
        return parse_config(fh.read())
