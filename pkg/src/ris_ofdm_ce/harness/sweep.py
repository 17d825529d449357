"""Monte Carlo NMSE-vs-SNR sweeps and their result files.

A sweep writes three files into its output directory:

``results.csv``
    one row per (SNR, estimator) cell with columns
    ``snr_db, estimator, evm, L, L_CP, mean_nmse, stderr, n_trials``.
``trials.csv``
    every per-trial NMSE (``snr_db, trial, estimator, nmse``), from which the
    cell statistics can be recomputed.
``results.json``
    metadata: config echo, package version, drive scale and wall time.

The two CSV files depend only on the config and seed. Only the JSON sidecar
records wall-clock time.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..estimator import ElmNetwork
from .config import SweepConfig
from .pipeline import TEST, draw_trials, estimate_nmse, hpa_for, observe
from .training import generate_training_set, train_networks

RESULT_COLUMNS = ("snr_db", "estimator", "evm", "L", "L_CP", "mean_nmse", "stderr", "n_trials")
TRIAL_COLUMNS = ("snr_db", "trial", "estimator", "nmse")


@dataclass
class SweepResult:
    config: SweepConfig
    # estimator -> (n_snr, n_trials) per-trial NMSE
    nmse: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    @property
    def snr_grid_db(self) -> tuple[float, ...]:
        return self.config.snr_grid_db

    def mean(self, estimator: str) -> np.ndarray:
        return self.nmse[estimator].mean(axis=1)

    def stderr(self, estimator: str) -> np.ndarray:
        x = self.nmse[estimator]
        if x.shape[1] < 2:
            return np.full(x.shape[0], np.nan)
        return x.std(axis=1, ddof=1) / np.sqrt(x.shape[1])

    def mean_db(self, estimator: str) -> np.ndarray:
        return 10 * np.log10(self.mean(estimator))

    def rows(self) -> list[dict]:
        cfg = self.config
        out = []
        for i, snr in enumerate(cfg.snr_grid_db):
            for est in self.nmse:
                out.append(
                    dict(
                        snr_db=snr,
                        estimator=est,
                        evm=cfg.evm_target,
                        L=cfg.n_paths,
                        L_CP=cfg.cp_len,
                        mean_nmse=float(self.mean(est)[i]),
                        stderr=float(self.stderr(est)[i]),
                        n_trials=self.nmse[est].shape[1],
                    )
                )
        return out

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "results.csv", "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=RESULT_COLUMNS, lineterminator="\n")
            w.writeheader()
            for row in self.rows():
                w.writerow({k: _fmt(v) for k, v in row.items()})
        with open(out / "trials.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(TRIAL_COLUMNS)
            for i, snr in enumerate(self.config.snr_grid_db):
                for est, vals in self.nmse.items():
                    for t, v in enumerate(vals[i]):
                        w.writerow((_fmt(snr), t, est, _fmt(v)))
        meta = {"config": self.config.to_dict(), **self.metadata}
        (out / "results.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return out


def _fmt(v):
    if isinstance(v, float):
        return repr(float(v))
    return v


def worker_count() -> int:
    n = os.cpu_count() or 1
    cap = os.environ.get("EELM_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"EELM_THREADS must be an integer, got {cap!r}") from None
    return n


def run_sweep(
    cfg: SweepConfig,
    networks: dict[str, ElmNetwork] | None = None,
    out_dir=None,
    workers: int | None = None,
) -> SweepResult:
    """Evaluate every estimator over ``cfg.snr_grid_db`` x ``cfg.n_trials``.

    Networks are trained from a fresh training set when the config asks for
    ELM estimators and none are supplied. Results are written to ``out_dir``
    when given.
    """
    t0 = time.perf_counter()
    if cfg.needs_network and networks is None:
        networks = train_networks(cfg, generate_training_set(cfg))
    hpa = hpa_for(cfg) if cfg.snr_grid_db and cfg.n_trials else None

    n_snr, n_trials = len(cfg.snr_grid_db), cfg.n_trials
    nmse = {e: np.empty((n_snr, n_trials)) for e in cfg.estimators}
    starts = list(range(0, n_trials, cfg.chunk_size)) if n_snr else []

    def work(start):
        idx = np.arange(start, min(start + cfg.chunk_size, n_trials))
        batch = draw_trials(cfg, idx, TEST)
        for i, snr in enumerate(cfg.snr_grid_db):
            for est, vals in estimate_nmse(cfg, observe(cfg, batch, snr, hpa), networks).items():
                nmse[est][i, idx] = vals

    workers = workers or worker_count()
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, starts))
    else:
        for s in starts:
            work(s)

    from .. import __version__

    result = SweepResult(
        cfg,
        nmse,
        {
            "version": __version__,
            "drive_scale": hpa.drive_scale if hpa else None,
            "wall_time_s": time.perf_counter() - t0,
        },
    )
    if out_dir is not None:
        try:
            result.write(out_dir)
        except OSError as exc:
            raise OSError(f"cannot write results to {out_dir}: {exc}") from exc
    return result


def sweep_over(cfg: SweepConfig, name: str, values) -> dict:
    """Run one sweep per value of config field ``name``, retraining each time."""
    return {v: run_sweep(cfg.replace(**{name: v})) for v in values}


def read_results(path) -> list[dict]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if rows and set(RESULT_COLUMNS) - set(rows[0]):
        raise ValueError(f"{path}: missing columns {sorted(set(RESULT_COLUMNS) - set(rows[0]))}")
    for r in rows:
        for k in ("snr_db", "evm", "mean_nmse", "stderr"):
            r[k] = float(r[k])
        for k in ("L", "L_CP", "n_trials"):
            r[k] = int(r[k])
    return rows


def format_report(rows: list[dict]) -> str:
    """Table of mean NMSE in dB, one row per SNR and one column per estimator."""
    if not rows:
        return "(no results)"
    estimators = list(dict.fromkeys(r["estimator"] for r in rows))
    snrs = sorted({r["snr_db"] for r in rows})
    cell = {(r["snr_db"], r["estimator"]): r for r in rows}
    lines = ["snr_db  " + "  ".join(f"{e:>14}" for e in estimators)]
    for s in snrs:
        vals = []
        for e in estimators:
            r = cell.get((s, e))
            vals.append(f"{10 * np.log10(r['mean_nmse']):>11.2f} dB" if r else f"{'-':>14}")
        lines.append(f"{s:>6g}  " + "  ".join(vals))
    return "\n".join(lines)
