"""Frequentist evaluation of the nu priors on simulated standard-t data.

For each (nu_true, prior) cell, ``reps`` datasets of size ``n`` are drawn
from t_{nu_true}(0, 1), the grid posterior of nu is computed, and four
metrics are aggregated from the per-replication (median, lo, hi) triples:

* relative root MSE of the posterior median, sqrt(mean((nu - m)^2)) / nu
* coverage percentage of the equal-tail interval
* average interval length
* modal interval length (Freedman-Diaconis histogram mode)

Datasets depend only on (seed, nu_true, replication), so every prior in a
table sees the same data.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from tprior.errors import TPriorError
from tprior.posterior import Dataset, grid_posterior, mode_estimate
from tprior.priors import NuDomain, PriorSpec
from tprior.specfun import DistSpec, RngStream, sample_n

_DATA_STREAM = 1

METRICS = ("rel_rmse", "coverage_pct", "avg_len", "mode_len")
TABLE_FILES = {
    "rel_rmse": "table_rmse.csv",
    "coverage_pct": "table_coverage.csv",
    "avg_len": "table_avglen.csv",
    "mode_len": "table_modelen.csv",
}


@dataclass(frozen=True)
class CellSpec:
    nu_true: float
    prior: PriorSpec
    n: int = 30
    reps: int = 500
    level: float = 0.95
    domain: NuDomain = field(default_factory=NuDomain)
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.nu_true > 0:
            raise ValueError("nu_true must be > 0")
        if self.reps < 1 or self.n < 2:
            raise ValueError("need reps >= 1 and n >= 2")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")


@dataclass(frozen=True)
class CellResult:
    rel_rmse: float
    coverage_pct: float
    avg_len: float
    mode_len: float
    reps_completed: int


class CellError(TPriorError):
    """A replication inside a simulation cell failed."""


def _nu_key(nu_true: float) -> int:
    return int(round(nu_true * 1000))


def data_stream(seed: int, nu_true: float, rep: int) -> RngStream:
    return RngStream(seed, (_DATA_STREAM, _nu_key(nu_true), rep))


def simulate_dataset(nu_true: float, n: int, stream: RngStream) -> Dataset:
    """n iid draws from the standard t-distribution with nu_true degrees of freedom."""
    x = sample_n(DistSpec.student_t(nu_true, 0.0, 1.0), stream, n)
    return Dataset(x, label=f"t({nu_true:g}) n={n}")


def cell_triples(spec: CellSpec) -> np.ndarray:
    """(reps, 3) array of posterior median and equal-tail bounds per replication."""
    alpha = (1.0 - spec.level) / 2.0
    probs = [0.5, alpha, 1.0 - alpha]
    out = np.empty((spec.reps, 3))
    for r in range(spec.reps):
        try:
            data = simulate_dataset(spec.nu_true, spec.n, data_stream(spec.seed, spec.nu_true, r))
            out[r] = grid_posterior(spec.prior, data, spec.domain).ppf(probs)
        except TPriorError as exc:
            raise CellError(
                f"cell nu={spec.nu_true:g} prior={spec.prior.id}: replication {r} failed: {exc}"
            ) from exc
    return out


def aggregate(nu_true: float, triples: np.ndarray) -> CellResult:
    """Cell metrics from (median, lo, hi) rows, in replication order."""
    t = np.asarray(triples, dtype=float)
    med, lo, hi = t[:, 0], t[:, 1], t[:, 2]
    rel_rmse = float(np.sqrt(np.mean((nu_true - med) ** 2)) / nu_true)
    coverage = float(100.0 * np.mean((lo <= nu_true) & (nu_true <= hi)))
    lengths = hi - lo
    return CellResult(rel_rmse, coverage, float(np.mean(lengths)), mode_estimate(lengths), int(t.shape[0]))


def run_cell(spec: CellSpec) -> CellResult:
    return aggregate(spec.nu_true, cell_triples(spec))


def _cell_job(spec: CellSpec) -> tuple[CellResult, np.ndarray]:
    triples = cell_triples(spec)
    return aggregate(spec.nu_true, triples), triples


def default_workers() -> int:
    env = os.environ.get("TPRIOR_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


@dataclass
class Report:
    """Cell results indexed by (nu_true, prior id); rows by nu, columns by prior."""

    nus: list[float]
    prior_ids: list[int]
    cells: dict[tuple[float, int], CellResult]
    triples: dict[tuple[float, int], np.ndarray] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def value(self, metric: str, nu: float, prior_id: int) -> float:
        return getattr(self.cells[(nu, prior_id)], metric)

    def column(self, metric: str, prior_id: int) -> np.ndarray:
        return np.array(
            [self.value(metric, nu, prior_id) for nu in self.nus if (nu, prior_id) in self.cells]
        )

    def column_mean(self, metric: str, prior_id: int) -> float:
        return float(np.mean(self.column(metric, prior_id)))

    def band_mean(self, metric: str, prior_id: int, nu_lo: float, nu_hi: float) -> float:
        vals = [
            self.value(metric, nu, prior_id)
            for nu in self.nus
            if nu_lo <= nu <= nu_hi and (nu, prior_id) in self.cells
        ]
        return float(np.mean(vals))

    def write_tables(self, out_dir: str | Path) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for metric, name in TABLE_FILES.items():
            path = out / name
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["nu"] + [f"prior_{p}" for p in self.prior_ids])
                for nu in self.nus:
                    w.writerow(
                        [_fmt(nu)]
                        + [
                            _fmt(self.value(metric, nu, p)) if (nu, p) in self.cells else ""
                            for p in self.prior_ids
                        ]
                    )
                w.writerow(["Mean"] + [_fmt(self.column_mean(metric, p)) for p in self.prior_ids])
            paths.append(path)
        return paths

    def write_triples(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["nu_true", "prior", "rep", "median", "lo", "hi"])
            for nu in self.nus:
                for p in self.prior_ids:
                    t = self.triples.get((nu, p))
                    if t is None:
                        continue
                    for r, (m, lo, hi) in enumerate(t):
                        w.writerow([_fmt(nu), p, r, _fmt(m), _fmt(lo), _fmt(hi)])
        return path

    def to_json(self) -> dict:
        cells = [
            {"nu_true": nu, "prior": p, **self.cells[(nu, p)].__dict__}
            for nu in self.nus
            for p in self.prior_ids
            if (nu, p) in self.cells
        ]
        means = {m: {str(p): self.column_mean(m, p) for p in self.prior_ids} for m in METRICS}
        return {"metadata": self.metadata, "cells": cells, "means": means}

    def write_json(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_json(), indent=2) + "\n")
        return path


def _fmt(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def read_triples(path: str | Path) -> dict[tuple[float, int], np.ndarray]:
    rows: dict[tuple[float, int], list[tuple[int, float, float, float]]] = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            key = (float(rec["nu_true"]), int(rec["prior"]))
            rows.setdefault(key, []).append(
                (int(rec["rep"]), float(rec["median"]), float(rec["lo"]), float(rec["hi"]))
            )
    return {k: np.array([r[1:] for r in sorted(v)]) for k, v in rows.items()}


def run_table(cells: Sequence[CellSpec], workers: int | None = None) -> Report:
    """Run every cell and assemble a :class:`Report`.

    Cells run in a process pool when ``workers > 1``; results are collected
    by cell position, so the report does not depend on scheduling.
    """
    if not cells:
        raise ValueError("no cells to run")
    workers = default_workers() if workers is None else max(1, workers)
    started = time.time()
    if workers == 1 or len(cells) == 1:
        results = [_cell_job(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_job, cells))
    report_cells = {}
    triples = {}
    for spec, (res, trip) in zip(cells, results):
        key = (float(spec.nu_true), spec.prior.id)
        report_cells[key] = res
        triples[key] = trip
    nus = sorted({k[0] for k in report_cells})
    prior_ids = sorted({k[1] for k in report_cells})
    first = cells[0]
    metadata = {
        "seeds": sorted({c.seed for c in cells}),
        "n": first.n,
        "reps": first.reps,
        "level": first.level,
        "domain": first.domain.to_dict(),
        "priors": {str(c.prior.id): c.prior.to_dict() for c in cells},
        "workers": workers,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(started)),
        "elapsed_s": round(time.time() - started, 3),
    }
    return Report(nus, prior_ids, report_cells, triples, metadata)


def build_cells(
    nus: Sequence[float],
    priors: Sequence[PriorSpec],
    n: int = 30,
    reps: int = 500,
    level: float = 0.95,
    domain: NuDomain | None = None,
    seed: int = 0,
) -> list[CellSpec]:
    domain = domain or NuDomain()
    return [
        CellSpec(float(nu), prior, n, reps, level, domain, seed) for nu in nus for prior in priors
    ]
