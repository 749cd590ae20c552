"""Experiment driver: repeated DaC runs against full-data diagrams."""
from __future__ import annotations

import csv
import inspect
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import datagen
from .dac import DacDiagram, run_dac
from .geometry import PointCloud, pairwise_distances
from .metrics import bottleneck
from .persistence import PersistenceDiagram, compute_diagram, grown_cutoff_diagram, ripser_diagram

INFEASIBLE = "⟋"


@dataclass
class ExperimentConfig:
    generator: str = "circle"
    params: dict = field(default_factory=dict)
    k: int = 1
    m_values: list = field(default_factory=lambda: [4])
    n_values: list = field(default_factory=lambda: [None])
    reps: int = 20
    seed_base: int = 0
    merge_method: str = "rips"
    estimator: str = "pointwise"
    eps_proj: float | None = None
    threshold_policy: str = "half_median"
    # a cell with n < infeasible_ratio * m is skipped
    infeasible_ratio: float = 0.5
    kc_values: list = field(default_factory=list)
    threads: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if any(m < 1 for m in self.m_values):
            raise ValueError("m values must be positive")
        if any(n is not None and n < 1 for n in self.n_values):
            raise ValueError("n values must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in inspect.signature(cls).parameters}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CellResult:
    n: int
    m: int
    reps: int
    feasible: bool = True
    recovery_rate: float = math.nan
    mean_bottleneck: float = math.nan
    sd_bottleneck: float = math.nan
    median_bottleneck: float = math.nan
    mean_max_region_points: float = math.nan
    mean_potential_count: float = math.nan
    wall_time: float = 0.0
    bottlenecks: list = field(default_factory=list)
    recovered: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def row(self) -> dict:
        if not self.feasible:
            return {"n": self.n, "m": self.m, "reps": self.reps, "recovery_rate": INFEASIBLE,
                    "mean_bottleneck": INFEASIBLE, "sd_bottleneck": INFEASIBLE,
                    "median_bottleneck": INFEASIBLE, "mean_max_region_points": INFEASIBLE,
                    "mean_potential_count": INFEASIBLE, "wall_time": 0.0, "failures": 0}
        return {"n": self.n, "m": self.m, "reps": self.reps, "recovery_rate": self.recovery_rate,
                "mean_bottleneck": self.mean_bottleneck, "sd_bottleneck": self.sd_bottleneck,
                "median_bottleneck": self.median_bottleneck,
                "mean_max_region_points": self.mean_max_region_points,
                "mean_potential_count": self.mean_potential_count,
                "wall_time": round(self.wall_time, 3), "failures": len(self.failures)}


@dataclass
class ResultTable:
    config: ExperimentConfig
    cells: list[CellResult]
    baseline: list[dict] = field(default_factory=list)

    def cell(self, n, m) -> CellResult:
        for c in self.cells:
            if c.n == n and c.m == m:
                return c
        raise KeyError((n, m))

    def to_csv(self, path=None) -> str:
        rows = [c.row() for c in self.cells]
        buf = _csv_text(rows, list(CellResult(0, 0, 0).row().keys()))
        if path is not None:
            Path(path).write_text(buf)
        return buf

    def to_json(self, path=None) -> str:
        doc = {
            "config": self.config.to_dict(),
            "cells": [dict(c.row(), bottlenecks=c.bottlenecks, recovered=c.recovered,
                           failure_messages=c.failures) for c in self.cells],
            "baseline": self.baseline,
        }
        text = json.dumps(doc, indent=2, default=_json_default)
        if path is not None:
            Path(path).write_text(text)
        return text

    def plot_data(self, path=None) -> str:
        """Long-format (method, n, x, mean_bottleneck) rows; x is m for DaC
        cells and k_c for the k-means++ baseline."""
        rows = [{"method": "dac", "n": c.n, "x": c.m, "mean_bottleneck": c.mean_bottleneck}
                for c in self.cells if c.feasible]
        rows += [{"method": "kmeans++", "n": b["n"], "x": b["k_c"], "mean_bottleneck": b["mean_bottleneck"]}
                 for b in self.baseline]
        buf = _csv_text(rows, ["method", "n", "x", "mean_bottleneck"])
        if path is not None:
            Path(path).write_text(buf)
        return buf


def _csv_text(rows, header) -> str:
    import io

    out = io.StringIO()
    w = csv.DictWriter(out, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return out.getvalue()


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    raise TypeError(type(x))


# --- ground truth ------------------------------------------------------------

def truth_diagram(cloud: PointCloud, k: int, hint: float | None = None,
                  growth: float = 1.03) -> PersistenceDiagram:
    """Full-data Rips diagram for dims 0..k.

    Without a hint the cutoff is the enclosing radius, ripser does the work
    and the result is exact.
    With a hint the cutoff starts there and grows by ``growth`` until no
    feature of dim >= 1 and at most one component survive.  Pairs born below
    the final cutoff are exact, but a feature born above it is not seen, so
    the hint must lie above the scales of interest (the harness passes just
    above the largest DaC death).  Below the enclosing radius gudhi computes
    the diagram after an edge collapse, which is much cheaper on dense samples
    and keeps float64 values.
    """
    dist = pairwise_distances(cloud.points)
    if hint is None:
        return ripser_diagram(dist, k)
    return grown_cutoff_diagram(dist, k, hint, growth)


# --- evaluation --------------------------------------------------------------

def signal_persistences(truth: PersistenceDiagram, k: int) -> np.ndarray:
    """Persistences of the dim-k truth features above the widest gap in the
    sorted persistence values (everything, if there is only one feature)."""
    p = np.sort(truth.restrict(k, finite=True).persistence)
    if p.size <= 1:
        return p
    cut = int(np.argmax(np.diff(p))) + 1
    return p[cut:]


def recovery_threshold(truth: PersistenceDiagram, k: int, policy: str = "half_median") -> float:
    if policy != "half_median":
        raise ValueError(f"unknown recovery policy {policy!r}")
    sig = signal_persistences(truth, k)
    if sig.size == 0:
        return 0.0
    return 0.5 * float(np.median(sig))


def recovery_predicate(dac, truth: PersistenceDiagram, k: int, policy: str = "half_median") -> bool:
    """DaC shows as many dim-k features above the persistence floor as the truth."""
    est = dac.to_diagram() if isinstance(dac, DacDiagram) else dac
    thr = recovery_threshold(truth, k, policy)
    a = int(np.sum(est.restrict(k).persistence > thr))
    b = int(np.sum(truth.restrict(k).persistence > thr))
    return a == b


def memory_proxies(run: DacDiagram) -> tuple[int, int]:
    return int(run.report["max_region_points"]), int(run.report["potential_count"])


def kmeanspp_centroids(points: np.ndarray, k_c: int, seed: int = 0,
                       max_iter: int = 100, tol: float = 1e-6) -> np.ndarray:
    from sklearn.cluster import KMeans, kmeans_plusplus

    n = points.shape[0]
    if not 1 <= k_c <= n:
        raise ValueError("need 1 <= k_c <= n")
    # plain D^2 sampling: one candidate per draw
    init, _ = kmeans_plusplus(points, k_c, random_state=seed, n_local_trials=1)
    km = KMeans(k_c, init=init, n_init=1, max_iter=max_iter, tol=tol, random_state=seed)
    km.fit(points)
    return km.cluster_centers_


def kmeanspp_baseline(cloud: PointCloud, k_c: int, k: int = 1, seed: int = 0) -> PersistenceDiagram:
    """Rips diagram of the k-means++ centroids of the cloud."""
    cents = kmeanspp_centroids(cloud.points, k_c, seed)
    engine = "sa" if k_c <= 150 else "ripser"
    return compute_diagram(pairwise_distances(cents), k, engine=engine)


def _make_cloud(cfg: ExperimentConfig, n, seed) -> PointCloud:
    params = dict(cfg.params)
    if n is not None:
        params["n"] = n
    return datagen.generate(cfg.generator, seed=seed, **params)


def _hint(dac_dgm: PersistenceDiagram, k: int) -> float | None:
    fin = dac_dgm.restrict(k, finite=True)
    if len(fin) == 0:
        return None
    return 1.001 * float(fin.deaths.max())


def run_rep(cfg: ExperimentConfig, n, m, seed, truth: PersistenceDiagram | None = None):
    cloud = _make_cloud(cfg, n, seed)
    dac = run_dac(cloud, cfg.k, m, merge_method=cfg.merge_method, estimator=cfg.estimator,
                  eps_proj=cfg.eps_proj, threads=cfg.threads)
    dgm = dac.to_diagram()
    if truth is None:
        truth = truth_diagram(cloud, cfg.k, _hint(dgm, cfg.k))
    b = bottleneck(dgm, truth, cfg.k)
    rec = recovery_predicate(dgm, truth, cfg.k, cfg.threshold_policy)
    return cloud, dac, truth, b, rec


def run_experiment(cfg: ExperimentConfig, truth_cache: dict | None = None) -> ResultTable:
    """Every (n, m) cell over ``reps`` seeds ``seed_base + rep``.

    ``truth_cache`` (optional) maps (generator, n, seed) to full-data diagrams
    so cells sharing data reuse them.
    """
    cache = {} if truth_cache is None else truth_cache
    cells = []
    for n in cfg.n_values:
        for m in cfg.m_values:
            n_eff = n if n is not None else _make_cloud(cfg, None, cfg.seed_base).n
            cell = CellResult(n_eff, m, cfg.reps)
            if n_eff < cfg.infeasible_ratio * m:
                cell.feasible = False
                cells.append(cell)
                continue
            t0 = time.perf_counter()
            max_pts, pots = [], []
            for rep in range(cfg.reps):
                seed = cfg.seed_base + rep
                key = (cfg.generator, json.dumps(cfg.params, sort_keys=True), n_eff, seed, cfg.k)
                try:
                    _, dac, truth, b, rec = run_rep(cfg, n, m, seed, cache.get(key))
                except Exception as exc:  # recorded, not fatal
                    cell.failures.append(f"seed {seed}: {type(exc).__name__}: {exc}")
                    continue
                cache[key] = truth
                cell.bottlenecks.append(b)
                cell.recovered.append(bool(rec))
                mp, pc = memory_proxies(dac)
                max_pts.append(mp)
                pots.append(pc)
            cell.wall_time = time.perf_counter() - t0
            if cell.bottlenecks:
                bs = np.array(cell.bottlenecks)
                cell.mean_bottleneck = float(bs.mean())
                cell.sd_bottleneck = float(bs.std(ddof=1)) if bs.size > 1 else 0.0
                cell.median_bottleneck = float(np.median(bs))
                cell.mean_max_region_points = float(np.mean(max_pts))
                cell.mean_potential_count = float(np.mean(pots))
            # failed reps count as not recovered
            cell.recovery_rate = float(np.sum(cell.recovered)) / cfg.reps
            cells.append(cell)

    baseline = []
    for n in cfg.n_values if cfg.kc_values else []:
        for k_c in cfg.kc_values:
            bs = []
            for rep in range(cfg.reps):
                seed = cfg.seed_base + rep
                cloud = _make_cloud(cfg, n, seed)
                key = (cfg.generator, json.dumps(cfg.params, sort_keys=True), cloud.n, seed, cfg.k)
                if key not in cache:
                    cache[key] = truth_diagram(cloud, cfg.k)
                kc = int(round(k_c * cloud.n)) if isinstance(k_c, float) and k_c < 1 else int(k_c)
                bs.append(bottleneck(kmeanspp_baseline(cloud, kc, cfg.k, seed), cache[key], cfg.k))
            baseline.append({"n": cloud.n, "k_c": k_c, "mean_bottleneck": float(np.mean(bs)),
                             "sd_bottleneck": float(np.std(bs, ddof=1)) if len(bs) > 1 else 0.0,
                             "bottlenecks": bs})
    return ResultTable(cfg, cells, baseline)
