"""Runtime scaling study over synthetic random graphs.

Runs the full unsupervised pipeline (encode, walk, optimize) on an
Erdos-Renyi grid and fits the log-log slope of total runtime against the
node count, plus the runtime trend against the average degree at fixed
size.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .graph import GraphGenSpec, generate_erdos_renyi
from .encoder import fit_config
from .unsupervised import UnsupConfig, train_unsupervised
from .walks import WalkConfig

__all__ = ["ScalingRun", "ScalingStudy", "scaling_benchmark",
           "fit_loglog_slope", "write_tsv"]


@dataclass
class ScalingRun:
    num_nodes: int
    avg_degree: float
    alpha: int
    replicate: int
    phase_seconds: dict[str, float]
    total_seconds: float

    def row(self) -> dict:
        return {
            "num_nodes": self.num_nodes,
            "avg_degree": self.avg_degree,
            "alpha": self.alpha,
            "replicate": self.replicate,
            "encode_s": self.phase_seconds.get("encode", 0.0),
            "walks_s": self.phase_seconds.get("walks", 0.0),
            "optimize_s": self.phase_seconds.get("optimize", 0.0),
            "total_s": self.total_seconds,
        }


@dataclass
class ScalingStudy:
    runs: list[ScalingRun] = field(default_factory=list)
    size_slopes: dict[int, float] = field(default_factory=dict)   # alpha -> slope
    degree_spread: dict[int, float] = field(default_factory=dict)  # alpha -> max/min

    def to_dict(self) -> dict:
        return {
            "runs": [r.row() for r in self.runs],
            "size_slopes": {str(k): v for k, v in self.size_slopes.items()},
            "degree_spread": {str(k): v for k, v in self.degree_spread.items()},
        }


def fit_loglog_slope(sizes: np.ndarray, times: np.ndarray,
                     min_size: int = 1024) -> float:
    """Least-squares slope of log(time) vs log(size), ignoring sizes below
    ``min_size`` where fixed overheads dominate."""
    sizes = np.asarray(sizes, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    keep = sizes >= min_size
    if keep.sum() < 2:
        raise ValueError("need at least two sizes above the fit threshold")
    return float(np.polyfit(np.log(sizes[keep]), np.log(times[keep]), 1)[0])


def _one_run(n: int, degree: float, alpha: int, replicate: int,
             base: UnsupConfig, walks: WalkConfig, dim: int,
             seed: int) -> ScalingRun:
    spec = GraphGenSpec(num_nodes=n, avg_degree=degree, seed=seed)
    g = generate_erdos_renyi(spec)
    enc_cfg = fit_config(g, alpha)
    t0 = time.perf_counter()
    _, report = train_unsupervised(g, enc_cfg, walks, base, dim=dim)
    total = time.perf_counter() - t0
    return ScalingRun(n, degree, alpha, replicate, report.phase_seconds, total)


def scaling_benchmark(sizes, degrees, alphas, replicates: int,
                      base_cfg: UnsupConfig | None = None,
                      walk_cfg: WalkConfig | None = None,
                      dim: int = 16, seed: int = 0,
                      fixed_degree: float = 8.0,
                      fixed_size: int = 4096,
                      progress=None) -> ScalingStudy:
    """Grid of full-pipeline runs.

    Size sweep: every size in ``sizes`` at ``fixed_degree`` for each alpha.
    Degree sweep: every degree in ``degrees`` at ``fixed_size`` for each
    alpha. Each cell repeats ``replicates`` times with distinct seeds.
    """
    base = base_cfg or UnsupConfig(negatives=3, window=3, epochs=1,
                                   batch_size=100_000, seed=seed)
    walks = walk_cfg or WalkConfig(walks_per_node=3, walk_length=20, seed=seed)
    study = ScalingStudy()
    counter = 0
    for alpha in alphas:
        for n in sizes:
            for rep in range(replicates):
                counter += 1
                run = _one_run(int(n), fixed_degree, alpha, rep, base, walks,
                               dim, seed + 7919 * counter)
                study.runs.append(run)
                if progress:
                    progress(run)
        per_size = {}
        for run in study.runs:
            if run.alpha == alpha and run.avg_degree == fixed_degree:
                per_size.setdefault(run.num_nodes, []).append(run.total_seconds)
        xs = sorted(per_size)
        if len([x for x in xs if x >= 1024]) >= 2:
            means = [float(np.mean(per_size[x])) for x in xs]
            study.size_slopes[alpha] = fit_loglog_slope(xs, means)
    for alpha in alphas:
        deg_times = {}
        for degree in degrees:
            for rep in range(replicates):
                counter += 1
                run = _one_run(fixed_size, float(degree), alpha, rep, base,
                               walks, dim, seed + 7919 * counter)
                study.runs.append(run)
                deg_times.setdefault(degree, []).append(run.total_seconds)
                if progress:
                    progress(run)
        if deg_times:
            means = [float(np.mean(v)) for v in deg_times.values()]
            study.degree_spread[alpha] = max(means) / max(min(means), 1e-12)
    return study


def write_tsv(study: ScalingStudy, path) -> None:
    cols = ["num_nodes", "avg_degree", "alpha", "replicate",
            "encode_s", "walks_s", "optimize_s", "total_s"]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(cols) + "\n")
        for run in study.runs:
            row = run.row()
            f.write("\t".join(str(row[c]) for c in cols) + "\n")
