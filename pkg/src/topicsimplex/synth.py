"""Synthetic pLSI corpora and the simulation experiments.

Every replicate ``r`` of an experiment uses seed ``base_seed + r`` for both the
data and the estimator, so grid points share common random numbers and rerun
byte-identically. Streams are Philox generators; :func:`replicate_rng` splits
a seed into independent sub-streams for A, W and the multinomial draws.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import (
    DocWeightMatrix,
    TermDocMatrix,
    TopicMatrix,
    TopicModelError,
    ValidationError,
    make_rng,
)
from .estimator import EstimatorConfig, estimate_topics, l1_error

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthConfig:
    K: int = 6
    n: int = 500
    p: int = 2000
    N: int = 2000
    a0: float = 0.2
    p0: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.K < 1 or self.n < 1 or self.p < 1:
            raise ValidationError("K, n, p must be positive")
        if self.K * self.p0 > self.p:
            raise ValidationError(f"K*p0={self.K * self.p0} exceeds p={self.p}")
        if self.N < 1:
            raise ValidationError("N must be >= 1")
        if not 0.0 <= self.a0 <= 1.0:
            raise ValidationError("a0 must lie in [0, 1]")


@dataclass(frozen=True)
class SynthInstance:
    A: TopicMatrix
    W: DocWeightMatrix
    D0: TermDocMatrix
    D: TermDocMatrix


def replicate_rng(seed: int):
    """Independent generators for (A, W, sampling) derived from one seed."""
    return [make_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]


def generate_topic_matrix(cfg: SynthConfig, rng) -> TopicMatrix:
    K, p, p0 = cfg.K, cfg.p, cfg.p0
    A = np.zeros((p, K))
    n_anchor = K * p0
    for k in range(K):
        A[k * p0:(k + 1) * p0, k] = 1.5 / p
    A[n_anchor:, :] = rng.random((p - n_anchor, K)) / p
    return TopicMatrix(A / A.sum(axis=0))


def pure_doc_counts(n: int, a0: float, K: int) -> np.ndarray:
    """Pure documents per topic; the remainder goes to the lowest topics."""
    total = math.floor(n * a0 + 1e-9)
    counts = np.full(K, total // K)
    counts[: total % K] += 1
    return counts


def generate_weight_matrix(cfg: SynthConfig, rng) -> DocWeightMatrix:
    K, n = cfg.K, cfg.n
    counts = pure_doc_counts(n, cfg.a0, K)
    n_pure = int(counts.sum())
    W = np.zeros((K, n))
    W[np.repeat(np.arange(K), counts), np.arange(n_pure)] = 1.0
    mixed = rng.random((K, n - n_pure))
    W[:, n_pure:] = mixed / mixed.sum(axis=0)
    return DocWeightMatrix(W)


def sample_corpus(A: TopicMatrix, W: DocWeightMatrix, N: int, rng) -> TermDocMatrix:
    """Column i is X_i / N with X_i ~ Multinomial(N, A @ W_i)."""
    if A.K != W.K:
        raise ValidationError("A and W disagree in K")
    if N < 1:
        raise ValidationError("N must be >= 1")
    D0 = A.data @ W.data
    # clean rounding so each column is an exact pmf
    D0 = np.maximum(D0, 0.0)
    D0 /= D0.sum(axis=0)
    X = rng.multinomial(N, D0.T)
    return TermDocMatrix(sp.csc_matrix(X.T / N))


def generate_instance(cfg: SynthConfig, noiseless: bool = False) -> SynthInstance:
    rng_a, rng_w, rng_x = replicate_rng(cfg.seed)
    A = generate_topic_matrix(cfg, rng_a)
    W = generate_weight_matrix(cfg, rng_w)
    D0 = TermDocMatrix(sp.csc_matrix(A.data @ W.data))
    D = D0 if noiseless else sample_corpus(A, W, cfg.N, rng_x)
    return SynthInstance(A, W, D0, D)


# --------------------------------------------------------------------------
# experiments

EXPERIMENTS = {
    "exp1": dict(param="m", grid=(12, 24, 36, 48, 60, 84), base=dict(K=6, n=500, N=2000, a0=0.2)),
    "exp2": dict(param="n", grid=(50, 100, 500, 1000, 1500, 2000, 3000), base=dict(K=6, N=2000, a0=0.2)),
    "exp3": dict(param="a0", grid=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6), base=dict(K=6, n=3000, N=2000)),
    "exp4": dict(param="K", grid=(3, 4, 5, 6, 7, 8, 9), base=dict(n=3000, N=2000, a0=0.2)),
}


@dataclass(frozen=True)
class GridResult:
    value: float
    mean_error: float
    std_error: float
    reps: int
    failures: int
    errors: tuple

    @property
    def all_failed(self) -> bool:
        return self.failures == self.reps


def run_replicate(param: str, value, rep: int, base_seed: int, base: dict) -> float | None:
    seed = base_seed + rep
    synth_kw = dict(base)
    est_kw = {}
    if param == "m":
        est_kw["m"] = int(value)
    else:
        synth_kw[param] = value
    cfg = SynthConfig(seed=seed, **synth_kw)
    inst = generate_instance(cfg)
    try:
        report = estimate_topics(inst.D, EstimatorConfig(K=cfg.K, seed=seed, **est_kw))
    except TopicModelError as exc:
        log.warning("%s=%s replicate %d failed: %s", param, value, rep, exc)
        return None
    return l1_error(report.topics, inst.A, "max")


def _run_task(task):
    return (task[1], task[2]), run_replicate(*task)


def run_experiment(name: str, reps: int, base_seed: int = 0, overrides: dict | None = None,
                   grid=None, workers: int = 1) -> list[GridResult]:
    """Mean and standard error of the max-over-topics l1 error per grid point."""
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}")
    if reps < 1:
        raise ValidationError("reps must be >= 1")
    spec = EXPERIMENTS[name]
    param = spec["param"]
    base = {**spec["base"], **(overrides or {})}
    base.pop(param, None)
    base.pop("seed", None)
    grid = tuple(spec["grid"] if grid is None else grid)
    tasks = [(param, v, r, base_seed, base) for v in grid for r in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = dict(pool.map(_run_task, tasks))
    else:
        done = dict(map(_run_task, tasks))

    results = []
    for v in grid:
        errs = [done[(v, r)] for r in range(reps)]
        ok = np.array([e for e in errs if e is not None])
        failures = reps - ok.size
        if ok.size:
            mean = float(ok.mean())
            se = float(ok.std(ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else 0.0
        else:
            mean = se = math.nan
        results.append(GridResult(v, mean, se, reps, failures, tuple(errs)))
    return results


def results_to_csv(results: list[GridResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gridValue", "meanError", "stdError", "reps", "failures"])
    for r in results:
        w.writerow([f"{r.value:g}", f"{r.mean_error:.10f}", f"{r.std_error:.10f}", r.reps, r.failures])
    return buf.getvalue()
