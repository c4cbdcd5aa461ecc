"""Topic matrix estimation from the eigen-ratio simplex."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial import ConvexHull, QhullError

from . import geometry
from .core import (
    STOCHASTIC_TOL,
    ConditioningError,
    DegenerateTopicError,
    IdentifiabilityError,
    PipelineError,
    SingularBasis,
    TermDocMatrix,
    TopicMatrix,
    TopicModelError,
    ValidationError,
    validate_row_stochastic,
)
from .geometry import LocalCenters, RatioMatrix, Simplex
from .spectral import SvdConfig, top_left_singular

MAX_COND = 1e10


@dataclass(frozen=True)
class WeightMatrix:
    """p x K matrix whose rows are barycentric weights of the words."""

    data: np.ndarray

    def __post_init__(self):
        P = np.array(self.data, dtype=np.float64)
        if P.ndim != 2 or not validate_row_stochastic(P, STOCHASTIC_TOL):
            raise ValidationError("weight matrix rows must be nonnegative and sum to 1")
        P.setflags(write=False)
        object.__setattr__(self, "data", P)


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning for :func:`estimate_topics`.

    ``s``, ``m`` and ``K0`` default to p, 10K and ceil(5K/4).
    """

    K: int
    s: int | None = None
    m: int | None = None
    K0: int | None = None
    seed: int = 0
    use_greedy: bool = True
    restarts: int = 10
    max_iters: int = 100
    svd_method: str = "randomized"

    def __post_init__(self):
        K = self.K
        if K < 2:
            raise ValidationError("K must be >= 2")
        if self.m is None:
            object.__setattr__(self, "m", 10 * K)
        if self.K0 is None:
            object.__setattr__(self, "K0", min(math.ceil(5 * K / 4), self.m))
        if self.s is not None and self.s < 1:
            raise ValidationError("s must be >= 1")
        if self.m < K:
            raise ValidationError(f"m={self.m} must be >= K={K}")
        if not K <= self.K0 <= self.m:
            raise ValidationError(f"need K <= K0 <= m, got K0={self.K0}")


@dataclass(frozen=True)
class EstimateReport:
    topics: TopicMatrix
    weights: WeightMatrix
    simplex: Simplex
    ratios: RatioMatrix
    centers: LocalCenters
    clipped_rows: int
    singular_values: np.ndarray
    xi1: np.ndarray
    dropped_words: np.ndarray

    def anchor_like_words(self, top: int = 20) -> list[list[int]]:
        """Per topic, the word indices whose ratio rows are closest to its vertex."""
        R = self.ratios.entries
        kept = np.setdiff1d(np.arange(R.shape[0]), self.dropped_words)
        out = []
        for v in self.simplex.vertices:
            d = np.linalg.norm(R[kept] - v, axis=1)
            order = np.lexsort((kept, d))
            out.append([int(kept[i]) for i in order[:top]])
        return out

    def save(self, out_dir, vocab=None) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        np.savetxt(out / "topics.csv", self.topics.data, delimiter=",", fmt="%.17g")
        np.savetxt(out / "weights.csv", self.weights.data, delimiter=",", fmt="%.17g")
        np.savetxt(out / "simplex.csv", self.simplex.vertices, delimiter=",", fmt="%.17g")
        diag = {
            "p": self.topics.p,
            "K": self.topics.K,
            "clipped_rows": self.clipped_rows,
            "dropped_words": len(self.dropped_words),
            "vertex_objective": repr(float(self.simplex.objective)),
            "vertex_fallback": self.simplex.fallback,
            "vertex_centers": " ".join(map(str, self.simplex.indices or ())),
            "ratio_threshold": repr(float(self.ratios.threshold)),
            "kmeans_inertia": repr(float(self.centers.inertia)),
            "singular_values": " ".join(repr(float(s)) for s in self.singular_values),
        }
        (out / "diagnostics.txt").write_text("".join(f"{k}={v}\n" for k, v in diag.items()))
        if vocab is not None:
            lines = []
            for k, words in enumerate(self.anchor_like_words()):
                lines.append(f"topic {k + 1}: " + ", ".join(vocab[i] for i in words))
            (out / "topic_words.txt").write_text("\n".join(lines) + "\n")


def recover_weights(R, S: Simplex) -> tuple[WeightMatrix, int]:
    """Barycentric weights of every ratio row, clipped at 0 and renormalized.

    Returns the weights and the number of rows that needed clipping. Rows
    that clip to all zeros get uniform weights.
    """
    Rm = R.entries if isinstance(R, RatioMatrix) else np.atleast_2d(np.asarray(R, dtype=float))
    V = S.vertices if isinstance(S, Simplex) else np.asarray(S, dtype=float)
    K = V.shape[0]
    M = np.hstack([V, np.ones((K, 1))])
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond >= MAX_COND:
        raise ConditioningError(float(cond))
    lhs = np.hstack([Rm, np.ones((Rm.shape[0], 1))])
    Pi = np.linalg.solve(M.T, lhs.T).T
    clipped = int(np.count_nonzero((Pi < 0).any(axis=1)))
    Pi = np.maximum(Pi, 0.0)
    sums = Pi.sum(axis=1)
    zero = sums <= 0
    Pi[zero] = 1.0 / K
    sums[zero] = 1.0
    return WeightMatrix(Pi / sums[:, None]), clipped


def assemble_topics(weights, xi1, s: int) -> TopicMatrix:
    """Scale weights by the leading singular vector, keep the ``s`` largest
    entries per column and renormalize columns.

    The scaling is row-wise, ``diag(xi1) @ Pi``, which is the only
    shape-consistent reading and inverts the weight definition
    ``Pi = diag(xi1)^-1 A diag(V1)`` up to column scaling.
    """
    Pi = weights.data if isinstance(weights, WeightMatrix) else np.asarray(weights, dtype=float)
    xi1 = np.asarray(xi1, dtype=float).ravel()
    if s < 1:
        raise ValidationError("s must be >= 1")
    if xi1.size != Pi.shape[0]:
        raise ValidationError("xi1 length does not match the number of words")
    A = Pi * xi1[:, None]
    p, K = A.shape
    if s < p:
        rows = np.arange(p)
        for k in range(K):
            order = np.lexsort((rows, -A[:, k]))
            A[order[s:], k] = 0.0
    sums = A.sum(axis=0)
    bad = np.flatnonzero(sums <= 0)
    if bad.size:
        raise DegenerateTopicError(f"topic {bad[0] + 1} has no positive mass after masking")
    return TopicMatrix(A / sums)


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except TopicModelError as exc:
        raise PipelineError(name, exc) from exc


def estimate_topics(D: TermDocMatrix, cfg: EstimatorConfig) -> EstimateReport:
    """SVD -> eigen-ratios -> k-means + vertex hunting -> weights -> topics."""
    M = D.data
    p, n = M.shape
    if cfg.K > min(p, n):
        raise PipelineError("input", ValidationError(f"K={cfg.K} exceeds min(p, n)={min(p, n)}"))
    row_mass = np.asarray(abs(M).sum(axis=1)).ravel()
    kept = np.flatnonzero(row_mass > 0)
    dropped = np.flatnonzero(row_mass <= 0)
    Mk = M[kept, :] if dropped.size else M
    if cfg.K > min(Mk.shape):
        raise PipelineError("input", ValidationError(f"K={cfg.K} exceeds the number of nonzero words"))

    svd_cfg = SvdConfig(cfg.K, method=cfg.svd_method, seed=cfg.seed)
    basis = _stage("svd", top_left_singular, Mk, svd_cfg)
    R = _stage("ratios", geometry.ratio_matrix, basis, n)
    centers = _stage("kmeans", geometry.kmeans, R.entries, cfg.m, cfg.seed, cfg.restarts, cfg.max_iters)
    if cfg.use_greedy:
        S = _stage("vertex_hunt", geometry.vertex_hunt_greedy, centers, cfg.K, cfg.K0)
    else:
        S = _stage("vertex_hunt", geometry.vertex_hunt_exhaustive, centers, cfg.K)
    weights, clipped = _stage("weights", recover_weights, R, S)
    s = p if cfg.s is None else cfg.s
    topics = _stage("topics", assemble_topics, weights, basis.xi1, min(s, len(kept)))

    if dropped.size:
        A = np.zeros((p, cfg.K))
        A[kept] = topics.data
        Pi = np.full((p, cfg.K), 1.0 / cfg.K)
        Pi[kept] = weights.data
        Rfull = np.zeros((p, cfg.K - 1))
        Rfull[kept] = R.entries
        xi1 = np.zeros(p)
        xi1[kept] = basis.xi1
        topics, weights, R = TopicMatrix(A), WeightMatrix(Pi), RatioMatrix(Rfull, R.threshold)
    else:
        xi1 = np.array(basis.xi1)
    return EstimateReport(topics, weights, S, R, centers, clipped, np.array(basis.values), xi1, dropped)


# --------------------------------------------------------------------------
# noiseless reconstruction


def _extreme_rows(U: np.ndarray) -> np.ndarray:
    if U.shape[1] == 1:
        return np.unique([int(np.argmin(U[:, 0])), int(np.argmax(U[:, 0]))])
    try:
        return np.sort(ConvexHull(U).vertices)
    except QhullError as exc:
        raise IdentifiabilityError(f"ratio rows are degenerate: {exc}") from exc


def ideal_reconstruct(Xi: SingularBasis, K: int, tol: float = 1e-8) -> TopicMatrix:
    """Exact recovery of A from the singular basis of the noiseless D0 = A W.

    Uses the untruncated ratio matrix; the vertices are the best-fit K-subset
    of the extreme points of the deduplicated ratio rows, and every row must
    then lie inside that simplex.
    """
    if Xi.K != K:
        raise ValidationError(f"basis has {Xi.K} vectors, expected K={K}")
    xi1 = Xi.xi1
    support = np.abs(xi1) > 1e-14 * np.abs(xi1).max()
    if np.any(xi1[support] < 0):
        raise IdentifiabilityError("leading singular vector is not positive on the support")
    R = geometry.ratio_matrix(Xi, Xi.p, threshold=geometry.NO_TRUNCATION).entries
    scale = max(1.0, np.abs(R[support]).max())
    U = np.unique(np.round(R[support] / scale, 10), axis=0) * scale
    if U.shape[0] < K:
        raise IdentifiabilityError(f"only {U.shape[0]} distinct ratio rows for K={K}")
    ext = _extreme_rows(U)
    if ext.size < K:
        raise IdentifiabilityError(f"only {ext.size} extreme ratio rows for K={K}")
    S = geometry.best_fit_simplex(U, [int(i) for i in ext], K, geometry.QP_TOL)
    if S.fallback or S.objective > tol * scale:
        raise IdentifiabilityError("no K extreme rows span the ratio cloud; some topic lacks an anchor word")
    weights, _ = recover_weights(R, S)
    Pi = weights.data.copy()
    Pi[~support] = 0.0
    A = Pi * xi1[:, None]
    A[~support] = 0.0
    return TopicMatrix(A / A.sum(axis=0))


# --------------------------------------------------------------------------
# evaluation


def _column_l1(est: np.ndarray, truth: np.ndarray) -> np.ndarray:
    return np.abs(est[:, :, None] - truth[:, None, :]).sum(axis=0)


def _bottleneck(cost: np.ndarray) -> float:
    """min over permutations of the max matched cost (exact)."""
    K = cost.shape[0]
    values = np.unique(cost)
    lo, hi = 0, values.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        graph = sp.csr_matrix((cost <= values[mid]).astype(np.int8))
        if np.all(maximum_bipartite_matching(graph, perm_type="column") >= 0):
            hi = mid
        else:
            lo = mid + 1
    return float(values[lo]) if K else 0.0


def l1_error(est, truth, aggregate: str = "max") -> float:
    """Permutation-matched l1 distance between the columns of two topic matrices.

    ``aggregate="max"`` is the largest per-topic l1 error, ``"sum"`` the total.
    """
    E = est.data if isinstance(est, TopicMatrix) else np.asarray(est, dtype=float)
    T = truth.data if isinstance(truth, TopicMatrix) else np.asarray(truth, dtype=float)
    if E.shape != T.shape:
        raise ValidationError(f"shape mismatch {E.shape} vs {T.shape}")
    cost = _column_l1(E, T)
    if aggregate == "max":
        return _bottleneck(cost)
    if aggregate == "sum":
        r, c = linear_sum_assignment(cost)
        return float(cost[r, c].sum())
    raise ValueError(f"unknown aggregate {aggregate!r}")

