"""Simplex geometry: eigen-ratio embedding, point-to-simplex distance,
k-means sketching and vertex hunting."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import InfeasibleClusteringError, SingularBasis, ValidationError, make_rng

AFFINE_TOL = 1e-12
QP_TOL = 1e-9
TIE_TOL = 1e-12
NO_TRUNCATION = 1e308


def truncate(x, a: float):
    """Sign-preserving clamp of ``|x|`` at ``a``; works elementwise on arrays."""
    if a <= 0:
        raise ValueError("truncation level must be positive")
    return np.sign(x) * np.minimum(np.abs(x), a)


@dataclass(frozen=True)
class RatioMatrix:
    entries: np.ndarray
    threshold: float

    def __post_init__(self):
        R = np.array(self.entries, dtype=np.float64)
        if R.ndim != 2:
            raise ValidationError("ratio matrix must be 2-D")
        if R.size and np.abs(R).max() > self.threshold:
            raise ValidationError("ratio entry exceeds truncation threshold")
        R.setflags(write=False)
        object.__setattr__(self, "entries", R)

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[1]


def ratio_matrix(basis: SingularBasis, n: int, threshold: float | None = None) -> RatioMatrix:
    """Entrywise ratios of singular vectors 2..K over the first, truncated.

    The default threshold is ``log(max(n, p))``. Rows whose leading entry is
    numerically zero are returned as zero vectors.
    """
    if basis.K < 2:
        raise ValidationError("ratio matrix needs K >= 2")
    if threshold is None:
        threshold = math.log(max(n, basis.p))
    Xi = basis.vectors
    xi1 = Xi[:, 0]
    ok = np.abs(xi1) >= 1e-300
    R = np.zeros((basis.p, basis.K - 1))
    R[ok] = Xi[ok, 1:] / xi1[ok, None]
    return RatioMatrix(truncate(R, threshold), threshold)


def affine_det(vertices: np.ndarray) -> float:
    """|det [vertices | 1]| after scaling each row to unit max-abs."""
    M = np.hstack([vertices, np.ones((vertices.shape[0], 1))])
    M = M / np.abs(M).max(axis=1, keepdims=True)
    return abs(np.linalg.det(M))


def is_affinely_independent(vertices: np.ndarray) -> bool:
    V = np.asarray(vertices, dtype=float)
    if V.shape[0] != V.shape[1] + 1:
        return False
    return affine_det(V) > AFFINE_TOL


def reference_simplex(K: int) -> np.ndarray:
    """Vertices ``0, e_1, ..., e_{K-1}`` in R^(K-1)."""
    return np.vstack([np.zeros(K - 1), np.eye(K - 1)])


@dataclass(frozen=True)
class Simplex:
    """K vertices in R^(K-1), one per row.

    ``indices`` are the local-center indices the vertices came from (None for
    the fallback) and ``objective`` the minimax fit distance.
    """

    vertices: np.ndarray
    indices: tuple | None = None
    objective: float = 0.0
    fallback: bool = False

    def __post_init__(self):
        V = np.array(self.vertices, dtype=np.float64)
        if V.ndim != 2 or V.shape[0] != V.shape[1] + 1:
            raise ValidationError(f"a simplex in R^d needs d+1 vertices, got shape {V.shape}")
        if not self.fallback and not is_affinely_independent(V):
            raise ValidationError("simplex vertices are not affinely independent")
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)

    @property
    def K(self) -> int:
        return self.vertices.shape[0]

    @property
    def volume(self) -> float:
        M = np.hstack([self.vertices, np.ones((self.K, 1))])
        return abs(np.linalg.det(M)) / math.factorial(self.K - 1)


@dataclass(frozen=True)
class LocalCenters:
    centers: np.ndarray
    sizes: np.ndarray
    labels: np.ndarray = field(repr=False)
    inertia: float = 0.0

    @property
    def m(self) -> int:
        return self.centers.shape[0]


# --------------------------------------------------------------------------
# point-to-simplex distance


def _simplex_lsq(V: np.ndarray, v: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Active-set solve of min ||V^T w - v||^2 s.t. w >= 0, sum(w) = 1."""
    K = V.shape[0]
    G = V @ V.T
    c = V @ v
    scale = 1.0 + np.abs(G).max() + np.abs(c).max()
    w = np.zeros(K)
    start = int(np.argmin(((V - v) ** 2).sum(axis=1)))
    w[start] = 1.0
    free = [start]
    for _ in range(max_iter):
        F = np.array(sorted(free))
        nf = F.size
        kkt = np.zeros((nf + 1, nf + 1))
        kkt[:nf, :nf] = G[np.ix_(F, F)]
        kkt[:nf, nf] = 1.0
        kkt[nf, :nf] = 1.0
        rhs = np.append(c[F], 1.0)
        z = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:nf]
        if np.all(z > 0):
            w = np.zeros(K)
            w[F] = z
            g = G @ w - c
            mult = g - g[F].mean()
            mult[F] = np.inf
            i = int(np.argmin(mult))
            if mult[i] >= -tol * scale:
                return w
            free.append(i)
            continue
        # move toward z until the first free weight hits zero
        wf = w[F]
        d = z - wf
        neg = d < 0
        alphas = np.full(nf, np.inf)
        alphas[neg] = -wf[neg] / d[neg]
        alpha = min(1.0, alphas.min())
        wf = wf + alpha * d
        hit = wf <= tol * 1e-3
        hit[np.argmin(np.where(neg, alphas, np.inf))] = True
        wf[hit] = 0.0
        w = np.zeros(K)
        w[F] = wf
        w /= w.sum()
        free = [int(f) for f, h in zip(F, hit) if not h]
        if not free:
            free = [int(np.argmax(w))]
    return w


def _barycentric(V: np.ndarray, P: np.ndarray) -> np.ndarray | None:
    """Barycentric coordinates (rows) of the points ``P`` wrt the simplex ``V``."""
    K = V.shape[0]
    M = np.hstack([V, np.ones((K, 1))])
    rhs = np.hstack([P, np.ones((P.shape[0], 1))])
    try:
        return np.linalg.solve(M.T, rhs.T).T
    except np.linalg.LinAlgError:
        return None


def distance_to_simplex(v, S, tol: float = QP_TOL) -> float:
    """Euclidean distance from the point ``v`` to the simplex ``S``.

    ``S`` is a :class:`Simplex` or a (K, K-1) vertex array. Points inside the
    simplex (barycentric coordinates >= -tol) give exactly 0.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    V = S.vertices if isinstance(S, Simplex) else np.asarray(S, dtype=float)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return float(distances_to_simplex(v[None, :], V, tol)[0])


def distances_to_simplex(P: np.ndarray, V: np.ndarray, tol: float = QP_TOL,
                         bary: np.ndarray | None = None) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    V = np.asarray(V, dtype=float)
    out = np.zeros(P.shape[0])
    if bary is None and V.shape[0] == V.shape[1] + 1:
        bary = _barycentric(V, P)
    todo = np.arange(P.shape[0]) if bary is None else np.flatnonzero((bary < -tol).any(axis=1))
    for j in todo:
        w = _simplex_lsq(V, P[j], tol, 100 * V.shape[0])
        out[j] = np.linalg.norm(V.T @ w - P[j])
    return out


# --------------------------------------------------------------------------
# k-means


def _sq_dists(X: np.ndarray, C: np.ndarray, x2: np.ndarray) -> np.ndarray:
    d = x2[:, None] - 2.0 * (X @ C.T) + (C * C).sum(axis=1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(X: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    p = X.shape[0]
    idx = [int(rng.integers(p))]
    closest = ((X - X[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, m):
        total = closest.sum()
        if total <= 0:
            break
        j = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
        j = min(j, p - 1)
        while closest[j] <= 0:  # guard against landing on a zero-mass point through rounding
            j = (j + 1) % p
        idx.append(j)
        closest = np.minimum(closest, ((X - X[j]) ** 2).sum(axis=1))
    return X[idx].copy()


def lloyd(X: np.ndarray, init: np.ndarray, max_iters: int = 100):
    """Lloyd iterations from ``init``.

    Returns ``(centers, labels, inertia, history)`` where ``history`` holds the
    objective after every assignment step. Empty clusters are reseeded at the
    point currently farthest from its own center.
    """
    X = np.asarray(X, dtype=float)
    C = np.array(init, dtype=float)
    m, d = C.shape
    x2 = (X * X).sum(axis=1)
    labels = None
    history = []
    for _ in range(max_iters):
        D2 = _sq_dists(X, C, x2)
        new = D2.argmin(axis=1)
        history.append(float(D2[np.arange(X.shape[0]), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=m)
        C = np.column_stack([np.bincount(labels, weights=X[:, k], minlength=m) for k in range(d)])
        nonempty = counts > 0
        C[nonempty] /= counts[nonempty, None]
        if not nonempty.all():
            cost = ((X - C[labels]) ** 2).sum(axis=1)
            for c in np.flatnonzero(~nonempty):
                j = int(np.argmax(cost))
                C[c] = X[j]
                labels[j] = c
                cost[j] = -1.0
    labels = _sq_dists(X, C, x2).argmin(axis=1)
    inertia = float(((X - C[labels]) ** 2).sum())
    return C, labels, inertia, history


def kmeans(points, m: int, seed: int = 0, restarts: int = 10, max_iters: int = 100) -> LocalCenters:
    """Best-of-``restarts`` Lloyd k-means with k-means++ seeding."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if m < 1:
        raise InfeasibleClusteringError("need at least one cluster")
    distinct = np.unique(X, axis=0).shape[0]
    if m > distinct:
        raise InfeasibleClusteringError(f"cannot form {m} clusters from {distinct} distinct points")
    # canonical point order makes the result independent of the input order
    order = np.lexsort(X.T[::-1])
    Xs = X[order]
    rng = make_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        C, labels, inertia, _ = lloyd(Xs, _kmeanspp(Xs, m, rng), max_iters)
        if best is None or inertia < best[2]:
            best = (C, labels, inertia)
    C, labels_sorted, inertia = best
    labels = np.empty_like(labels_sorted)
    labels[order] = labels_sorted
    return LocalCenters(C, np.bincount(labels, minlength=m), labels, inertia)


# --------------------------------------------------------------------------
# vertex hunting


def _centers_array(centers) -> np.ndarray:
    C = centers.centers if isinstance(centers, LocalCenters) else np.asarray(centers, dtype=float)
    return np.atleast_2d(C)


def best_fit_simplex(C: np.ndarray, candidates, K: int, tol: float = QP_TOL) -> Simplex:
    """Minimax search over affinely independent K-subsets of ``candidates``.

    The objective is the largest distance from any row of ``C`` to the
    subset's simplex. Ties go to the larger volume, then the earlier subset in
    lexicographic order; with no admissible subset the reference simplex is
    returned with ``fallback=True``.
    """
    best = None  # (objective, volume, combo)
    for combo in itertools.combinations(candidates, K):
        V = C[list(combo)]
        if affine_det(V) <= AFFINE_TOL:
            continue
        bary = _barycentric(V, C)
        if bary is None:
            continue
        outside = np.flatnonzero((bary < -tol).any(axis=1))
        # most violating centers first so pruning kicks in early
        outside = outside[np.argsort(bary[outside].min(axis=1), kind="stable")]
        limit = np.inf if best is None else best[0] + TIE_TOL
        obj = 0.0
        for j in outside:
            w = _simplex_lsq(V, C[j], tol, 100 * K)
            obj = max(obj, float(np.linalg.norm(V.T @ w - C[j])))
            if obj > limit:
                break
        if obj > limit:
            continue
        vol = Simplex(V).volume
        if best is None or obj < best[0] - TIE_TOL or vol > best[1] * (1 + 1e-12):
            best = (obj, vol, combo)
    if best is None:
        return Simplex(reference_simplex(K), None, math.nan, fallback=True)
    obj, _, combo = best
    return Simplex(C[list(combo)], tuple(int(i) for i in combo), obj)


def vertex_hunt_exhaustive(centers, K: int, tol: float = QP_TOL) -> Simplex:
    """Best-fit K-subset of the centers by minimax distance of all centers."""
    C = _centers_array(centers)
    if C.shape[0] < K:
        raise ValidationError(f"need at least K={K} centers, got {C.shape[0]}")
    return best_fit_simplex(C, range(C.shape[0]), K, tol)


def greedy_candidates(C: np.ndarray, K0: int) -> list[int]:
    """Farthest pair, then repeatedly the center farthest from the running mean."""
    m = C.shape[0]
    D = np.linalg.norm(C[:, None, :] - C[None, :, :], axis=2)
    D[np.tril_indices(m)] = -1.0
    i, j = np.unravel_index(int(np.argmax(D)), D.shape)
    chosen = [int(i), int(j)]
    while len(chosen) < K0:
        d = np.linalg.norm(C - C[chosen].mean(axis=0), axis=1)
        d[chosen] = -np.inf
        chosen.append(int(np.argmax(d)))
    return chosen


def vertex_hunt_greedy(centers, K: int, K0: int, tol: float = QP_TOL) -> Simplex:
    """Prune to ``K0`` extremal centers, then search their K-subsets.

    The fit objective is still measured over all centers.
    """
    C = _centers_array(centers)
    m = C.shape[0]
    if not K <= K0 <= m:
        raise ValidationError(f"need K <= K0 <= m, got K={K}, K0={K0}, m={m}")
    if K0 == m:
        return best_fit_simplex(C, range(m), K, tol)
    return best_fit_simplex(C, sorted(greedy_candidates(C, K0)), K, tol)
