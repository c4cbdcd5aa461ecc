"""Top-K left singular pairs of a term-document matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import (
    ConvergenceError,
    RankDeficiencyError,
    SingularBasis,
    TermDocMatrix,
    ValidationError,
    make_rng,
)

RANK_TOL = 1e-12


@dataclass(frozen=True)
class SvdConfig:
    K: int
    method: str = "randomized"  # or "exact"
    oversample: int = 10
    power_iters: int = 2
    seed: int = 0
    tol: float = 1e-10
    max_iters: int = 500

    def __post_init__(self):
        if self.K < 1:
            raise ValidationError("K must be >= 1")
        if self.method not in ("randomized", "exact"):
            raise ValidationError(f"unknown SVD method {self.method!r}")
        if self.oversample < 0 or self.power_iters < 0:
            raise ValidationError("oversample and power_iters must be >= 0")
        if self.tol <= 0:
            raise ValidationError("tol must be > 0")


def fix_signs(U: np.ndarray) -> np.ndarray:
    """Flip each column so its entry sum is >= 0 (first nonzero entry > 0 on a tie)."""
    U = U.copy()
    for k in range(U.shape[1]):
        col = U[:, k]
        total = col.sum()
        if total == 0.0:
            nz = np.flatnonzero(col)
            total = col[nz[0]] if nz.size else 1.0
        if total < 0:
            U[:, k] = -col
    return U


def canonicalize_degenerate(U: np.ndarray, s: np.ndarray, gap: float = 1e-10) -> np.ndarray:
    """Replace the basis of every cluster of tied singular values by an
    axis-aligned one (pivoted QR on the cluster's projector)."""
    U = U.copy()
    K = s.size
    start = 0
    while start < K:
        stop = start + 1
        while stop < K and s[stop - 1] - s[stop] <= gap * s[0]:
            stop += 1
        if stop - start > 1:
            Q = U[:, start:stop]
            _, _, piv = scipy.linalg.qr(Q.T, pivoting=True, mode="economic")
            B = Q @ Q.T[:, np.sort(piv[: stop - start])]
            U[:, start:stop] = np.linalg.qr(B)[0]
        start = stop
    return U


def residuals(D, U: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``||D (D^T u_k) - s_k^2 u_k||`` for every column ``u_k``."""
    R = D @ (D.T @ U) - U * s**2
    return np.linalg.norm(R, axis=0)


def _randomized(D, cfg: SvdConfig):
    p, n = D.shape
    K = cfg.K
    ell = min(K + cfg.oversample, p, n)
    rng = make_rng(cfg.seed)
    Q, _ = np.linalg.qr(D @ rng.standard_normal((n, ell)))
    for _ in range(cfg.power_iters):
        Q, _ = np.linalg.qr(D.T @ Q)
        Q, _ = np.linalg.qr(D @ Q)

    def project(Q):
        B = np.asarray((D.T @ Q).T)
        Ub, s, _ = np.linalg.svd(B, full_matrices=False)
        return Q @ Ub[:, :K], s[:K]

    U, s = project(Q)
    scale = max(s[0] ** 2, np.finfo(float).tiny)
    res = residuals(D, U, s).max() / scale
    it = 0
    # keep iterating on the whole ell-dimensional subspace until converged
    while res > cfg.tol and it < cfg.max_iters:
        Q, _ = np.linalg.qr(D @ np.asarray(D.T @ Q))
        U, s = project(Q)
        res = residuals(D, U, s).max() / scale
        it += 1
    if res > cfg.tol:
        raise ConvergenceError(f"subspace iteration did not reach tol {cfg.tol:g}", res)
    return U, s


def _exact(D, cfg: SvdConfig):
    p, n = D.shape
    K = cfg.K
    if K < min(p, n) - 1 and min(p, n) > 50:
        v0 = make_rng(cfg.seed).standard_normal(min(p, n))
        U, s, _ = spla.svds(D, k=K, v0=v0, tol=0, solver="arpack", return_singular_vectors="u")
        order = np.argsort(-s, kind="stable")
        return U[:, order], s[order]
    dense = D.toarray() if sp.issparse(D) else np.asarray(D)
    U, s, _ = scipy.linalg.svd(dense, full_matrices=False)
    return U[:, :K], s[:K]


def top_left_singular(D: TermDocMatrix, cfg: SvdConfig) -> SingularBasis:
    """Leading ``cfg.K`` left singular vectors and values of ``D``."""
    M = D.data if isinstance(D, TermDocMatrix) else D
    p, n = M.shape
    if cfg.K > min(p, n):
        raise ValidationError(f"K={cfg.K} exceeds min(p, n)={min(p, n)}")
    if (sp.issparse(M) and M.nnz == 0) or not np.any(M.data if sp.issparse(M) else M):
        raise RankDeficiencyError("matrix is identically zero")
    U, s = _randomized(M, cfg) if cfg.method == "randomized" else _exact(M, cfg)
    if s[-1] < RANK_TOL:
        raise RankDeficiencyError(
            f"singular value {cfg.K} is {s[-1]:.3e}; the matrix cannot support {cfg.K} topics"
        )
    if cfg.method == "exact":
        scale = s[0] ** 2
        res = residuals(M, U, s).max() / scale
        if res > max(cfg.tol, 1e-9):
            raise ConvergenceError("exact decomposition failed the residual check", res)
    return SingularBasis(fix_signs(canonicalize_degenerate(U, s)), s)
