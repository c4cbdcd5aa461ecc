"""Shared matrix types, validation and errors for the pLSI topic model.

The model is ``D = D0 + Z`` with ``D0 = A @ W``: ``D`` is the p x n
term-document frequency matrix, ``A`` the p x K topic matrix and ``W`` the
K x n document weight matrix. All containers are frozen and hold read-only
arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

STOCHASTIC_TOL = 1e-9


class TopicModelError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TopicModelError, ValueError):
    pass


class ParseError(TopicModelError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateCorpusError(TopicModelError):
    pass


class RankDeficiencyError(TopicModelError):
    pass


class ConvergenceError(TopicModelError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (achieved residual {residual:.3e})")


class InfeasibleClusteringError(TopicModelError):
    pass


class ConditioningError(TopicModelError):
    def __init__(self, cond: float):
        self.cond = cond
        super().__init__(f"simplex matrix is ill-conditioned (condition number {cond:.3e})")


class DegenerateTopicError(TopicModelError):
    pass


class IdentifiabilityError(TopicModelError):
    pass


class PipelineError(TopicModelError):
    """Wraps a failure inside ``estimate_topics`` with the stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator; accepts an int or a SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def validate_column_stochastic(M, tol: float = STOCHASTIC_TOL) -> bool:
    """True iff every entry is >= -tol and every column sums to 1 within tol."""
    if sp.issparse(M):
        M = M.tocsc()
        if M.shape[1] < 1:
            return False
        if M.nnz and M.data.min() < -tol:
            return False
        sums = np.asarray(M.sum(axis=0)).ravel()
    else:
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[1] < 1:
            return False
        if M.size and M.min() < -tol:
            return False
        sums = M.sum(axis=0)
    return bool(np.all(np.abs(sums - 1.0) <= tol))


def validate_row_stochastic(M, tol: float = STOCHASTIC_TOL) -> bool:
    return validate_column_stochastic(np.asarray(M, dtype=float).T, tol)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, order="F", copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TermDocMatrix:
    """Observed corpus: sparse p x n matrix whose columns are word frequencies."""

    data: sp.csc_matrix

    def __post_init__(self):
        D = sp.csc_matrix(self.data, dtype=np.float64, copy=True)
        D.sum_duplicates()
        D.eliminate_zeros()
        p, n = D.shape
        if p < 1 or n < 1:
            raise ValidationError(f"term-document matrix must be at least 1x1, got {D.shape}")
        if not validate_column_stochastic(D, STOCHASTIC_TOL) or (D.nnz and D.data.min() < 0):
            raise ValidationError("term-document matrix must be nonnegative with unit column sums")
        D.data.setflags(write=False)
        object.__setattr__(self, "data", D)

    @property
    def p(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @classmethod
    def from_dense(cls, M) -> "TermDocMatrix":
        return cls(sp.csc_matrix(np.asarray(M, dtype=float)))

    def toarray(self) -> np.ndarray:
        return self.data.toarray()


@dataclass(frozen=True)
class TopicMatrix:
    """Dense p x K column-stochastic topic matrix ``A``."""

    data: np.ndarray

    def __post_init__(self):
        A = _frozen(self.data)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ValidationError(f"topic matrix must be 2-D and nonempty, got shape {A.shape}")
        if not validate_column_stochastic(A, STOCHASTIC_TOL):
            raise ValidationError("topic matrix must be nonnegative with unit column sums")
        object.__setattr__(self, "data", A)

    @property
    def p(self) -> int:
        return self.data.shape[0]

    @property
    def K(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class DocWeightMatrix:
    """Dense K x n matrix ``W``; each column is a document's topic weights."""

    data: np.ndarray

    def __post_init__(self):
        W = _frozen(self.data)
        if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
            raise ValidationError(f"weight matrix must be 2-D and nonempty, got shape {W.shape}")
        if not validate_column_stochastic(W, STOCHASTIC_TOL):
            raise ValidationError("document weights must be nonnegative with unit column sums")
        object.__setattr__(self, "data", W)

    @property
    def K(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SingularBasis:
    """Top-K left singular vectors (columns of ``vectors``) and singular values."""

    vectors: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        U = _frozen(self.vectors)
        s = np.array(self.values, dtype=np.float64).ravel()
        if U.ndim != 2 or U.shape[1] != s.size:
            raise ValidationError("singular vectors and values disagree in K")
        if np.any(s <= 0) or np.any(np.diff(s) > 1e-12 * max(s[0], 1.0)):
            raise ValidationError("singular values must be positive and non-increasing")
        if not np.allclose(U.T @ U, np.eye(s.size), atol=1e-8, rtol=0):
            raise ValidationError("singular vectors are not orthonormal within 1e-8")
        if U[:, 0].sum() < 0:
            raise ValidationError("leading singular vector must have nonnegative entry sum")
        s.setflags(write=False)
        object.__setattr__(self, "vectors", U)
        object.__setattr__(self, "values", s)

    @property
    def p(self) -> int:
        return self.vectors.shape[0]

    @property
    def K(self) -> int:
        return self.vectors.shape[1]

    @property
    def xi1(self) -> np.ndarray:
        return self.vectors[:, 0]
