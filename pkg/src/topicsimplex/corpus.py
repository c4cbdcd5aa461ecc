"""Bag-of-words ingestion and preprocessing.

Input files follow the UCI bag-of-words layout: three header integers
(words, documents, nonzeros by default) followed by ``docId wordId count``
triples with 1-based ids, plus an optional vocabulary file with one word per
line.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .core import DegenerateCorpusError, ParseError, TermDocMatrix, ValidationError

# The exact 40-word list used for the AP corpus was never published; this is
# a common short English list of the same size.
DEFAULT_STOP_WORDS = frozenset(
    """
    a about an and are as at be but by for from had has have he her his i in
    is it its not of on or said she that the their they this to was were which
    will with would
    """.split()
)


@dataclass(frozen=True)
class PreprocessConfig:
    stop_words: frozenset = frozenset()
    vocab_keep: int = 5000
    doc_keep_fraction: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "stop_words", frozenset(w.lower() for w in self.stop_words))
        if self.vocab_keep < 1:
            raise ValidationError("vocab_keep must be >= 1")
        if not 0.0 < self.doc_keep_fraction <= 1.0:
            raise ValidationError("doc_keep_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class BowCorpus:
    """Raw counts: ``counts`` is a p x n integer CSC matrix aligned with ``vocab``.

    ``applied`` records the preprocessing configs already applied, which is
    what makes ``preprocess`` idempotent.
    """

    vocab: tuple
    counts: sp.csc_matrix
    applied: tuple = field(default=())

    def __post_init__(self):
        C = sp.csc_matrix(self.counts, dtype=np.int64)
        C.sort_indices()
        if C.shape[0] != len(self.vocab):
            raise ValidationError(f"vocabulary has {len(self.vocab)} words but counts have {C.shape[0]} rows")
        if C.nnz and C.data.min() < 1:
            raise ValidationError("stored counts must be >= 1")
        object.__setattr__(self, "vocab", tuple(self.vocab))
        object.__setattr__(self, "counts", C)

    @property
    def p(self) -> int:
        return self.counts.shape[0]

    @property
    def n(self) -> int:
        return self.counts.shape[1]

    def doc_lengths(self) -> np.ndarray:
        return np.asarray(self.counts.sum(axis=0)).ravel()

    def word_totals(self) -> np.ndarray:
        return np.asarray(self.counts.sum(axis=1)).ravel()


def _default_vocab_path(path: Path) -> Path | None:
    name = path.name
    if name.startswith("docword."):
        candidate = path.with_name("vocab." + name[len("docword."):])
        if candidate.exists():
            return candidate
    return None


def _read_vocab(path, p: int) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        words = [line.strip() for line in fh]
    while words and words[-1] == "":
        words.pop()
    if len(words) != p:
        raise ParseError(f"vocabulary file {path} has {len(words)} words, header says {p}")
    return words


def load_bow(path, vocab_path=None, header_order: str = "pn") -> BowCorpus:
    """Parse a bag-of-words file.

    ``header_order="pn"`` reads the header as (words, documents, nnz);
    ``"np"`` reads (documents, words, nnz), the order used by the files
    distributed from the UCI repository. Without a vocabulary file the words
    are named ``w1 .. wp``.
    """
    path = Path(path)
    if header_order not in ("pn", "np"):
        raise ValueError("header_order must be 'pn' or 'np'")
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    header: list[int] = []
    lineno = 0
    while len(header) < 3:
        if lineno >= len(lines):
            raise ParseError("truncated header", lineno)
        toks = lines[lineno].split()
        lineno += 1
        if not toks:
            continue
        if len(header) + len(toks) > 3:
            raise ParseError("malformed header", lineno)
        try:
            header.extend(int(t) for t in toks)
        except ValueError:
            raise ParseError("malformed header", lineno) from None
    if header_order == "pn":
        p, n, nnz = header
    else:
        n, p, nnz = header
    if p < 0 or n < 0 or nnz < 0:
        raise ParseError("negative header value", lineno)

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.int64)
    seen = set()
    k = 0
    for i in range(lineno, len(lines)):
        toks = lines[i].split()
        if not toks:
            continue
        ln = i + 1
        if len(toks) != 3:
            raise ParseError("expected 'docId wordId count'", ln)
        try:
            d, w, c = (int(t) for t in toks)
        except ValueError:
            raise ParseError("non-integer entry", ln) from None
        if not 1 <= d <= n:
            raise ParseError(f"document index {d} out of range 1..{n}", ln)
        if not 1 <= w <= p:
            raise ParseError(f"word index {w} out of range 1..{p}", ln)
        if c < 1:
            raise ParseError(f"count must be positive, got {c}", ln)
        if (d, w) in seen:
            raise ParseError(f"duplicate entry for document {d}, word {w}", ln)
        if k >= nnz:
            raise ParseError(f"more entries than the declared {nnz}", ln)
        seen.add((d, w))
        rows[k], cols[k], vals[k] = w - 1, d - 1, c
        k += 1
    if k != nnz:
        raise ParseError(f"declared {nnz} entries but found {k}", len(lines))

    counts = sp.csc_matrix((vals, (rows, cols)), shape=(p, n), dtype=np.int64)
    if vocab_path is None:
        vocab_path = _default_vocab_path(path)
    vocab = _read_vocab(vocab_path, p) if vocab_path is not None else [f"w{i + 1}" for i in range(p)]
    return BowCorpus(tuple(vocab), counts)


def write_bow(corpus: BowCorpus, path, vocab_path=None) -> None:
    """Write ``corpus`` in the (words, documents, nnz) header layout."""
    C = corpus.counts.tocoo()
    order = np.lexsort((C.row, C.col))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{corpus.p}\n{corpus.n}\n{C.nnz}\n")
        for idx in order:
            fh.write(f"{C.col[idx] + 1} {C.row[idx] + 1} {C.data[idx]}\n")
    if vocab_path is not None:
        with open(vocab_path, "w", encoding="utf-8") as fh:
            fh.write("".join(w + "\n" for w in corpus.vocab))


def read_stop_words(path) -> frozenset:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())


def _keep_top(scores: np.ndarray, keep: int) -> np.ndarray:
    """Indices of the ``keep`` largest scores; ties go to the lower index."""
    order = np.lexsort((np.arange(scores.size), -scores))
    return np.sort(order[:keep])


def preprocess(corpus: BowCorpus, cfg: PreprocessConfig) -> BowCorpus:
    """Stop-word removal, vocabulary truncation and short-document removal."""
    if corpus.p == 0 or corpus.n == 0:
        raise DegenerateCorpusError("cannot preprocess an empty corpus")
    if cfg in corpus.applied:
        return corpus

    keep_words = np.array([w.lower() not in cfg.stop_words for w in corpus.vocab], dtype=bool)
    idx = np.flatnonzero(keep_words)
    if idx.size == 0:
        raise DegenerateCorpusError("all words removed as stop words")
    C = corpus.counts[idx, :]
    totals = np.asarray(C.sum(axis=1)).ravel()
    if idx.size > cfg.vocab_keep:
        top = _keep_top(totals, cfg.vocab_keep)
        idx, C = idx[top], C[top, :]
    vocab = tuple(corpus.vocab[i] for i in idx)

    lengths = np.asarray(C.sum(axis=0)).ravel()
    docs = np.flatnonzero(lengths > 0)
    n_drop = math.floor((1.0 - cfg.doc_keep_fraction) * docs.size + 1e-9)
    if n_drop:
        # among equal lengths the lower original index is retained
        docs = docs[_keep_top(lengths[docs], docs.size - n_drop)]
    if docs.size == 0:
        raise DegenerateCorpusError("all documents removed by preprocessing")
    return BowCorpus(vocab, C[:, docs], corpus.applied + (cfg,))


def to_frequency_matrix(corpus: BowCorpus) -> TermDocMatrix:
    C = corpus.counts.astype(np.float64)
    lengths = np.asarray(C.sum(axis=0)).ravel()
    empty = np.flatnonzero(lengths <= 0)
    if empty.size:
        raise DegenerateCorpusError(f"document {empty[0] + 1} is empty")
    return TermDocMatrix(C @ sp.diags(1.0 / lengths))


def write_matrix_market(D: TermDocMatrix, path) -> None:
    scipy.io.mmwrite(os.fspath(path), D.data, field="real", precision=17)


def read_matrix_market(path) -> TermDocMatrix:
    return TermDocMatrix(sp.csc_matrix(scipy.io.mmread(os.fspath(path))))
