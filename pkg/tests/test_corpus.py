import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from topicsimplex.core import DegenerateCorpusError, ParseError, validate_column_stochastic
from topicsimplex.corpus import (
    BowCorpus,
    PreprocessConfig,
    load_bow,
    preprocess,
    read_matrix_market,
    to_frequency_matrix,
    write_bow,
    write_matrix_market,
)


def write(tmp_path, text, name="docword.test.txt"):
    path = tmp_path / name
    path.write_text(text)
    return path


def corpus_from_dense(counts, vocab=None):
    counts = np.asarray(counts)
    vocab = vocab or [f"w{i + 1}" for i in range(counts.shape[0])]
    return BowCorpus(tuple(vocab), sp.csc_matrix(counts))


def test_load_single_line_header(tmp_path):
    c = load_bow(write(tmp_path, "3 2 3\n1 1 2\n1 3 1\n2 2 5\n"))
    assert (c.p, c.n) == (3, 2)
    assert c.doc_lengths().tolist() == [3, 5]
    assert c.counts.toarray().tolist() == [[2, 0], [0, 5], [1, 0]]
    assert c.vocab == ("w1", "w2", "w3")


def test_load_three_line_header_and_vocab(tmp_path):
    path = write(tmp_path, "3\n2\n3\n1 1 2\n1 3 1\n2 2 5\n")
    (tmp_path / "vocab.test.txt").write_text("apple\nbanana\ncherry\n")
    c = load_bow(path)
    assert c.vocab == ("apple", "banana", "cherry")
    assert c.doc_lengths().tolist() == [3, 5]


def test_load_uci_header_order(tmp_path):
    c = load_bow(write(tmp_path, "2\n3\n3\n1 1 2\n1 3 1\n2 2 5\n"), header_order="np")
    assert (c.p, c.n) == (3, 2)


def test_load_empty_docs(tmp_path):
    c = load_bow(write(tmp_path, "3 0 0\n"))
    assert (c.p, c.n) == (3, 0)


@pytest.mark.parametrize(
    "body, line",
    [
        ("3 2 3\n1 1 2\n1 4 1\n2 2 5\n", 3),
        ("3 2 3\n1 1 2\n3 1 1\n2 2 5\n", 3),
        ("3 2 2\n1 1 0\n2 2 5\n", 2),
        ("3 2 2\n1 1 2\n1 1 5\n", 3),
        ("3 x 2\n", 1),
        ("3 2 2\n1 1\n", 2),
    ],
)
def test_load_errors_name_line(tmp_path, body, line):
    with pytest.raises(ParseError) as info:
        load_bow(write(tmp_path, body))
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_load_count_mismatch(tmp_path):
    with pytest.raises(ParseError):
        load_bow(write(tmp_path, "3 2 3\n1 1 2\n"))


def test_write_load_roundtrip(tmp_path):
    c = corpus_from_dense([[2, 0, 1], [0, 5, 0], [1, 1, 1]], ["a", "b", "c"])
    write_bow(c, tmp_path / "docword.x.txt", tmp_path / "vocab.x.txt")
    back = load_bow(tmp_path / "docword.x.txt")
    assert back.vocab == c.vocab
    assert (back.counts != c.counts).nnz == 0


def test_preprocess_stop_words_then_vocab():
    counts = np.array([[50], [1], [9], [3], [7], [5]])
    c = corpus_from_dense(counts, ["the", "b", "c", "d", "e", "f"])
    out = preprocess(c, PreprocessConfig(frozenset({"THE"}), vocab_keep=3, doc_keep_fraction=1.0))
    assert out.vocab == ("c", "e", "f")


def test_preprocess_identity_configuration():
    c = corpus_from_dense(np.random.default_rng(0).integers(1, 5, (6, 4)))
    out = preprocess(c, PreprocessConfig(frozenset(), vocab_keep=6, doc_keep_fraction=1.0))
    assert out.vocab == c.vocab
    assert (out.counts != c.counts).nnz == 0


def test_preprocess_length_filter():
    counts = np.zeros((1, 10), dtype=int)
    counts[0] = np.arange(1, 11)
    out = preprocess(corpus_from_dense(counts), PreprocessConfig(vocab_keep=5, doc_keep_fraction=0.8))
    assert out.doc_lengths().tolist() == list(range(3, 11))


def test_preprocess_length_ties_keep_lower_index():
    counts = np.array([[2, 1, 1, 1, 3]])
    out = preprocess(corpus_from_dense(counts), PreprocessConfig(doc_keep_fraction=0.6))
    # drop floor(0.4*5)=2 shortest: among the three length-1 docs keep the first
    assert out.counts.toarray().tolist() == [[2, 1, 3]]


def test_preprocess_vocab_ties_keep_lower_index():
    c = corpus_from_dense([[2], [3], [3], [3]])
    out = preprocess(c, PreprocessConfig(vocab_keep=2, doc_keep_fraction=1.0))
    assert out.vocab == ("w2", "w3")


def test_preprocess_drops_emptied_docs_before_length_filter():
    counts = np.array([[0, 4, 5, 6], [9, 0, 0, 0]])
    c = corpus_from_dense(counts, ["keep", "stop"])
    out = preprocess(c, PreprocessConfig(frozenset({"stop"}), doc_keep_fraction=1.0))
    assert out.n == 3


def test_preprocess_degenerate():
    c = corpus_from_dense([[1, 2]], ["the"])
    with pytest.raises(DegenerateCorpusError):
        preprocess(c, PreprocessConfig(frozenset({"the"})))
    with pytest.raises(DegenerateCorpusError):
        preprocess(BowCorpus((), sp.csc_matrix((0, 0))), PreprocessConfig())


@st.composite
def corpora(draw):
    p = draw(st.integers(1, 8))
    n = draw(st.integers(1, 12))
    counts = np.array(draw(st.lists(st.integers(0, 6), min_size=p * n, max_size=p * n))).reshape(p, n)
    counts[0, :] += 1  # no empty documents in the raw corpus
    vocab = [draw(st.sampled_from(["the", "a", "x", "y", "z", "q"])) + str(i) for i in range(p)]
    stops = frozenset(draw(st.lists(st.sampled_from(vocab), max_size=max(0, p - 1))))
    if vocab[0] in stops:
        stops = stops - {vocab[0]}
    cfg = PreprocessConfig(stops, draw(st.integers(1, 8)), draw(st.sampled_from([0.5, 0.8, 0.95, 1.0])))
    return corpus_from_dense(counts, vocab), cfg


@given(corpora())
def test_preprocess_idempotent(case):
    c, cfg = case
    try:
        once = preprocess(c, cfg)
    except DegenerateCorpusError:
        return
    twice = preprocess(once, cfg)
    assert twice.vocab == once.vocab
    assert (twice.counts != once.counts).nnz == 0


@given(corpora())
def test_vocab_and_stopword_steps_idempotent_on_raw_values(case):
    c, cfg = case
    cfg = PreprocessConfig(cfg.stop_words, cfg.vocab_keep, 1.0)
    try:
        once = preprocess(c, cfg)
    except DegenerateCorpusError:
        return
    fresh = BowCorpus(once.vocab, once.counts)  # no provenance
    again = preprocess(fresh, cfg)
    assert again.vocab == once.vocab
    assert (again.counts != once.counts).nnz == 0


@given(corpora())
def test_length_filter_monotone(case):
    c, cfg = case
    cfg = PreprocessConfig(frozenset(), c.p, cfg.doc_keep_fraction)
    out = preprocess(c, cfg)
    kept = out.doc_lengths()
    lengths = c.doc_lengths()
    dropped = sorted(lengths.tolist())
    for x in kept.tolist():
        dropped.remove(x)
    if dropped:
        assert max(dropped) <= kept.min()


def test_to_frequency_matrix_examples():
    D = to_frequency_matrix(corpus_from_dense([[2], [1], [1]]))
    assert np.allclose(D.toarray().ravel(), [0.5, 0.25, 0.25])
    D = to_frequency_matrix(corpus_from_dense([[0], [7], [0]]))
    assert D.toarray().ravel().tolist() == [0.0, 1.0, 0.0]
    D = to_frequency_matrix(corpus_from_dense([[1, 1], [3, 3]]))
    assert np.array_equal(D.toarray()[:, 0], D.toarray()[:, 1])


def test_to_frequency_matrix_rejects_empty_doc():
    with pytest.raises(DegenerateCorpusError):
        to_frequency_matrix(corpus_from_dense([[1, 0], [2, 0]]))


@given(corpora())
def test_frequency_matrix_column_stochastic(case):
    c, _ = case
    assert validate_column_stochastic(to_frequency_matrix(c).data, 1e-9)


def test_matrix_market_roundtrip(tmp_path):
    D = to_frequency_matrix(corpus_from_dense([[2, 0], [1, 3], [1, 1]]))
    write_matrix_market(D, tmp_path / "d.mtx")
    back = read_matrix_market(tmp_path / "d.mtx")
    assert np.array_equal(back.toarray(), D.toarray())
