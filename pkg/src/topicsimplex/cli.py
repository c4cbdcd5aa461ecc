"""Command line interface: ``topicsimplex {estimate,simulate,ratios,bench}``.

Exit codes: 0 success, 1 I/O or runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import corpus as bow
from .core import TopicModelError
from .estimator import EstimatorConfig, estimate_topics, l1_error
from .geometry import ratio_matrix
from .spectral import SvdConfig, top_left_singular
from .synth import EXPERIMENTS, SynthConfig, generate_instance, results_to_csv, run_experiment

log = logging.getLogger("topicsimplex")


def _int_at_least(lo):
    def parse(text):
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if value < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}, got {value}")
        return value

    return parse


def _fraction(text):
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError("must lie in (0, 1]")
    return value


def _limit_threads(n):
    if not n:
        return nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return nullcontext()
    return threadpool_limits(limits=n)


def _load(args):
    path = Path(args.corpus)
    if not path.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    if path.suffix == ".mtx":
        D = bow.read_matrix_market(path)
        return D, [f"w{i + 1}" for i in range(D.p)]
    c = bow.load_bow(path, args.vocab, args.header_order)
    if getattr(args, "stopwords", None) or getattr(args, "default_stopwords", False) \
            or getattr(args, "vocab_keep", None) or getattr(args, "doc_keep", None):
        stops = set()
        if args.stopwords:
            stops |= bow.read_stop_words(args.stopwords)
        if args.default_stopwords:
            stops |= bow.DEFAULT_STOP_WORDS
        cfg = bow.PreprocessConfig(frozenset(stops), args.vocab_keep or c.p, args.doc_keep or 1.0)
        c = bow.preprocess(c, cfg)
    return bow.to_frequency_matrix(c), list(c.vocab)


def cmd_estimate(args) -> int:
    D, vocab = _load(args)
    if args.save_matrix:
        bow.write_matrix_market(D, args.save_matrix)
    cfg = EstimatorConfig(K=args.k, s=args.s, m=args.m, K0=args.k0, seed=args.seed,
                          use_greedy=not args.exhaustive)
    report = estimate_topics(D, cfg)
    report.save(args.out, vocab)
    log.info("wrote %s (p=%d, K=%d, clipped rows=%d)", args.out, D.p, args.k, report.clipped_rows)
    return 0


def cmd_simulate(args) -> int:
    overrides = {}
    for item in args.set or ():
        key, _, value = item.partition("=")
        if key not in SynthConfig.__dataclass_fields__:
            raise ValueError(f"unknown setting {key!r}")
        overrides[key] = float(value) if key == "a0" else int(value)
    grid = None
    if args.grid:
        cast = float if EXPERIMENTS[args.experiment]["param"] == "a0" else int
        grid = [cast(g) for g in args.grid.split(",")]
    results = run_experiment(args.experiment, args.reps, args.seed, overrides, grid, workers=args.threads or 1)
    text = results_to_csv(results)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for r in results:
        if r.all_failed:
            log.error("grid point %s: all %d replicates failed", r.value, r.reps)
    return 0


def cmd_ratios(args) -> int:
    D, vocab = _load(args)
    basis = top_left_singular(D, SvdConfig(args.k, seed=args.seed))
    R = ratio_matrix(basis, D.n).entries
    cols = min(2, args.k - 1)
    header = [f"r{j + 1}" for j in range(cols)]
    data = R[:, :cols]
    if args.raw_singular:
        header += ["xi1", "xi2"][: basis.K]
        data = np.hstack([data, basis.vectors[:, :2]])
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["word"] + header)
        for word, row in zip(vocab, data):
            w.writerow([word] + [repr(float(x)) for x in row])
    return 0


def cmd_bench(args) -> int:
    cfg = SynthConfig(K=args.k, n=args.n, p=args.p, N=args.N, a0=args.a0, p0=args.p0, seed=args.seed)
    t0 = time.perf_counter()
    inst = generate_instance(cfg)
    t1 = time.perf_counter()
    report = estimate_topics(inst.D, EstimatorConfig(K=cfg.K, seed=cfg.seed, m=args.m))
    t2 = time.perf_counter()
    err = l1_error(report.topics, inst.A, "max")
    print(f"generate {t1 - t0:.3f}s  estimate {t2 - t1:.3f}s  l1_error(max) {err:.6f}")
    if args.out:
        Path(args.out).write_text(f"config={cfg}\nl1_error_max={err!r}\nl1_error_sum={l1_error(report.topics, inst.A, 'sum')!r}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topicsimplex", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def corpus_args(p):
        p.add_argument("corpus", help="UCI bag-of-words file or MatrixMarket (.mtx) frequency matrix")
        p.add_argument("--vocab", help="vocabulary file (default: vocab.X.txt next to docword.X.txt)")
        p.add_argument("--header-order", choices=("pn", "np"), default="pn",
                       help="header order: words,docs (pn) or docs,words as in UCI downloads (np)")
        p.add_argument("--k", type=_int_at_least(2), required=True, help="number of topics")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=_int_at_least(1), default=None)
        p.add_argument("--stopwords", help="file with one stop word per line")
        p.add_argument("--default-stopwords", action="store_true", help="also drop the built-in 40 stop words")
        p.add_argument("--vocab-keep", type=_int_at_least(1))
        p.add_argument("--doc-keep", type=_fraction)

    p = sub.add_parser("estimate", help="estimate the topic matrix of a corpus")
    corpus_args(p)
    p.add_argument("--s", type=_int_at_least(1), default=None, help="max words per topic (default p)")
    p.add_argument("--m", type=_int_at_least(2), default=None, help="k-means clusters (default 10K)")
    p.add_argument("--k0", type=_int_at_least(2), default=None, help="greedy keep count (default ceil(5K/4))")
    p.add_argument("--exhaustive", action="store_true", help="search all K-subsets of the local centers")
    p.add_argument("--save-matrix", help="also write the frequency matrix as MatrixMarket")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run a simulation experiment and write a CSV table")
    p.add_argument("experiment", choices=sorted(EXPERIMENTS))
    p.add_argument("--reps", type=_int_at_least(1), default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", help="comma-separated grid values overriding the default grid")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a SynthConfig field")
    p.add_argument("--threads", type=_int_at_least(1), default=None, help="worker processes")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ratios", help="export eigen-ratio scatter data")
    corpus_args(p)
    p.add_argument("--raw-singular", action="store_true", help="also export the first two singular vectors")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ratios)

    p = sub.add_parser("bench", help="time the pipeline on one synthetic instance")
    p.add_argument("--k", type=_int_at_least(2), default=6)
    p.add_argument("--n", type=_int_at_least(1), default=500)
    p.add_argument("--p", type=_int_at_least(1), default=2000)
    p.add_argument("--N", type=_int_at_least(1), default=2000)
    p.add_argument("--a0", type=float, default=0.2)
    p.add_argument("--p0", type=_int_at_least(0), default=20)
    p.add_argument("--m", type=_int_at_least(2), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_int_at_least(1), default=None)
    p.add_argument("--out", help="write the (deterministic) error summary here")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    threads = None if args.command == "simulate" else args.threads
    try:
        with _limit_threads(threads):
            return args.func(args)
    except TopicModelError as exc:
        print(f"topicsimplex {args.command}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"topicsimplex {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
