"""Run the four simulation experiments and write one CSV per experiment.

    python3 scripts/run_experiments.py --reps 50 --workers 4 --out results/
"""

import argparse
import logging
import time
from pathlib import Path

from topicsimplex.synth import EXPERIMENTS, results_to_csv, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--only", nargs="*", choices=sorted(EXPERIMENTS), help="subset of experiments")
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.only or sorted(EXPERIMENTS):
        t0 = time.perf_counter()
        results = run_experiment(name, args.reps, args.seed, workers=args.workers)
        (out / f"{name}.csv").write_text(results_to_csv(results))
        logging.info("%s done in %.1fs", name, time.perf_counter() - t0)
        for r in results:
            logging.info("  %s=%g  mean=%.4f  se=%.4f  failures=%d",
                         EXPERIMENTS[name]["param"], r.value, r.mean_error, r.std_error, r.failures)


if __name__ == "__main__":
    main()
