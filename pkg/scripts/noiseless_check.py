"""Compare the full estimator with the ideal simplex reconstruction on noiseless data.

Prints, per seed, the l1 error of estimate_topics (k-means sketch with m = 10K)
and of ideal_reconstruct (vertices taken directly from the ratio rows).
"""

import argparse

from topicsimplex.estimator import EstimatorConfig, estimate_topics, ideal_reconstruct, l1_error
from topicsimplex.spectral import SvdConfig, top_left_singular
from topicsimplex.synth import SynthConfig, generate_instance


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--p", type=int, default=200)
    parser.add_argument("--n", type=int, default=300)
    parser.add_argument("--p0", type=int, default=5)
    args = parser.parse_args()

    print("seed K  estimator   ideal")
    for seed in range(args.seeds):
        K = 2 + seed % 3
        inst = generate_instance(SynthConfig(K=K, n=args.n, p=args.p, p0=args.p0, seed=seed), noiseless=True)
        est = l1_error(estimate_topics(inst.D, EstimatorConfig(K=K, seed=seed)).topics, inst.A)
        ideal = l1_error(ideal_reconstruct(top_left_singular(inst.D, SvdConfig(K, seed=seed)), K), inst.A)
        print(f"{seed:4d} {K}  {est:.3e}  {ideal:.3e}")


if __name__ == "__main__":
    main()
