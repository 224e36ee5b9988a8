"""Traditional (k=0) features versus the full thresholded vector on the synthetic corpus.

    python3 scripts/compare_synthetic.py --seeds 0 1 2 --samples 10 --size 64
"""

import argparse
import time

import numpy as np

from dpsw.dataset import CORPUS_SEEDS, synthetic_corpus
from dpsw.descriptor import Extractor
from dpsw.evaluation import LabeledDataset, cross_validate


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, nargs="+", default=list(CORPUS_SEEDS))
    ap.add_argument("--samples", type=int, default=10)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--rule", choices=("min", "max"), default="min")
    ap.add_argument("--folds", type=int, default=10)
    args = ap.parse_args()

    ex = Extractor(rules=(args.rule,))
    k0 = np.array([c.k == 0 for c in ex.layout()])
    print(f"{'seed':>4}  {'k=0':>16}  {'all thresholds':>16}  {'time':>6}")
    for seed in args.seeds:
        t0 = time.perf_counter()
        corpus = synthetic_corpus(seed=seed, samples=args.samples, size=args.size)
        F = np.vstack([ex.extract(r).values for _, _, r in corpus])
        labels = [lab for _, lab, _ in corpus]
        base = cross_validate(LabeledDataset.from_labels(F[:, k0], labels), folds=args.folds)
        full = cross_validate(LabeledDataset.from_labels(F, labels), folds=args.folds)
        dt = time.perf_counter() - t0
        print(f"{seed:>4}  {base.ccr_mean:7.2f} ± {base.ccr_std:5.2f}  "
              f"{full.ccr_mean:7.2f} ± {full.ccr_std:5.2f}  {dt:5.1f}s")


if __name__ == "__main__":
    main()
