"""Write the synthetic corpus, extract both rules and run all four CCR sweeps.

    python3 scripts/sweep_synthetic.py --out runs/sweep --jobs 4

Produces ``corpus/``, ``features.csv`` (+ layout) and one sweep CSV per axis.
"""

import argparse
from pathlib import Path

from dpsw import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path("runs/sweep"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--samples", type=int, default=10)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    corpus = args.out / "corpus"
    feats = args.out / "features.csv"
    steps = [
        ["synth", "--output", str(corpus), "--corpus-seeds", str(args.seed),
         "--samples", str(args.samples), "--size", str(args.size)],
        ["extract", "--input", str(corpus), "--output", str(feats),
         "--rule", "both", "--jobs", str(args.jobs)],
        ["sweep", "--input", str(feats), "--output", str(args.out / "sweeps"), "--axis", "all"],
    ]
    for argv in steps:
        print("dpsw", " ".join(argv))
        if cli.main(argv) != 0:
            raise SystemExit(1)
    for f in sorted((args.out / "sweeps").glob("*.csv")):
        print(f"\n# {f.name}\n{f.read_text()}", end="")


if __name__ == "__main__":
    main()
