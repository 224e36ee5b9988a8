"""Per-image extraction cost at a given size and the projected time for a corpus.

    python3 scripts/timing.py --size 200 --images 1110 --cores 8
"""

import argparse
import time

import numpy as np

from dpsw.dataset import SynthSpec, synth_texture
from dpsw.descriptor import Extractor
from dpsw.pixel_map import Raster


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--size", type=int, default=200)
    ap.add_argument("--images", type=int, default=1110)
    ap.add_argument("--cores", type=int, default=8)
    ap.add_argument("--rule", choices=("min", "max", "both"), default="min")
    args = ap.parse_args()

    rules = ("min", "max") if args.rule == "both" else (args.rule,)
    ex = Extractor(rules=rules, workers=1)
    n = args.size
    probes = {
        "blob-noise": synth_texture(SynthSpec("blob-noise", period=9, amplitude=12, width=n, height=n)),
        "checker": synth_texture(SynthSpec("checker", period=8, amplitude=12, width=n, height=n)),
        "uniform noise": Raster(np.random.default_rng(0).integers(0, 256, (n, n))),
    }
    ex.extract(Raster(np.zeros((8, 8), np.uint8)))  # compile
    worst = 0.0
    for name, img in probes.items():
        t0 = time.perf_counter()
        ex.extract(img)
        dt = time.perf_counter() - t0
        worst = max(worst, dt)
        print(f"{name:>14}: {dt:6.2f}s for {ex.n_features} features")
    total = worst * args.images / args.cores
    print(f"projected: {total / 60:.1f} min for {args.images} images on {args.cores} cores")


if __name__ == "__main__":
    main()
