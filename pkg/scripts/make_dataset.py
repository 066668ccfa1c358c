#!/usr/bin/env python3
"""Render a synthetic digit corpus to IDX files.

The corpus stands in for MNIST when the real archive is unavailable: PIL-drawn
digits 0-9 with font, size, rotation, and position jitter, deterministic per
seed.  Output: train-images-idx3-ubyte / train-labels-idx1-ubyte in --out.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from explogic.synthetic import write_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--per-class", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--classes", type=int, default=10)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    images, labels = write_corpus(
        out, n_per_class=args.per_class, seed=args.seed, classes=args.classes
    )
    print(f"wrote {images}")
    print(f"wrote {labels}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
