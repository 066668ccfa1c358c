#!/usr/bin/env python3
"""End-to-end desk-scale experiment: dataset -> train -> explain -> evaluate
-> prune -> bench, all through the CLI so every artifact gets a manifest.

The default full-scale settings (2x2500 nodes, 2000 images/class, 80 epochs)
take a few hours on a laptop CPU; --small runs a minutes-scale version with
the same shape.
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from explogic.cli import main as cli


def run(argv: list[str]) -> None:
    print(f"$ explogic {' '.join(argv)}", flush=True)
    code = cli(argv)
    if code != 0:
        raise SystemExit(f"step failed with exit code {code}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="pipeline-out")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--small", action="store_true", help="minutes-scale shake-down")
    args = parser.parse_args()

    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)
    data = work / "data"
    data.mkdir(exist_ok=True)

    if args.small:
        per_class, epochs, layers, max_samples = 80, 8, [400, 400], 40
    else:
        per_class, epochs, layers, max_samples = 2000, 80, [2500, 2500], 500

    from explogic.synthetic import write_corpus

    write_corpus(data, n_per_class=per_class, seed=args.seed)

    config = work / "train-config.json"
    config.write_text(
        json.dumps(
            {"layers": layers, "epochs": epochs, "seed": args.seed},
            indent=2,
        )
    )

    model_dir = work / "model"
    run(["train", "--config", str(config), "--data-dir", str(data), "--out", str(model_dir)])
    hard = model_dir / "model-hard.net"

    run(["inspect", "--model", str(hard)])

    explain_dir = work / "explanations"
    for variant, target in [("L_E", ["--sample", "0"]), ("G_0", ["--class", "0"]),
                            ("C_A", ["--class", "0"])]:
        run(
            ["explain", "--model", str(hard), "--variant", variant, "--data-dir", str(data),
             "--out", str(explain_dir / variant.lower())] + target
        )

    run(
        ["eval-switchdist", "--model", str(hard), "--data-dir", str(data),
         "--methods", "random,vg,ig,L_E,L_A", "--seed", str(args.seed),
         "--max-samples", str(max_samples), "--out", str(work / "switchdist")]
    )

    run(["prune", "--model", str(hard), "--data-dir", str(data), "--out", str(work / "minis")])
    run(
        ["bench", "--model", str(hard), "--data-dir", str(data), "--reps", "30",
         "--out", str(work / "bench")]
    )
    print(f"all artifacts under {work}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
