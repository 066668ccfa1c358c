"""Command-line front end: train, discretize, explain, eval-switchdist,
prune, bench, inspect.

Every command that writes artifacts also writes a manifest.json describing
them; with fixed seeds the artifacts themselves are byte-identical across
runs (timing numbers in bench reports are the one documented exception, and
timestamps live only in manifests).

Exit codes: 0 ok, 2 usage, 3 I/O, 4 bad file format, 5 domain error,
6 training failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_DOMAIN = 5
EXIT_TRAINING = 6


def _apply_thread_env() -> None:
    """EXPLOGIC_THREADS caps BLAS/OpenMP pools; must run before numpy loads."""
    n = os.environ.get("EXPLOGIC_THREADS")
    if n:
        for var in (
            "OMP_NUM_THREADS",
            "OPENBLAS_NUM_THREADS",
            "MKL_NUM_THREADS",
            "NUMEXPR_NUM_THREADS",
        ):
            os.environ.setdefault(var, n)


class _UsageError(Exception):
    pass


def _find_data_files(data_dir) -> tuple[Path, Path]:
    from .synthetic import IMAGES_NAME, LABELS_NAME

    base = Path(data_dir)
    if not base.is_dir():
        raise FileNotFoundError(f"data directory {base} does not exist")
    paths = []
    for name in (IMAGES_NAME, LABELS_NAME):
        plain, gz = base / name, base / (name + ".gz")
        if plain.exists():
            paths.append(plain)
        elif gz.exists():
            paths.append(gz)
        else:
            raise FileNotFoundError(f"{base} has neither {name} nor {name}.gz")
    return paths[0], paths[1]


def _load_full_dataset(data_dir):
    from .data import load_idx, preprocess

    images, labels = _find_data_files(data_dir)
    return preprocess(load_idx(images, labels)), [images, labels]


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    from dataclasses import asdict, replace

    from .data import split
    from .manifest import dataset_hash, hash_artifacts, write_manifest
    from .network import model_hash, save
    from .training import TrainConfig, discretize, init_network, load_config, train

    config = load_config(args.config) if args.config else TrainConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    full, data_files = _load_full_dataset(args.data_dir)
    train_data, test_data = split(full, ratio=0.8, seed=config.seed)
    classes = int(full.y.max()) + 1
    net = init_network(config, full.X.shape[1], classes)
    report = train(net, train_data, config, test_data, log=lambda s: print(s, file=sys.stderr))
    hard = discretize(net)
    out = _out_dir(args)
    soft_path = out / "model-soft.net"
    hard_path = out / "model-hard.net"
    report_path = out / "train-report.csv"
    save(net, soft_path)
    save(hard, hard_path)
    report.save_csv(report_path)
    write_manifest(
        out / "manifest.json",
        command="train",
        config=asdict(config),
        seeds={"train": config.seed, "split": config.seed},
        model_hash=model_hash(hard),
        data_hash=dataset_hash(data_files),
        artifacts=hash_artifacts([soft_path, hard_path, report_path]),
    )
    from .training import accuracy

    print(f"final hard test accuracy {accuracy(hard, test_data):.4f}")
    return EXIT_OK


def cmd_discretize(args) -> int:
    from .manifest import hash_artifacts, write_manifest
    from .network import load, model_hash, save
    from .training import discretize

    net = load(args.model)
    hard = discretize(net)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save(hard, out)
    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"),
        command="discretize",
        model_hash=model_hash(hard),
        artifacts=hash_artifacts([out]),
    )
    print(f"wrote {out} ({hard.gate_count} gates)")
    return EXIT_OK


def cmd_explain(args) -> int:
    from .explain import (
        ALL_VARIANTS,
        CLASS_VARIANTS,
        LOCAL_VARIANTS,
        VARIANT_G_EMPTY,
        VARIANT_G_U,
        ExplanationSpec,
        explain,
    )
    from .manifest import dataset_hash, hash_artifacts, write_manifest
    from .network import load, model_hash
    from .saliency import save_csv, save_meta, save_pgm

    variant = args.variant
    if variant not in ALL_VARIANTS:
        raise _UsageError(f"unknown variant {variant!r}; choose from {ALL_VARIANTS}")
    if variant in LOCAL_VARIANTS and args.sample is None:
        raise _UsageError(f"variant {variant} explains one sample; pass --sample")
    if variant in LOCAL_VARIANTS and args.class_id is not None:
        raise _UsageError(f"variant {variant} takes --sample, not --class")
    if variant in CLASS_VARIANTS and args.class_id is None:
        raise _UsageError(f"variant {variant} explains one class; pass --class")
    if variant in CLASS_VARIANTS and args.sample is not None:
        raise _UsageError(f"variant {variant} takes --class, not --sample")

    net = load(args.model)
    dataset = None
    data_files = []
    sample = None
    needs_data = variant in LOCAL_VARIANTS or variant not in (
        VARIANT_G_EMPTY,
        VARIANT_G_U,
    )
    if needs_data:
        if args.data_dir is None:
            raise _UsageError(f"variant {variant} needs --data-dir")
        dataset, data_files = _load_full_dataset(args.data_dir)
    if variant in LOCAL_VARIANTS:
        if not 0 <= args.sample < len(dataset):
            raise _UsageError(f"--sample outside 0..{len(dataset) - 1}")
        sample = dataset.X[args.sample]
    spec = ExplanationSpec.for_variant(variant)
    smap = explain(net, spec, dataset=dataset, sample=sample, class_id=args.class_id)

    out = _out_dir(args)
    tag = variant.lower().replace("_", "")
    if variant in LOCAL_VARIANTS:
        tag += f"-s{args.sample}"
    else:
        tag += f"-c{args.class_id}"
    csv_path = out / f"saliency-{tag}.csv"
    pgm_path = out / f"saliency-{tag}.pgm"
    meta_path = out / f"saliency-{tag}.meta"
    save_csv(smap, csv_path)
    save_pgm(smap, pgm_path)
    save_meta(smap, meta_path)
    write_manifest(
        out / "manifest.json",
        command="explain",
        config={"variant": variant, "sample": args.sample, "class": args.class_id},
        model_hash=model_hash(net),
        data_hash=dataset_hash(data_files) if data_files else None,
        artifacts=hash_artifacts([csv_path, pgm_path, meta_path]),
    )
    print(f"sigma {smap.sigma}")
    return EXIT_OK


def cmd_eval_switchdist(args) -> int:
    from .manifest import dataset_hash, hash_artifacts, write_manifest
    from .network import load, model_hash
    from .switchdist import evaluate

    net = load(args.model)
    dataset, data_files = _load_full_dataset(args.data_dir)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise _UsageError("--methods must name at least one method")
    summary = evaluate(
        net,
        dataset,
        methods,
        seed=args.seed if args.seed is not None else 0,
        max_samples=args.max_samples,
        log=lambda s: print(s, file=sys.stderr),
    )
    out = _out_dir(args)
    summary_path = out / "switchdist-summary.csv"
    traces_path = out / "switchdist-traces.csv"
    summary_path.write_text(summary.to_csv(), encoding="ascii")
    traces_path.write_text(summary.traces_to_csv(), encoding="ascii")
    write_manifest(
        out / "manifest.json",
        command="eval-switchdist",
        config={"methods": methods, "max_samples": args.max_samples},
        seeds={"eval": summary.seed},
        model_hash=model_hash(net),
        data_hash=dataset_hash(data_files),
        artifacts=hash_artifacts([summary_path, traces_path]),
    )
    print(summary.to_csv(), end="")
    return EXIT_OK


def _select_classes(args, class_count: int) -> list[int]:
    from .errors import DomainError

    if args.class_id is None or args.class_id == "all":
        return list(range(class_count))
    try:
        c = int(args.class_id)
    except ValueError:
        raise _UsageError(f"--class must be an integer or 'all', got {args.class_id!r}")
    if not 0 <= c < class_count:
        raise DomainError(f"class {c} outside 0..{class_count - 1}")
    return [c]


def _build_minis(net, dataset, classes):
    from .mininet import build_mininet, fit_threshold

    minis = []
    for c in classes:
        mini = build_mininet(net, c)
        mini.threshold = fit_threshold(mini, dataset)
        minis.append(mini)
    return minis


def _require_hard(net) -> None:
    from .errors import DomainError

    if net.mode != "hard":
        raise DomainError("model is soft (gate mixtures); run `explogic discretize` first")


def cmd_prune(args) -> int:
    from .manifest import dataset_hash, hash_artifacts, write_manifest
    from .mininet import assess, report_csv, save_mininet
    from .network import load, model_hash

    net = load(args.model)
    _require_hard(net)
    dataset, data_files = _load_full_dataset(args.data_dir)
    classes = _select_classes(args, net.class_count)
    minis = _build_minis(net, dataset, classes)
    out = _out_dir(args)
    paths = []
    for mini in minis:
        path = out / f"mini-{mini.class_id}.net"
        save_mininet(mini, path)
        paths.append(path)
    reports = assess(net, minis, dataset)
    report_path = out / "prune-report.csv"
    report_path.write_text(report_csv(reports, with_timing=False), encoding="ascii")
    paths.append(report_path)
    write_manifest(
        out / "manifest.json",
        command="prune",
        config={"classes": classes},
        model_hash=model_hash(net),
        data_hash=dataset_hash(data_files),
        artifacts=hash_artifacts(paths),
    )
    print(report_csv(reports, with_timing=False), end="")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .manifest import dataset_hash, hash_artifacts, write_manifest
    from .mininet import benchmark, report_csv
    from .network import load, model_hash

    net = load(args.model)
    _require_hard(net)
    dataset, data_files = _load_full_dataset(args.data_dir)
    classes = _select_classes(args, net.class_count)
    minis = _build_minis(net, dataset, classes)
    reports = benchmark(net, minis, dataset, repetitions=args.reps)
    out = _out_dir(args)
    report_path = out / "bench-report.csv"
    report_path.write_text(report_csv(reports, with_timing=True), encoding="ascii")
    write_manifest(
        out / "manifest.json",
        command="bench",
        config={"classes": classes, "reps": args.reps},
        model_hash=model_hash(net),
        data_hash=dataset_hash(data_files),
        artifacts=hash_artifacts([report_path]),
        extra={"note": "time columns are host-dependent measurements"},
    )
    print(report_csv(reports, with_timing=True), end="")
    return EXIT_OK


def cmd_inspect(args) -> int:
    import numpy as np

    from .errors import FormatError
    from .gates import GATE_NAMES
    from .mininet import load_mininet
    from .network import load

    mini = None
    try:
        net = load(args.model)
    except FormatError:
        mini = load_mininet(args.model)
        net = mini.net
    print(f"mode {net.mode}")
    print(f"input_dim {net.input_dim}")
    print(f"classes {net.class_count}")
    print(f"group_size {net.group_size}")
    print(f"layers {' '.join(str(l.width) for l in net.layers)}")
    print(f"gates {net.gate_count}")
    if mini is not None:
        print(f"mini_class {mini.class_id}")
        print(f"mini_threshold {mini.threshold}")
    if net.mode == "hard":
        ids = np.concatenate([l.gate_ids for l in net.layers])
    else:
        ids = np.concatenate([np.argmax(l.logits, axis=1) for l in net.layers])
        print("histogram over argmax gates (soft model)")
    counts = np.bincount(ids, minlength=16)
    for gid, count in enumerate(counts):
        if count:
            print(f"  {GATE_NAMES[gid]} {count}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="explogic",
        description="Train, explain, and prune differentiable logic-gate networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a gate network and discretize it")
    p.add_argument("--config", help="JSON training config (defaults used if omitted)")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("discretize", help="snap gate mixtures to hard gates")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="output model file")
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("explain", help="emit a saliency map (CSV + PGM + meta)")
    p.add_argument("--model", required=True)
    p.add_argument("--variant", required=True)
    p.add_argument("--data-dir")
    p.add_argument("--sample", type=int, help="sample index for L variants")
    p.add_argument("--class", dest="class_id", type=int, help="class id for G/C variants")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("eval-switchdist", help="switch-distance evaluation table")
    p.add_argument("--model", required=True)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--methods", required=True, help="comma list, e.g. random,vg,ig,L_E")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-samples", type=int)
    p.set_defaults(func=cmd_eval_switchdist)

    p = sub.add_parser("prune", help="build per-class MiniNets")
    p.add_argument("--model", required=True)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--class", dest="class_id", help="class id or 'all'")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("bench", help="size/time/accuracy of MiniNets vs parent")
    p.add_argument("--model", required=True)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--class", dest="class_id", help="class id or 'all'")
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("inspect", help="dump model stats and gate histogram")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    _apply_thread_env()
    args = build_parser().parse_args(argv)
    from .errors import DomainError, FormatError, TrainingError

    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
