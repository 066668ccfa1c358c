import hashlib
import json

import numpy as np
import pytest

from explogic.cli import (
    EXIT_DOMAIN,
    EXIT_FORMAT,
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    _apply_thread_env,
    main,
)
from explogic.manifest import dataset_hash, file_sha256, write_manifest
from explogic.synthetic import write_corpus


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    write_corpus(out, n_per_class=30, seed=5, classes=3)
    return out


@pytest.fixture(scope="module")
def config_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "train.json"
    path.write_text(
        json.dumps(
            {"layers": [48, 24], "epochs": 2, "batch_size": 32, "seed": 0}
        )
    )
    return path


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, corpus_dir, config_path):
    out = tmp_path_factory.mktemp("run")
    code = main(
        [
            "train",
            "--config",
            str(config_path),
            "--data-dir",
            str(corpus_dir),
            "--out",
            str(out),
        ]
    )
    assert code == EXIT_OK
    return out


def _manifest_core(path):
    doc = json.loads(path.read_text())
    doc.pop("created")
    return doc


class TestManifestHelpers:
    def test_file_sha256(self, tmp_path):
        p = tmp_path / "blob"
        p.write_bytes(b"abc")
        assert file_sha256(p) == hashlib.sha256(b"abc").hexdigest()

    def test_dataset_hash_order_independent(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.write_bytes(b"one")
        b.write_bytes(b"two")
        assert dataset_hash([a, b]) == dataset_hash([b, a])
        b.write_bytes(b"TWO")
        assert dataset_hash([a, b]) != dataset_hash([a])

    def test_write_manifest_fields(self, tmp_path):
        path = tmp_path / "manifest.json"
        write_manifest(path, command="x", seeds={"s": 1}, artifacts={"f": "00"})
        doc = json.loads(path.read_text())
        assert doc["format"] == "explogic-manifest 1"
        assert doc["command"] == "x"
        assert doc["seeds"] == {"s": 1}
        assert "created" in doc and "tool_version" in doc


class TestTrain:
    def test_artifacts_written(self, trained_dir):
        for name in ("model-soft.net", "model-hard.net", "train-report.csv", "manifest.json"):
            assert (trained_dir / name).exists()
        report = (trained_dir / "train-report.csv").read_text()
        assert report.splitlines()[0] == "epoch,loss,train_acc,test_acc"
        assert len(report.splitlines()) == 3  # header + 2 epochs

    def test_manifest_references_artifacts(self, trained_dir):
        doc = json.loads((trained_dir / "manifest.json").read_text())
        for name in ("model-soft.net", "model-hard.net", "train-report.csv"):
            assert doc["artifacts"][name] == file_sha256(trained_dir / name)
        assert doc["config"]["layers"] == [48, 24]

    def test_repeat_run_byte_identical(self, tmp_path, corpus_dir, config_path, trained_dir):
        out2 = tmp_path / "run2"
        code = main(
            [
                "train",
                "--config",
                str(config_path),
                "--data-dir",
                str(corpus_dir),
                "--out",
                str(out2),
            ]
        )
        assert code == EXIT_OK
        for name in ("model-soft.net", "model-hard.net", "train-report.csv"):
            assert (out2 / name).read_bytes() == (trained_dir / name).read_bytes()
        assert _manifest_core(out2 / "manifest.json") == _manifest_core(
            trained_dir / "manifest.json"
        )

    def test_seed_flag_changes_model(self, tmp_path, corpus_dir, config_path, trained_dir):
        out2 = tmp_path / "seeded"
        code = main(
            [
                "train",
                "--config",
                str(config_path),
                "--data-dir",
                str(corpus_dir),
                "--out",
                str(out2),
                "--seed",
                "99",
            ]
        )
        assert code == EXIT_OK
        assert (out2 / "model-soft.net").read_bytes() != (
            trained_dir / "model-soft.net"
        ).read_bytes()

    def test_missing_data_dir_is_io_error(self, tmp_path, config_path):
        code = main(
            [
                "train",
                "--config",
                str(config_path),
                "--data-dir",
                str(tmp_path / "nope"),
                "--out",
                str(tmp_path / "out"),
            ]
        )
        assert code == EXIT_IO


class TestDiscretize:
    def test_idempotent_bytes(self, tmp_path, trained_dir):
        h1 = tmp_path / "hard1.net"
        h2 = tmp_path / "hard2.net"
        assert main(["discretize", "--model", str(trained_dir / "model-soft.net"), "--out", str(h1)]) == EXIT_OK
        assert main(["discretize", "--model", str(h1), "--out", str(h2)]) == EXIT_OK
        assert h1.read_bytes() == h2.read_bytes()
        assert h1.read_bytes() == (trained_dir / "model-hard.net").read_bytes()
        assert (tmp_path / "hard1.net.manifest.json").exists()

    def test_bad_model_file_is_format_error(self, tmp_path):
        bad = tmp_path / "bad.net"
        bad.write_text("not a model\n")
        assert main(["discretize", "--model", str(bad), "--out", str(tmp_path / "o.net")]) == EXIT_FORMAT


class TestExplain:
    def test_local_variant(self, tmp_path, trained_dir, corpus_dir, capsys):
        out = tmp_path / "exp"
        code = main(
            [
                "explain",
                "--model",
                str(trained_dir / "model-hard.net"),
                "--variant",
                "L_E",
                "--sample",
                "3",
                "--data-dir",
                str(corpus_dir),
                "--out",
                str(out),
            ]
        )
        assert code == EXIT_OK
        printed = capsys.readouterr().out
        assert printed.startswith("sigma ")
        sigma = int(printed.split()[1])
        assert sigma >= 0
        for suffix in (".csv", ".pgm", ".meta"):
            assert (out / f"saliency-le-s3{suffix}").exists()
        assert (out / "saliency-le-s3.pgm").read_bytes().startswith(b"P5\n")

    def test_structural_variant_needs_no_data(self, tmp_path, trained_dir):
        out = tmp_path / "exp"
        code = main(
            [
                "explain",
                "--model",
                str(trained_dir / "model-hard.net"),
                "--variant",
                "G_0",
                "--class",
                "1",
                "--out",
                str(out),
            ]
        )
        assert code == EXIT_OK
        assert (out / "saliency-g0-c1.csv").exists()

    def test_class_variant_with_data(self, tmp_path, trained_dir, corpus_dir):
        out = tmp_path / "exp"
        code = main(
            [
                "explain",
                "--model",
                str(trained_dir / "model-hard.net"),
                "--variant",
                "C_A",
                "--class",
                "2",
                "--data-dir",
                str(corpus_dir),
                "--out",
                str(out),
            ]
        )
        assert code == EXIT_OK
        assert (out / "saliency-ca-c2.csv").exists()

    def test_reproducible_bytes(self, tmp_path, trained_dir, corpus_dir):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            assert (
                main(
                    [
                        "explain",
                        "--model",
                        str(trained_dir / "model-hard.net"),
                        "--variant",
                        "G_E",
                        "--class",
                        "0",
                        "--data-dir",
                        str(corpus_dir),
                        "--out",
                        str(out),
                    ]
                )
                == EXIT_OK
            )
            outs.append(out)
        name = "saliency-ge-c0.csv"
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    @pytest.mark.parametrize(
        "argv_extra",
        [
            ["--variant", "L_E", "--class", "0"],  # L with class target
            ["--variant", "L_E"],  # L without sample
            ["--variant", "C_A", "--sample", "0"],  # class variant with sample
            ["--variant", "C_A"],  # class variant without class
            ["--variant", "Q_X", "--sample", "0"],  # unknown variant
        ],
    )
    def test_target_mismatches_are_usage_errors(
        self, tmp_path, trained_dir, corpus_dir, argv_extra
    ):
        code = main(
            [
                "explain",
                "--model",
                str(trained_dir / "model-hard.net"),
                "--data-dir",
                str(corpus_dir),
                "--out",
                str(tmp_path / "exp"),
            ]
            + argv_extra
        )
        assert code == EXIT_USAGE


class TestEvalSwitchdist:
    def test_summary_and_traces(self, tmp_path, trained_dir, corpus_dir, capsys):
        out = tmp_path / "sd"
        code = main(
            [
                "eval-switchdist",
                "--model",
                str(trained_dir / "model-hard.net"),
                "--data-dir",
                str(corpus_dir),
                "--methods",
                "random,L_E",
                "--max-samples",
                "6",
                "--seed",
                "7",
                "--out",
                str(out),
            ]
        )
        assert code == EXIT_OK
        summary = (out / "switchdist-summary.csv").read_text()
        assert summary.splitlines()[0] == (
            "method,direction,mean,std,percent_switch,n_samples,seed,model_hash"
        )
        assert len(summary.splitlines()) == 1 + 2 * 3
        assert (out / "switchdist-traces.csv").exists()
        assert capsys.readouterr().out == summary

    def test_reproducible(self, tmp_path, trained_dir, corpus_dir):
        argv = [
            "eval-switchdist",
            "--model",
            str(trained_dir / "model-hard.net"),
            "--data-dir",
            str(corpus_dir),
            "--methods",
            "random,vg",
            "--max-samples",
            "4",
            "--seed",
            "3",
        ]
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(argv + ["--out", str(a)]) == EXIT_OK
        assert main(argv + ["--out", str(b)]) == EXIT_OK
        for name in ("switchdist-summary.csv", "switchdist-traces.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_structural_variant_rejected(self, tmp_path, trained_dir, corpus_dir):
        code = main(
            [
                "eval-switchdist",
                "--model",
                str(trained_dir / "model-hard.net"),
                "--data-dir",
                str(corpus_dir),
                "--methods",
                "G_0",
                "--out",
                str(tmp_path / "sd"),
            ]
        )
        assert code == EXIT_DOMAIN


class TestPruneAndBench:
    def test_prune_all(self, tmp_path, trained_dir, corpus_dir, capsys):
        out = tmp_path / "minis"
        code = main(
            [
                "prune",
                "--model",
                str(trained_dir / "model-hard.net"),
                "--data-dir",
                str(corpus_dir),
                "--out",
                str(out),
            ]
        )
        assert code == EXIT_OK
        for c in range(3):
            assert (out / f"mini-{c}.net").exists()
        report = (out / "prune-report.csv").read_text()
        assert report.splitlines()[0] == "class,%size,acc,prec,recall,f1"
        assert len(report.splitlines()) == 4
        assert capsys.readouterr().out == report

    def test_prune_single_class_and_reproducible(self, tmp_path, trained_dir, corpus_dir):
        argv = [
            "prune",
            "--model",
            str(trained_dir / "model-hard.net"),
            "--data-dir",
            str(corpus_dir),
            "--class",
            "1",
        ]
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(argv + ["--out", str(a)]) == EXIT_OK
        assert main(argv + ["--out", str(b)]) == EXIT_OK
        assert (a / "mini-1.net").read_bytes() == (b / "mini-1.net").read_bytes()
        assert not (a / "mini-0.net").exists()

    def test_prune_rejects_soft_model(self, tmp_path, trained_dir, corpus_dir, capsys):
        code = main(
            [
                "prune",
                "--model",
                str(trained_dir / "model-soft.net"),
                "--data-dir",
                str(corpus_dir),
                "--out",
                str(tmp_path / "x"),
            ]
        )
        assert code == EXIT_DOMAIN
        assert "discretize" in capsys.readouterr().err

    def test_prune_class_out_of_range(self, tmp_path, trained_dir, corpus_dir):
        code = main(
            [
                "prune",
                "--model",
                str(trained_dir / "model-hard.net"),
                "--data-dir",
                str(corpus_dir),
                "--class",
                "7",
                "--out",
                str(tmp_path / "x"),
            ]
        )
        assert code == EXIT_DOMAIN

    def test_prune_class_not_an_int(self, tmp_path, trained_dir, corpus_dir):
        code = main(
            [
                "prune",
                "--model",
                str(trained_dir / "model-hard.net"),
                "--data-dir",
                str(corpus_dir),
                "--class",
                "everything",
                "--out",
                str(tmp_path / "x"),
            ]
        )
        assert code == EXIT_USAGE

    def test_bench_writes_timing_report(self, tmp_path, trained_dir, corpus_dir):
        out = tmp_path / "bench"
        code = main(
            [
                "bench",
                "--model",
                str(trained_dir / "model-hard.net"),
                "--data-dir",
                str(corpus_dir),
                "--class",
                "0",
                "--reps",
                "30",
                "--out",
                str(out),
            ]
        )
        assert code == EXIT_OK
        report = (out / "bench-report.csv").read_text()
        assert report.splitlines()[0] == "class,%time,%size,acc,prec,recall,f1"

    def test_bench_rep_floor(self, tmp_path, trained_dir, corpus_dir):
        code = main(
            [
                "bench",
                "--model",
                str(trained_dir / "model-hard.net"),
                "--data-dir",
                str(corpus_dir),
                "--reps",
                "3",
                "--out",
                str(tmp_path / "bench"),
            ]
        )
        assert code == EXIT_DOMAIN


class TestInspect:
    def test_hard_model(self, trained_dir, capsys):
        assert main(["inspect", "--model", str(trained_dir / "model-hard.net")]) == EXIT_OK
        out = capsys.readouterr().out
        assert "mode hard" in out
        assert "gates 72" in out  # 48 + 24
        assert "classes 3" in out

    def test_mininet_file(self, tmp_path, trained_dir, corpus_dir, capsys):
        out = tmp_path / "minis"
        main(
            [
                "prune",
                "--model",
                str(trained_dir / "model-hard.net"),
                "--data-dir",
                str(corpus_dir),
                "--class",
                "2",
                "--out",
                str(out),
            ]
        )
        capsys.readouterr()
        assert main(["inspect", "--model", str(out / "mini-2.net")]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "mini_class 2" in printed
        assert "mini_threshold" in printed


class TestThreadEnv:
    def test_sets_blas_pools(self, monkeypatch):
        monkeypatch.setenv("EXPLOGIC_THREADS", "2")
        monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
        _apply_thread_env()
        import os

        assert os.environ["OMP_NUM_THREADS"] == "2"

    def test_existing_setting_wins(self, monkeypatch):
        monkeypatch.setenv("EXPLOGIC_THREADS", "2")
        monkeypatch.setenv("OMP_NUM_THREADS", "8")
        _apply_thread_env()
        import os

        assert os.environ["OMP_NUM_THREADS"] == "8"
