import numpy as np
import pytest

from conftest import all_binary_inputs, random_hard_net
from explogic.data import Dataset
from explogic.errors import DomainError, FormatError
from explogic.mininet import (
    MiniNet,
    benchmark,
    build_mininet,
    cone_input_support,
    equal_likelihood_threshold,
    fanin_cone,
    fit_threshold,
    load_mininet,
    report_csv,
    save_mininet,
)
from explogic.network import Layer, LogicNetwork, forward_hard_batch, load


def two_layer_toy():
    """Class 0's group reads only pixels {0, 1}; class 1's only {2, 3}."""
    l0 = Layer(
        in_a=np.array([0, 1, 2, 3]),
        in_b=np.array([1, 0, 3, 2]),
        gate_ids=np.array([1, 7, 1, 7]),  # AND, OR, AND, OR
    )
    l1 = Layer(
        in_a=np.array([0, 1, 2, 3]),
        in_b=np.array([1, 0, 3, 2]),
        gate_ids=np.array([7, 1, 7, 1]),
    )
    return LogicNetwork(4, [l0, l1], 2)


class TestFaninCone:
    def test_true_gates_terminate(self):
        layer = Layer(
            in_a=np.array([0, 1]), in_b=np.array([1, 0]), gate_ids=np.array([15, 15])
        )
        net = LogicNetwork(2, [Layer(np.array([0, 1]), np.array([1, 0]), gate_ids=np.array([1, 7])), layer], 2)
        cone = fanin_cone(net, 0)
        assert cone[1].tolist() == [0]
        assert cone[0].size == 0  # TRUE reads nothing

    def test_toy_partition(self):
        net = two_layer_toy()
        assert fanin_cone(net, 0)[0].tolist() == [0, 1]
        assert fanin_cone(net, 1)[0].tolist() == [2, 3]
        assert cone_input_support(net, fanin_cone(net, 0)).tolist() == [0, 1]
        assert cone_input_support(net, fanin_cone(net, 1)).tolist() == [2, 3]

    def test_passthrough_follows_live_port_only(self):
        l0 = Layer(
            in_a=np.array([0, 1, 2]), in_b=np.array([1, 2, 0]), gate_ids=np.array([1, 1, 1])
        )
        l1 = Layer(
            in_a=np.array([2, 0]),
            in_b=np.array([0, 1]),
            gate_ids=np.array([3, 5]),  # A: live port a only; B: live port b only
        )
        net = LogicNetwork(3, [l0, l1], 2)
        assert fanin_cone(net, 0)[0].tolist() == [2]
        assert fanin_cone(net, 1)[0].tolist() == [1]

    def test_group_always_included(self):
        rng = np.random.default_rng(0)
        net = random_hard_net(rng, input_dim=6, widths=(8, 6), class_count=3)
        for c in range(3):
            assert fanin_cone(net, c)[-1].tolist() == [2 * c, 2 * c + 1]

    def test_dependence_inside_cone_support(self):
        # pixels that can flip the class score must be cone-readable
        rng = np.random.default_rng(7)
        for _ in range(30):
            net = random_hard_net(rng, input_dim=7, widths=(9, 4), class_count=2)
            X = all_binary_inputs(7)
            scores = forward_hard_batch(net, X)
            for c in range(2):
                support = set(cone_input_support(net, fanin_cone(net, c)).tolist())
                for i in range(7):
                    flipped = X.copy()
                    flipped[:, i] ^= 1
                    if np.any(forward_hard_batch(net, flipped)[:, c] != scores[:, c]):
                        assert i in support

    def test_requires_hard_net(self):
        layer = Layer(
            in_a=np.array([0, 1]), in_b=np.array([1, 0]), logits=np.zeros((2, 16))
        )
        with pytest.raises(DomainError):
            fanin_cone(LogicNetwork(2, [layer], 2), 0)

    def test_class_range_checked(self):
        with pytest.raises(DomainError):
            fanin_cone(two_layer_toy(), 2)


class TestBuildMininet:
    def test_exact_equivalence_exhaustive(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            net = random_hard_net(rng, input_dim=8, widths=(10, 6), class_count=3)
            X = all_binary_inputs(8)
            parent_scores = forward_hard_batch(net, X)
            for c in range(3):
                mini = build_mininet(net, c)
                assert np.array_equal(mini.scores(X), parent_scores[:, c])

    def test_exact_equivalence_random_inputs(self):
        rng = np.random.default_rng(5)
        net = random_hard_net(rng, input_dim=40, widths=(64, 32, 16), class_count=4)
        X = rng.integers(0, 2, size=(10_000, 40)).astype(np.uint8)
        parent_scores = forward_hard_batch(net, X)
        for c in range(4):
            mini = build_mininet(net, c)
            assert np.array_equal(mini.scores(X), parent_scores[:, c])

    def test_single_group_shape(self):
        net = two_layer_toy()
        mini = build_mininet(net, 0)
        assert mini.net.class_count == 1
        assert mini.net.mode == "hard"
        assert mini.net.input_dim == net.input_dim
        assert mini.class_id == 0

    def test_remap_bijection_onto_cone(self):
        rng = np.random.default_rng(11)
        net = random_hard_net(rng, input_dim=9, widths=(12, 8), class_count=2)
        cone = fanin_cone(net, 1)
        mini = build_mininet(net, 1)
        for li, kept in enumerate(cone):
            if kept.size:
                assert mini.remap[li].tolist() == kept.tolist()
                assert len(set(mini.remap[li].tolist())) == kept.size

    def test_gate_count_shrinks(self):
        net = two_layer_toy()
        mini = build_mininet(net, 0)
        assert mini.net.gate_count == 4 < net.gate_count

    def test_placeholder_keeps_depth(self):
        # constant TRUE group: every earlier layer collapses to a one-gate stub
        l0 = Layer(np.array([0, 1]), np.array([1, 0]), gate_ids=np.array([6, 9]))
        l1 = Layer(np.array([0, 1]), np.array([1, 0]), gate_ids=np.array([15, 1]))
        net = LogicNetwork(2, [l0, l1], 2)
        mini = build_mininet(net, 0)
        assert len(mini.net.layers) == 2
        assert mini.net.layers[0].width == 1
        assert mini.net.layers[0].gate_ids[0] == 0
        assert mini.remap[0].tolist() == [-1]
        X = all_binary_inputs(2)
        assert np.array_equal(mini.scores(X), forward_hard_batch(net, X)[:, 0])

    def test_dangling_ignored_port_rewired_to_zero(self):
        # node 0 of layer 1 is NOT(A): port b is dead and points at a node
        # outside class 0's cone; the mini must rewire it to position 0
        l0 = Layer(np.array([0, 1, 0]), np.array([1, 0, 1]), gate_ids=np.array([1, 7, 6]))
        l1 = Layer(
            in_a=np.array([0, 1]),
            in_b=np.array([2, 2]),
            gate_ids=np.array([12, 1]),  # NOT(A): b ignored
        )
        net = LogicNetwork(2, [l0, l1], 2)
        mini = build_mininet(net, 0)
        assert mini.net.layers[0].width == 1  # only parent node 0 kept
        assert mini.net.layers[1].in_b[0] == 0
        X = all_binary_inputs(2)
        assert np.array_equal(mini.scores(X), forward_hard_batch(net, X)[:, 0])

    def test_pruning_idempotent(self):
        rng = np.random.default_rng(13)
        net = random_hard_net(rng, input_dim=8, widths=(10, 6), class_count=3)
        mini = build_mininet(net, 2, threshold=1.5)
        again = build_mininet(mini.net, 0, threshold=mini.threshold)
        assert again.net.gate_count == mini.net.gate_count
        for la, lb in zip(mini.net.layers, again.net.layers):
            assert np.array_equal(la.gate_ids, lb.gate_ids)
            assert np.array_equal(la.in_a, lb.in_a)
            assert np.array_equal(la.in_b, lb.in_b)


class TestThreshold:
    def test_equal_variance_midpoint(self):
        assert equal_likelihood_threshold(200.0, 10.0, 0.5, 50.0, 10.0) == pytest.approx(125.0)

    def test_prior_shifts_midpoint_toward_rare_class(self):
        t = equal_likelihood_threshold(200.0, 10.0, 0.1, 50.0, 10.0)
        assert t > 125.0  # rare positives need stronger evidence

    def test_unequal_variance_narrow_positive(self):
        mu_p, sd_p, mu_n, sd_n, pi = 10.0, 1.0, 0.0, 2.0, 0.5
        t = equal_likelihood_threshold(mu_p, sd_p, pi, mu_n, sd_n)
        # the crossing equalizes the prior-weighted densities
        def density(x, mu, sd):
            return np.exp(-((x - mu) ** 2) / (2 * sd**2)) / (sd * np.sqrt(2 * np.pi))

        assert pi * density(t, mu_p, sd_p) == pytest.approx(
            (1 - pi) * density(t, mu_n, sd_n), rel=1e-9
        )
        # narrow positives: the usable crossing sits between the means
        assert mu_n < t < mu_p

    def test_unequal_variance_wide_positive(self):
        # wide positives put the second crossing far below both means;
        # choosing it would label every score positive
        t = equal_likelihood_threshold(180.0, 25.0, 0.1, 120.0, 10.0)
        assert 120.0 < t < 180.0

    def test_degenerate_cases_return_none(self):
        assert equal_likelihood_threshold(5.0, 0.0, 0.5, 1.0, 2.0) is None
        assert equal_likelihood_threshold(5.0, 1.0, 0.5, 5.0, 1.0) is None

    def test_fit_on_separable_scores(self):
        # class-1 mini score is exactly pixel 0: pos scores 1, neg 0
        layer = Layer(np.array([0, 0]), np.array([1, 1]), gate_ids=np.array([12, 3]))
        net = LogicNetwork(2, [layer], 2)
        mini = build_mininet(net, 1)
        X = np.array([[1, 0], [1, 1], [0, 0], [0, 1]], dtype=np.uint8)
        y = np.array([1, 1, 0, 0])
        t = fit_threshold(mini, Dataset(X, y))
        assert t == 1.0  # zero-variance fallback sweep
        assert np.array_equal(mini.scores(X) >= t, [True, True, False, False])

    def test_fit_gaussian_path(self):
        rng = np.random.default_rng(17)
        net = random_hard_net(rng, input_dim=8, widths=(32, 16), class_count=2)
        mini = build_mininet(net, 0)
        X = rng.integers(0, 2, size=(400, 8)).astype(np.uint8)
        scores = mini.scores(X)
        # label by a noisy threshold on the score so both classes vary
        y = (scores + rng.normal(0, 1, scores.shape) > np.median(scores)).astype(int)
        y = 1 - y  # positives are class 0
        if np.unique(mini.scores(X[y == 0])).size < 2 or np.unique(mini.scores(X[y == 1])).size < 2:
            pytest.skip("degenerate draw")
        t = fit_threshold(mini, Dataset(X, y))
        assert np.isfinite(t)

    def test_identical_scores_sweep_lowest(self):
        layer = Layer(np.array([0, 0]), np.array([1, 1]), gate_ids=np.array([15, 15]))
        net = LogicNetwork(2, [layer], 2)
        mini = build_mininet(net, 0)  # score is constant 1
        X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.uint8)
        t = fit_threshold(mini, Dataset(X, np.array([0, 0, 1, 1])))
        assert t == 0.0  # all accuracies tie at 1/2; lowest wins

    def test_no_positives_rejected(self):
        net = two_layer_toy()
        mini = build_mininet(net, 0)
        X = all_binary_inputs(4)
        with pytest.raises(DomainError, match="labeled 0"):
            fit_threshold(mini, Dataset(X, np.ones(len(X), dtype=int)))
        with pytest.raises(DomainError, match="negative"):
            fit_threshold(mini, Dataset(X, np.zeros(len(X), dtype=int)))


class TestBenchmark:
    def setup_method(self):
        rng = np.random.default_rng(23)
        self.net = random_hard_net(rng, input_dim=10, widths=(24, 12), class_count=2)
        self.X = rng.integers(0, 2, size=(200, 10)).astype(np.uint8)
        preds = np.argmax(forward_hard_batch(self.net, self.X), axis=1)
        self.data = Dataset(self.X, preds)  # labels = parent predictions
        self.minis = [
            MiniNet(
                build_mininet(self.net, c).net,
                c,
                fit_threshold(build_mininet(self.net, c), self.data),
                None,
            )
            for c in range(2)
        ]

    def test_reports_per_class(self):
        reports = benchmark(self.net, self.minis, self.data, repetitions=30)
        assert [r.class_id for r in reports] == [0, 1]
        for r in reports:
            assert r.mini_gates < r.parent_gates
            assert r.size_change_pct < 0
            assert r.parent_time > 0 and r.mini_time > 0
            for m in (r.accuracy, r.precision, r.recall, r.f1, r.parent_accuracy):
                assert 0.0 <= m <= 1.0

    def test_rep_floor_enforced(self):
        with pytest.raises(DomainError, match="repetitions"):
            benchmark(self.net, self.minis, self.data, repetitions=5)

    def test_soft_parent_rejected(self):
        layer = Layer(np.array([0, 1]), np.array([1, 0]), logits=np.zeros((2, 16)))
        with pytest.raises(DomainError, match="discretized"):
            benchmark(LogicNetwork(2, [layer], 2), [], self.data)

    def test_csv_shapes(self):
        reports = benchmark(self.net, self.minis, self.data, repetitions=30)
        full = report_csv(reports)
        assert full.splitlines()[0] == "class,%time,%size,acc,prec,recall,f1"
        assert len(full.splitlines()) == 3
        stable = report_csv(reports, with_timing=False)
        assert stable.splitlines()[0] == "class,%size,acc,prec,recall,f1"
        # timing-free output is deterministic across runs
        again = report_csv(benchmark(self.net, self.minis, self.data, 30), with_timing=False)
        assert stable == again


class TestMiniNetFiles:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(29)
        net = random_hard_net(rng, input_dim=8, widths=(10, 6), class_count=3)
        mini = build_mininet(net, 1, threshold=2.25)
        path = tmp_path / "mini.net"
        save_mininet(mini, path)
        back = load_mininet(path)
        assert back.class_id == 1
        assert back.threshold == 2.25
        assert back.remap is None
        X = all_binary_inputs(8)
        assert np.array_equal(back.scores(X), mini.scores(X))

    def test_plain_model_file_rejected(self, tmp_path):
        rng = np.random.default_rng(31)
        net = random_hard_net(rng, input_dim=4, widths=(4,), class_count=2)
        from explogic.network import save

        path = tmp_path / "full.net"
        save(net, path)
        with pytest.raises(FormatError, match="mini_class"):
            load_mininet(path)

    def test_mini_file_rejected_by_plain_loader(self, tmp_path):
        net = two_layer_toy()
        mini = build_mininet(net, 0, threshold=1.0)
        path = tmp_path / "mini.net"
        save_mininet(mini, path)
        with pytest.raises(FormatError):
            load(path)

    def test_multi_group_mini_rejected(self, tmp_path):
        rng = np.random.default_rng(37)
        net = random_hard_net(rng, input_dim=4, widths=(4,), class_count=2)
        from explogic.network import _serialize

        text = _serialize(net, extra_header=[("mini_class", "0"), ("mini_threshold", "1")])
        path = tmp_path / "bad.net"
        path.write_text(text)
        with pytest.raises(FormatError, match="single output group"):
            load_mininet(path)
