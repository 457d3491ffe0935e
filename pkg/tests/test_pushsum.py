import numpy as np
import pytest

from pushsumlab.graphs import (
    DirectedGraph,
    complete_graph,
    generate_sequence,
)
from pushsumlab.pushsum import (
    DegenerateStateError,
    NetworkState,
    Trace,
    absolute_probability,
    phi_product,
    pushsum_step,
    ratio,
    run_pushsum,
    run_weighted_pushsum,
    s_matrix,
    theoretical_constants,
    verify_absolute_probability,
    verify_product_limit,
    verify_ratio_identity,
)
from pushsumlab.weights import WeightMatrix, default_weights

# agent 0 sends to both, agent 1 keeps to itself
TWO_AGENT = DirectedGraph.from_arcs(2, [(0, 1)])
TWO_AGENT_W = np.array([[0.5, 0.0], [0.5, 1.0]])


class TestNetworkState:
    def test_promotes_one_dimensional_values(self):
        st = NetworkState(0, np.array([1.0, 2.0]), np.array([1.0, 1.0]))
        assert st.x.shape == (2, 1)

    def test_rejects_nonpositive_mass(self):
        with pytest.raises(ValueError):
            NetworkState(0, np.zeros((2, 1)), np.array([1.0, 0.0]))

    def test_rejects_mismatched_shapes(self):
        with pytest.raises(ValueError):
            NetworkState(0, np.zeros((3, 1)), np.ones(2))

    def test_ratio(self):
        st = NetworkState(0, np.array([[2.0], [6.0]]), np.array([1.0, 2.0]))
        assert np.array_equal(ratio(st), np.array([[2.0], [3.0]]))


class TestPushsumStep:
    def test_hand_computed_step(self):
        st = NetworkState(0, np.array([2.0, 4.0]), np.array([1.0, 1.0]))
        nxt = pushsum_step(st, TWO_AGENT_W)
        assert nxt.t == 1
        assert np.array_equal(nxt.x[:, 0], np.array([1.0, 5.0]))
        assert np.array_equal(nxt.y, np.array([0.5, 1.5]))
        assert np.allclose(ratio(nxt)[:, 0], np.array([2.0, 10.0 / 3.0]))

    def test_mass_conserved_on_random_runs(self):
        rng = np.random.default_rng(0)
        for seed in range(5):
            seq = generate_sequence(
                "random-spanning", n=5, horizon=80, seed=seed, params={"window": 3}
            )
            x0 = rng.standard_normal(5)
            tr = run_pushsum(seq, "default", x0, 80)
            totals = tr.xs.sum(axis=1)
            assert np.max(np.abs(totals - totals[0])) < 1e-12
            y_tot = tr.ys.sum(axis=1)
            assert np.max(np.abs(y_tot - y_tot[0])) < 1e-12

    def test_ratios_stay_in_initial_hull(self):
        # each new ratio is a convex combination of old ones
        rng = np.random.default_rng(3)
        seq = generate_sequence("random-spanning", n=6, horizon=100, seed=1, params={"window": 2})
        x0 = rng.standard_normal(6)
        tr = run_pushsum(seq, "default", x0, 100)
        zs = tr.zs[:, :, 0]
        lo, hi = zs[0].min(), zs[0].max()
        eps = 1e-12
        for k in range(1, len(zs)):
            assert zs[k].min() >= lo - eps and zs[k].max() <= hi + eps
            assert zs[k].min() >= zs[k - 1].min() - eps
            assert zs[k].max() <= zs[k - 1].max() + eps

    def test_converges_to_uniform_average(self):
        seq = generate_sequence("rotating-single-edge", n=4, horizon=400)
        tr = run_pushsum(seq, "default", [1.0, 2.0, 3.0, 4.0], 400)
        assert np.allclose(tr.zs[-1][:, 0], 2.5, atol=1e-10)


class TestInducedMatrix:
    def test_hand_computed_s(self):
        y = np.array([1.0, 1.0])
        s = s_matrix(TWO_AGENT_W, y)
        expected = np.array([[1.0, 0.0], [1.0 / 3.0, 2.0 / 3.0]])
        assert np.allclose(s, expected, atol=1e-15)
        assert np.allclose(s.sum(axis=1), 1.0, atol=1e-15)

    def test_s_reproduces_ratio_update(self):
        rng = np.random.default_rng(7)
        seq = generate_sequence("random-spanning", n=4, horizon=40, seed=2, params={"window": 2})
        tr = run_pushsum(seq, "default", rng.standard_normal(4), 40)
        for k in range(tr.steps):
            s = tr.s_mat(k)
            assert np.allclose(s @ tr.zs[k], tr.zs[k + 1], atol=1e-12)

    def test_inconsistent_y_next_rejected(self):
        y = np.array([1.0, 1.0])
        with pytest.raises(ValueError):
            s_matrix(TWO_AGENT_W, y, y_next=np.array([0.9, 1.1]))

    def test_sparsity_follows_weights(self):
        y = np.array([2.0, 0.5])
        s = s_matrix(TWO_AGENT_W, y)
        assert np.array_equal(s > 0.0, TWO_AGENT_W > 0.0)


class TestPhiProduct:
    def test_empty_product_is_identity(self):
        mats = [np.full((3, 3), 1.0 / 3.0)]
        assert np.array_equal(phi_product(mats, 0, 0), np.eye(3))

    def test_order_is_latest_on_the_left(self):
        a = np.array([[1.0, 1.0], [0.0, 1.0]])
        b = np.array([[1.0, 0.0], [1.0, 1.0]])
        got = phi_product([a, b], 2, 0)
        assert np.array_equal(got, b @ a)

    def test_rejects_reversed_interval(self):
        with pytest.raises(ValueError):
            phi_product([np.eye(2)], 0, 1)


class TestAbsoluteProbability:
    def test_normalization(self):
        pi = absolute_probability(np.array([0.5, 1.5]), 2.0)
        assert np.array_equal(pi, np.array([0.25, 0.75]))

    def test_recursion_on_hand_example(self):
        # pi(t) = S(t)^T pi(t+1) with pi = y / kappa
        y0 = np.array([1.0, 1.0])
        y1 = TWO_AGENT_W @ y0
        s = s_matrix(TWO_AGENT_W, y0, y1)
        pi0 = absolute_probability(y0, 2.0)
        pi1 = absolute_probability(y1, 2.0)
        assert np.allclose(s.T @ pi1, pi0, atol=1e-15)

    def test_verify_on_run(self):
        seq = generate_sequence("rotating-single-edge", n=5, horizon=60)
        tr = run_pushsum(seq, "default", np.arange(5.0), 60)
        assert verify_absolute_probability(tr) < 1e-12


class TestRatioIdentityAndLimit:
    def test_ratio_identity_small(self):
        seq = generate_sequence("random-spanning", n=4, horizon=50, seed=4, params={"window": 2})
        tr = run_pushsum(seq, "default", [0.0, 1.0, 2.0, 3.0], 50)
        for t, tau in ((50, 0), (50, 25), (30, 10), (10, 10)):
            assert verify_ratio_identity(tr, t, tau) < 1e-12

    def test_product_limit_decays(self):
        seq = generate_sequence("rotating-single-edge", n=4, horizon=200)
        tr = run_pushsum(seq, "default", [1.0, 2.0, 3.0, 4.0], 200)
        dev_half = verify_product_limit(tr, 0, 100)
        dev_full = verify_product_limit(tr, 0, 200)
        assert dev_full <= dev_half + 1e-12
        assert dev_full < 1e-10


class TestTheoreticalConstants:
    def test_two_agents_window_one(self):
        tc = theoretical_constants(2, 1)
        assert tc.eta_lb == 0.25
        assert tc.mu_ub == 0.75
        assert tc.c == 4.0

    def test_three_agents_window_two(self):
        tc = theoretical_constants(3, 2)
        assert tc.eta_lb == pytest.approx(1.0 / 729.0, rel=1e-15)
        assert tc.mu_ub == pytest.approx(np.sqrt(728.0 / 729.0), rel=1e-15)

    def test_single_agent(self):
        tc = theoretical_constants(1, 1)
        assert tc.eta_lb == 1.0 and tc.mu_ub == 0.0

    def test_saturation_keeps_values_usable(self):
        tc = theoretical_constants(50, 10)
        assert tc.eta_lb >= 1e-300
        assert 0.0 < tc.mu_ub < 1.0

    def test_monotone_in_size(self):
        small = theoretical_constants(3, 1)
        big = theoretical_constants(6, 1)
        assert big.eta_lb < small.eta_lb
        assert big.mu_ub > small.mu_ub

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            theoretical_constants(0, 1)
        with pytest.raises(ValueError):
            theoretical_constants(2, 0)


class TestRunners:
    def test_degenerate_mass_aborts(self):
        eps = 1e-301
        w = WeightMatrix(np.array([[eps, 0.0], [1.0 - eps, 1.0]]), beta=eps)
        seq = generate_sequence("static-complete", n=2, horizon=3)
        seq = type(seq)((DirectedGraph.from_arcs(2, [(0, 1)]),) * 3)
        with pytest.raises(DegenerateStateError):
            run_pushsum(seq, w, [1.0, 1.0], 3)

    def test_explicit_weight_list(self):
        g = complete_graph(2)
        w = default_weights(g)
        seq = generate_sequence("static-complete", n=2, horizon=2)
        tr = run_pushsum(seq, [w, w], [0.0, 2.0], 2)
        assert np.allclose(tr.zs[-1][:, 0], 1.0)

    def test_weight_list_length_checked(self):
        seq = generate_sequence("static-complete", n=2, horizon=3)
        w = default_weights(complete_graph(2))
        with pytest.raises(ValueError):
            run_pushsum(seq, [w], [0.0, 2.0], 3)

    def test_incompatible_weights_rejected(self):
        # ring weights are not compliant with the lone-edge graph
        seq = generate_sequence("rotating-single-edge", n=3, horizon=3)
        w = default_weights(complete_graph(3))
        with pytest.raises(ValueError):
            run_pushsum(seq, w, [0.0, 1.0, 2.0], 3)

    def test_weighted_limit(self):
        seq = generate_sequence("static-complete", n=2, horizon=200)
        tr = run_weighted_pushsum(seq, "default", [0.25, 0.75], [0.0, 4.0], 200)
        assert tr.kappa == 1.0
        assert np.allclose(tr.zs[-1][:, 0], 3.0, atol=1e-12)

    def test_weighted_limit_kappa_not_one(self):
        seq = generate_sequence("static-complete", n=2, horizon=200)
        tr = run_weighted_pushsum(seq, "default", [0.5, 1.5], [0.0, 2.0], 200)
        assert tr.kappa == 2.0
        target = (0.5 * 0.0 + 1.5 * 2.0) / 2.0
        assert np.allclose(tr.zs[-1][:, 0], target, atol=1e-12)

    def test_weighted_requires_positive_c(self):
        seq = generate_sequence("static-complete", n=2, horizon=5)
        with pytest.raises(ValueError):
            run_weighted_pushsum(seq, "default", [0.0, 1.0], [0.0, 2.0], 5)


class TestTrace:
    def make_trace(self):
        seq = generate_sequence("rotating-single-edge", n=3, horizon=12)
        return run_pushsum(seq, "default", [3.0, 6.0, 9.0], 12)

    def test_shapes(self):
        tr = self.make_trace()
        assert tr.xs.shape == (13, 3, 1)
        assert tr.ys.shape == (13, 3)
        assert tr.w_mats.shape == (12, 3, 3)
        assert tr.steps == 12 and tr.n == 3 and tr.d == 1

    def test_times_and_index(self):
        tr = self.make_trace()
        assert np.array_equal(tr.times(), np.arange(13))
        assert tr.index_of(0) == 0 and tr.index_of(12) == 12
        with pytest.raises(ValueError):
            tr.index_of(13)

    def test_weighted_mean_is_invariant(self):
        tr = self.make_trace()
        zw = tr.z_weighted
        assert np.allclose(zw, zw[0], atol=1e-12)
        assert zw[0, 0] == pytest.approx(6.0)

    def test_state_round_trip(self):
        tr = self.make_trace()
        st = tr.state(4)
        assert st.t == 4
        assert np.array_equal(st.x, tr.xs[4])

    def test_s_matrices_stack(self):
        tr = self.make_trace()
        stack = tr.s_matrices()
        assert stack.shape == (12, 3, 3)
        assert np.allclose(stack.sum(axis=2), 1.0, atol=1e-12)
