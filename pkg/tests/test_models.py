import numpy as np
import pytest

from chainlimit import (
    ChainState,
    DomainError,
    FieldSpec,
    GridSpec,
    ModelParams,
    RngStream,
    derive_probabilities,
    drift_network_1d,
    drift_network_2d,
    drift_random_walk,
    one_step_statistics,
    step_network_1d,
    step_network_2d,
    step_random_walk,
)


def params_1d(kind="net1d", b=0.25, cl=0.0, cr=0.0, g=0.0, capacity=1000):
    return ModelParams(
        kind=kind,
        capacity=capacity,
        diffusion=FieldSpec.constant(b),
        conv_left=FieldSpec.constant(cl),
        conv_right=FieldSpec.constant(cr),
        source=FieldSpec.constant(g) if not isinstance(g, FieldSpec) else g,
        init=FieldSpec.constant(0.0),
    )


def params_2d(b1=0.25, b2=0.25, ce=0.0, cw=0.0, cn=0.0, cs=0.0, g=0.0, capacity=1000):
    return ModelParams(
        kind="net2d",
        capacity=capacity,
        diffusion1=FieldSpec.constant(b1),
        diffusion2=FieldSpec.constant(b2),
        conv_east=FieldSpec.constant(ce),
        conv_west=FieldSpec.constant(cw),
        conv_north=FieldSpec.constant(cn),
        conv_south=FieldSpec.constant(cs),
        source=FieldSpec.constant(g),
        init=FieldSpec.constant(0.0),
    )


GRID3 = GridSpec.line(-1.0, 1.0, 3)


def assert_within_stderr(mean, expected, stderr, k=4.0):
    assert np.all(np.abs(mean - expected) <= k * stderr + 1e-9), (
        f"mean {mean} vs expected {expected} outside {k} stderr {stderr}"
    )


class TestDriftRandomWalk:
    def test_zero_state(self):
        rw = params_1d("rw1d")
        out = drift_random_walk(np.zeros(3), rw, GRID3)
        assert np.array_equal(out, np.zeros(3))

    def test_single_occupied_node(self):
        rw = params_1d("rw1d")
        out = drift_random_walk(np.array([1.0, 0.0, 0.0]), rw, GRID3)
        assert np.array_equal(out, [-0.5, 0.25, 0.0])

    def test_uniform_state_interior_cancels(self):
        rw = params_1d("rw1d")
        out = drift_random_walk(np.array([0.4, 0.4, 0.4]), rw, GRID3)
        assert np.allclose(out, [-0.1, 0.0, -0.1], rtol=0, atol=1e-15)

    def test_length_mismatch(self):
        rw = params_1d("rw1d")
        with pytest.raises(DomainError):
            drift_random_walk(np.zeros(4), rw, GRID3)

    def test_sink_outflow_only_at_edges(self):
        # with symmetric constant probabilities the drift telescopes to the
        # two boundary loss terms
        rw = params_1d("rw1d", b=0.3)
        x = np.array([0.2, 0.7, 0.5, 0.1, 0.9])
        g = GridSpec.line(0.0, 1.0, 5)
        out = drift_random_walk(x, rw, g)
        assert out.sum() == pytest.approx(-(0.3 * x[0] + 0.3 * x[-1]))


class TestDriftNetwork1d:
    def test_zero_state_returns_source(self):
        g_field = FieldSpec.gaussian(0.5)
        params = params_1d(g=g_field, capacity=500)
        tab = derive_probabilities(params, GRID3)
        out = drift_network_1d(np.zeros(3), params, GRID3)
        assert np.array_equal(out, tab.step_source)

    def test_middle_occupied(self):
        params = params_1d()
        out = drift_network_1d(np.array([0.0, 1.0, 0.0]), params, GRID3)
        assert np.array_equal(out, [0.25, -0.5, 0.25])

    def test_saturated_drains_at_sinks_only(self):
        params = params_1d()
        out = drift_network_1d(np.array([1.0, 1.0, 1.0]), params, GRID3)
        assert np.array_equal(out, [-0.25, 0.0, -0.25])

    def test_state_outside_unit_box_rejected(self):
        params = params_1d()
        with pytest.raises(DomainError):
            drift_network_1d(np.array([0.0, 1.5, 0.0]), params, GRID3)

    def test_boundary_components_match_edge_formulas(self):
        n = 7
        grid = GridSpec.line(-1.0, 1.0, n)
        params = ModelParams(
            kind="net1d",
            capacity=100,
            diffusion=FieldSpec.gaussian(0.35),
            conv_left=FieldSpec.affine(0.2, [0.1]),
            conv_right=FieldSpec.constant(0.05),
            source=FieldSpec.gaussian(0.2),
            init=FieldSpec.constant(0.0),
        )
        tab = derive_probabilities(params, grid)
        rng = np.random.default_rng(7)
        x = rng.uniform(0.0, 1.0, n)
        out = drift_network_1d(x, params, grid, tables=tab)

        pl, pr, g = tab["p_left"], tab["p_right"], tab.step_source
        first = (1 - x[0]) * pl[2] * x[1] - x[0] * (
            pl[1] + pr[1] * (1 - x[1]) * (1 - x[2])
        ) + g[0]
        last = (1 - x[-1]) * pr[n - 1] * x[-2] - x[-1] * (
            pr[n] + pl[n] * (1 - x[-2]) * (1 - x[-3])
        ) + g[-1]
        assert out[0] == pytest.approx(first, rel=1e-13)
        assert out[-1] == pytest.approx(last, rel=1e-13)

    def test_matches_zero_padded_generic_formula(self):
        n = 9
        grid = GridSpec.line(0.0, 1.0, n)
        params = params_1d(b=0.2, cl=0.3, cr=0.1, g=0.4, capacity=50)
        tab = derive_probabilities(params, grid)
        rng = np.random.default_rng(3)
        x = rng.uniform(0.0, 1.0, n)
        out = drift_network_1d(x, params, grid, tables=tab)

        xp = np.zeros(n + 4)
        xp[2 : n + 2] = x
        pl, pr, g = tab["p_left"], tab["p_right"], tab.step_source
        for i in range(n):
            node = i + 1
            inc = (1 - xp[i + 2]) * (
                pr[node - 1] * xp[i + 1] * (1 - xp[i + 3])
                + pl[node + 1] * xp[i + 3] * (1 - xp[i + 1])
            )
            dec = xp[i + 2] * (
                pr[node] * (1 - xp[i + 3]) * (1 - xp[i + 4])
                + pl[node] * (1 - xp[i + 1]) * (1 - xp[i])
            )
            assert out[i] == pytest.approx(inc - dec + g[i], rel=1e-13)


class TestDriftNetwork2d:
    def test_zero_state_returns_source(self):
        params = params_2d(g=0.3, capacity=200)
        grid = GridSpec.rectangle((-1.0, 1.0), 4)
        tab = derive_probabilities(params, grid)
        out = drift_network_2d(np.zeros((4, 4)), params, grid)
        assert np.array_equal(out, tab.step_source)

    def test_saturated_block_drains_at_edges(self):
        params = params_2d()
        grid = GridSpec.rectangle((-1.0, 1.0), 5)
        out = drift_network_2d(np.ones((5, 5)), params, grid)
        interior = out[1:-1, 1:-1]
        assert np.array_equal(interior, np.zeros((3, 3)))
        # edge node (not corner) drains through its single sink-facing side
        assert out[0, 2] == pytest.approx(-0.25)
        assert out[2, 0] == pytest.approx(-0.25)
        # corners face two sinks
        assert out[0, 0] == pytest.approx(-0.5)
        assert out[4, 4] == pytest.approx(-0.5)

    def test_symmetric_state_symmetric_drift(self):
        params = params_2d(b1=0.2, b2=0.2)
        grid = GridSpec.rectangle((-1.0, 1.0), 6)
        rng = np.random.default_rng(11)
        raw = rng.uniform(0.0, 1.0, (6, 6))
        sym = (raw + raw[::-1] + raw[:, ::-1] + raw[::-1, ::-1]) / 4.0
        sym = (sym + sym.T) / 2.0
        out = drift_network_2d(sym, params, grid)
        assert np.allclose(out, out[::-1], atol=1e-14)
        assert np.allclose(out, out[:, ::-1], atol=1e-14)
        assert np.allclose(out, out.T, atol=1e-14)


class TestStepRandomWalk:
    def test_zero_stays_zero(self):
        rw = params_1d("rw1d", capacity=10)
        state = ChainState(np.zeros(3, dtype=np.int64), 10)
        out = step_random_walk(state, rw, GRID3, RngStream(1))
        assert np.array_equal(out.counts, np.zeros(3))

    def test_single_node_full_probability_exit(self):
        grid = GridSpec.line(0.0, 1.0, 1)
        rw = params_1d("rw1d", b=0.5, capacity=5)
        state = ChainState(np.array([5]), 5)
        for seed in range(10):
            out = step_random_walk(state, rw, grid, RngStream(seed))
            assert out.counts[0] == 0

    def test_mass_never_increases(self):
        grid = GridSpec.line(0.0, 1.0, 5)
        rw = params_1d("rw1d", b=0.4, capacity=200)
        rng = RngStream(42).generator()
        state = ChainState(np.full(5, 40, dtype=np.int64), 200)
        total = state.counts.sum()
        for _ in range(500):
            state = step_random_walk(state, rw, grid, rng)
            new_total = state.counts.sum()
            assert new_total <= total
            total = new_total

    def test_determinism(self):
        grid = GridSpec.line(0.0, 1.0, 5)
        rw = params_1d("rw1d", b=0.4, capacity=100)
        outs = []
        for _ in range(2):
            rng = RngStream(7).generator()
            state = ChainState(np.full(5, 20, dtype=np.int64), 100)
            for _ in range(50):
                state = step_random_walk(state, rw, grid, rng)
            outs.append(state.counts.copy())
        assert np.array_equal(outs[0], outs[1])

    def test_one_step_mean_matches_drift(self):
        capacity = 10**6
        rw = params_1d("rw1d", b=0.25, capacity=capacity)
        state = ChainState(np.array([0, capacity, 0], dtype=np.int64), capacity)
        mean, stderr = one_step_statistics(
            state, rw, GRID3, RngStream(1), replications=10_000
        )
        expected = capacity * drift_random_walk(state.normalized, rw, GRID3)
        assert_within_stderr(mean, expected, stderr)


class TestStepNetwork1d:
    def test_zero_stays_zero(self):
        params = params_1d(capacity=50)
        state = ChainState(np.zeros(3, dtype=np.int64), 50)
        out = step_network_1d(state, params, GRID3, RngStream(3))
        assert np.array_equal(out.counts, np.zeros(3))

    def test_counts_stay_in_capacity_box(self):
        params = params_1d(b=0.3, g=2.0, capacity=8)
        grid = GridSpec.line(-1.0, 1.0, 6)
        rng = RngStream(9).generator()
        state = ChainState(np.array([8, 0, 4, 8, 1, 0], dtype=np.int64), 8)
        for _ in range(2000):
            state = step_network_1d(state, params, grid, rng)
            assert np.all(state.counts >= 0)
            assert np.all(state.counts <= 8)

    def test_determinism(self):
        params = params_1d(b=0.3, g=0.5, capacity=20)
        grid = GridSpec.line(-1.0, 1.0, 6)
        finals = []
        for _ in range(2):
            rng = RngStream(5).generator()
            state = ChainState(np.full(6, 10, dtype=np.int64), 20)
            for _ in range(200):
                state = step_network_1d(state, params, grid, rng)
            finals.append(state.counts.copy())
        assert np.array_equal(finals[0], finals[1])

    def test_one_step_mean_matches_drift_middle(self):
        capacity = 1000
        params = params_1d(capacity=capacity)
        state = ChainState(np.array([0, capacity, 0], dtype=np.int64), capacity)
        mean, stderr = one_step_statistics(
            state, params, GRID3, RngStream(2), replications=100_000
        )
        expected = drift_network_1d(state.normalized, params, GRID3)
        assert_within_stderr(mean, expected, stderr)

    def test_one_step_mean_matches_drift_loaded_edge(self):
        capacity = 500
        params = params_1d(capacity=capacity)
        grid = GridSpec.line(-1.0, 1.0, 5)
        counts = np.array([capacity, 0, 0, 0, 0], dtype=np.int64)
        state = ChainState(counts, capacity)
        mean, stderr = one_step_statistics(
            state, params, grid, RngStream(4), replications=100_000
        )
        expected = drift_network_1d(state.normalized, params, grid)
        assert_within_stderr(mean, expected, stderr)

    def test_one_step_mean_matches_drift_unbalanced_probs(self):
        # direction probabilities sum to 0.5 here, so the conditional
        # transmit/direction split differs from a plain renormalization
        capacity = 400
        params = params_1d(b=0.25, cl=0.1, cr=-0.1, capacity=capacity)
        grid = GridSpec.line(-1.0, 1.0, 4)
        rng = np.random.default_rng(8)
        counts = rng.integers(0, capacity + 1, 4).astype(np.int64)
        state = ChainState(counts, capacity)
        mean, stderr = one_step_statistics(
            state, params, grid, RngStream(6), replications=100_000
        )
        expected = drift_network_1d(state.normalized, params, grid)
        assert_within_stderr(mean, expected, stderr)

    def test_single_node_drains_both_ways(self):
        grid = GridSpec.line(0.0, 1.0, 1)
        capacity = 300
        params = params_1d(b=0.3, capacity=capacity)
        state = ChainState(np.array([capacity], dtype=np.int64), capacity)
        mean, stderr = one_step_statistics(
            state, params, grid, RngStream(12), replications=100_000
        )
        assert_within_stderr(mean, np.array([-0.6]), stderr)


class TestStepNetwork2d:
    def test_zero_stays_zero(self):
        params = params_2d(capacity=40)
        grid = GridSpec.rectangle((-1.0, 1.0), 3)
        state = ChainState(np.zeros((3, 3), dtype=np.int64), 40)
        out = step_network_2d(state, params, grid, RngStream(1))
        assert np.array_equal(out.counts, np.zeros((3, 3)))

    def test_one_step_mean_matches_drift(self):
        capacity = 200
        params = params_2d(capacity=capacity)
        grid = GridSpec.rectangle((-1.0, 1.0), 3)
        rng = np.random.default_rng(21)
        counts = rng.integers(0, capacity + 1, (3, 3)).astype(np.int64)
        state = ChainState(counts, capacity)
        mean, stderr = one_step_statistics(
            state, params, grid, RngStream(9), replications=100_000
        )
        expected = drift_network_2d(state.normalized, params, grid)
        assert_within_stderr(mean, expected, stderr)

    def test_determinism(self):
        params = params_2d(g=0.4, capacity=15)
        grid = GridSpec.rectangle((-1.0, 1.0), 4)
        finals = []
        for _ in range(2):
            rng = RngStream(31).generator()
            state = ChainState(np.full((4, 4), 7, dtype=np.int64), 15)
            for _ in range(100):
                state = step_network_2d(state, params, grid, rng)
            finals.append(state.counts.copy())
        assert np.array_equal(finals[0], finals[1])

    def test_counts_stay_in_capacity_box(self):
        params = params_2d(g=3.0, capacity=6)
        grid = GridSpec.rectangle((-1.0, 1.0), 4)
        rng = RngStream(17).generator()
        state = ChainState(np.full((4, 4), 3, dtype=np.int64), 6)
        for _ in range(500):
            state = step_network_2d(state, params, grid, rng)
            assert np.all(state.counts >= 0)
            assert np.all(state.counts <= 6)
