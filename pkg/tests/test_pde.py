import numpy as np
import pytest

from chainlimit import (
    ConfigurationError,
    FieldSpec,
    GridSpec,
    ModelParams,
    PdeProblem,
    derive_probabilities,
    drift_network_1d,
    refined_grid,
    rhs_net1d,
    rhs_net2d,
    rhs_rw1d,
    sample_on_chain_grid,
    solve,
    solve_on_chain_lattice,
    stability_bound,
)
from chainlimit.simulate import SpaceTimeField

CONST0 = FieldSpec.constant(0.0)


def rw_problem(n, b=0.5, c=0.0, z0=None, t_end=0.05, dt=None, extent=(0.0, 1.0)):
    params = ModelParams(
        kind="rw1d",
        capacity=1,
        diffusion=FieldSpec.constant(b),
        conv_left=FieldSpec.constant(c),
        conv_right=FieldSpec.constant(0.0),
        source=CONST0,
        init=z0 if z0 is not None else CONST0,
    )
    grid = GridSpec.line(extent[0], extent[1], n)
    return PdeProblem(params=params, grid=grid, t_end=t_end,
                      output_times=np.array([0.0, t_end]), dt=dt)


def sine_table(grid):
    s = grid.interior_positions(0)
    return FieldSpec.tabulated(np.sin(np.pi * s))


def net_params(kind="net1d", b=0.5, cl=0.0, cr=0.0, g=0.0, init=None, capacity=1000):
    init = init if init is not None else CONST0
    g = g if isinstance(g, FieldSpec) else FieldSpec.constant(g)
    return ModelParams(
        kind=kind,
        capacity=capacity,
        diffusion=FieldSpec.constant(b),
        conv_left=FieldSpec.constant(cl),
        conv_right=FieldSpec.constant(cr),
        source=g,
        init=init,
    )


class TestRhsRw1d:
    def test_zero_is_zero(self):
        grid = GridSpec.line(0.0, 1.0, 20)
        out = rhs_rw1d(np.zeros(22), grid, FieldSpec.constant(0.5), CONST0)
        assert np.array_equal(out, np.zeros(20))

    def test_sine_mode_laplacian(self):
        b = 0.5
        for n, tol in ((99, None), (199, None)):
            grid = GridSpec.line(0.0, 1.0, n)
            s = grid.axis_positions(0)
            z = np.sin(np.pi * s)
            z[0] = z[-1] = 0.0
            out = rhs_rw1d(z, grid, FieldSpec.constant(b), CONST0)
            expected = -b * np.pi**2 * z[1:-1]
            err = np.max(np.abs(out - expected))
            # second-order spatial accuracy of the central stencil
            bound = b * np.pi**4 * grid.ds**2 / 12 * 1.5
            assert err < bound

    def test_constant_interior_flat(self):
        grid = GridSpec.line(0.0, 1.0, 30)
        z = np.full(32, 0.7)
        z[0] = z[-1] = 0.0
        out = rhs_rw1d(z, grid, FieldSpec.constant(0.5), FieldSpec.constant(0.3))
        assert np.allclose(out[2:-2], 0.0, atol=1e-13)


class TestRhsNet1d:
    def test_zero_returns_source(self):
        grid = GridSpec.line(-1.0, 1.0, 15)
        g = FieldSpec.gaussian(0.5)
        out = rhs_net1d(np.zeros(17), grid, FieldSpec.constant(0.5), CONST0, g)
        assert np.allclose(out, g.values_on_grid(grid), atol=1e-15)

    def test_saturated_interior_returns_source(self):
        grid = GridSpec.line(-1.0, 1.0, 21)
        z = np.ones(23)
        z[0] = z[-1] = 0.0
        g = FieldSpec.constant(0.2)
        out = rhs_net1d(z, grid, FieldSpec.constant(0.5), CONST0, g)
        # deep interior: z(1-z)^2 and the flux factor vanish at z = 1
        assert np.allclose(out[3:-3], 0.2, atol=1e-13)

    def test_symmetric_input_symmetric_output(self):
        grid = GridSpec.line(-1.0, 1.0, 25)
        s = grid.axis_positions(0)
        z = 0.6 * np.exp(-3 * s**2)
        z[0] = z[-1] = 0.0
        out = rhs_net1d(z, grid, FieldSpec.constant(0.4), CONST0, FieldSpec.gaussian(0.3))
        assert np.allclose(out, out[::-1], atol=1e-13)


class TestRhsNet2d:
    def test_zero_returns_source(self):
        grid = GridSpec.rectangle((-1.0, 1.0), 10)
        g = FieldSpec.gaussian(0.5)
        out = rhs_net2d(np.zeros((12, 12)), grid, FieldSpec.constant(0.25),
                        FieldSpec.constant(0.25), CONST0, CONST0, g)
        assert np.allclose(out, g.values_on_grid(grid), atol=1e-15)

    def test_dihedral_symmetry(self):
        grid = GridSpec.rectangle((-1.0, 1.0), 12)
        mesh = np.zeros((14, 14))
        s = grid.axis_positions(0)
        m1, m2 = np.meshgrid(s, s, indexing="ij")
        mesh[:] = 0.5 * np.exp(-2 * (m1**2 + m2**2))
        mesh[0, :] = mesh[-1, :] = mesh[:, 0] = mesh[:, -1] = 0.0
        out = rhs_net2d(mesh, grid, FieldSpec.constant(0.25), FieldSpec.constant(0.25),
                        CONST0, CONST0, FieldSpec.gaussian(0.2))
        assert np.allclose(out, out[::-1, :], atol=1e-13)
        assert np.allclose(out, out[:, ::-1], atol=1e-13)
        assert np.allclose(out, out.T, atol=1e-13)

    def test_radial_peak_decays(self):
        grid = GridSpec.rectangle((-1.0, 1.0), 11)
        mesh = np.zeros((13, 13))
        s = grid.axis_positions(0)
        m1, m2 = np.meshgrid(s, s, indexing="ij")
        mesh[:] = 0.5 * np.exp(-(m1**2 + m2**2))
        mesh[0, :] = mesh[-1, :] = mesh[:, 0] = mesh[:, -1] = 0.0
        out = rhs_net2d(mesh, grid, FieldSpec.constant(0.25), FieldSpec.constant(0.25),
                        CONST0, CONST0, CONST0)
        center = out[5, 5]
        assert center < 0.0


class TestSolve:
    def test_zero_everywhere(self):
        problem = rw_problem(20, z0=CONST0)
        field = solve(problem)
        assert np.array_equal(field.values, np.zeros_like(field.values))

    def sine_error(self, n, horizon=0.05):
        grid = GridSpec.line(0.0, 1.0, n)
        dt = grid.ds**2 / 2
        steps = round(horizon / dt)
        t_end = steps * dt
        problem = rw_problem(n, b=0.5, z0=sine_table(grid), t_end=t_end, dt=dt)
        field = solve(problem)
        s = grid.interior_positions(0)
        exact = np.exp(-0.5 * np.pi**2 * t_end) * np.sin(np.pi * s)
        return np.max(np.abs(field.at_time(t_end) - exact))

    def test_sine_decay_oracle(self):
        err = self.sine_error(99)
        assert err < 2e-4

    def test_second_order_in_space(self):
        coarse = self.sine_error(99)
        fine = self.sine_error(199)
        # halving ds with dt tied to ds^2 divides the error by ~4
        ratio = coarse / fine
        assert 3.5 < ratio < 4.5

    def test_constant_source_linear_growth(self):
        grid = GridSpec.line(-1.0, 1.0, 20)
        gamma = 0.3
        errs = []
        for t_end in (4e-4, 2e-4):
            params = net_params(g=gamma)
            problem = PdeProblem(params=params, grid=grid, t_end=t_end,
                                 output_times=np.array([0.0, t_end]), dt=t_end / 64)
            field = solve(problem)
            errs.append(np.max(np.abs(field.at_time(t_end) - gamma * t_end)))
        assert 3.0 < errs[0] / errs[1] < 5.0

    def test_rw_mass_strictly_decreasing(self):
        grid = GridSpec.line(0.0, 1.0, 50)
        dt = grid.ds**2 / 2
        t_end = 400 * dt
        problem = PdeProblem(
            params=rw_problem(50, z0=sine_table(grid)).params,
            grid=grid,
            t_end=t_end,
            output_times=np.arange(5) * (100 * dt),
            dt=dt,
        )
        field = solve(problem)
        mass = field.values.sum(axis=1) * grid.ds
        assert np.all(np.diff(mass) < 0)

    def test_stability_violation_rejected(self):
        grid = GridSpec.line(0.0, 1.0, 20)
        dt_bad = 2.5 * grid.ds**2  # past ds^2/(2b) for b = 1/2
        problem = rw_problem(20, z0=sine_table(grid), t_end=dt_bad * 10, dt=dt_bad)
        with pytest.raises(ConfigurationError, match="stability"):
            solve(problem)

    def test_output_gap_must_be_whole_steps(self):
        grid = GridSpec.line(0.0, 1.0, 20)
        dt = grid.ds**2 / 2
        problem = rw_problem(20, z0=sine_table(grid), t_end=dt * 10.5, dt=dt)
        problem = PdeProblem(params=problem.params, grid=grid, t_end=dt * 10.5,
                             output_times=np.array([0.0, dt * 10.5]), dt=dt)
        with pytest.raises(ConfigurationError, match="whole"):
            solve(problem)


class TestStabilityBound:
    def test_diffusion_only(self):
        grid = GridSpec.line(0.0, 1.0, 20)
        params = rw_problem(20).params
        assert stability_bound(params, grid) == pytest.approx(grid.ds**2 / (2 * 0.5))

    def test_net1d_uses_conservative_factor(self):
        grid = GridSpec.line(-1.0, 1.0, 20)
        params = net_params(b=0.5)
        expected = grid.ds**2 / (2 * 0.5 * (4.0 / 3.0))
        assert stability_bound(params, grid) == pytest.approx(expected)


class TestDriftPdeConsistency:
    def test_scaled_drift_approaches_rhs_in_interior(self):
        # away from the destination rows, the exact expected drift divided by
        # ds^2 converges to the continuum right-hand side at second order;
        # the edge rows differ pointwise by design (their modified
        # transmission rules enforce the absorbing boundary) and are damped
        # along trajectories rather than pointwise
        gaps = []
        for n in (20, 40):
            grid = GridSpec.line(-1.0, 1.0, n)
            params = net_params(b=0.5, cl=0.5, cr=-0.5,
                                g=FieldSpec.gaussian(0.5), capacity=n**3)
            tab = derive_probabilities(params, grid)
            s = grid.axis_positions(0)
            z = 0.5 * np.exp(-(s**2)) - 0.5 * np.exp(-1.0)
            z[0] = z[-1] = 0.0
            f = drift_network_1d(z[1:-1], params, grid, tables=tab)
            rhs = rhs_net1d(z, grid, params.diffusion, FieldSpec.constant(1.0),
                            params.source)
            gap = np.abs(f / grid.ds**2 - rhs)
            gaps.append(gap[1:-1].max())
        ratio = gaps[0] / gaps[1]
        assert 3.0 < ratio < 4.8


class TestSampling:
    def test_identity_on_same_grid(self):
        grid = GridSpec.line(0.0, 1.0, 9)
        vals = np.linspace(0, 1, 9)[None, :]
        field = SpaceTimeField(grid=grid, times=np.array([0.0]), values=vals)
        out = sample_on_chain_grid(field, grid, [0.0])
        assert np.array_equal(out.values, vals)

    def test_nested_refinement_exact(self):
        chain = GridSpec.line(0.0, 1.0, 4)
        fine = refined_grid(chain, 2)
        assert fine.counts == (9,)
        vals = np.arange(9, dtype=float)[None, :]
        field = SpaceTimeField(grid=fine, times=np.array([0.0]), values=vals)
        out = sample_on_chain_grid(field, chain, [0.0])
        assert np.array_equal(out.values[0], [1.0, 3.0, 5.0, 7.0])

    def test_tie_breaks_toward_lower_index(self):
        chain = GridSpec.line(0.0, 1.0, 1)  # node at 0.5
        fine = GridSpec.line(0.0, 1.0, 2)  # nodes at 1/3, 2/3
        vals = np.array([[10.0, 20.0]])
        field = SpaceTimeField(grid=fine, times=np.array([0.0]), values=vals)
        out = sample_on_chain_grid(field, chain, [0.0])
        assert out.values[0, 0] == 10.0

    def test_extent_mismatch_rejected(self):
        chain = GridSpec.line(0.0, 1.0, 4)
        other = GridSpec.line(0.0, 2.0, 9)
        field = SpaceTimeField(grid=other, times=np.array([0.0]),
                               values=np.zeros((1, 9)))
        with pytest.raises(Exception):
            sample_on_chain_grid(field, chain, [0.0])


class TestSolveOnChainLattice:
    def test_matched_outputs_align_with_marks(self):
        grid = GridSpec.line(-1.0, 1.0, 10)
        params = net_params(b=0.5, g=FieldSpec.gaussian(0.5),
                            init=FieldSpec.gaussian(0.5), capacity=1000)
        marks = [0, 50, 100]
        field = solve_on_chain_lattice(params, grid, marks)
        dt = params.time_step(grid)
        assert np.allclose(field.times, np.array(marks) * dt)
        assert field.values.shape == (3, 10)
        assert np.all(field.values >= -1e-9)

    def test_2d_runs_and_stays_bounded(self):
        grid = GridSpec.rectangle((-1.0, 1.0), 8)
        params = ModelParams(
            kind="net2d",
            capacity=512,
            diffusion1=FieldSpec.constant(0.25),
            diffusion2=FieldSpec.constant(0.25),
            conv_east=FieldSpec.constant(0.0),
            conv_west=FieldSpec.constant(0.0),
            conv_north=FieldSpec.constant(0.0),
            conv_south=FieldSpec.constant(0.0),
            source=FieldSpec.gaussian(0.5),
            init=FieldSpec.gaussian(0.5),
        )
        field = solve_on_chain_lattice(params, grid, [0, 20, 40])
        assert field.values.shape == (3, 8, 8)
        assert np.all(field.values >= -1e-9)
        assert np.all(field.values <= 1.0)
