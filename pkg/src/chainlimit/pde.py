"""Explicit finite-difference solvers for the three limiting PDEs.

Method of lines with conservative central differences in space (nonlinear
fluxes at half-points with arithmetic averaging of the state) and forward
Euler in time, zero Dirichlet boundaries. The time step must satisfy the
diffusion-convection stability bound; violations are rejected, not repaired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DomainError, InstabilityError
from .grids import FieldSpec, GridSpec, ModelParams
from .kernels import get_kernel
from .simulate import SpaceTimeField

_PDE_TOL = 1e-6  # admissible overshoot of [0, 1] before declaring instability
_SAFETY = 0.8  # fraction of the stability bound used when auto-selecting dt


@dataclass(frozen=True)
class PdeProblem:
    """One PDE solve: model coefficients, solver grid, horizon, output times."""

    params: ModelParams
    grid: GridSpec
    t_end: float
    output_times: Optional[np.ndarray] = None  # defaults to ~100 uniform slices
    dt: Optional[float] = None  # None selects the largest safe step

    def resolved_output_times(self) -> np.ndarray:
        if self.output_times is not None:
            t = np.asarray(self.output_times, dtype=float)
        else:
            t = np.linspace(0.0, self.t_end, 101)
        if t[0] != 0.0:
            t = np.concatenate([[0.0], t])
        if np.any(np.diff(t) <= 0) or t[-1] > self.t_end * (1 + 1e-12):
            raise ConfigurationError("output times must increase and stay within t_end")
        return t


def _face_positions(grid: GridSpec, axis: int) -> np.ndarray:
    lo, _ = grid.extents[axis]
    n = grid.counts[axis]
    return lo + (np.arange(n + 1) + 0.5) * grid.ds


def _field_faces(f: FieldSpec, grid: GridSpec, axis: int) -> np.ndarray:
    """Field values at half-points along ``axis`` (other axes at interior nodes)."""
    if f.kind == "tabulated":
        padded = _nearest_fill(f.values_on_grid(grid, include_boundary=True), grid)
        lo = [slice(1, n + 1) for n in grid.counts]
        hi = [slice(1, n + 1) for n in grid.counts]
        lo[axis] = slice(0, grid.counts[axis] + 1)
        hi[axis] = slice(1, grid.counts[axis] + 2)
        return 0.5 * (padded[tuple(lo)] + padded[tuple(hi)])
    coords = []
    for ax in range(grid.dimension):
        coords.append(_face_positions(grid, ax) if ax == axis else grid.interior_positions(ax))
    if grid.dimension == 1:
        return np.asarray(f.values(coords[0]), dtype=float)
    mesh = np.meshgrid(*coords, indexing="ij")
    return np.asarray(f.values(*mesh), dtype=float)


def _field_face_derivative(f: FieldSpec, grid: GridSpec, axis: int) -> np.ndarray:
    if f.kind == "tabulated":
        padded = _nearest_fill(f.values_on_grid(grid, include_boundary=True), grid)
        lo = [slice(1, n + 1) for n in grid.counts]
        hi = [slice(1, n + 1) for n in grid.counts]
        lo[axis] = slice(0, grid.counts[axis] + 1)
        hi[axis] = slice(1, grid.counts[axis] + 2)
        return (padded[tuple(hi)] - padded[tuple(lo)]) / grid.ds
    coords = []
    for ax in range(grid.dimension):
        coords.append(_face_positions(grid, ax) if ax == axis else grid.interior_positions(ax))
    if grid.dimension == 1:
        return np.asarray(f.derivative(0, coords[0]), dtype=float)
    mesh = np.meshgrid(*coords, indexing="ij")
    return np.asarray(f.derivative(axis, *mesh), dtype=float)


def _nearest_fill(padded: np.ndarray, grid: GridSpec) -> np.ndarray:
    out = padded.copy()
    for axis in range(grid.dimension):
        lo = [slice(None)] * grid.dimension
        hi = [slice(None)] * grid.dimension
        lo[axis], hi[axis] = 0, -1
        src_lo, src_hi = list(lo), list(hi)
        src_lo[axis], src_hi[axis] = 1, -2
        out[tuple(lo)] = out[tuple(src_lo)]
        out[tuple(hi)] = out[tuple(src_hi)]
    return out


def _combined_convection(params: ModelParams):
    """PDE convection coefficients from the directional probability biases."""
    if params.kind == "net2d":
        return None
    return params.conv_left, params.conv_right


def _coefficients(params: ModelParams, grid: GridSpec) -> dict:
    """Arrays consumed by the stepping kernels, evaluated once per solve."""
    if params.kind == "rw1d":
        cl, cr = _combined_convection(params)
        b_face = _field_faces(params.diffusion, grid, 0)
        a_face = (
            _field_face_derivative(params.diffusion, grid, 0)
            + _field_faces(cl, grid, 0)
            - _field_faces(cr, grid, 0)
        )
        return {"b_face": b_face, "a_face": a_face}
    if params.kind == "net1d":
        cl, cr = _combined_convection(params)
        return {
            "b": params.diffusion.values_on_grid(grid),
            "b_s": params.diffusion.derivative_on_grid(grid, 0, 1),
            "b_ss": params.diffusion.derivative_on_grid(grid, 0, 2),
            "c_face": _field_faces(cl, grid, 0) - _field_faces(cr, grid, 0),
            "g": params.source.values_on_grid(grid),
        }
    return {
        "b1": params.diffusion1.values_on_grid(grid),
        "b1_s": params.diffusion1.derivative_on_grid(grid, 0, 1),
        "b1_ss": params.diffusion1.derivative_on_grid(grid, 0, 2),
        "b2": params.diffusion2.values_on_grid(grid),
        "b2_s": params.diffusion2.derivative_on_grid(grid, 1, 1),
        "b2_ss": params.diffusion2.derivative_on_grid(grid, 1, 2),
        "c1_face": _field_faces(params.conv_west, grid, 0) - _field_faces(params.conv_east, grid, 0),
        "c2_face": _field_faces(params.conv_south, grid, 1) - _field_faces(params.conv_north, grid, 1),
        "g": params.source.values_on_grid(grid),
    }


def stability_bound(params: ModelParams, grid: GridSpec) -> float:
    """Largest stable forward-Euler step: ds^2 / (2*sum_j max(b_j)*q + ds*|c_eff|)
    with q the conservative maximum of the nonlinear diffusivity factor."""
    ds = grid.ds
    coeffs = _coefficients(params, grid)
    if params.kind == "rw1d":
        diff = 2.0 * float(np.max(np.abs(coeffs["b_face"]))) * 1.0
        conv = float(np.max(np.abs(coeffs["a_face"])))
    elif params.kind == "net1d":
        diff = 2.0 * float(np.max(np.abs(coeffs["b"]))) * (4.0 / 3.0)
        conv = float(np.max(np.abs(coeffs["c_face"])))
    else:
        diff = 2.0 * (float(np.max(np.abs(coeffs["b1"]))) + float(np.max(np.abs(coeffs["b2"])))) * 1.0
        conv = float(np.max(np.abs(coeffs["c1_face"]))) + float(np.max(np.abs(coeffs["c2_face"])))
    denom = diff + ds * conv
    if denom == 0.0:
        return math.inf
    return ds * ds / denom


def _kernel_and_args(params: ModelParams, coeffs: dict, inv_ds: float):
    if params.kind == "rw1d":
        return get_kernel("pde_rw1d"), (coeffs["b_face"], coeffs["a_face"], inv_ds)
    if params.kind == "net1d":
        return get_kernel("pde_net1d"), (
            coeffs["b"], coeffs["b_s"], coeffs["b_ss"], coeffs["c_face"], coeffs["g"], inv_ds,
        )
    return get_kernel("pde_net2d"), (
        coeffs["b1"], coeffs["b1_s"], coeffs["b1_ss"],
        coeffs["b2"], coeffs["b2_s"], coeffs["b2_ss"],
        coeffs["c1_face"], coeffs["c2_face"], coeffs["g"], inv_ds,
    )


def _padded_initial(params: ModelParams, grid: GridSpec) -> np.ndarray:
    vals = params.init.values_on_grid(grid)
    if np.any(vals < 0.0) or np.any(vals > 1.0):
        raise DomainError("initial profile must evaluate into [0, 1]")
    z = np.zeros(tuple(n + 2 for n in grid.counts))
    z[tuple(slice(1, n + 1) for n in grid.counts)] = vals
    return z


def solve(problem: PdeProblem) -> SpaceTimeField:
    """Forward-Euler integration from the initial profile to t_end, sampled at
    the requested output times (each must be reachable by whole steps)."""
    params, grid = problem.params, problem.grid
    times = problem.resolved_output_times()
    bound = stability_bound(params, grid)
    coeffs = _coefficients(params, grid)
    kernel, args = _kernel_and_args(params, coeffs, 1.0 / grid.ds)

    gaps = np.diff(times)
    if problem.dt is not None:
        dt = float(problem.dt)
        if dt > bound * (1 + 1e-12):
            raise ConfigurationError(
                f"dt={dt:g} violates the stability bound {bound:g} for {params.kind}"
            )
        counts = gaps / dt
        n_steps = np.rint(counts).astype(int)
        if np.any(np.abs(counts - n_steps) > 1e-6) or np.any(n_steps < 1):
            raise ConfigurationError(
                "every output-time gap must be a whole number of dt steps"
            )
        seg_dt = gaps / n_steps
    else:
        target = _SAFETY * bound
        n_steps = np.maximum(1, np.ceil(gaps / target - 1e-12).astype(int))
        seg_dt = gaps / n_steps
        if np.any(seg_dt > bound * (1 + 1e-12)):
            raise ConfigurationError("auto time-step selection failed the stability bound")

    z = _padded_initial(params, grid)
    inner = tuple(slice(1, n + 1) for n in grid.counts)
    out = np.empty((len(times),) + grid.interior_shape)
    out[0] = z[inner]
    done = 0
    for i, (k, h) in enumerate(zip(n_steps, seg_dt)):
        bad = kernel(z, *args, float(h), int(k), _PDE_TOL)
        if bad >= 0:
            raise InstabilityError(
                f"PDE state left [-{_PDE_TOL:g}, 1+{_PDE_TOL:g}] or became non-finite",
                step=done + int(bad),
            )
        done += int(k)
        out[i + 1] = z[inner]
    return SpaceTimeField(grid=grid, times=times, values=out)


def solve_on_chain_lattice(params: ModelParams, grid: GridSpec, marks,
                           solver_params: Optional[ModelParams] = None) -> SpaceTimeField:
    """Solve with outputs at chain snapshot steps ``marks`` (indices, not times).

    The solver step is the chain step divided by the smallest integer that
    satisfies the stability bound, so every output lands on a whole step.
    """
    sp = solver_params if solver_params is not None else params
    dt_chain = params.time_step(grid)
    bound = stability_bound(sp, grid)
    n_sub = max(1, math.ceil(dt_chain / (_SAFETY * bound) - 1e-12)) if math.isfinite(bound) else 1
    dt = dt_chain / n_sub
    coeffs = _coefficients(sp, grid)
    kernel, args = _kernel_and_args(sp, coeffs, 1.0 / grid.ds)

    marks = np.asarray(marks, dtype=np.int64)
    z = _padded_initial(sp, grid)
    inner = tuple(slice(1, n + 1) for n in grid.counts)
    out = np.empty((len(marks),) + grid.interior_shape)
    out[0] = z[inner]
    for i in range(1, len(marks)):
        span = int(marks[i] - marks[i - 1]) * n_sub
        bad = kernel(z, *args, dt, span, _PDE_TOL)
        if bad >= 0:
            raise InstabilityError(
                f"PDE state left [-{_PDE_TOL:g}, 1+{_PDE_TOL:g}] or became non-finite",
                step=int(marks[i - 1]) * n_sub + int(bad),
            )
        out[i] = z[inner]
    return SpaceTimeField(grid=grid, times=marks * dt_chain, values=out)


# --------------------------------------------------------------------------
# Single right-hand-side evaluations (share the stepping kernels exactly)
# --------------------------------------------------------------------------

def _one_euler_rhs(kind: str, z_full, args) -> np.ndarray:
    z = np.array(z_full, dtype=float, copy=True)
    kernel = get_kernel(f"pde_{kind}")
    kernel(z, *args, 1.0, 1, math.inf)
    inner = tuple(slice(1, n - 1) for n in z.shape)
    zf = np.asarray(z_full, dtype=float)
    return z[inner] - zf[inner]


def rhs_rw1d(z, grid: GridSpec, b: FieldSpec, c: FieldSpec) -> np.ndarray:
    """Time derivative of the linear diffusion-convection equation at interior
    nodes; ``z`` includes the two boundary entries."""
    b_face = _field_faces(b, grid, 0)
    a_face = _field_face_derivative(b, grid, 0) + _field_faces(c, grid, 0)
    return _one_euler_rhs("rw1d", z, (b_face, a_face, 1.0 / grid.ds))


def rhs_net1d(z, grid: GridSpec, b: FieldSpec, c: FieldSpec, g_p: FieldSpec) -> np.ndarray:
    args = (
        b.values_on_grid(grid),
        b.derivative_on_grid(grid, 0, 1),
        b.derivative_on_grid(grid, 0, 2),
        _field_faces(c, grid, 0),
        g_p.values_on_grid(grid),
        1.0 / grid.ds,
    )
    return _one_euler_rhs("net1d", z, args)


def rhs_net2d(z, grid: GridSpec, b1: FieldSpec, b2: FieldSpec, c1: FieldSpec,
              c2: FieldSpec, g_p: FieldSpec) -> np.ndarray:
    args = (
        b1.values_on_grid(grid),
        b1.derivative_on_grid(grid, 0, 1),
        b1.derivative_on_grid(grid, 0, 2),
        b2.values_on_grid(grid),
        b2.derivative_on_grid(grid, 1, 1),
        b2.derivative_on_grid(grid, 1, 2),
        _field_faces(c1, grid, 0),
        _field_faces(c2, grid, 1),
        g_p.values_on_grid(grid),
        1.0 / grid.ds,
    )
    return _one_euler_rhs("net2d", z, args)


def refined_grid(chain_grid: GridSpec, factor: int) -> GridSpec:
    """A grid with the same extent whose nodes contain the chain nodes."""
    if factor < 1 or int(factor) != factor:
        raise ConfigurationError("refinement factor must be a positive integer")
    counts = tuple(factor * (n + 1) - 1 for n in chain_grid.counts)
    return GridSpec(extents=chain_grid.extents, counts=counts)


def sample_on_chain_grid(field: SpaceTimeField, chain_grid: GridSpec, times) -> SpaceTimeField:
    """Values of a solver-grid field at chain node positions and given times.

    Nearest solver node per chain node (exact for nested grids); ties break
    toward the lower index. The solver grid must cover each chain node within
    half a solver cell.
    """
    for axis in range(chain_grid.dimension):
        lo_c, hi_c = chain_grid.extents[axis]
        lo_f, hi_f = field.grid.extents[axis]
        span = hi_c - lo_c
        if abs(lo_c - lo_f) > 1e-9 * span or abs(hi_c - hi_f) > 1e-9 * span:
            raise DomainError("field and chain grids cover different extents")

    ds_f = field.grid.ds
    index_maps = []
    for axis in range(chain_grid.dimension):
        lo, _ = chain_grid.extents[axis]
        q = (chain_grid.interior_positions(axis) - lo) / ds_f
        idx = np.ceil(q - 0.5 - 1e-12).astype(int)
        if np.any(np.abs(idx - q) > 0.5 + 1e-9):
            raise DomainError("solver grid does not resolve the chain grid")
        if np.any(idx < 1) or np.any(idx > field.grid.counts[axis]):
            raise DomainError("chain node maps outside the solver interior")
        index_maps.append(idx - 1)

    times = np.asarray(times, dtype=float)
    slices = np.stack([field.at_time(t) for t in times], axis=0)
    if chain_grid.dimension == 1:
        sampled = slices[:, index_maps[0]]
    else:
        sampled = slices[:, index_maps[0][:, None], index_maps[1][None, :]]
    return SpaceTimeField(grid=chain_grid, times=times, values=sampled)
