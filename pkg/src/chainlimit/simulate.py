"""Trajectory drivers: Monte Carlo chains, the deterministic drift recursion,
initial-state sampling, and piecewise-constant time/space extensions.

Both drivers advance in segments between snapshots so the hot loop stays
inside a kernel; chain segments consume pre-drawn uniforms and arrivals,
which keeps a fixed (seed, scenario) pair bit-reproducible on either backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, InstabilityError
from .grids import FieldSpec, GridSpec, ModelParams, derive_probabilities
from .kernels import get_kernel
from .models import ChainState, RngStream, _chunk_arrays_1d, _chunk_arrays_2d, _multinomial_pvals

_CHUNK_VALUES = 400_000  # uniforms per chunk; caps per-chunk memory
_REC_TOL = 1e-12


@dataclass
class Trajectory:
    """Snapshots of one trajectory at strictly increasing step indices."""

    kind: str
    capacity: int
    dt: float
    steps: np.ndarray  # int64, includes 0
    values: np.ndarray  # (n_snaps, *interior): int64 counts or float normalized
    is_counts: bool
    overflow_dropped: int = 0

    @property
    def times(self) -> np.ndarray:
        return self.steps * self.dt

    @property
    def normalized(self) -> np.ndarray:
        if self.is_counts:
            return self.values / self.capacity
        return self.values

    def final_normalized(self) -> np.ndarray:
        return self.normalized[-1]


@dataclass
class SpaceTimeField:
    """Values on a (time x interior-node) lattice with floor-evaluation
    semantics: queries snap to the stored time and the grid node closest to
    the left on each axis (first/last interior value extends to the edges)."""

    grid: GridSpec
    times: np.ndarray
    values: np.ndarray  # (n_times, *interior)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[0] != self.times.shape[0]:
            raise DomainError("one value slice per time is required")
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("times must be strictly increasing")

    def time_index(self, t: float) -> int:
        tol = 1e-9 * max(1.0, abs(float(self.times[-1])))
        if t < self.times[0] - tol or t > self.times[-1] + tol:
            raise DomainError(
                f"time {t} outside field range [{self.times[0]}, {self.times[-1]}]"
            )
        return int(np.searchsorted(self.times, t + tol, side="right") - 1)

    def at_time(self, t: float) -> np.ndarray:
        return self.values[self.time_index(t)]

    def _space_index(self, axis: int, s: float) -> int:
        lo, hi = self.grid.extents[axis]
        ds = self.grid.ds
        tol = 1e-9 * (hi - lo)
        if s < lo - tol or s > hi + tol:
            raise DomainError(f"position {s} outside extent [{lo}, {hi}] on axis {axis}")
        idx = math.floor((s - lo) / ds + 1e-12)
        return int(min(max(idx, 1), self.grid.counts[axis]))

    def evaluate(self, t: float, *position) -> float:
        if len(position) != self.grid.dimension:
            raise DomainError("one coordinate per grid axis is required")
        ti = self.time_index(t)
        idx = tuple(self._space_index(ax, s) - 1 for ax, s in enumerate(position))
        return float(self.values[(ti, *idx)])


def initial_state(z0: FieldSpec, capacity: int, grid: GridSpec, mode: str = "exact",
                  rng=None) -> ChainState:
    """Sample X(0): 'exact' rounds capacity*z0 half-to-even, 'binomial' draws
    Binomial(capacity, z0) per node."""
    vals = z0.values_on_grid(grid)
    if np.any(vals < 0.0) or np.any(vals > 1.0):
        raise DomainError("initial profile must evaluate into [0, 1] at interior nodes")
    if mode == "exact":
        counts = np.rint(capacity * vals).astype(np.int64)
    elif mode == "binomial":
        if rng is None:
            raise DomainError("binomial initial state needs an rng")
        if isinstance(rng, RngStream):
            rng = rng.generator()
        counts = rng.binomial(capacity, vals).astype(np.int64)
    else:
        raise DomainError(f"unknown initial-state mode {mode!r}")
    return ChainState(counts, capacity)


def _snapshot_plan(total_steps: int, stride: Optional[int]):
    if stride is None:
        stride = max(1, math.ceil(total_steps / 100)) if total_steps else 1
    if stride < 1:
        raise DomainError("snapshot stride must be >= 1")
    marks = list(range(0, total_steps + 1, stride))
    if marks[-1] != total_steps:
        marks.append(total_steps)
    return stride, marks


def run_chain(params: ModelParams, grid: GridSpec, steps: int, stride: Optional[int],
              rng, state0: Optional[ChainState] = None, init_mode: str = "exact",
              tables=None) -> Trajectory:
    """Monte Carlo evolution for ``steps`` transitions, recording snapshots at
    the stride (k=0 and k=steps always included).

    Runs are bit-reproducible for a fixed (rng, steps, stride) plan. The
    realized sample path depends on the stride because randomness is drawn
    in per-segment batches; the law of the trajectory does not.
    """
    if steps < 0:
        raise DomainError("step count must be nonnegative")
    if isinstance(rng, RngStream):
        rng = rng.generator()
    tab = tables if tables is not None else derive_probabilities(params, grid)
    state = state0.copy() if state0 is not None else initial_state(
        params.init, params.capacity, grid, init_mode, rng
    )
    _, marks = _snapshot_plan(steps, stride)
    snaps = np.empty((len(marks),) + grid.interior_shape, dtype=np.int64)
    snaps[0] = state.counts
    counts = state.counts
    overflow = 0
    n_nodes = grid.n_interior
    cap = max(1, _CHUNK_VALUES // max(1, n_nodes))

    if params.kind == "rw1d":
        pv = _multinomial_pvals(tab, grid.counts[0])
        k = 0
        for mi in range(1, len(marks)):
            while k < marks[mi]:
                draws = rng.multinomial(counts, pv)
                new = draws[:, 2].copy()
                new[1:] += draws[:-1, 0]
                new[:-1] += draws[1:, 1]
                counts = new
                k += 1
            snaps[mi] = counts
    else:
        if params.kind == "net1d":
            kernel = get_kernel("net1d_chunk")
            chunker = _chunk_arrays_1d
            args = (tab["p_right"], tab["p_left"])
        else:
            kernel = get_kernel("net2d_chunk")
            chunker = _chunk_arrays_2d
            args = (tab["p_east"], tab["p_west"], tab["p_north"], tab["p_south"])
        k = 0
        for mi in range(1, len(marks)):
            while k < marks[mi]:
                span = min(cap, marks[mi] - k)
                u, arrivals = chunker(rng, span, tab.step_source)
                overflow += kernel(counts, u, arrivals, *args, params.capacity)
                k += span
            snaps[mi] = counts

    return Trajectory(
        kind=params.kind,
        capacity=params.capacity,
        dt=params.time_step(grid),
        steps=np.asarray(marks, dtype=np.int64),
        values=snaps,
        is_counts=True,
        overflow_dropped=overflow,
    )


def run_drift_recursion(params: ModelParams, grid: GridSpec, steps: int,
                        stride: Optional[int] = None, x0=None, tables=None) -> Trajectory:
    """Deterministic iteration x <- x + step_scale * drift(x).

    The step scale is 1 for the random walk and 1/capacity for the queue
    models, matching each chain's expected normalized one-step change.
    """
    if steps < 0:
        raise DomainError("step count must be nonnegative")
    tab = tables if tables is not None else derive_probabilities(params, grid)
    if x0 is None:
        x = params.init.values_on_grid(grid).astype(float)
    else:
        x = np.array(x0, dtype=float, copy=True)
    if x.shape != grid.interior_shape:
        raise DomainError(f"initial vector shape {x.shape} does not match grid")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("initial normalized vector must lie in [0, 1]")

    if params.kind == "rw1d":
        kernel = get_kernel("rec_rw1d")
        args = (tab["p_right"], tab["p_left"], tab.step_source)
    elif params.kind == "net1d":
        kernel = get_kernel("rec_net1d")
        args = (tab["p_right"], tab["p_left"], tab.step_source)
    else:
        kernel = get_kernel("rec_net2d")
        args = (tab["p_east"], tab["p_west"], tab["p_north"], tab["p_south"], tab.step_source)

    _, marks = _snapshot_plan(steps, stride)
    snaps = np.empty((len(marks),) + grid.interior_shape, dtype=float)
    snaps[0] = x
    scale = params.step_scale
    for mi in range(1, len(marks)):
        span = marks[mi] - marks[mi - 1]
        bad = kernel(x, *args, scale, span, _REC_TOL)
        if bad >= 0:
            raise InstabilityError(
                "drift recursion left [0, 1]", step=marks[mi - 1] + int(bad)
            )
        snaps[mi] = x
    return Trajectory(
        kind=params.kind,
        capacity=params.capacity,
        dt=params.time_step(grid),
        steps=np.asarray(marks, dtype=np.int64),
        values=snaps,
        is_counts=False,
    )


def extend_to_field(traj: Trajectory, grid: GridSpec) -> SpaceTimeField:
    """Piecewise-constant time/space embedding of a trajectory's snapshots."""
    return SpaceTimeField(grid=grid, times=traj.times, values=traj.normalized)
