"""Chain models: stochastic one-step transitions and exact expected drifts.

Three models share one shape of API:

* ``rw1d``   - independent particles hopping left/right, absorbed at the ends.
* ``net1d``  - message queues; a node transmits with probability equal to its
  fill fraction, reception fails if the receiver or any other of its
  neighbors transmits; destinations at the ends absorb everything.
* ``net2d``  - the four-direction analogue on a rectangle with a destination
  frame.

``drift_*`` returns the exact expected one-step change at the model's drift
scale; multiplying by ``params.step_scale`` gives the expected change of the
normalized state. ``step_*`` draws one synchronous transition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grids import GridSpec, ModelParams, ProbabilityTables, derive_probabilities
from .kernels import get_kernel


@dataclass(frozen=True)
class RngStream:
    """Reproducible random source: same (seed, stream) gives the same draws."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([int(self.seed), int(self.stream)]))


@dataclass
class ChainState:
    """Integer occupancy over interior nodes with per-node capacity."""

    counts: np.ndarray
    capacity: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(self.counts < 0):
            raise DomainError("state counts must be nonnegative")

    @property
    def normalized(self) -> np.ndarray:
        return self.counts / self.capacity

    def copy(self) -> "ChainState":
        return ChainState(self.counts.copy(), self.capacity)


def _tables(params: ModelParams, grid: GridSpec, tables) -> ProbabilityTables:
    return tables if tables is not None else derive_probabilities(params, grid)


def _check_state(x, grid: GridSpec, unit_box: bool):
    x = np.asarray(x, dtype=float)
    if x.shape != grid.interior_shape:
        raise DomainError(f"state shape {x.shape} does not match grid {grid.interior_shape}")
    if unit_box and (np.any(x < 0.0) or np.any(x > 1.0)):
        raise DomainError("normalized state must lie in [0, 1]")
    return x


# --------------------------------------------------------------------------
# Drifts
# --------------------------------------------------------------------------

def drift_random_walk(x, params: ModelParams, grid: GridSpec, tables=None) -> np.ndarray:
    """Expected per-step change of the normalized occupancy (linear model)."""
    x = _check_state(x, grid, unit_box=False)
    tab = _tables(params, grid, tables)
    return get_kernel("drift_rw1d")(x, tab["p_right"], tab["p_left"])


def drift_network_1d(x, params: ModelParams, grid: GridSpec, tables=None) -> np.ndarray:
    """Expected per-step queue change (at message-count scale) per node."""
    x = _check_state(x, grid, unit_box=True)
    tab = _tables(params, grid, tables)
    return get_kernel("drift_net1d")(x, tab["p_right"], tab["p_left"], tab.step_source)


def drift_network_2d(x, params: ModelParams, grid: GridSpec, tables=None) -> np.ndarray:
    x = _check_state(x, grid, unit_box=True)
    tab = _tables(params, grid, tables)
    return get_kernel("drift_net2d")(
        x, tab["p_east"], tab["p_west"], tab["p_north"], tab["p_south"], tab.step_source
    )


# --------------------------------------------------------------------------
# Stochastic steps
# --------------------------------------------------------------------------

def _multinomial_pvals(tab: ProbabilityTables, n: int) -> np.ndarray:
    pr = tab["p_right"][1 : n + 1]
    pl = tab["p_left"][1 : n + 1]
    stay = np.maximum(0.0, 1.0 - pr - pl)
    return np.stack([pr, pl, stay], axis=-1)


def step_random_walk(state: ChainState, params: ModelParams, grid: GridSpec,
                     rng, tables=None) -> ChainState:
    """One synchronous move of all particles; off-grid movers are absorbed.

    Per node the (right, left, stay) split is one multinomial draw, which is
    distributionally identical to moving the particles independently.
    """
    if isinstance(rng, RngStream):
        rng = rng.generator()
    tab = _tables(params, grid, tables)
    n = grid.counts[0]
    draws = rng.multinomial(state.counts, _multinomial_pvals(tab, n))
    new = draws[:, 2].copy()
    new[1:] += draws[:-1, 0]
    new[:-1] += draws[1:, 1]
    return ChainState(new, state.capacity)


def _chunk_arrays_1d(rng, steps: int, lam: np.ndarray):
    n = lam.shape[0]
    u = rng.random((steps, n))
    arrivals = np.zeros((steps, n), dtype=np.int64)
    if np.any(lam > 0):
        # thinning trick: total arrivals per node over the chunk, placed on
        # uniformly random steps, is the same process as per-step Poisson draws
        totals = rng.poisson(lam * steps)
        for i in np.nonzero(totals)[0]:
            np.add.at(arrivals[:, i], rng.integers(0, steps, totals[i]), 1)
    return u, arrivals


def _chunk_arrays_2d(rng, steps: int, lam: np.ndarray):
    n1, n2 = lam.shape
    u = rng.random((steps, n1, n2))
    arrivals = np.zeros((steps, n1, n2), dtype=np.int64)
    if np.any(lam > 0):
        totals = rng.poisson(lam * steps)
        for i, j in np.argwhere(totals):
            np.add.at(arrivals[:, i, j], rng.integers(0, steps, totals[i, j]), 1)
    return u, arrivals


def step_network_1d(state: ChainState, params: ModelParams, grid: GridSpec,
                    rng, tables=None) -> ChainState:
    """One synchronous queue transition: transmit flags, direction choice,
    collision-checked delivery, Poisson arrivals, capacity clamp."""
    if isinstance(rng, RngStream):
        rng = rng.generator()
    tab = _tables(params, grid, tables)
    new = state.copy()
    u, arrivals = _chunk_arrays_1d(rng, 1, tab.step_source)
    get_kernel("net1d_chunk")(new.counts, u, arrivals, tab["p_right"], tab["p_left"],
                              state.capacity)
    return new


def step_network_2d(state: ChainState, params: ModelParams, grid: GridSpec,
                    rng, tables=None) -> ChainState:
    if isinstance(rng, RngStream):
        rng = rng.generator()
    tab = _tables(params, grid, tables)
    new = state.copy()
    u, arrivals = _chunk_arrays_2d(rng, 1, tab.step_source)
    get_kernel("net2d_chunk")(new.counts, u, arrivals, tab["p_east"], tab["p_west"],
                              tab["p_north"], tab["p_south"], state.capacity)
    return new


_DRIFT = {"rw1d": drift_random_walk, "net1d": drift_network_1d, "net2d": drift_network_2d}
_STEP = {"rw1d": step_random_walk, "net1d": step_network_1d, "net2d": step_network_2d}


def drift(x, params: ModelParams, grid: GridSpec, tables=None) -> np.ndarray:
    return _DRIFT[params.kind](x, params, grid, tables)


def step(state: ChainState, params: ModelParams, grid: GridSpec, rng, tables=None) -> ChainState:
    return _STEP[params.kind](state, params, grid, rng, tables)


# --------------------------------------------------------------------------
# Monte Carlo one-step statistics (drift oracles)
# --------------------------------------------------------------------------

def one_step_statistics(state: ChainState, params: ModelParams, grid: GridSpec,
                        rng, replications: int, tables=None):
    """Mean and standard error of the per-node one-step count change.

    Repeats a single transition from the same start state. Returns
    (mean, stderr) arrays at message-count scale.
    """
    if isinstance(rng, RngStream):
        rng = rng.generator()
    tab = _tables(params, grid, tables)
    shape = grid.interior_shape
    total = np.zeros(shape, dtype=np.float64)
    total_sq = np.zeros(shape, dtype=np.float64)
    if params.kind == "rw1d":
        n = shape[0]
        pv = _multinomial_pvals(tab, n)
        draws = rng.multinomial(state.counts, pv, size=(replications, n))
        new = draws[:, :, 2].copy()
        new[:, 1:] += draws[:, :-1, 0]
        new[:, :-1] += draws[:, 1:, 1]
        deltas = new - state.counts[None, :]
        total = deltas.sum(axis=0).astype(np.float64)
        total_sq = (deltas.astype(np.float64) ** 2).sum(axis=0)
    else:
        kernel = get_kernel(f"{params.kind}_chunk")
        chunker = _chunk_arrays_1d if params.kind == "net1d" else _chunk_arrays_2d
        args = (
            (tab["p_right"], tab["p_left"])
            if params.kind == "net1d"
            else (tab["p_east"], tab["p_west"], tab["p_north"], tab["p_south"])
        )
        for _ in range(replications):
            work = state.counts.copy()
            u, arrivals = chunker(rng, 1, tab.step_source)
            kernel(work, u, arrivals, *args, state.capacity)
            d = (work - state.counts).astype(np.float64)
            total += d
            total_sq += d * d
    mean = total / replications
    var = np.maximum(0.0, total_sq / replications - mean**2)
    stderr = np.sqrt(var / replications)
    return mean, stderr
