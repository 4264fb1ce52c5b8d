"""Uniform grids, declarative coefficient fields, and per-node probability tables.

A grid covers a closed interval (1D) or rectangle (2D). Interior nodes carry
state; the two (1D) or frame of (2D) boundary positions host destination nodes
that absorb traffic. Index n = 0..N+1 per axis maps to position lo + n*ds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DomainError

_FIELD_KINDS = ("constant", "gaussian", "affine", "tabulated")


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid over a 1D interval or 2D rectangle with equal spacing.

    ``counts`` holds the interior node count per axis; spacing is
    extent/(count+1) and must agree across axes in 2D.
    """

    extents: tuple  # ((lo, hi),) or ((lo1, hi1), (lo2, hi2))
    counts: tuple  # (N,) or (N1, N2)

    def __post_init__(self):
        if len(self.extents) not in (1, 2) or len(self.extents) != len(self.counts):
            raise ConfigurationError("grid needs one (lo, hi) extent per axis")
        for (lo, hi), n in zip(self.extents, self.counts):
            if not (hi > lo):
                raise ConfigurationError(f"grid extent [{lo}, {hi}] is empty")
            if int(n) != n or n < 1:
                raise ConfigurationError(f"interior node count {n} must be an integer >= 1")
        if len(self.counts) == 2:
            d1, d2 = (self._axis_ds(0), self._axis_ds(1))
            if abs(d1 - d2) > 1e-12 * max(d1, d2):
                raise ConfigurationError(
                    f"2D grid spacing differs between axes ({d1} vs {d2}); "
                    "counts and extents must give equal spacing"
                )

    def _axis_ds(self, axis: int) -> float:
        lo, hi = self.extents[axis]
        return (hi - lo) / (self.counts[axis] + 1)

    @property
    def dimension(self) -> int:
        return len(self.counts)

    @property
    def ds(self) -> float:
        return self._axis_ds(0)

    @classmethod
    def line(cls, lo: float, hi: float, n: int) -> "GridSpec":
        return cls(extents=((float(lo), float(hi)),), counts=(int(n),))

    @classmethod
    def rectangle(cls, extent1, n1: int, extent2=None, n2: Optional[int] = None) -> "GridSpec":
        if extent2 is None:
            extent2 = extent1
        if n2 is None:
            n2 = n1
        return cls(
            extents=(tuple(map(float, extent1)), tuple(map(float, extent2))),
            counts=(int(n1), int(n2)),
        )

    def axis_positions(self, axis: int, lo_index: int = 0, hi_index: Optional[int] = None) -> np.ndarray:
        """Positions lo + n*ds for n = lo_index..hi_index along one axis."""
        n = self.counts[axis]
        if hi_index is None:
            hi_index = n + 1
        lo, _ = self.extents[axis]
        idx = np.arange(lo_index, hi_index + 1)
        return lo + idx * self._axis_ds(axis)

    def interior_positions(self, axis: int = 0) -> np.ndarray:
        return self.axis_positions(axis, 1, self.counts[axis])

    def interior_mesh(self):
        """Meshed interior coordinates; 2D arrays are indexed [i, j] row-major."""
        if self.dimension == 1:
            return (self.interior_positions(0),)
        s1 = self.interior_positions(0)
        s2 = self.interior_positions(1)
        return np.meshgrid(s1, s2, indexing="ij")

    @property
    def interior_shape(self) -> tuple:
        return tuple(self.counts)

    @property
    def n_interior(self) -> int:
        return int(np.prod(self.counts))


def node_position(grid: GridSpec, index):
    """Position of node ``index`` (scalar for 1D, pair for 2D); 0..N+1 per axis."""
    idx = (index,) if grid.dimension == 1 else tuple(index)
    if len(idx) != grid.dimension:
        raise DomainError(f"index {index!r} does not match grid dimension {grid.dimension}")
    out = []
    for axis, i in enumerate(idx):
        n = grid.counts[axis]
        if int(i) != i or not (0 <= i <= n + 1):
            raise DomainError(f"node index {i} outside 0..{n + 1} on axis {axis}")
        lo, _ = grid.extents[axis]
        out.append(lo + i * grid._axis_ds(axis))
    return out[0] if grid.dimension == 1 else tuple(out)


@dataclass(frozen=True)
class FieldSpec:
    """Declarative scalar field over the grid extent.

    kind: "constant" (value), "gaussian" (amplitude * exp(-|s|^2)),
    "affine" (offset + sum_j slope_j * s_j), or "tabulated" (values at the
    interior nodes only).
    """

    kind: str
    value: float = 0.0
    amplitude: float = 0.0
    offset: float = 0.0
    slope: tuple = (0.0,)
    table: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in _FIELD_KINDS:
            raise ConfigurationError(f"unknown field kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.table is None:
                raise ConfigurationError("tabulated field needs a value table")
            object.__setattr__(self, "table", np.asarray(self.table, dtype=float))

    @classmethod
    def constant(cls, value: float) -> "FieldSpec":
        return cls(kind="constant", value=float(value))

    @classmethod
    def gaussian(cls, amplitude: float) -> "FieldSpec":
        return cls(kind="gaussian", amplitude=float(amplitude))

    @classmethod
    def affine(cls, offset: float, slope) -> "FieldSpec":
        slope = tuple(float(s) for s in np.atleast_1d(slope))
        return cls(kind="affine", offset=float(offset), slope=slope)

    @classmethod
    def tabulated(cls, values) -> "FieldSpec":
        return cls(kind="tabulated", table=np.asarray(values, dtype=float))

    def _axis_slope(self, axis: int) -> float:
        return self.slope[axis] if axis < len(self.slope) else 0.0

    def __call__(self, *coords):
        return self.values(*coords)

    def values(self, *coords):
        """Evaluate at positions given per axis (arrays broadcast elementwise)."""
        coords = tuple(np.asarray(c, dtype=float) for c in coords)
        if self.kind == "constant":
            return np.broadcast_arrays(*coords)[0] * 0.0 + self.value
        if self.kind == "gaussian":
            r2 = sum(c * c for c in coords)
            return self.amplitude * np.exp(-r2)
        if self.kind == "affine":
            out = np.broadcast_arrays(*coords)[0] * 0.0 + self.offset
            for axis, c in enumerate(coords):
                out = out + self._axis_slope(axis) * c
            return out
        raise DomainError("tabulated fields are only defined at interior grid nodes; "
                          "use values_on_grid")

    def derivative(self, axis: int, *coords):
        """First derivative along ``axis`` (analytic kinds only)."""
        coords = tuple(np.asarray(c, dtype=float) for c in coords)
        base = np.broadcast_arrays(*coords)[0] * 0.0
        if self.kind == "constant":
            return base
        if self.kind == "affine":
            return base + self._axis_slope(axis)
        if self.kind == "gaussian":
            return -2.0 * coords[axis] * self.values(*coords)
        raise DomainError("tabulated fields have no analytic derivative")

    def second_derivative(self, axis: int, *coords):
        coords = tuple(np.asarray(c, dtype=float) for c in coords)
        base = np.broadcast_arrays(*coords)[0] * 0.0
        if self.kind in ("constant", "affine"):
            return base
        if self.kind == "gaussian":
            s = coords[axis]
            return (4.0 * s * s - 2.0) * self.values(*coords)
        raise DomainError("tabulated fields have no analytic derivative")

    def values_on_grid(self, grid: GridSpec, include_boundary: bool = False) -> np.ndarray:
        """Values at grid nodes; tabulated fields resolve by node index."""
        if self.kind == "tabulated":
            if self.table.shape != grid.interior_shape:
                raise DomainError(
                    f"tabulated field shape {self.table.shape} does not match "
                    f"interior grid shape {grid.interior_shape}"
                )
            if not include_boundary:
                return self.table.copy()
            padded = np.zeros(tuple(n + 2 for n in grid.counts))
            inner = tuple(slice(1, n + 1) for n in grid.counts)
            padded[inner] = self.table
            return padded
        lo_idx = 0 if include_boundary else 1
        axes = []
        for axis in range(grid.dimension):
            hi = grid.counts[axis] + (1 if include_boundary else 0)
            axes.append(grid.axis_positions(axis, lo_idx, hi))
        if grid.dimension == 1:
            return np.asarray(self.values(axes[0]), dtype=float)
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.asarray(self.values(*mesh), dtype=float)

    def derivative_on_grid(self, grid: GridSpec, axis: int, order: int = 1) -> np.ndarray:
        """Spatial derivative at interior nodes; central differences for tables."""
        if self.kind != "tabulated":
            mesh = grid.interior_mesh()
            fn = self.derivative if order == 1 else self.second_derivative
            return np.asarray(fn(axis, *mesh), dtype=float)
        padded = self.values_on_grid(grid, include_boundary=True)
        ds = grid.ds
        # one-sided copies at the ends keep the stencil inside the table
        pad_edge = padded.copy()
        idx_lo = [slice(None)] * grid.dimension
        idx_hi = [slice(None)] * grid.dimension
        idx_lo[axis], idx_hi[axis] = 0, -1
        src_lo, src_hi = list(idx_lo), list(idx_hi)
        src_lo[axis], src_hi[axis] = 1, -2
        pad_edge[tuple(idx_lo)] = padded[tuple(src_lo)]
        pad_edge[tuple(idx_hi)] = padded[tuple(src_hi)]
        up = np.roll(pad_edge, -1, axis=axis)
        dn = np.roll(pad_edge, 1, axis=axis)
        if order == 1:
            d = (up - dn) / (2.0 * ds)
        else:
            d = (up - 2.0 * pad_edge + dn) / (ds * ds)
        inner = tuple(slice(1, n + 1) for n in grid.counts)
        return d[inner]


def eval_field(fieldspec: FieldSpec, position):
    """Point evaluation of a field (spec operation surface)."""
    if fieldspec.kind == "tabulated":
        raise DomainError("tabulated fields are only defined at interior grid nodes")
    pos = np.atleast_1d(np.asarray(position, dtype=float))
    return float(fieldspec.values(*pos))


_MODEL_KINDS = ("rw1d", "net1d", "net2d")
_FIELD_NAMES_1D = ("diffusion", "conv_left", "conv_right")
_FIELD_NAMES_2D = ("diffusion1", "diffusion2", "conv_east", "conv_west", "conv_north", "conv_south")


@dataclass(frozen=True)
class ModelParams:
    """Coefficient fields, capacity, and derived per-step scales for one model.

    1D kinds use diffusion/conv_left/conv_right; net2d uses the per-axis
    diffusion and four directional convection fields. ``source`` feeds the
    Poisson message generation (must be identically zero for rw1d) and
    ``init`` is the initial normalized profile.
    """

    kind: str
    capacity: int
    source: FieldSpec
    init: FieldSpec
    diffusion: Optional[FieldSpec] = None
    conv_left: Optional[FieldSpec] = None
    conv_right: Optional[FieldSpec] = None
    diffusion1: Optional[FieldSpec] = None
    diffusion2: Optional[FieldSpec] = None
    conv_east: Optional[FieldSpec] = None
    conv_west: Optional[FieldSpec] = None
    conv_north: Optional[FieldSpec] = None
    conv_south: Optional[FieldSpec] = None

    def __post_init__(self):
        if self.kind not in _MODEL_KINDS:
            raise ConfigurationError(f"unknown model kind {self.kind!r}")
        if self.capacity < 1:
            raise ConfigurationError("capacity must be a positive integer")
        names = _FIELD_NAMES_2D if self.kind == "net2d" else _FIELD_NAMES_1D
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ConfigurationError(f"model {self.kind} needs fields {missing}")
        if self.kind == "rw1d" and not (
            self.source.kind == "constant" and self.source.value == 0.0
        ):
            raise ConfigurationError("rw1d has no message generation; source must be constant 0")

    @property
    def dimension(self) -> int:
        return 2 if self.kind == "net2d" else 1

    def time_step(self, grid: GridSpec) -> float:
        """Physical time per chain step.

        The random walk advances one diffusive unit ds^2 per step; the queue
        models advance ds^2/capacity so that capacity-many steps span one
        diffusive unit.
        """
        ds2 = grid.ds * grid.ds
        if self.kind == "rw1d":
            return ds2
        return ds2 / self.capacity

    @property
    def step_scale(self) -> float:
        """Factor mapping a drift vector to the expected per-step change of
        the normalized state (1 for rw1d, 1/capacity for the queue models)."""
        if self.kind == "rw1d":
            return 1.0
        return 1.0 / self.capacity

    def time_scaling(self, grid: GridSpec) -> float:
        """ds^2, the drift-to-PDE-rhs normalizer shared by all models."""
        return grid.ds * grid.ds


@dataclass(frozen=True)
class ProbabilityTables:
    """Per-node move/transmit probabilities, evaluated once per run.

    1D tables are indexed by node index 0..N+1 (boundary entries are computed
    but only interior ones are validated or used). 2D tables are indexed
    [0..N1+1, 0..N2+1]. ``step_source`` holds the per-step Poisson means at
    interior nodes.
    """

    kind: str
    arrays: dict
    step_source: np.ndarray

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]


def _validate_directions(grid: GridSpec, named: dict, tol: float = 1e-9):
    total = None
    for name, arr in named.items():
        interior = arr[tuple(slice(1, n + 1) for n in grid.counts)]
        if np.any(interior < -1e-12):
            bad = np.argwhere(interior < -1e-12)[0] + 1
            idx = int(bad[0]) if grid.dimension == 1 else tuple(int(v) for v in bad)
            raise ConfigurationError(
                f"probability {name} is negative at node {idx}: {float(interior[tuple(bad - 1)])}"
            )
        total = interior if total is None else total + interior
    if np.any(total > 1.0 + tol):
        bad = np.argwhere(total > 1.0 + tol)[0] + 1
        idx = int(bad[0]) if grid.dimension == 1 else tuple(int(v) for v in bad)
        raise ConfigurationError(
            f"directional probabilities sum to {float(total[tuple(bad - 1)])} > 1 at node {idx}"
        )


def derive_probabilities(params: ModelParams, grid: GridSpec) -> ProbabilityTables:
    """Evaluate the per-node probability tables and per-step source means."""
    if params.dimension != grid.dimension:
        raise ConfigurationError(
            f"model {params.kind} needs a {params.dimension}D grid, got {grid.dimension}D"
        )
    ds = grid.ds
    if grid.dimension == 1:
        # tabulated coefficient fields are defined at interior nodes only;
        # boundary entries fall back to the nearest interior value
        b = _on_nodes_with_boundary(params.diffusion, grid)
        cl = _on_nodes_with_boundary(params.conv_left, grid)
        cr = _on_nodes_with_boundary(params.conv_right, grid)
        p_left = b + cl * ds
        p_right = b + cr * ds
        _validate_directions(grid, {"P_left": p_left, "P_right": p_right})
        named = {"p_left": p_left, "p_right": p_right}
    else:
        b1 = _on_nodes_with_boundary(params.diffusion1, grid)
        b2 = _on_nodes_with_boundary(params.diffusion2, grid)
        ce = _on_nodes_with_boundary(params.conv_east, grid)
        cw = _on_nodes_with_boundary(params.conv_west, grid)
        cn = _on_nodes_with_boundary(params.conv_north, grid)
        cs = _on_nodes_with_boundary(params.conv_south, grid)
        named = {
            "p_east": b1 + ce * ds,
            "p_west": b1 + cw * ds,
            "p_north": b2 + cn * ds,
            "p_south": b2 + cs * ds,
        }
        _validate_directions(
            grid,
            {"P_east": named["p_east"], "P_west": named["p_west"],
             "P_north": named["p_north"], "P_south": named["p_south"]},
        )

    g_vals = params.source.values_on_grid(grid)
    if np.any(g_vals < 0):
        raise ConfigurationError("source rate must be nonnegative at all interior nodes")
    step_source = params.capacity * g_vals * params.time_step(grid)
    return ProbabilityTables(kind=params.kind, arrays=named, step_source=step_source)


def _on_nodes_with_boundary(f: FieldSpec, grid: GridSpec) -> np.ndarray:
    if f.kind != "tabulated":
        return f.values_on_grid(grid, include_boundary=True)
    padded = f.values_on_grid(grid, include_boundary=True)
    # nearest-interior fill: boundary probabilities are never used for
    # transmission, but they must be finite numbers
    for axis in range(grid.dimension):
        lo = [slice(None)] * grid.dimension
        hi = [slice(None)] * grid.dimension
        lo[axis], hi[axis] = 0, -1
        src_lo, src_hi = list(lo), list(hi)
        src_lo[axis], src_hi[axis] = 1, -2
        padded[tuple(lo)] = padded[tuple(src_lo)]
        padded[tuple(hi)] = padded[tuple(src_hi)]
    return padded
