"""Agreement metrics between chain, drift-recursion, and PDE descriptions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError
from .grids import GridSpec
from .simulate import SpaceTimeField


def _lattice_values(f: SpaceTimeField, times, grid: GridSpec) -> np.ndarray:
    if f.grid.counts != grid.counts or f.grid.extents != grid.extents:
        raise DomainError("field must be sampled on the chain grid before comparison")
    return np.stack([f.at_time(t) for t in times], axis=0)


def sup_error(a: SpaceTimeField, b: SpaceTimeField, times, grid: GridSpec):
    """(overall sup, per-time max) of |a - b| over the (times x nodes) lattice."""
    va = _lattice_values(a, times, grid)
    vb = _lattice_values(b, times, grid)
    diff = np.abs(va - vb)
    per_time = diff.reshape(diff.shape[0], -1).max(axis=1)
    return float(per_time.max()), per_time


def data_coverage(f: SpaceTimeField, t: float) -> float:
    """Riemann sum of the field at time t: sum(z) * ds^dim (bit-meter analogue)."""
    cell = f.grid.ds ** f.grid.dimension
    return float(f.at_time(t).sum() * cell)


def coverage_series(f: SpaceTimeField, times) -> np.ndarray:
    return np.array([data_coverage(f, t) for t in times])


def fit_rate(points) -> float:
    """Least-squares slope of log(error) against log(ds).

    Needs at least two distinct spacings; all values must be positive.
    """
    pts = [(float(d), float(e)) for d, e in points]
    if len(pts) < 2:
        raise DomainError("rate fit needs at least two (ds, error) points")
    ds = np.array([p[0] for p in pts])
    err = np.array([p[1] for p in pts])
    if np.any(ds <= 0) or np.any(err <= 0):
        raise DomainError("rate fit needs positive spacings and errors")
    slope = np.polyfit(np.log(ds), np.log(err), 1)[0]
    return float(slope)


@dataclass
class PairErrors:
    """Error summary for one pair of descriptions on the comparison lattice."""

    per_time: list
    sup: float
    final: float

    def to_dict(self):
        return {"per_time": list(map(float, self.per_time)),
                "sup": self.sup, "final": self.final}

    @classmethod
    def from_dict(cls, d):
        return cls(per_time=list(d["per_time"]), sup=d["sup"], final=d["final"])


@dataclass
class SeedErrors:
    seed: int
    stream: int
    chain_vs_pde: PairErrors
    chain_vs_drift: PairErrors
    final_coverage: float
    overflow_dropped: int

    def to_dict(self):
        return {
            "seed": self.seed,
            "stream": self.stream,
            "chain_vs_pde": self.chain_vs_pde.to_dict(),
            "chain_vs_drift": self.chain_vs_drift.to_dict(),
            "final_coverage": self.final_coverage,
            "overflow_dropped": self.overflow_dropped,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            seed=d["seed"],
            stream=d["stream"],
            chain_vs_pde=PairErrors.from_dict(d["chain_vs_pde"]),
            chain_vs_drift=PairErrors.from_dict(d["chain_vs_drift"]),
            final_coverage=d["final_coverage"],
            overflow_dropped=d["overflow_dropped"],
        )


@dataclass
class ComparisonReport:
    """Structured record of one scenario run; JSON round-trips losslessly."""

    scenario: dict
    nodes: tuple
    capacity: int
    seeds: list
    times: list
    drift_vs_pde: Optional[PairErrors]
    per_seed: list  # list[SeedErrors]
    chain_vs_pde_mean_final: Optional[float]
    chain_vs_pde_max_final: Optional[float]
    chain_vs_pde_mean_sup: Optional[float]
    chain_vs_pde_max_sup: Optional[float]
    coverage_pde: list
    coverage_drift: list
    timings: dict = field(default_factory=dict)
    rate_slope: Optional[float] = None

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "nodes": list(self.nodes),
            "capacity": self.capacity,
            "seeds": list(self.seeds),
            "times": list(map(float, self.times)),
            "drift_vs_pde": self.drift_vs_pde.to_dict() if self.drift_vs_pde else None,
            "per_seed": [s.to_dict() for s in self.per_seed],
            "chain_vs_pde_mean_final": self.chain_vs_pde_mean_final,
            "chain_vs_pde_max_final": self.chain_vs_pde_max_final,
            "chain_vs_pde_mean_sup": self.chain_vs_pde_mean_sup,
            "chain_vs_pde_max_sup": self.chain_vs_pde_max_sup,
            "coverage_pde": list(map(float, self.coverage_pde)),
            "coverage_drift": list(map(float, self.coverage_drift)),
            "timings": self.timings,
            "rate_slope": self.rate_slope,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d):
        return cls(
            scenario=d["scenario"],
            nodes=tuple(d["nodes"]),
            capacity=d["capacity"],
            seeds=list(d["seeds"]),
            times=list(d["times"]),
            drift_vs_pde=PairErrors.from_dict(d["drift_vs_pde"]) if d["drift_vs_pde"] else None,
            per_seed=[SeedErrors.from_dict(s) for s in d["per_seed"]],
            chain_vs_pde_mean_final=d["chain_vs_pde_mean_final"],
            chain_vs_pde_max_final=d["chain_vs_pde_max_final"],
            chain_vs_pde_mean_sup=d["chain_vs_pde_mean_sup"],
            chain_vs_pde_max_sup=d["chain_vs_pde_max_sup"],
            coverage_pde=list(d["coverage_pde"]),
            coverage_drift=list(d["coverage_drift"]),
            timings=d["timings"],
            rate_slope=d["rate_slope"],
        )

    @classmethod
    def from_json(cls, text: str) -> "ComparisonReport":
        return cls.from_dict(json.loads(text))


def _pair(a: SpaceTimeField, b: SpaceTimeField, times, grid: GridSpec) -> PairErrors:
    sup, per_time = sup_error(a, b, times, grid)
    return PairErrors(per_time=per_time.tolist(), sup=sup, final=float(per_time[-1]))


def build_report(scenario_echo: dict, grid: GridSpec, capacity: int, times,
                 chain_fields: dict, drift_field: Optional[SpaceTimeField],
                 pde_field: SpaceTimeField, overflow: dict, timings: dict,
                 streams: Optional[dict] = None) -> ComparisonReport:
    """Assemble the comparison report from one scenario's artifacts.

    ``chain_fields`` maps seed -> SpaceTimeField (may be empty for
    deterministic-only runs); all fields must live on the chain grid.
    """
    times = [float(t) for t in times]
    if chain_fields and drift_field is None:
        raise DomainError("chain comparisons need the drift recursion field")
    for f in list(chain_fields.values()) + ([drift_field] if drift_field else []) + [pde_field]:
        if f.grid.counts != grid.counts:
            raise DomainError("all compared fields must share the chain grid")
    dvz = _pair(drift_field, pde_field, times, grid) if drift_field is not None else None
    per_seed = []
    for seed, cf in chain_fields.items():
        per_seed.append(
            SeedErrors(
                seed=int(seed),
                stream=int(streams[seed]) if streams else 0,
                chain_vs_pde=_pair(cf, pde_field, times, grid),
                chain_vs_drift=_pair(cf, drift_field, times, grid) if drift_field else None,
                final_coverage=data_coverage(cf, times[-1]),
                overflow_dropped=int(overflow.get(seed, 0)),
            )
        )
    finals = [s.chain_vs_pde.final for s in per_seed]
    sups = [s.chain_vs_pde.sup for s in per_seed]
    return ComparisonReport(
        scenario=scenario_echo,
        nodes=grid.counts,
        capacity=capacity,
        seeds=[s.seed for s in per_seed],
        times=times,
        drift_vs_pde=dvz,
        per_seed=per_seed,
        chain_vs_pde_mean_final=float(np.mean(finals)) if finals else None,
        chain_vs_pde_max_final=float(np.max(finals)) if finals else None,
        chain_vs_pde_mean_sup=float(np.mean(sups)) if sups else None,
        chain_vs_pde_max_sup=float(np.max(sups)) if sups else None,
        coverage_pde=coverage_series(pde_field, times).tolist(),
        coverage_drift=coverage_series(drift_field, times).tolist() if drift_field else [],
        timings=dict(timings),
    )
