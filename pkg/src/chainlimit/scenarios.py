"""Scenario configuration, presets, experiment execution, and file outputs.

Scenarios are TOML documents: flat keys plus one [fields.<name>] table per
coefficient (tagged by ``kind``). Presets mirror the published experiments at
desk scale; ``chainlimit presets <name>`` prints the equivalent TOML.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .errors import BudgetError, ConfigurationError
from .grids import FieldSpec, GridSpec, ModelParams, derive_probabilities
from .metrics import ComparisonReport, build_report, fit_rate
from .models import RngStream
from .pde import PdeProblem, refined_grid, sample_on_chain_grid, solve, solve_on_chain_lattice
from .simulate import _snapshot_plan, extend_to_field, initial_state, run_chain, run_drift_recursion

_FIELDS_1D = ("diffusion", "conv_left", "conv_right", "source", "init")
_FIELDS_2D = ("diffusion1", "diffusion2", "conv_east", "conv_west",
              "conv_north", "conv_south", "source", "init")
_TOP_KEYS = {"name", "model", "nodes", "extent", "capacity", "t_end", "seeds",
             "snapshots", "init_mode", "fields", "solver", "budget"}
_SOLVER_KEYS = {"mode", "refine"}
_BUDGET_KEYS = {"max_node_updates"}

DEFAULT_NODE_BUDGET = 5e9


@dataclass(frozen=True)
class Scenario:
    """A fully resolved experiment description."""

    name: str
    model: str
    nodes: tuple
    extent: tuple
    capacity: int
    t_end: float
    fields: dict
    seeds: tuple = (1,)
    snapshots: int = 100
    init_mode: str = "exact"
    solver_mode: str = "matched"  # matched: chain grid and chain dt; refined: finer grid, CFL dt
    solver_refine: int = 4
    max_node_updates: float = DEFAULT_NODE_BUDGET

    def grid(self) -> GridSpec:
        if self.model == "net2d":
            return GridSpec.rectangle(self.extent, self.nodes[0], self.extent, self.nodes[1])
        return GridSpec.line(self.extent[0], self.extent[1], self.nodes[0])

    def params(self) -> ModelParams:
        return ModelParams(kind=self.model, capacity=self.capacity, **self.fields)

    def echo(self) -> dict:
        """All settings materialized, for self-describing outputs."""
        d = {
            "name": self.name,
            "model": self.model,
            "nodes": list(self.nodes),
            "extent": list(self.extent),
            "capacity": self.capacity,
            "t_end": self.t_end,
            "seeds": list(self.seeds),
            "snapshots": self.snapshots,
            "init_mode": self.init_mode,
            "solver": {"mode": self.solver_mode, "refine": self.solver_refine},
            "budget": {"max_node_updates": self.max_node_updates},
            "fields": {k: _field_to_dict(v) for k, v in self.fields.items()},
        }
        return d

    def to_toml(self) -> str:
        e = self.echo()
        lines = []
        for key in ("name", "model"):
            lines.append(f'{key} = "{e[key]}"')
        lines.append(f"nodes = {e['nodes']}")
        lines.append(f"extent = {e['extent']}")
        for key in ("capacity", "t_end"):
            lines.append(f"{key} = {e[key]}")
        lines.append(f"seeds = {e['seeds']}")
        lines.append(f"snapshots = {e['snapshots']}")
        lines.append(f'init_mode = "{e["init_mode"]}"')
        lines.append("")
        lines.append("[solver]")
        lines.append(f'mode = "{e["solver"]["mode"]}"')
        lines.append(f"refine = {e['solver']['refine']}")
        lines.append("")
        lines.append("[budget]")
        lines.append(f"max_node_updates = {e['budget']['max_node_updates']}")
        for name, fd in e["fields"].items():
            lines.append("")
            lines.append(f"[fields.{name}]")
            for k, v in fd.items():
                if isinstance(v, str):
                    lines.append(f'{k} = "{v}"')
                else:
                    lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


def _field_to_dict(f: FieldSpec) -> dict:
    if f.kind == "constant":
        return {"kind": "constant", "value": f.value}
    if f.kind == "gaussian":
        return {"kind": "gaussian", "amplitude": f.amplitude}
    if f.kind == "affine":
        return {"kind": "affine", "offset": f.offset, "slope": list(f.slope)}
    return {"kind": "tabulated", "values": f.table.tolist()}


def _field_from_dict(name: str, d: dict) -> FieldSpec:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigurationError(f"fields.{name} needs a 'kind' tag")
    kind = d["kind"]
    known = {
        "constant": {"kind", "value"},
        "gaussian": {"kind", "amplitude"},
        "affine": {"kind", "offset", "slope"},
        "tabulated": {"kind", "values"},
    }
    if kind not in known:
        raise ConfigurationError(f"fields.{name}: unknown kind {kind!r}")
    extra = set(d) - known[kind]
    if extra:
        raise ConfigurationError(f"fields.{name}: unknown keys {sorted(extra)}")
    if kind == "constant":
        return FieldSpec.constant(d.get("value", 0.0))
    if kind == "gaussian":
        return FieldSpec.gaussian(d.get("amplitude", 0.0))
    if kind == "affine":
        return FieldSpec.affine(d.get("offset", 0.0), d.get("slope", [0.0]))
    return FieldSpec.tabulated(d["values"])


def scenario_from_dict(doc: dict) -> Scenario:
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown scenario keys {sorted(unknown)}")
    for req in ("model", "nodes", "t_end"):
        if req not in doc:
            raise ConfigurationError(f"scenario key '{req}' is required")
    model = doc["model"]
    if model not in ("rw1d", "net1d", "net2d"):
        raise ConfigurationError(f"model must be rw1d, net1d, or net2d, got {model!r}")
    nodes = doc["nodes"]
    nodes = tuple(int(n) for n in (nodes if isinstance(nodes, (list, tuple)) else [nodes]))
    if model == "net2d":
        if len(nodes) == 1:
            nodes = (nodes[0], nodes[0])
        if len(nodes) != 2:
            raise ConfigurationError("net2d needs one or two node counts")
    elif len(nodes) != 1:
        raise ConfigurationError(f"{model} needs exactly one node count")
    extent = tuple(float(v) for v in doc.get("extent", (-1.0, 1.0)))
    if len(extent) != 2 or not extent[1] > extent[0]:
        raise ConfigurationError("extent must be [lo, hi] with hi > lo")
    capacity = int(doc.get("capacity", nodes[0] ** 3))
    if capacity < 1:
        raise ConfigurationError("capacity must be >= 1")
    t_end = float(doc["t_end"])
    if not t_end > 0:
        raise ConfigurationError("t_end must be positive")
    seeds = doc.get("seeds", [1])
    seeds = tuple(int(s) for s in (seeds if isinstance(seeds, (list, tuple)) else [seeds]))
    if not seeds:
        raise ConfigurationError("at least one seed is required")
    snapshots = int(doc.get("snapshots", 100))
    if snapshots < 1:
        raise ConfigurationError("snapshots must be >= 1")
    init_mode = doc.get("init_mode", "exact")
    if init_mode not in ("exact", "binomial"):
        raise ConfigurationError("init_mode must be 'exact' or 'binomial'")

    wanted = _FIELDS_2D if model == "net2d" else _FIELDS_1D
    raw_fields = doc.get("fields", {})
    unknown = set(raw_fields) - set(wanted)
    if unknown:
        raise ConfigurationError(f"unknown fields for {model}: {sorted(unknown)}")
    fields = {}
    for name in wanted:
        if name in raw_fields:
            fields[name] = _field_from_dict(name, raw_fields[name])
        elif name in ("source", "init"):
            fields[name] = FieldSpec.constant(0.0)
        else:
            raise ConfigurationError(f"fields.{name} is required for model {model}")

    solver = doc.get("solver", {})
    unknown = set(solver) - _SOLVER_KEYS
    if unknown:
        raise ConfigurationError(f"unknown solver keys {sorted(unknown)}")
    solver_mode = solver.get("mode", "matched")
    if solver_mode not in ("matched", "refined"):
        raise ConfigurationError("solver.mode must be 'matched' or 'refined'")
    solver_refine = int(solver.get("refine", 4))

    budget = doc.get("budget", {})
    unknown = set(budget) - _BUDGET_KEYS
    if unknown:
        raise ConfigurationError(f"unknown budget keys {sorted(unknown)}")
    max_nodes = float(budget.get("max_node_updates", DEFAULT_NODE_BUDGET))

    return Scenario(
        name=str(doc.get("name", "scenario")),
        model=model,
        nodes=nodes,
        extent=extent,
        capacity=capacity,
        t_end=t_end,
        fields=fields,
        seeds=seeds,
        snapshots=snapshots,
        init_mode=init_mode,
        solver_mode=solver_mode,
        solver_refine=solver_refine,
        max_node_updates=max_nodes,
    )


def parse_scenario(text: str) -> Scenario:
    try:
        doc = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ConfigurationError(f"scenario is not valid TOML: {exc}") from exc
    return scenario_from_dict(doc)


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text())


# --------------------------------------------------------------------------
# Presets (published experiment settings at desk scale)
# --------------------------------------------------------------------------

def _net1d_preset(name, conv_left, conv_right):
    return Scenario(
        name=name,
        model="net1d",
        nodes=(20,),
        extent=(-1.0, 1.0),
        capacity=8000,
        t_end=1.0,
        fields={
            "diffusion": FieldSpec.constant(0.5),
            "conv_left": FieldSpec.constant(conv_left),
            "conv_right": FieldSpec.constant(conv_right),
            "source": FieldSpec.gaussian(0.5),
            "init": FieldSpec.gaussian(0.5),
        },
    )


def _net2d_preset(name, ce, cw, cn, cs):
    return Scenario(
        name=name,
        model="net2d",
        nodes=(20, 20),
        extent=(-1.0, 1.0),
        capacity=8000,
        t_end=0.1,
        fields={
            "diffusion1": FieldSpec.constant(0.25),
            "diffusion2": FieldSpec.constant(0.25),
            "conv_east": FieldSpec.constant(ce),
            "conv_west": FieldSpec.constant(cw),
            "conv_north": FieldSpec.constant(cn),
            "conv_south": FieldSpec.constant(cs),
            "source": FieldSpec.gaussian(0.5),
            "init": FieldSpec.gaussian(0.5),
        },
    )


def _presets() -> dict:
    return {
        # one-dimensional queue network, pure diffusion (b=1/2, c=0, t=1)
        "net1d-fig5": _net1d_preset("net1d-fig5", 0.0, 0.0),
        # convection c = conv_left - conv_right = 1 split so both move
        # probabilities stay valid (b=1/2 leaves no room for c_left=1 alone)
        "net1d-fig6": _net1d_preset("net1d-fig6", 0.5, -0.5),
        # two-dimensional network, b1=b2=1/4, zero convection, t=0.1
        "net2d-fig7": _net2d_preset("net2d-fig7", 0.0, 0.0, 0.0, 0.0),
        # c1 = west - east = -2, c2 = south - north = -4
        "net2d-fig8": _net2d_preset("net2d-fig8", 1.0, -1.0, 2.0, -2.0),
        # small random-walk run for the law-of-large-numbers checks
        "rw1d-demo": Scenario(
            name="rw1d-demo",
            model="rw1d",
            nodes=(10,),
            extent=(0.0, 1.0),
            capacity=1000,
            t_end=0.2,
            fields={
                "diffusion": FieldSpec.constant(0.5),
                "conv_left": FieldSpec.constant(0.0),
                "conv_right": FieldSpec.constant(0.0),
                "source": FieldSpec.constant(0.0),
                "init": FieldSpec.gaussian(0.5),
            },
        ),
    }


_ALIASES = {"net2d": "net2d-fig7"}


def preset(name: str) -> Scenario:
    table = _presets()
    key = _ALIASES.get(name, name)
    if key not in table:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {', '.join(sorted(table))}"
        )
    return table[key]


def preset_names():
    return sorted(_presets())


# --------------------------------------------------------------------------
# Execution
# --------------------------------------------------------------------------

def projected_steps(scenario: Scenario) -> int:
    grid = scenario.grid()
    dt = scenario.params().time_step(grid)
    return int(math.floor(scenario.t_end / dt * (1 + 1e-12)))


def check_budget(scenario: Scenario, include_chain: bool, override: bool) -> int:
    """Refuse runs whose projected node updates exceed the configured budget."""
    k = projected_steps(scenario)
    nodes = scenario.grid().n_interior
    lanes = (len(scenario.seeds) if include_chain else 0) + 2  # + drift + pde
    updates = float(k) * nodes * lanes
    if updates > scenario.max_node_updates and not override:
        raise BudgetError(
            f"projected K={k} steps x {nodes} nodes x {lanes} lanes = "
            f"{updates:.3g} node updates exceeds the budget "
            f"{scenario.max_node_updates:.3g}; lower nodes/capacity/t_end or "
            "pass --override-budget"
        )
    return k


@dataclass
class RunArtifacts:
    """Everything one scenario run produced, for reporting and file output."""

    scenario: Scenario
    grid: GridSpec
    times: np.ndarray
    report: ComparisonReport
    chain_fields: dict
    drift_field: object
    pde_field: object


def run_scenario_core(scenario: Scenario, include_chain: bool = True,
                      override_budget: bool = False) -> RunArtifacts:
    """Run chain(s), drift recursion, and PDE for one scenario; no file IO."""
    k_total = check_budget(scenario, include_chain, override_budget)
    grid = scenario.grid()
    params = scenario.params()
    tables = derive_probabilities(params, grid)
    stride = max(1, math.ceil(k_total / scenario.snapshots)) if k_total else 1
    _, marks = _snapshot_plan(k_total, stride)
    dt = params.time_step(grid)
    times = np.asarray(marks, dtype=float) * dt
    timings = {}

    t0 = time.perf_counter()
    x0 = initial_state(params.init, params.capacity, grid, "exact").normalized
    drift_traj = run_drift_recursion(params, grid, k_total, stride, x0=x0, tables=tables)
    drift_field = extend_to_field(drift_traj, grid)
    timings["drift_recursion_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if scenario.solver_mode == "refined":
        fine = refined_grid(grid, scenario.solver_refine)
        field = solve(PdeProblem(params=params, grid=fine, t_end=scenario.t_end,
                                 output_times=times))
        pde_field = sample_on_chain_grid(field, grid, times)
    else:
        pde_field = solve_on_chain_lattice(params, grid, marks)
    timings["pde_solve_s"] = time.perf_counter() - t0

    chain_fields = {}
    overflow = {}
    streams = {}
    if include_chain:
        t0 = time.perf_counter()
        for seed in scenario.seeds:
            stream = RngStream(seed=seed, stream=0)
            rng = stream.generator()
            state0 = initial_state(params.init, params.capacity, grid,
                                   scenario.init_mode, rng)
            traj = run_chain(params, grid, k_total, stride, rng, state0=state0,
                             tables=tables)
            chain_fields[seed] = extend_to_field(traj, grid)
            overflow[seed] = traj.overflow_dropped
            streams[seed] = stream.stream
        timings["chain_total_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    report = build_report(
        scenario_echo=scenario.echo(),
        grid=grid,
        capacity=params.capacity,
        times=times,
        chain_fields=chain_fields,
        drift_field=drift_field,
        pde_field=pde_field,
        overflow=overflow,
        timings=timings,
        streams=streams,
    )
    report.timings["metrics_s"] = time.perf_counter() - t0
    return RunArtifacts(
        scenario=scenario,
        grid=grid,
        times=times,
        report=report,
        chain_fields=chain_fields,
        drift_field=drift_field,
        pde_field=pde_field,
    )


def _csv_rows(grid: GridSpec, times, pde_field, drift_field, chain_field):
    if grid.dimension == 1:
        yield "t,s,z_pde,x_drift,X_chain_norm,abs_err_chain_pde"
        positions = grid.interior_positions(0)
        for t in times:
            zp = pde_field.at_time(t)
            xd = drift_field.at_time(t)
            xc = chain_field.at_time(t)
            for i, s in enumerate(positions):
                err = abs(xc[i] - zp[i])
                yield f"{t!r},{s!r},{zp[i]!r},{xd[i]!r},{xc[i]!r},{err!r}"
    else:
        yield "t,s1,s2,z_pde,x_drift,X_chain_norm,abs_err_chain_pde"
        p1 = grid.interior_positions(0)
        p2 = grid.interior_positions(1)
        for t in times:
            zp = pde_field.at_time(t)
            xd = drift_field.at_time(t)
            xc = chain_field.at_time(t)
            for i, s1 in enumerate(p1):
                for j, s2 in enumerate(p2):
                    err = abs(xc[i, j] - zp[i, j])
                    yield (f"{t!r},{s1!r},{s2!r},{zp[i, j]!r},{xd[i, j]!r},"
                           f"{xc[i, j]!r},{err!r}")


def write_outputs(artifacts: RunArtifacts, out_dir) -> list:
    """Write one CSV per seed plus the JSON report; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = artifacts.scenario
    written = []
    echo = json_compact(scenario.echo())
    for seed, cf in artifacts.chain_fields.items():
        path = out / f"{scenario.name}_seed{seed}.csv"
        header = [
            f"# scenario = {scenario.name}",
            f"# model = {scenario.model}",
            f"# seed = {seed}",
            "# stream = 0",
            f"# resolved = {echo}",
        ]
        body = _csv_rows(artifacts.grid, artifacts.report.times,
                         artifacts.pde_field, artifacts.drift_field, cf)
        path.write_text("\n".join([*header, *body]) + "\n")
        written.append(path)
    jpath = out / f"{scenario.name}_report.json"
    jpath.write_text(artifacts.report.to_json() + "\n")
    written.append(jpath)
    return written


def json_compact(obj) -> str:
    import json

    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def run_scenario(scenario: Scenario, out_dir=None, override_budget: bool = False,
                 include_chain: bool = True, echo=print):
    """Full experiment: run everything, write outputs, print the summary."""
    artifacts = run_scenario_core(scenario, include_chain=include_chain,
                                  override_budget=override_budget)
    report = artifacts.report
    written = write_outputs(artifacts, out_dir) if out_dir is not None else []
    if echo:
        if report.chain_vs_pde_max_final is not None:
            echo(
                f"{scenario.name}: final-time max |chain - pde| = "
                f"{report.chain_vs_pde_max_final:.4e} (mean over seeds "
                f"{report.chain_vs_pde_mean_final:.4e})"
            )
        if report.drift_vs_pde is not None:
            echo(
                f"{scenario.name}: drift-recursion vs pde final = "
                f"{report.drift_vs_pde.final:.4e}, sup = {report.drift_vs_pde.sup:.4e}"
            )
        for stage, secs in report.timings.items():
            echo(f"  timing {stage} = {secs:.3f}")
        for path in written:
            echo(f"  wrote {path}")
    return report, written


def run_convergence_suite(base: Scenario, n_list, m_policy: str = "cube",
                          fixed_capacity: Optional[int] = None,
                          include_chain: bool = True,
                          override_budget: bool = False,
                          out_dir=None, echo=print) -> dict:
    """Execute the scenario across node counts and fit the error decay rate.

    m_policy 'cube' ties capacity to nodes^3 (the published scaling);
    'fixed' keeps ``fixed_capacity`` so the deterministic drift-vs-PDE lane
    stays cheap (capacity only sets the shared time step there).
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 3:
        raise ConfigurationError("convergence suite needs at least three node counts")
    if m_policy not in ("cube", "fixed"):
        raise ConfigurationError("m_policy must be 'cube' or 'fixed'")
    if m_policy == "fixed" and fixed_capacity is None:
        raise ConfigurationError("m_policy 'fixed' needs fixed_capacity")

    rows = []
    for n in n_list:
        nodes = (n, n) if base.model == "net2d" else (n,)
        capacity = n**3 if m_policy == "cube" else int(fixed_capacity)
        scn = replace(base, nodes=nodes, capacity=capacity, name=f"{base.name}-n{n}")
        artifacts = run_scenario_core(scn, include_chain=include_chain,
                                      override_budget=override_budget)
        rep = artifacts.report
        row = {
            "nodes": n,
            "capacity": capacity,
            "ds": scn.grid().ds,
            "drift_vs_pde_sup": rep.drift_vs_pde.sup,
            "drift_vs_pde_final": rep.drift_vs_pde.final,
            "chain_vs_pde_mean_final": rep.chain_vs_pde_mean_final,
            "chain_vs_pde_max_final": rep.chain_vs_pde_max_final,
        }
        rows.append(row)
        if echo:
            echo(
                f"{scn.name}: ds={row['ds']:.5f} drift_vs_pde_sup="
                f"{row['drift_vs_pde_sup']:.4e}"
                + (
                    f" chain_vs_pde_mean_final={row['chain_vs_pde_mean_final']:.4e}"
                    if row["chain_vs_pde_mean_final"] is not None
                    else ""
                )
            )

    slope = fit_rate([(r["ds"], r["drift_vs_pde_sup"]) for r in rows])
    result = {
        "base": base.echo(),
        "n_list": n_list,
        "m_policy": m_policy,
        "rows": rows,
        "drift_vs_pde_rate_slope": slope,
    }
    if include_chain:
        finals = [r["chain_vs_pde_mean_final"] for r in rows]
        result["chain_vs_pde_strictly_decreasing"] = all(
            b < a for a, b in zip(finals, finals[1:])
        )
    if echo:
        echo(f"fitted drift-vs-pde rate slope: {slope:.3f}")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        import json

        path = out / f"{base.name}_convergence.json"
        path.write_text(json.dumps(result, indent=2) + "\n")
        if echo:
            echo(f"  wrote {path}")
    return result
