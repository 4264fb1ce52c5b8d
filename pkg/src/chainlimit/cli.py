"""Command-line front end.

Verbs: ``run`` a scenario file or preset, ``presets`` to list or print one,
``converge`` for grid-refinement studies. Exit codes: 0 success,
2 configuration error, 3 budget refusal, 4 numerical instability.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .errors import BudgetError, ConfigurationError, DomainError, InstabilityError
from .scenarios import (
    Scenario,
    load_scenario,
    preset,
    preset_names,
    run_convergence_suite,
    run_scenario,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_INSTABILITY = 4


def _resolve_scenario(ref: str) -> Scenario:
    path = Path(ref)
    if path.exists():
        return load_scenario(path)
    return preset(ref)


def _apply_seed_flags(scenario: Scenario, args) -> Scenario:
    seeds = scenario.seeds
    if args.seed is not None:
        seeds = (args.seed,)
    if args.seeds is not None:
        if args.seeds < 1:
            raise ConfigurationError("--seeds must be >= 1")
        base = seeds[0]
        seeds = tuple(base + i for i in range(args.seeds))
    return replace(scenario, seeds=seeds)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainlimit",
        description="Simulate lattice network chains, solve their continuum "
        "PDEs, and quantify the agreement.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="run one scenario (file path or preset name)")
    run_p.add_argument("scenario", help="TOML scenario file or preset name")
    run_p.add_argument("--seed", type=int, default=None, help="replace the seed list")
    run_p.add_argument("--seeds", type=int, default=None,
                       help="run this many consecutive seeds for averaging")
    run_p.add_argument("--out", default="out", help="output directory (CSV + JSON)")
    run_p.add_argument("--override-budget", action="store_true",
                       help="run even past the node-update budget")
    run_p.add_argument("--no-chain", action="store_true",
                       help="skip Monte Carlo; drift recursion and PDE only")

    pre_p = sub.add_parser("presets", help="list presets or print one as TOML")
    pre_p.add_argument("name", nargs="?", default=None)

    con_p = sub.add_parser("converge", help="error decay across node counts")
    con_p.add_argument("scenario", help="TOML scenario file or preset name")
    con_p.add_argument("--n-list", required=True,
                       help="comma-separated node counts, e.g. 10,20,40")
    con_p.add_argument("--m-policy", choices=("cube", "fixed"), default="cube")
    con_p.add_argument("--capacity", type=int, default=None,
                       help="capacity for --m-policy fixed")
    con_p.add_argument("--seed", type=int, default=None)
    con_p.add_argument("--seeds", type=int, default=None)
    con_p.add_argument("--out", default="out")
    con_p.add_argument("--override-budget", action="store_true")
    con_p.add_argument("--no-chain", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.verb == "presets":
            if args.name is None:
                for name in preset_names():
                    print(name)
            else:
                print(preset(args.name).to_toml(), end="")
            return EXIT_OK

        scenario = _resolve_scenario(args.scenario)
        scenario = _apply_seed_flags(scenario, args)

        if args.verb == "run":
            run_scenario(
                scenario,
                out_dir=args.out,
                override_budget=args.override_budget,
                include_chain=not args.no_chain,
            )
            return EXIT_OK

        n_list = [int(tok) for tok in args.n_list.split(",") if tok.strip()]
        run_convergence_suite(
            scenario,
            n_list,
            m_policy=args.m_policy,
            fixed_capacity=args.capacity,
            include_chain=not args.no_chain,
            override_budget=args.override_budget,
            out_dir=args.out,
        )
        return EXIT_OK
    except (ConfigurationError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"budget refusal: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InstabilityError as exc:
        print(f"numerical instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY


def main_entry():  # console-script shim
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
