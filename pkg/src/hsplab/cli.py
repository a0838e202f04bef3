"""Reproducible experiment harness.

Subcommands build a planted instance from flags (or a JSON config), run the
matching solver for a number of independent trials, compare every recovered
value against a brute-force classical oracle, and emit one JSON report.

Determinism contract: the same config and seed produce byte-identical
reports apart from the "timestamp" field, which holds both the start time
and the wall-clock duration.  Trials run on a worker pool with derived
seeds (master seed + trial index), so scheduling order cannot leak into the
output.

Exit codes: 0 success and all trials match; 1 solver failure; 2 config
error; 3 verification mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np

from . import amplitudes
from .algorithms import (
    BudgetExhausted,
    PromiseViolation,
    SolverParams,
    factor_via_order,
    find_order,
    find_period,
    robust_hsp,
    robust_period,
    solve_dlog,
    solve_hsp_general,
)
from .estimation import (
    control_distribution,
    semiclassical_outcome_distribution,
)
from .groups import SubgroupGenerators, subgroups_equal
from .oracles import (
    classical_invariance_subgroup,
    classical_least_period,
    classical_order,
    instance_from_json,
)
from .qft import estimator_distribution

SCHEMA = 1


class ConfigError(ValueError):
    pass


def _merge_table(size: int, multiplicity: int, seed: int) -> list[int]:
    """Random m-to-1 collapse: shuffle the labels, then bucket in runs of m."""
    order = np.random.default_rng(seed).permutation(size)
    table = [0] * size
    for pos, label in enumerate(order):
        table[int(label)] = pos // multiplicity
    return table


def _instance_descriptor(args) -> dict:
    kind = args.command
    if kind == "order":
        return {"kind": "order", "modulus": args.modulus, "base": args.base}
    if kind == "period":
        return {"kind": "period", "period": args.period, "relabel_seed": args.relabel_seed}
    if kind == "simon":
        secret = [int(c) for c in args.secret]
        return {"kind": "simon", "bits": args.bits or len(secret), "secret": secret}
    if kind == "deutsch":
        return {"kind": "deutsch", "f0": args.f0, "f1": args.f1}
    if kind == "hsp":
        moduli = [int(v) for v in args.moduli.split(",")]
        gens = []
        if args.generators:
            for chunk in args.generators.split(";"):
                gens.append([int(v) for v in chunk.split(",")])
        return {
            "kind": "hidden_subgroup",
            "moduli": moduli,
            "generators": gens,
            "relabel_seed": args.relabel_seed,
        }
    if kind == "dlog":
        desc = {"kind": "dlog", "base": args.base, "target": args.target}
        if args.modulus is not None:
            desc["modulus"] = args.modulus
        else:
            desc["order"] = args.order
        return desc
    if kind == "robust-period":
        inner = {"kind": "period", "period": args.period, "relabel_seed": args.relabel_seed}
        return {
            "kind": "many_to_one",
            "inner": inner,
            "merge": _merge_table(args.period, args.multiplicity, args.merge_seed),
            "multiplicity": args.multiplicity,
        }
    if kind == "robust-hsp":
        moduli = [int(v) for v in args.moduli.split(",")]
        gens = []
        if args.generators:
            for chunk in args.generators.split(";"):
                gens.append([int(v) for v in chunk.split(",")])
        inner = {
            "kind": "hidden_subgroup",
            "moduli": moduli,
            "generators": gens,
            "relabel_seed": args.relabel_seed,
        }
        inner_instance = instance_from_json(inner)
        return {
            "kind": "many_to_one",
            "inner": inner,
            "merge": _merge_table(inner_instance.codomain_size, args.multiplicity, args.merge_seed),
            "multiplicity": args.multiplicity,
        }
    raise ConfigError(f"no instance for command {kind!r}")


def _default_bound(descriptor: dict) -> int | None:
    kind = descriptor.get("kind")
    if kind == "order":
        return descriptor["modulus"]
    if kind == "period":
        return descriptor["period"]
    if kind == "many_to_one":
        return _default_bound(descriptor["inner"])
    return None


def _load_config(args) -> dict:
    config: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            config = json.load(fh)
        if config.get("schema", SCHEMA) != SCHEMA:
            raise ConfigError(f"unsupported schema {config.get('schema')!r}")
    config.setdefault("schema", SCHEMA)
    config.setdefault("solver", args.command)
    solver = config["solver"]

    if "instance" not in config and solver != "factor":
        config["instance"] = _instance_descriptor(args)
    if solver == "factor":
        n = getattr(args, "n", None)
        if n is not None:
            config["n"] = n
        if "n" not in config:
            raise ConfigError("factor needs --n")

    if getattr(args, "seed", None) is not None:
        config["seed"] = args.seed
    if "seed" not in config:
        raise ConfigError("a master seed is mandatory (--seed or config)")
    if getattr(args, "trials", None) is not None:
        config["trials"] = args.trials
    config.setdefault("trials", 1)

    params = dict(config.get("params", {}))
    if getattr(args, "control_bits", None) is not None:
        params["control_bits"] = args.control_bits
    if getattr(args, "multiplicity", None) is not None and config["solver"].startswith("robust"):
        params.setdefault("multiplicity", args.multiplicity)
    if "period_bound" not in params and "instance" in config:
        bound = _default_bound(config["instance"])
        if bound is not None:
            params["period_bound"] = bound
    if "period_bound" not in params and solver == "factor":
        params["period_bound"] = config["n"]
    config["params"] = params
    return config


def _truth_report(solver: str, instance) -> dict:
    """Ground truth from independent brute-force oracles (uncounted)."""
    with instance.uncounted():
        if solver in ("order", "period"):
            desc = instance.descriptor
            if desc.get("kind") == "order":
                return {"period": classical_order(desc["base"], desc["modulus"])}
            return {"period": classical_least_period(instance, instance.truth.period)}
        if solver == "robust-period":
            return {"period": classical_least_period(instance, instance.truth.period)}
        if solver in ("simon", "deutsch", "hsp"):
            return {"subgroup": classical_invariance_subgroup(instance).to_json()}
        if solver == "robust-hsp":
            return {"subgroup": classical_invariance_subgroup(instance).to_json()}
        if solver == "dlog":
            spec = instance.domain
            r = spec.moduli[0]
            base_of = {}
            for t in range(r):
                base_of.setdefault(instance._raw((0, t)), t)
            m = base_of[instance._raw((1, 0))]
            return {"exponent": m}
    return {}


def _run_single_trial(solver: str, config: dict, params: SolverParams, index: int) -> dict:
    seed = config["seed"] + index
    trial_params = replace(params, seed=seed)
    if solver == "factor":
        n = config["n"]
        value = factor_via_order(n, trial_params)
        return {
            "trial": index,
            "seed": seed,
            "recovered": value,
            "match": bool(n % value == 0 and 1 < value < n),
            "query_count": None,
            "samples": [],
        }

    instance = instance_from_json(config["instance"])
    if solver == "order":
        result = find_order(instance, trial_params)
        recovered: object = result.value
    elif solver == "period":
        result = find_period(instance, trial_params)
        recovered = result.value
    elif solver in ("simon", "deutsch", "hsp"):
        result = solve_hsp_general(instance, trial_params)
        recovered = result.value
    elif solver == "dlog":
        r = instance.domain.moduli[0]
        result = solve_dlog(instance, r, trial_params)
        recovered = result.value
    elif solver == "robust-period":
        result = robust_period(instance, trial_params)
        recovered = result.value
    elif solver == "robust-hsp":
        result = robust_hsp(instance, trial_params)
        recovered = result.value
    else:
        raise ConfigError(f"unknown solver {solver!r}")

    truth = _truth_report(solver, instance)
    if "period" in truth:
        match = recovered == truth["period"]
    elif "subgroup" in truth:
        match = subgroups_equal(
            recovered, SubgroupGenerators.from_json(truth["subgroup"])
        )
    elif "exponent" in truth:
        match = recovered == truth["exponent"]
    else:
        match = result.verified
    return {
        "trial": index,
        "seed": seed,
        "recovered": recovered.to_json() if isinstance(recovered, SubgroupGenerators) else recovered,
        "truth": truth.get("subgroup") or truth.get("period") or truth.get("exponent"),
        "match": bool(match and result.verified),
        "query_count": instance.query_count,
        "result": result.to_json(),
    }


def _run_command(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.monotonic()
    try:
        config = _load_config(args)
        params = SolverParams.from_json(config.get("params", {}))
    except (ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    solver = config["solver"]
    trials = int(config["trials"])
    try:
        with ThreadPoolExecutor(max_workers=min(trials, os.cpu_count() or 1)) as pool:
            results = list(
                pool.map(lambda i: _run_single_trial(solver, config, params, i), range(trials))
            )
    except (BudgetExhausted, PromiseViolation) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    all_match = all(t["match"] for t in results)
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "config": {k: config[k] for k in sorted(config) if k != "schema"},
        "results": results,
        "match": all_match,
        "timestamp": {"started": started, "wall_seconds": round(time.monotonic() - t0, 6)},
    }
    _emit(report, getattr(args, "json_out", None))
    return 0 if all_match else 3


def _dump_command(args) -> int:
    try:
        if args.kind == "estimator":
            if args.phi is None:
                raise ConfigError("--phi is required for estimator dumps")
            phi = Fraction(args.phi)
            dist = estimator_distribution(float(phi), args.size)
            payload = {"kind": "estimator", "phi": str(phi), "size": args.size,
                       "probs": [float(p) for p in dist.probs]}
        else:
            if not args.instance:
                raise ConfigError("--instance JSON is required for pe dumps")
            instance = instance_from_json(json.loads(args.instance))
            n_bits = args.bits
            if args.kind == "register-pe":
                law = control_distribution(instance, 1 << n_bits)
            else:
                law = semiclassical_outcome_distribution(instance, n_bits)
            payload = {"kind": args.kind, "bits": n_bits,
                       "instance": instance.to_json(),
                       "probs": [float(p) for p in law]}
    except (ConfigError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except amplitudes.CapExceeded as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    payload["schema"] = SCHEMA
    _emit(payload, getattr(args, "json_out", None))
    return 0


def _emit(payload: dict, json_out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2)
    print(text)
    if json_out:
        with open(json_out, "w") as fh:
            fh.write(text + "\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--seed", type=int, help="master seed (mandatory here or in config)")
    p.add_argument("--trials", type=int, help="independent solver runs (default 1)")
    p.add_argument("--control-bits", type=int, dest="control_bits",
                   help="control register size as a power of two")
    p.add_argument("--json-out", dest="json_out", help="also write the report to this path")
    p.add_argument("--cap", type=int, help="dense state dimension cap override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsplab",
        description="Exact simulators and solvers for hidden-subgroup style problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("order", help="multiplicative order via phase estimation")
    p.add_argument("--modulus", type=int, required=True)
    p.add_argument("--base", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("period", help="period of a relabeled periodic function")
    p.add_argument("--period", type=int, required=True)
    p.add_argument("--relabel-seed", type=int, default=0, dest="relabel_seed")
    _add_common(p)

    p = sub.add_parser("simon", help="two-element hidden subgroup over bit vectors")
    p.add_argument("--secret", required=True, help="bit string, e.g. 101")
    p.add_argument("--bits", type=int)
    _add_common(p)

    p = sub.add_parser("deutsch", help="constant-vs-balanced on one bit")
    p.add_argument("--f0", type=int, required=True, choices=(0, 1))
    p.add_argument("--f1", type=int, required=True, choices=(0, 1))
    _add_common(p)

    p = sub.add_parser("hsp", help="general Abelian hidden subgroup")
    p.add_argument("--moduli", required=True, help="comma list, e.g. 4,2")
    p.add_argument("--generators", default="", help="semicolon list of comma tuples, e.g. 2,0;0,1")
    p.add_argument("--relabel-seed", type=int, default=0, dest="relabel_seed")
    _add_common(p)

    p = sub.add_parser("dlog", help="discrete logarithm given the base's order")
    p.add_argument("--base", type=int, required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--modulus", type=int)
    p.add_argument("--order", type=int)
    _add_common(p)

    p = sub.add_parser("robust-period", help="period finding under an m-to-1 collapse")
    p.add_argument("--period", type=int, required=True)
    p.add_argument("--multiplicity", type=int, default=2)
    p.add_argument("--merge-seed", type=int, default=0, dest="merge_seed")
    p.add_argument("--relabel-seed", type=int, default=0, dest="relabel_seed")
    _add_common(p)

    p = sub.add_parser("robust-hsp", help="hidden subgroup under an m-to-1 collapse")
    p.add_argument("--moduli", required=True)
    p.add_argument("--generators", default="")
    p.add_argument("--multiplicity", type=int, default=2)
    p.add_argument("--merge-seed", type=int, default=0, dest="merge_seed")
    p.add_argument("--relabel-seed", type=int, default=0, dest="relabel_seed")
    _add_common(p)

    p = sub.add_parser("factor", help="split an odd composite via even orders")
    p.add_argument("--n", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("dump", help="exact probability vectors for plotting")
    p.add_argument("--kind", required=True,
                   choices=("estimator", "register-pe", "semiclassical-pe"))
    p.add_argument("--phi", help="phase as a fraction, e.g. 5/8 (estimator)")
    p.add_argument("--size", type=int, default=8, help="register size (estimator)")
    p.add_argument("--bits", type=int, default=3, help="control bits (pe kinds)")
    p.add_argument("--instance", help="instance descriptor JSON (pe kinds)")
    p.add_argument("--json-out", dest="json_out")
    p.add_argument("--cap", type=int)

    p = sub.add_parser("verify", help="run a config and compare against brute-force oracles")
    _add_common(p)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    cap = getattr(args, "cap", None)
    env_cap = os.environ.get("HSPLAB_CAP")
    if cap is not None:
        amplitudes.set_dimension_cap(cap)
    elif env_cap:
        try:
            amplitudes.set_dimension_cap(int(env_cap))
        except ValueError:
            print(f"config error: bad HSPLAB_CAP {env_cap!r}", file=sys.stderr)
            return 2

    if args.command == "dump":
        return _dump_command(args)
    if args.command == "verify":
        if not args.config:
            print("config error: verify needs --config", file=sys.stderr)
            return 2
        try:
            with open(args.config) as fh:
                solver = json.load(fh).get("solver")
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        if not solver:
            print("config error: verify config needs a 'solver' field", file=sys.stderr)
            return 2
        return _run_command(args)
    return _run_command(args)


if __name__ == "__main__":
    sys.exit(main())
