"""Command-line front end: generate, solve, verify, and expose oracles.

Exit codes: 0 success (or property holds), 1 property violated, 2 bad input,
3 internal certificate failure.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from .core import Instance
from .equilibrium import SearchLimits, approx_ceei, default_epsilon, exact_ceei
from .errors import (
    AlgorithmBugError,
    CertificateFailureError,
    EquilibriumNotFoundError,
    FairChoresError,
    InputError,
)
from .rounding import SolveOptions, fair_and_efficient
from .serialize import (
    allocation_from_dict,
    bundles_to_list,
    dump_json,
    fmt_rat,
    instance_from_dict,
    instance_to_dict,
    load_json,
    outcome_from_dict,
    outcome_to_dict,
    parse_rat,
    prices_from_dict,
)
from .three_agent import solve_three
from .verifiers import (
    VerifyLimits,
    check_ef1,
    check_efx,
    check_fisher_eq,
    check_fpo,
    check_nondegenerate,
    check_pef1,
    check_po_brute,
    check_proportional,
    check_tefx,
)

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairchores",
        description="Fair and efficient allocation of indivisible chores, "
                    "with machine-checkable certificates.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random integer instance")
    gen.add_argument("--agents", type=int, required=True)
    gen.add_argument("--chores", type=int, required=True)
    gen.add_argument("--maxd", type=int, default=20)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", required=True)

    surplus = sub.add_parser("solve-surplus",
                             help="EF1 + fPO allocation with at most n-1 copies")
    surplus.add_argument("-i", "--input", required=True)
    surplus.add_argument("-o", "--output", required=True)
    surplus.add_argument("--exact", action="store_true",
                         help="use the exhaustive equilibrium oracle (small instances)")
    surplus.add_argument("--epsilon", default=None,
                         help="override the income slack (rational like 1/100)")
    surplus.add_argument("--trace", default=None, help="write the event trace here")

    three = sub.add_parser("solve-three", help="tEFX or proportional split for 3 agents")
    three.add_argument("-i", "--input", required=True)
    three.add_argument("-o", "--output", required=True)
    three.add_argument("--trace", default=None, help="write the iteration trace here")

    verify = sub.add_parser("verify", help="check one property of an allocation")
    verify.add_argument("-i", "--input", required=True)
    verify.add_argument("--alloc", default=None,
                        help="allocation or market-outcome file (not needed for nondeg)")
    verify.add_argument("--property", required=True,
                        choices=["ef1", "efx", "tefx", "prop", "pef1",
                                 "po", "fpo", "fisher", "nondeg"])
    verify.add_argument("--prices", default=None,
                        help="prices file for pef1 (defaults to prices embedded in --alloc)")
    verify.add_argument("-o", "--output", default=None)

    oracle = sub.add_parser("oracle", help="run one oracle for external cross-checking")
    oracle.add_argument("-i", "--input", required=True)
    oracle.add_argument("--which", required=True,
                        choices=["ceei-exact", "ceei-approx", "po-brute"])
    oracle.add_argument("--alloc", default=None, help="allocation file (po-brute only)")
    oracle.add_argument("--epsilon", default=None,
                        help="income slack for ceei-approx (default 1/(5nm))")
    oracle.add_argument("-o", "--output", required=True)

    return parser


def _cmd_gen(args) -> int:
    if args.agents < 1 or args.chores < 0 or args.maxd < 1:
        raise InputError("need agents >= 1, chores >= 0, maxd >= 1")
    rng = random.Random(args.seed)
    rows = [[rng.randint(1, args.maxd) for _ in range(args.chores)]
            for _ in range(args.agents)]
    inst = Instance.from_rows(rows)
    dump_json(args.output, instance_to_dict(inst))
    return EXIT_OK


def _cmd_solve_surplus(args) -> int:
    inst = instance_from_dict(load_json(args.input))
    opts = SolveOptions(
        exact=args.exact,
        epsilon=parse_rat(args.epsilon) if args.epsilon is not None else None)
    result = fair_and_efficient(inst, opts)
    payload = {
        "kind": "surplus",
        "agents": inst.n,
        "chores": inst.m,
        "epsilon": fmt_rat(result.epsilon),
        "prices": [fmt_rat(p) for p in result.prices],
        "bundles": bundles_to_list(result.alloc),
        "surplus": result.alloc.surplus_count,
        "certificates": [c.to_dict() for c in result.certificates],
    }
    dump_json(args.output, payload)
    if args.trace:
        dump_json(args.trace, {"events": list(result.trace),
                               "checkpoints": result.checkpoints})
    return EXIT_OK


def _cmd_solve_three(args) -> int:
    inst = instance_from_dict(load_json(args.input))
    result = solve_three(inst)
    payload = {
        "kind": result.kind,
        "agents": 3,
        "chores": inst.m,
        "assignment": list(result.assignment),
        "bundles": bundles_to_list(result.alloc),
        "certificates": [result.certificate.to_dict()],
        "iterations": result.iterations,
    }
    dump_json(args.output, payload)
    if args.trace:
        dump_json(args.trace, {"iterations": list(result.trace)})
    return EXIT_OK


def _cmd_verify(args) -> int:
    inst = instance_from_dict(load_json(args.input))
    prop = args.property
    if prop == "nondeg":
        certificate = check_nondegenerate(inst)
    elif prop == "fisher":
        if args.alloc is None:
            raise InputError("--alloc (a market outcome file) is required for fisher")
        outcome = outcome_from_dict(load_json(args.alloc))
        certificate = check_fisher_eq(inst, outcome)
    else:
        if args.alloc is None:
            raise InputError("--alloc is required for this property")
        alloc_data = load_json(args.alloc)
        alloc = allocation_from_dict(alloc_data)
        if prop == "ef1":
            certificate = check_ef1(inst, alloc)
        elif prop == "efx":
            certificate = check_efx(inst, alloc)
        elif prop == "tefx":
            certificate = check_tefx(inst, alloc)
        elif prop == "prop":
            certificate = check_proportional(inst, alloc)
        elif prop == "po":
            certificate = check_po_brute(inst, alloc)
        elif prop == "fpo":
            certificate = check_fpo(inst, alloc)
        else:  # pef1
            prices_data = load_json(args.prices) if args.prices else alloc_data
            certificate = check_pef1(prices_from_dict(prices_data), alloc)
    payload = certificate.to_dict()
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.output:
        dump_json(args.output, payload)
    print(text)
    return EXIT_OK if certificate.holds else EXIT_VIOLATED


def _cmd_oracle(args) -> int:
    inst = instance_from_dict(load_json(args.input))
    if args.which == "ceei-exact":
        outcome = exact_ceei(inst, SearchLimits())
        dump_json(args.output, outcome_to_dict(outcome))
    elif args.which == "ceei-approx":
        eps = (parse_rat(args.epsilon) if args.epsilon is not None
               else default_epsilon(inst.n, inst.m))
        outcome = approx_ceei(inst, eps)
        dump_json(args.output, outcome_to_dict(outcome))
    else:  # po-brute
        if args.alloc is None:
            raise InputError("--alloc is required for the po-brute oracle")
        alloc = allocation_from_dict(load_json(args.alloc))
        certificate = check_po_brute(inst, alloc, VerifyLimits())
        dump_json(args.output, certificate.to_dict())
        return EXIT_OK if certificate.holds else EXIT_VIOLATED
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "gen": _cmd_gen,
        "solve-surplus": _cmd_solve_surplus,
        "solve-three": _cmd_solve_three,
        "verify": _cmd_verify,
        "oracle": _cmd_oracle,
    }
    try:
        return handlers[args.command](args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CertificateFailureError, AlgorithmBugError, EquilibriumNotFoundError) as exc:
        print(f"internal failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except FairChoresError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
