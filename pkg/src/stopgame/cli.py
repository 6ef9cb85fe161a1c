"""Command line interface: ``stopgame generate|solve|verify|report``."""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from .equilibrium import EquilibriumBundle, assemble_nonzero_sum, assemble_zero_sum
from .errors import ContractViolation, InstanceError
from .instance import (SCHEMA, Instance, dumps, generate, instance_to_dict, load, load_strategies, save,
                       strategy_to_dict)
from .payoff import empirical_modulus
from .stopping import validate_strategy
from .verify import nash_gap

EXIT_PASS, EXIT_GAP, EXIT_INVALID = 0, 1, 2


def _stamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _emit(doc: dict, out: str | None) -> None:
    text = dumps(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def result_document(inst: Instance, bundle: EquilibriumBundle) -> dict:
    tree = inst.tree
    env = bundle.envelopes
    processes = {}
    for i in (1, 2):
        processes[f"X{i}"] = env.X[i].values.tolist()
        processes[f"Y{i}"] = env.Y[i].values.tolist()
        processes[f"Z{i}"] = env.Z[i].values.tolist()
    for i, game in bundle.games.items():
        processes[f"v{i}"] = game.value.values.tolist()
    for i, w in bundle.W.items():
        processes[f"W{i}"] = w.values.tolist()
    gaps = bundle.gaps
    return {
        "timestamp": _stamp(),
        "schema": SCHEMA,
        "kind": "result",
        "mode": bundle.mode,
        "grid": {"h": tree.grid.h, "N": tree.N},
        "epsilon": bundle.epsilon,
        "delta": bundle.delta,
        "bound": bundle.bound,
        "r_h": bundle.r_h,
        "preconditions": bundle.preconditions,
        "mu": {
            name: mu.stop.astype(int).tolist()
            for name, mu in (("mu1", bundle.mu1), ("mu2", bundle.mu2)) if mu is not None
        },
        "delta_conditions": [c.as_dict() for c in bundle.delta_report],
        "submartingale": {str(i): v for i, v in bundle.submartingale.items()},
        "processes": processes,
        "gaps": gaps.as_dict() if gaps else None,
        "certified": bool(gaps and gaps.certifies(bundle.bound)),
        "strategies": {"rho": strategy_to_dict(bundle.rho), "tau": strategy_to_dict(bundle.tau)},
    }


def summary(doc: dict) -> str:
    lines = [f"mode {doc['mode']}  N={doc['grid']['N']}  h={doc['grid']['h']}  "
             f"eps={doc['epsilon']}  delta={doc['delta']}  r(h)={doc['r_h']:.6g}"]
    for name, ok in doc["preconditions"].items():
        lines.append(f"  precondition {name}: {'ok' if ok else 'FAILS'}")
    for c in doc["delta_conditions"]:
        lines.append(f"  delta condition [player {c['player']}] {c['name']}: value {c['value']:.6g} "
                     f"vs {c['threshold']:.6g} -> {'pass' if c['passed'] else 'fail'}")
    for i, v in doc["submartingale"].items():
        lines.append(f"  submartingale v{i} before mu{i}: worst drift {v:.3g}")
    g = doc["gaps"]
    if g:
        lines.append(f"  u1={g['u1']:.6g} u2={g['u2']:.6g}  gap1={g['gap1']:.3g} gap2={g['gap2']:.3g}  "
                     f"bound={doc['bound']:.6g} -> {'certified' if doc['certified'] else 'NOT certified'}")
    return "\n".join(lines)


def cmd_generate(args) -> int:
    inst = generate(args.seed, args.N, args.h, args.branching, args.lipschitz, args.scale,
                    zero_sum=args.zero_sum, ragged=args.ragged, attrition=args.attrition)
    if args.out:
        save(inst, args.out)
    else:
        sys.stdout.write(dumps(instance_to_dict(inst)))
    r = empirical_modulus(inst.payoff)
    print(f"generated {inst.tree!r}; r(h)={r(args.h):.6g}", file=sys.stderr)
    return EXIT_PASS


def cmd_solve(args) -> int:
    inst = load(args.instance)
    if args.mode == "zero-sum":
        bundle = assemble_zero_sum(inst.payoff, args.epsilon)
    else:
        bundle = assemble_nonzero_sum(inst.payoff, args.epsilon, args.delta)
    doc = result_document(inst, bundle)
    _emit(doc, args.out)
    print(summary(doc), file=sys.stderr)
    return EXIT_PASS if doc["certified"] else EXIT_GAP


def cmd_verify(args) -> int:
    inst = load(args.instance)
    rho, tau = load_strategies(inst.tree, args.strategies)
    problems = validate_strategy(rho, "rho") + validate_strategy(tau, "tau")
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        _emit({"timestamp": _stamp(), "schema": SCHEMA, "kind": "verification",
               "valid": False, "violations": problems}, args.out)
        return EXIT_INVALID
    gaps = nash_gap(inst.payoff, rho, tau, method=args.method)
    ok = gaps.certifies(args.epsilon)
    _emit({"timestamp": _stamp(), "schema": SCHEMA, "kind": "verification", "valid": True,
           "epsilon": args.epsilon, "gaps": gaps.as_dict(), "certified": ok}, args.out)
    print(f"gap1={gaps.gap1:.6g} gap2={gaps.gap2:.6g} eps={args.epsilon} -> "
          f"{'certified' if ok else 'gap exceeded'}", file=sys.stderr)
    return EXIT_PASS if ok else EXIT_GAP


def cmd_report(args) -> int:
    try:
        doc = json.loads(Path(args.result).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{args.result}: parse error at line {exc.lineno}: {exc.msg}") from exc
    if doc.get("schema") != SCHEMA or doc.get("kind") != "result":
        raise InstanceError(f"{args.result}: not a {SCHEMA} result document")
    print(summary(doc))
    return EXIT_PASS if doc["certified"] else EXIT_GAP


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stopgame", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random instance")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--N", type=int, default=3)
    g.add_argument("--h", type=float, default=0.5)
    g.add_argument("--branching", type=int, default=2)
    g.add_argument("--lipschitz", type=float, default=1.0)
    g.add_argument("--scale", type=float, default=10.0)
    g.add_argument("--zero-sum", action="store_true")
    g.add_argument("--ragged", action="store_true", help="draw 1..branching children per node")
    g.add_argument("--attrition", type=float, default=0.0,
                   help="drift in [0, 1] rewarding each player for outlasting the other")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="construct and certify an epsilon-equilibrium")
    s.add_argument("instance")
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--mode", choices=("zero-sum", "nonzero-sum"), default="nonzero-sum")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="measure the Nash gaps of a strategy pair")
    v.add_argument("instance")
    v.add_argument("strategies")
    v.add_argument("--epsilon", type=float, required=True)
    v.add_argument("--method", choices=("dp", "enumeration"), default="dp")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("report", help="summarize a result document")
    r.add_argument("result")
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, ContractViolation, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
