"""Command-line front end.

Subcommands: solve, decompose, perfect, cover, hilbert, oracle, rank,
embed.  All outputs are byte-deterministic for fixed inputs and flags.
Exit codes: 0 answered, 2 exhausted/unknown, 1 usage or internal error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import core, coverability, diophantine, klmst, ordinal

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EXHAUSTED = 2


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _limits(args) -> klmst.Limits:
    # ~1 KiB per symbolic sequence; the megabyte budget also feeds the
    # integer-program node caps
    per_mb = 1024
    return klmst.Limits(
        max_steps=args.max_steps,
        max_sequences=max(1, args.budget_mb * per_mb),
        dio_max_nodes=max(1000, args.budget_mb * 40),
        max_children=max(1000, args.budget_mb * per_mb),
    )


def _write_trace(path: str, trace: klmst.Trace) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for idx, step in enumerate(trace.steps):
            handle.write(_dump({
                "step": idx,
                "graphs": len(step.parent.graphs),
                "rank": ordinal.format_ordinal(step.parent_rank),
                "defect": klmst.defect_to_json(step.verdict),
                "children": [ordinal.format_ordinal(ordinal.rank_sequence(c))
                             for c in step.children],
            }) + "\n")


def _cmd_solve(args) -> int:
    inst = core.parse_instance(_read(args.instance))
    outcome = klmst.klmst_solve(inst, _limits(args))
    if args.trace:
        _write_trace(args.trace, outcome.trace)
    if isinstance(outcome, klmst.Reachable):
        if args.format == "json":
            print(_dump({"verdict": "REACHABLE",
                         "witness": core.run_to_json(outcome.run),
                         "steps": len(outcome.trace.steps),
                         "family": len(outcome.family)}))
        else:
            print("REACHABLE")
            print(_dump(core.run_to_json(outcome.run)))
        return EXIT_OK
    if isinstance(outcome, klmst.Unreachable):
        if args.format == "json":
            print(_dump({"verdict": "UNREACHABLE",
                         "steps": len(outcome.trace.steps)}))
        else:
            print("UNREACHABLE")
        return EXIT_OK
    if args.format == "json":
        print(_dump({"verdict": "EXHAUSTED", "reason": outcome.reason,
                     "steps": len(outcome.trace.steps)}))
    else:
        print("EXHAUSTED")
        print(outcome.reason)
    return EXIT_EXHAUSTED


def _cmd_decompose(args) -> int:
    inst = core.parse_instance(_read(args.instance))
    outcome = klmst.klmst_solve(inst, _limits(args))
    if args.trace:
        _write_trace(args.trace, outcome.trace)
    if isinstance(outcome, klmst.Exhausted):
        print("EXHAUSTED")
        print(outcome.reason)
        return EXIT_EXHAUSTED
    family = outcome.family if isinstance(outcome, klmst.Reachable) else ()
    if args.minimize:
        family = klmst.minimize_family(family)
    if args.format == "dot":
        print(klmst.family_dot(family))
    elif args.format == "json":
        print(_dump([klmst.mwgs_to_json(inst.vas, seq) for seq in family]))
    else:
        print(f"perfect family of {len(family)} sequence(s)")
        for idx, seq in enumerate(family):
            rank = ordinal.format_ordinal(ordinal.rank_sequence(seq))
            print(f"[{idx}] graphs={len(seq.graphs)} rank={rank}")
    return EXIT_OK


def _cmd_perfect(args) -> int:
    data = json.loads(_read(args.sequence))
    _, seq = klmst.mwgs_from_json(data)
    if not klmst.validate_sequence(seq):
        print("INVALID")
        return EXIT_ERROR
    verdict = klmst.is_perfect(seq)
    if args.format == "json":
        print(_dump(klmst.defect_to_json(verdict)))
    elif isinstance(verdict, klmst.Perfect):
        print("PERFECT")
    else:
        print(_dump(klmst.defect_to_json(verdict)))
    return EXIT_OK


def _cmd_cover(args) -> int:
    inst = core.parse_instance(_read(args.instance))
    state = "s"
    edges = tuple((state, a, state) for a in inst.vas.actions)
    g = coverability.StateVas((state,), edges, tuple(range(inst.vas.dim)))
    init = (state, inst.source)
    if args.format == "dot":
        print(coverability.km_tree_dot(g, init))
        return EXIT_OK
    for node in coverability.km_cover(g, init):
        value = "(" + ",".join("w" if v is coverability.OMEGA else str(v)
                               for v in node.value) + ")"
        print(f"{node.state}: {value}")
    return EXIT_OK


def _cmd_hilbert(args) -> int:
    rows = []
    rhs = []
    for raw in _read(args.system).splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "|" not in line:
            print("error: each row needs 'coefficients | rhs'", file=sys.stderr)
            return EXIT_ERROR
        left, right = line.split("|", 1)
        rows.append([int(tok) for tok in left.split()])
        rhs.append(int(right.strip()))
    width = len(rows[0]) if rows else 0
    names = [f"z{i}" for i in range(width)]
    sys_ = diophantine.NatLinearSystem(rows, rhs, names)
    try:
        basis = diophantine.hilbert(sys_)
    except diophantine.DiophantineBudgetError as err:
        print(f"EXHAUSTED: {err}")
        return EXIT_EXHAUSTED
    if args.format == "json":
        print(_dump({"hom": [list(h) for h in basis.hom],
                     "part": [list(p) for p in basis.part]}))
    else:
        print("hom:")
        for h in basis.hom:
            print("  " + " ".join(str(x) for x in h))
        print("part:")
        for p in basis.part:
            print("  " + " ".join(str(x) for x in p))
    return EXIT_OK


def _cmd_oracle(args) -> int:
    inst = core.parse_instance(_read(args.instance))
    result = core.bfs_oracle(inst, args.max_norm, args.max_len)
    if result.verdict == core.REACHABLE:
        print("REACHABLE")
        print(_dump(core.run_to_json(result.run)))
        return EXIT_OK
    if result.verdict == core.UNREACHABLE:
        print("UNREACHABLE")
        return EXIT_OK
    print("UNKNOWN")
    return EXIT_EXHAUSTED


def _cmd_rank(args) -> int:
    if args.initial:
        inst = core.parse_instance(_read(args.initial))
        seq = klmst.initial_sequence(inst)
        print(ordinal.format_ordinal(ordinal.rank_sequence(seq)))
        return EXIT_OK
    if not args.ordinals:
        print("error: need --initial FILE or ordinal expressions", file=sys.stderr)
        return EXIT_ERROR
    parsed = [ordinal.parse_ordinal(text) for text in args.ordinals]
    if len(parsed) == 1:
        print(ordinal.format_ordinal(parsed[0]))
    else:
        cmp = ordinal.ord_cmp(parsed[0], parsed[1])
        print({-1: "less", 0: "equal", 1: "greater"}[cmp])
    return EXIT_OK


def _cmd_embed(args) -> int:
    inst = core.parse_instance(_read(args.vas))
    run1 = core.run_from_json(json.loads(_read(args.run1)), inst.vas)
    run2 = core.run_from_json(json.loads(_read(args.run2)), inst.vas)
    witness = core.embeds(run1, run2)
    if witness is None:
        print("NO EMBEDDING")
    else:
        print("EMBEDS positions=" + _dump(list(witness.positions)))
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vasreach",
        description="reachability in vector addition systems via "
                    "decomposition into perfect marked witness graph sequences")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=("text", "json"), budgets=False):
        p.add_argument("--format", choices=fmt, default="text")
        p.add_argument("--seed", type=int, default=0,
                       help="reserved for sampling-based diagnostics")
        p.add_argument("--single-thread", action="store_true",
                       help="accepted for compatibility; execution is "
                            "single-threaded and deterministic")
        if budgets:
            p.add_argument("--max-steps", type=int, default=10**6)
            p.add_argument("--budget-mb", type=int, default=256)
            p.add_argument("--trace", metavar="FILE",
                           help="write one JSON object per decomposition step")

    p = sub.add_parser("solve", help="decide reachability, print a witness")
    p.add_argument("instance")
    common(p, budgets=True)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("decompose", help="emit the final perfect family")
    p.add_argument("instance")
    p.add_argument("--minimize", action="store_true",
                   help="drop members whose ideal another member includes")
    common(p, fmt=("text", "json", "dot"), budgets=True)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("perfect", help="report Perfect or the first defect")
    p.add_argument("sequence", help="marked witness graph sequence (JSON)")
    common(p)
    p.set_defaults(func=_cmd_perfect)

    p = sub.add_parser("cover", help="Karp-Miller cover of the instance VAS")
    p.add_argument("instance")
    common(p, fmt=("text", "dot"))
    p.set_defaults(func=_cmd_cover)

    p = sub.add_parser("hilbert", help="Hilbert basis of 'rows | rhs' text")
    p.add_argument("system")
    common(p)
    p.set_defaults(func=_cmd_hilbert)

    p = sub.add_parser("oracle", help="bounded breadth-first reachability")
    p.add_argument("instance")
    p.add_argument("--max-norm", type=int, default=64)
    p.add_argument("--max-len", type=int, default=64)
    common(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("rank", help="termination rank in Cantor normal form")
    p.add_argument("--initial", metavar="INSTANCE",
                   help="rank of the instance's initial sequence")
    p.add_argument("ordinals", nargs="*",
                   help="one ordinal to normalize, or two to compare")
    common(p)
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("embed", help="embedding order between two run files")
    p.add_argument("vas", help="instance file providing the actions")
    p.add_argument("run1")
    p.add_argument("run2")
    common(p)
    p.set_defaults(func=_cmd_embed)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (core.VasError, ValueError, KeyError, OSError,
            json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
