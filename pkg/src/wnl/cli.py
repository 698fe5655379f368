"""Command line interface ``wnl``.

Exit status: 0 success, 1 usage or parse error, 2 validation failure,
3 ``--assert-zero`` violated, 4 the two engines disagree.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings

from . import engine_dist, engine_op
from .frontend import ParseError, bundled_examples, bundled_path, load_problem, parse_expression
from .varcalc import NotExactWarning, hamiltonian_flow
from .wnlop import ValidationError, check_skew_adjoint

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NONZERO, EXIT_DISAGREE = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wnl", description="Schouten brackets of weakly nonlocal operators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, engines=True):
        sp.add_argument("file", help="problem file (.wnl) or the name of a bundled example")
        sp.add_argument("--format", choices=("text", "json"), default="text")
        if engines:
            sp.add_argument("--engine", choices=("op", "dist", "both"), default="both")
            sp.add_argument("--assert-zero", action="store_true", help="exit 3 unless the bracket vanishes")

    sp = sub.add_parser("parse", help="parse and validate a problem file")
    common(sp, engines=False)

    sp = sub.add_parser("skew", help="check skew-adjointness")
    common(sp, engines=False)
    sp.add_argument("--op", help="operator name (default: all)")

    sp = sub.add_parser("jacobi", help="[P,P] for one operator")
    common(sp)
    sp.add_argument("--op", help="operator name (default: the only one)")

    sp = sub.add_parser("schouten", help="[P,Q] for two operators")
    common(sp)
    sp.add_argument("--left", required=True)
    sp.add_argument("--right", required=True)

    sp = sub.add_parser("compat", help="compatibility [P,Q] of two operators")
    common(sp)
    sp.add_argument("--ops", required=True, help="comma-separated pair, e.g. P,Q")

    sp = sub.add_parser("flow", help="Hamiltonian flow P(dH/du)")
    common(sp, engines=False)
    sp.add_argument("--op", help="operator name (default: the only one)")
    sp.add_argument("--hamiltonian", required=True, help="density h, e.g. 'u1^2/2'")

    sp = sub.add_parser("examples", help="list bundled examples or print one")
    sp.add_argument("name", nargs="?")
    return p


def _pick(prob, name):
    if name is None:
        if len(prob.operators) != 1:
            raise KeyError(f"several operators defined ({', '.join(prob.operators)}); choose one with --op")
        return next(iter(prob.operators.values()))
    return prob.operator(name)


def _run_engines(P, Q, engine: str) -> list[dict]:
    out = []
    if engine in ("op", "both"):
        r = engine_op.schouten_bracket_timed(P, Q)
        v = r.vector.is_zero()
        rec = {"engine": "op", "verdict": "ZERO" if v.zero else "NONZERO"}
        if not v.zero:
            rec["witness"] = {"family": v.family, "index": list(v.index), "coeff": str(v.coefficient)}
        rec.update(r.vector.to_json())
        rec["timing_ms"] = round(r.timing_ms, 3)
        rec["_text"] = str(r.vector)
        out.append(rec)
    if engine in ("dist", "both"):
        r = engine_dist.schouten_bracket_timed(P, Q)
        v = r.reduced.verdict()
        rec = {"engine": "dist", "verdict": "ZERO" if v.zero else "NONZERO"}
        if not v.zero:
            rec["witness"] = {
                "index": list(v.index),
                "symbol": engine_dist.symbol_str(v.symbol),
                "coeff": str(v.coefficient),
            }
        rec.update(r.reduced.to_json())
        rec["timing_ms"] = round(r.timing_ms, 3)
        rec["_text"] = str(r.reduced)
        out.append(rec)
    return out


def _report_bracket(args, label: str, P, Q) -> int:
    results = _run_engines(P, Q, args.engine)
    verdicts = {r["verdict"] for r in results}
    agree = len(verdicts) == 1
    if args.format == "json":
        clean = [{k: v for k, v in r.items() if k != "_text"} for r in results]
        if len(clean) == 1:
            doc = clean[0]
        else:
            doc = {
                "engine": "both",
                "verdict": results[0]["verdict"] if agree else "DISAGREE",
                "agree": agree,
                "results": clean,
                "timing_ms": round(sum(r["timing_ms"] for r in results), 3),
            }
        doc = {"bracket": label, **doc}
        print(json.dumps(doc, indent=2))
    else:
        for r in results:
            print(f"{label} [{r['engine']}]: {r['verdict']}  ({r['timing_ms']:.1f} ms)")
            if r["verdict"] != "ZERO":
                w = r["witness"]
                print(f"  witness: {json.dumps(w)}")
                print("  " + r["_text"].replace("\n", "\n  "))
        if not agree:
            print("engines disagree", file=sys.stderr)
    if not agree:
        return EXIT_DISAGREE
    if args.assert_zero and "NONZERO" in verdicts:
        return EXIT_NONZERO
    return EXIT_OK


def _cmd_parse(args) -> int:
    prob = load_problem(args.file)
    if args.format == "json":
        doc = {"components": prob.components, "parameters": list(prob.parameters), "operators": {}}
        for name, op in prob.operators.items():
            doc["operators"][name] = {
                "local": [[str(e) for e in row] for row in op.local],
                "tail_c": [[str(x) for x in row] for row in op.tail.c],
                "tail_w": [[str(x) for x in row] for row in op.tail.w],
            }
        print(json.dumps(doc, indent=2))
    else:
        print(f"components: {prob.components}")
        if prob.parameters:
            print(f"parameters: {', '.join(prob.parameters)}")
        for op in prob.operators.values():
            print(op)
    return EXIT_OK


def _cmd_skew(args) -> int:
    prob = load_problem(args.file, validate=False)
    ops = [prob.operator(args.op)] if args.op else list(prob.operators.values())
    status = EXIT_OK
    rows = []
    for op in ops:
        v = check_skew_adjoint(op)
        rows.append({"operator": op.name, "skew": v.is_skew, "witness": list(v.witness) if v.witness else None})
        if not v.is_skew:
            status = EXIT_INVALID
    if args.format == "json":
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            print(f"{r['operator']}: {'skew' if r['skew'] else 'NOT skew, witness ' + str(tuple(r['witness']))}")
    return status


def _cmd_flow(args) -> int:
    prob = load_problem(args.file)
    P = _pick(prob, args.op)
    h = parse_expression(args.hamiltonian, prob.components, prob.parameters)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NotExactWarning)
        flow = hamiltonian_flow(P, h)
    comps = [flow.component_str(i) for i in range(1, P.n + 1)]
    if args.format == "json":
        print(json.dumps({"operator": P.name, "hamiltonian": str(h), "local": flow.is_local, "flow": comps}, indent=2))
    else:
        for i, s in enumerate(comps, start=1):
            print(f"u{i}_t = {s}")
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    return EXIT_OK


def _cmd_examples(args) -> int:
    if args.name:
        path = bundled_path(args.name)
        if not path.is_file():
            print(f"no bundled example {args.name!r}", file=sys.stderr)
            return EXIT_USAGE
        print(path.read_text(encoding="utf-8"), end="")
    else:
        for name in bundled_examples():
            print(name)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "parse":
            return _cmd_parse(args)
        if args.command == "skew":
            return _cmd_skew(args)
        if args.command == "flow":
            return _cmd_flow(args)
        if args.command == "examples":
            return _cmd_examples(args)
        prob = load_problem(args.file)
        if args.command == "jacobi":
            P = _pick(prob, args.op)
            return _report_bracket(args, f"[{P.name},{P.name}]", P, P)
        if args.command == "schouten":
            P, Q = prob.operator(args.left), prob.operator(args.right)
        else:
            names = [s.strip() for s in args.ops.split(",")]
            if len(names) != 2:
                raise KeyError("--ops needs exactly two names, e.g. P,Q")
            P, Q = prob.operator(names[0]), prob.operator(names[1])
        return _report_bracket(args, f"[{P.name},{Q.name}]", P, Q)
    except ValidationError as e:
        print(f"validation failed: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (ParseError, KeyError, FileNotFoundError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
