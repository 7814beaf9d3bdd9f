"""Command line: ``marketbayes {compile,solve,verify,query,generate}``.

Exit codes: 0 success, 1 non-convergence or failed verification, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from marketbayes.compiler import CompileError, compile_network, dump_economy, load_economy
from marketbayes.config import SEQUENTIAL, SNAPSHOT, SolverConfig
from marketbayes.economy import Economy
from marketbayes.generate import random_moral_network
from marketbayes.logic import ContradictionError, Proposition, QuerySyntaxError, parse_query
from marketbayes.network import NetworkError, dump_network, load_network
from marketbayes.oracle import OracleError, marginals
from marketbayes.query import QueryError, conditional_query, conjunction_query
from marketbayes.solver import solve

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

log = logging.getLogger("marketbayes")


class InputError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("network", nargs="?", help="network JSON file")
    p.add_argument("--economy", help="economy dump (from `compile --dump`) to use instead of a network")
    p.add_argument("--sigma", type=float, default=50.0)
    p.add_argument("--endowment", type=float, default=10.0)
    p.add_argument("--beta", type=float, default=100.0)
    p.add_argument("--y-max", type=float, default=1e4)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-rounds", type=int, default=10_000)
    p.add_argument("--init-price", type=float, default=0.5)
    p.add_argument("--mode", choices=[SEQUENTIAL, SNAPSHOT], default=SEQUENTIAL)
    p.add_argument("--stop-rule", choices=["tail", "delta"], default="tail")
    p.add_argument("--trace", help="write per-round CSV trace here")
    p.add_argument("--format", choices=["text", "csv", "json"], default="text")
    p.add_argument("--seed", type=int, help="generate a random moral network instead of reading one")
    p.add_argument("--nodes", type=int, default=6, help="node count for --seed networks")
    p.add_argument("--max-parents", type=int, default=2, help="parent cap for --seed networks")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marketbayes", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a network into an economy")
    _add_common(p)
    p.add_argument("--dump", action="store_true", help="print the economy as JSON")
    p.add_argument("--stats", action="store_true", help="print good/consumer/producer counts")

    p = sub.add_parser("solve", help="find equilibrium prices")
    _add_common(p)
    p.add_argument("--save-prices", help="write equilibrium prices as JSON for `query --prices`")

    p = sub.add_parser("verify", help="compare equilibrium prices with exact probabilities")
    _add_common(p)
    p.add_argument("--threshold", type=float, default=1e-3)

    p = sub.add_parser("query", help="probability of a conjunction or conditional")
    p.add_argument("expression", help='e.g. "!a1 & a3" or "a2 | a1"')
    _add_common(p)
    p.add_argument("--prices", help="prices JSON from `solve --save-prices`; skips solving")

    p = sub.add_parser("generate", help="write a random moral network")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--nodes", type=int, default=6)
    p.add_argument("--max-parents", type=int, default=2)
    p.add_argument("-o", "--output", help="output path (default stdout)")
    return parser


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(
            sigma=args.sigma,
            endowment=args.endowment,
            beta=args.beta,
            y_max=args.y_max,
            tol=args.tol,
            max_rounds=args.max_rounds,
            init_price=args.init_price,
            mode=args.mode,
            stop_rule=args.stop_rule,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _economy(args, config: SolverConfig) -> Economy:
    if args.economy:
        return load_economy(args.economy)
    if args.network:
        net = load_network(args.network)
    elif args.seed is not None:
        net = random_moral_network(args.seed, args.nodes, args.max_parents)
    else:
        raise InputError("give a network file, --economy, or --seed")
    return compile_network(net, config)


def _emit(rows: list[dict], fmt: str, out, extra: dict | None = None) -> None:
    if fmt == "json":
        json.dump({"rows": rows, **(extra or {})}, out, indent=2)
        out.write("\n")
        return
    if not rows:
        return
    cols = list(rows[0])
    if fmt == "csv":
        w = csv.DictWriter(out, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return
    cells = [[_cell(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    out.write("  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip() + "\n")
    for row in cells:
        out.write("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() + "\n")


def _cell(v) -> str:
    return f"{v:.6f}" if isinstance(v, float) else str(v)


def _report_dict(report) -> dict:
    return {
        "converged": report.converged,
        "rounds_used": report.rounds_used,
        "final_max_delta": report.final_max_delta,
        "warnings": len(report.warnings),
        "backend": report.backend,
    }


def cmd_compile(args, out) -> int:
    econ = _economy(args, _config(args))
    if args.stats or not args.dump:
        if args.format == "json" and not args.dump:
            json.dump(_stats(econ), out)
            out.write("\n")
        else:
            s = _stats(econ)
            out.write(f"goods {s['goods']}\nconsumers {s['consumers']}\nproducers {s['producers']}\n")
            for note in econ.notices:
                out.write(f"notice: {note}\n")
    if args.dump:
        out.write(dump_economy(econ) + "\n")
    return EXIT_OK


def _stats(econ: Economy) -> dict:
    return {"goods": econ.n_goods, "consumers": len(econ.consumers), "producers": len(econ.producers)}


def _solve(args, config, econ):
    prices, report = solve(econ, config, trace=args.trace)
    for note in econ.notices:
        log.info("notice: %s", note)
    return prices, report


def cmd_solve(args, out) -> int:
    config = _config(args)
    econ = _economy(args, config)
    prices, report = _solve(args, config, econ)
    rows = [{"good": econ.label(g), "price": float(prices[g])} for g in range(econ.n_goods)]
    _emit(rows, args.format, out, {"report": _report_dict(report)})
    if args.format == "text":
        out.write(report.summary() + "\n")
    if args.save_prices:
        Path(args.save_prices).write_text(
            json.dumps({"prices": {r["good"]: r["price"] for r in rows}}, indent=2)
        )
    return EXIT_OK if report.converged else EXIT_FAIL


def cmd_verify(args, out) -> int:
    config = _config(args)
    econ = _economy(args, config)
    if econ.network is None:
        raise InputError("economy has no network to compute exact probabilities from")
    truth = marginals(econ.network, [g.prop for g in econ.goods])
    prices, report = _solve(args, config, econ)
    rows = [
        {
            "good": econ.label(g),
            "market": float(prices[g]),
            "oracle": float(truth[g]),
            "error": float(abs(prices[g] - truth[g])),
        }
        for g in range(econ.n_goods)
    ]
    max_err = max(r["error"] for r in rows)
    ok = report.converged and max_err <= args.threshold
    _emit(rows, args.format, out, {"report": _report_dict(report), "max_error": max_err, "pass": ok})
    if args.format == "text":
        out.write(report.summary() + "\n")
        out.write(f"max error {max_err:.3g} (threshold {args.threshold:g}): {'PASS' if ok else 'FAIL'}\n")
    return EXIT_OK if ok else EXIT_FAIL


def _load_prices(path: str, econ: Economy) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text())["prices"]
        by_prop = {Proposition.parse(label): float(v) for label, v in data.items()}
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad prices file {path}: {exc}") from None
    prices = np.empty(econ.n_goods)
    for g in econ.goods:
        if g.prop not in by_prop:
            raise InputError(f"prices file lacks good <{econ.label(g.id)}>")
        prices[g.id] = by_prop[g.prop]
    return prices


def cmd_query(args, out) -> int:
    q = parse_query(args.expression)
    config = _config(args)
    econ = _economy(args, config)
    if args.prices:
        prices = _load_prices(args.prices, econ)
    else:
        prices, report = _solve(args, config, econ)
        if not report.converged:
            out.write(report.summary() + "\n")
            return EXIT_FAIL
    if q.given is None:
        value = conjunction_query(econ, prices, q.target)
    else:
        value = conditional_query(econ, prices, q.target, q.given)
    if args.format == "json":
        out.write(json.dumps({"query": args.expression, "probability": value}) + "\n")
    elif args.format == "csv":
        out.write(f"query,probability\n\"{args.expression}\",{value!r}\n")
    else:
        out.write(f"{value:.6f}\n")
    return EXIT_OK


def cmd_generate(args, out) -> int:
    text = dump_network(random_moral_network(args.seed, args.nodes, args.max_parents)) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        out.write(text)
    return EXIT_OK


COMMANDS = {
    "compile": cmd_compile,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "query": cmd_query,
    "generate": cmd_generate,
}


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except (
        InputError,
        NetworkError,
        CompileError,
        QuerySyntaxError,
        ContradictionError,
        QueryError,
        OracleError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run(argv: list[str]) -> tuple[int, str]:
    """Run the CLI in-process and capture stdout (used by tests)."""
    buf = io.StringIO()
    code = main(argv, buf)
    return code, buf.getvalue()


if __name__ == "__main__":
    sys.exit(main())
