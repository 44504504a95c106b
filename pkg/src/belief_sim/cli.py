"""Command-line interface.

Subcommands: ``validate`` (parse and check a network document), ``exact``
(oracle posteriors), ``run`` (one sampling run with anytime interrupt
handling), ``bench`` (the multi-trial comparison protocol). Exit codes:
0 success, 1 usage error, 2 invalid input, 3 runtime abort.
"""

from __future__ import annotations

import argparse
import csv
import json
import signal
import sys
from pathlib import Path

import numpy as np

from ._jit import BACKEND
from .engine import SamplingRun
from .exact import StateSpaceError, exact_posteriors
from .fileformat import load_evidence, load_network
from .harness import (
    Experiment,
    default_thread_count,
    run_experiment,
)
from .mcmc import ChainInitError
from .network import BeliefNetwork, Evidence, NetworkError
from .samplers import ALGORITHMS, SamplerConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_ABORT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class InputError(Exception):
    pass


def _load_net(path: str) -> BeliefNetwork:
    try:
        return load_network(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read network {path!r}: {exc}") from None
    except NetworkError as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_ev(path: str | None, net: BeliefNetwork) -> Evidence:
    if path is None:
        return Evidence(net)
    try:
        return load_evidence(Path(path).read_text(), net)
    except OSError as exc:
        raise InputError(f"cannot read evidence {path!r}: {exc}") from None
    except NetworkError as exc:
        raise InputError(f"{path}: {exc}") from None


def _marginal_rows(net: BeliefNetwork, probs, errs=None):
    for j in sorted(probs):
        var = net.variables[j]
        for s, name in enumerate(var.state_names):
            se = "" if errs is None else f"{errs[j][s]:.6f}"
            yield var.name, name, f"{probs[j][s]:.6f}", se


def _emit_marginals(net, probs, errs, fmt, out=None):
    out = out if out is not None else sys.stdout
    if fmt == "json":
        doc = {
            net.variables[j].name: {
                "probabilities": [float(p) for p in probs[j]],
                "standard_errors": None if errs is None else [float(e) for e in errs[j]],
            }
            for j in sorted(probs)
        }
        out.write(json.dumps(doc, indent=2) + "\n")
    elif fmt == "csv":
        writer = csv.writer(out)
        writer.writerow(["node", "state", "probability", "standard_error"])
        for row in _marginal_rows(net, probs, errs):
            writer.writerow(row)
    else:
        header = f"{'node':<16}{'state':<16}{'probability':>12}"
        if errs is not None:
            header += f"{'std error':>12}"
        out.write(header + "\n" + "-" * len(header) + "\n")
        for name, state, p, se in _marginal_rows(net, probs, errs):
            line = f"{name:<16}{state:<16}{p:>12}"
            if errs is not None:
                line += f"{se:>12}"
            out.write(line + "\n")


def _cmd_validate(args) -> int:
    net = _load_net(args.network)
    edges = sum(len(c.parents) for c in net.cpts)
    print(
        f"{args.network}: valid network, {net.node_count} variables, "
        f"{edges} arcs, state space "
        f"{int(np.prod([float(v.cardinality) for v in net.variables]))}"
    )
    return EXIT_OK


def _cmd_exact(args) -> int:
    net = _load_net(args.network)
    ev = _load_ev(args.evidence, net)
    table = exact_posteriors(net, ev, engine=args.engine)
    if table.inconsistent:
        print("evidence is impossible under this network (probability 0)",
              file=sys.stderr)
        return EXIT_ABORT
    _emit_marginals(net, table.marginals, None, args.format)
    if args.evidence:
        print(f"# evidence probability: {table.evidence_prob:.9g}", file=sys.stderr)
    return EXIT_OK


def _cmd_run(args) -> int:
    net = _load_net(args.network)
    ev = _load_ev(args.evidence, net)
    mb_nodes = None
    if args.mb_nodes:
        mb_nodes = tuple(net.variable(n.strip()).id for n in args.mb_nodes.split(","))
    config = SamplerConfig(
        algorithm=args.algorithm,
        iterations=args.iterations,
        seed=args.seed,
        si_update_period=args.si_period,
        mb_nodes=mb_nodes,
        restarts=args.restarts,
    )
    run = SamplingRun(net, ev, config)

    interrupted = []
    previous = signal.signal(signal.SIGINT, lambda *_: interrupted.append(True))
    try:
        while run.iterations_done < config.iterations and not interrupted:
            run.advance(min(2048, config.iterations - run.iterations_done))
    finally:
        signal.signal(signal.SIGINT, previous)

    est = run.snapshot()
    _emit_marginals(net, est.probabilities, est.standard_errors, args.format)
    if interrupted:
        print(
            f"# interrupted after {run.iterations_done} of "
            f"{config.iterations} iterations; estimate above is the "
            f"best answer so far",
            file=sys.stderr,
        )
        return EXIT_ABORT
    return EXIT_OK


def _cmd_bench(args) -> int:
    net = _load_net(args.network)
    ev = _load_ev(args.evidence, net)
    algorithms = tuple(a.strip() for a in args.algorithms.split(","))
    iterations = tuple(int(i) for i in args.iterations.split(","))
    exp = Experiment(
        network=net,
        evidence=ev,
        algorithms=algorithms,
        iterations=iterations,
        trials=args.trials,
        master_seed=args.seed,
        network_name=args.network,
        oracle_engine=args.engine,
        restarts=args.restarts,
    )
    report = run_experiment(exp, threads=default_thread_count())
    if args.format == "json":
        text = report.to_json()
    elif args.format == "table":
        text = report.to_table()
    else:
        text = report.to_csv()
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="belief-sim",
        description=(
            "Monte Carlo and exact inference on discrete belief networks "
            f"(kernels: {BACKEND})"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and validate a network document")
    p.add_argument("network")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("exact", help="exact posterior marginals")
    p.add_argument("--network", required=True)
    p.add_argument("--evidence")
    p.add_argument("--engine", choices=("enum", "ve"), default="enum")
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("run", help="one sampling run (interruptible)")
    p.add_argument("--network", required=True)
    p.add_argument("--evidence")
    p.add_argument("--algorithm", choices=ALGORITHMS, default="basic")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--si-period", type=int, default=100,
                   help="self-importance update period")
    p.add_argument("--mb-nodes",
                   help="comma-separated node names to blanket-score")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("bench", help="multi-trial algorithm comparison")
    p.add_argument("--network", required=True)
    p.add_argument("--evidence")
    p.add_argument("--algorithms", default=",".join(ALGORITHMS))
    p.add_argument("--iterations", default="250,1000",
                   help="comma-separated base iteration counts")
    p.add_argument("--trials", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--engine", choices=("enum", "ve"), default="enum")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("csv", "json", "table"), default="csv")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except InputError as exc:
        print(f"belief-sim: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NetworkError, StateSpaceError, ValueError) as exc:
        print(f"belief-sim: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ChainInitError as exc:
        print(f"belief-sim: aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
