"""Command-line front end.

    chrism sample -p rps.chrism -q "player(tom),player(jon)" --seed 7
    chrism prob -p coin.chrism -o "toss,toss <==> head,tail"
    chrism learn -p rps.chrism -d games.obs
    chrism show-sw -p rps.chrism
    chrism set-sw -p rps.chrism --name "choice(jon)" --dist 0.6,0.07,0.33
    chrism check-ambiguity -p two_rule.chrism -q a
    chrism enumerate -p coin.chrism -q toss,toss [--dot]

Switch distributions persist in a sidecar registry file, ``<program>.sw``
by default, so ``learn`` followed by ``prob`` works across invocations.
Exit codes: 0 success, 1 user error, 2 engine error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from .ambiguity import check_ambiguity
from .engine import DEFAULT_MAX_STEPS, format_trace, run_sample
from .errors import EngineError, ParseError, RegistryError, UserError
from .inference import (
    DEFAULT_MAX_LEAVES,
    Limits,
    aggregate,
    derivation_tree_dot,
    enumerate_leaves,
    probability,
)
from .learning import EMConfig, em_learn
from .rules import format_observation
from .runtime import SwitchRegistry, canonical, store_text
from .syntax import parse_observation, parse_observations, parse_program, parse_query, parse_term


# -- registry files --------------------------------------------------------------


def _parse_outcome(text: str):
    return int(text) if text.lstrip("-").isdigit() else text


def persist_registry(registry: SwitchRegistry, path) -> None:
    """One switch per line: ``<name> | <outcome>:<prob> ...`` at full precision."""
    lines = []
    for name, (outcomes, probs) in registry.items():
        cells = " ".join(f"{v}:{p!r}" for v, p in zip(outcomes, probs))
        lines.append(f"{name} | {cells}")
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def load_registry(path) -> SwitchRegistry:
    registry = SwitchRegistry()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("%"):
            continue
        name_text, sep, cells = line.rpartition(" | ")
        if not sep or not cells.strip():
            raise RegistryError(f"{path}:{lineno}: expected '<name> | <outcome>:<prob> ...'")
        try:
            name = parse_term(name_text)
        except ParseError as exc:
            raise RegistryError(f"{path}:{lineno}: bad switch name: {exc}") from None
        outcomes, probs = [], []
        for cell in cells.split():
            v, sep, p = cell.rpartition(":")
            if not sep:
                raise RegistryError(f"{path}:{lineno}: expected outcome:prob, got {cell!r}")
            try:
                probs.append(float(p))
            except ValueError:
                raise RegistryError(f"{path}:{lineno}: bad probability {p!r}") from None
            outcomes.append(_parse_outcome(v))
        registry.set_switch(name, probs, outcomes)
    return registry


def _registry_for(program, path: Path) -> SwitchRegistry:
    registry = SwitchRegistry.for_program(program)
    if path.exists():
        for name, (outcomes, probs) in load_registry(path).items():
            registry.set_switch(name, probs, outcomes)
    return registry


# -- argument handling ------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _env_int(name: str, default: int) -> int:
    value = os.environ.get(name)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        raise UserError(f"environment variable {name} must be an integer, got {value!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-p", "--program", required=True, help="program file (.chrism)")
    common.add_argument("--registry", help="switch registry file (default: <program>.sw)")
    common.add_argument("--machine", action="store_true", help="machine-readable output")
    common.add_argument("--max-steps", type=int, help="transition limit (env CHRISM_MAX_STEPS)")
    common.add_argument("--max-leaves", type=int, help="leaf limit (env CHRISM_MAX_LEAVES)")

    def query_args(p):
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("-q", "--query", help="query text, e.g. 'toss,toss'")
        g.add_argument("--query-file", help="file holding the query")

    parser = _Parser(prog="chrism", description="Probabilistic chance-rule engine.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", parents=[common], help="run a query once at random")
    query_args(p)
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("-n", "--count", type=int, default=1, help="number of samples")
    p.add_argument("--trace", action="store_true", help="print the transitions taken")

    p = sub.add_parser("prob", parents=[common], help="probability of an observation")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("-o", "--observation", help="e.g. 'toss,toss <==> head,tail'")
    g.add_argument("--observation-file", help="file with one observation per line")

    p = sub.add_parser("learn", parents=[common], help="EM learning from observations")
    p.add_argument("-d", "--data", required=True, help="observation file (.obs)")
    p.add_argument("--max-iterations", type=int, default=500)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--smoothing", type=float, default=0.0)
    p.add_argument("--init", choices=("random", "registry"), default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--trace-csv", help="write iteration,loglik rows here")
    p.add_argument("--no-save", action="store_true", help="do not write the registry file")

    sub.add_parser("show-sw", parents=[common], help="print switch distributions")

    p = sub.add_parser("set-sw", parents=[common], help="set a switch distribution")
    p.add_argument("--name", required=True, help="switch name, e.g. 'choice(jon)'")
    p.add_argument("--dist", required=True, help="comma-separated probabilities")

    p = sub.add_parser("check-ambiguity", parents=[common], help="look for strategy dependence")
    query_args(p)
    p.add_argument("-k", type=int, default=4, help="number of strategy variants")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--widen", action="store_true", help="also reverse the query order")

    p = sub.add_parser("enumerate", parents=[common], help="exact answer distribution")
    query_args(p)
    p.add_argument("--dot", action="store_true", help="print the derivation tree as DOT")
    return parser


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UserError(f"cannot read {path}: {exc.strerror}") from None


def _query(args) -> tuple:
    return parse_query(args.query if args.query is not None else _read(args.query_file).strip())


# -- commands ---------------------------------------------------------------------


def _cmd_sample(args, program, registry, limits, out):
    query = _query(args)
    qtext = ",".join(str(c) for c in query)
    seed = args.seed
    for i in range(args.count):
        s = None if seed is None else seed + i
        result = run_sample(program, query, registry, s, max_steps=limits.max_depth)
        if args.machine:
            print("<failed>" if result.failed else canonical(result.store), file=out)
        else:
            print(f"{qtext} <==> {store_text(result.store)}.", file=out)
        if args.trace:
            print(format_trace(result.trace), file=out)
    return 0


def _cmd_prob(args, program, registry, limits, out):
    if args.observation is not None:
        observations = [parse_observation(args.observation)]
    else:
        observations = parse_observations(_read(args.observation_file))
    for obs in observations:
        p = probability(program, obs, registry=registry, limits=limits)
        if args.machine:
            print(f"{format_observation(obs)}\t{p!r}", file=out)
        else:
            print(f"Probability of {format_observation(obs)} is: {p:.6f}", file=out)
    return 0


def _cmd_learn(args, program, registry, limits, out, registry_path):
    data = parse_observations(_read(args.data))
    config = EMConfig(
        max_iterations=args.max_iterations,
        tolerance=args.tolerance,
        smoothing=args.smoothing,
        init=args.init,
        seed=args.seed,
        restarts=args.restarts,
    )
    result = em_learn(program, data, registry=registry, config=config, limits=limits)
    if args.trace_csv:
        with open(args.trace_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "loglik"])
            for i, ll in enumerate(result.log_likelihoods):
                writer.writerow([i, repr(ll)])
    ll = result.final_log_likelihood
    status = "converged" if result.converged else "stopped at the iteration limit"
    print(f"EM {status} after {result.iterations} iterations", file=out)
    print(f"log-likelihood: {ll!r}" if args.machine else f"log-likelihood: {ll:.6f}", file=out)
    if result.unlearnable:
        names = ", ".join(str(n) for n in result.unlearnable)
        print(f"not learnable from these data: {names}", file=out)
    print(result.registry.show_sw(), file=out)
    if not args.no_save:
        persist_registry(result.registry, registry_path)
    return 0


def _cmd_show_sw(args, program, registry, limits, out):
    if args.machine:
        for name, (outcomes, probs) in registry.items():
            cells = " ".join(f"{v}:{p!r}" for v, p in zip(outcomes, probs))
            print(f"{name} | {cells}", file=out)
    else:
        text = registry.show_sw()
        if text:
            print(text, file=out)
    return 0


def _cmd_set_sw(args, program, registry, limits, out, registry_path):
    name = parse_term(args.name)
    try:
        probs = [float(x) for x in args.dist.split(",")]
    except ValueError:
        raise RegistryError(f"--dist must be comma-separated numbers, got {args.dist!r}") from None
    registry.set_switch(name, probs)
    persist_registry(registry, registry_path)
    return 0


def _cmd_check_ambiguity(args, program, registry, limits, out):
    verdict = check_ambiguity(
        program, _query(args), args.k, args.tolerance, args.seed, args.widen, registry, limits
    )
    print(verdict.format(17 if args.machine else 6), file=out)
    return 0


def _cmd_enumerate(args, program, registry, limits, out):
    query = _query(args)
    if args.dot:
        out.write(derivation_tree_dot(program, query, registry=registry, limits=limits))
        return 0
    dist = aggregate(enumerate_leaves(program, query, registry=registry, limits=limits))
    print(dist.format(None if args.machine else 6), file=out)
    return 0


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        program_path = Path(args.program)
        program = parse_program(_read(args.program))
        registry_path = Path(args.registry or program_path.with_suffix(".sw"))
        registry = _registry_for(program, registry_path)
        max_steps = args.max_steps or _env_int("CHRISM_MAX_STEPS", DEFAULT_MAX_STEPS)
        max_leaves = args.max_leaves or _env_int("CHRISM_MAX_LEAVES", DEFAULT_MAX_LEAVES)
        limits = Limits(max_steps, max_leaves)
        cmd = args.command
        if cmd == "learn":
            return _cmd_learn(args, program, registry, limits, out, registry_path)
        if cmd == "set-sw":
            return _cmd_set_sw(args, program, registry, limits, out, registry_path)
        handler = {
            "sample": _cmd_sample,
            "prob": _cmd_prob,
            "show-sw": _cmd_show_sw,
            "check-ambiguity": _cmd_check_ambiguity,
            "enumerate": _cmd_enumerate,
        }[cmd]
        return handler(args, program, registry, limits, out)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
