"""Command-line front end: unfold, query, cross-validate, and generate systems."""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from itertools import product as iproduct

from .cdtl import eval_global, parse_global
from .formulas import FormulaError
from .generator import generate_system
from .kernels import KERNEL_BACKEND
from .product_oracle import OracleTruncated, build_product, deadlock_states, product_reachable
from .reachability import (
    ReachQuery,
    global_reachable,
    list_deadlocks,
    materialize_configuration,
)
from .relations import RelationIndex
from .serialize import (
    dumps_canonical,
    sum_from_dict,
    sum_to_json,
    system_from_dict,
    system_to_dict,
    unfolding_dot,
)
from .spec_model import SpecError, SystemSpec, parse_system, pretty_print, validate_system
from .unfolding import LimitExceeded, Limits, SumMachine, unfold

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_LIMIT = 2
EXIT_FALSE = 3


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _sniff(text: str) -> SystemSpec | SumMachine:
    """Accept DSL text, a system JSON document, or an unfolded sum-machine JSON."""
    if not text.lstrip().startswith("{"):
        return parse_system(text)
    d = json.loads(text)
    if "schema" in d:
        return sum_from_dict(d)
    return system_from_dict(d)


def _gate(spec: SystemSpec) -> bool:
    """Report validation problems; unmatched sync actions warn, the rest are fatal."""
    errors = False
    for line in validate_system(spec):
        if "unmatched sync action" in line:
            print(f"warning: {line}", file=sys.stderr)
        else:
            print(f"error: {line}", file=sys.stderr)
            errors = True
    return not errors


def _limits(args: argparse.Namespace) -> Limits:
    return Limits(max_nodes=args.max_nodes, max_depth=args.max_depth)


def _obtain_sum(args: argparse.Namespace) -> SumMachine | None:
    """Load the input and unfold it if it is still a system description."""
    loaded = _sniff(_read_text(args.input))
    if isinstance(loaded, SumMachine):
        return loaded
    if not _gate(loaded):
        return None
    return unfold(loaded, limits=_limits(args), mode=args.mode, threads=args.threads)


def _stamp(args: argparse.Namespace, started: float, what: str) -> None:
    if args.time:
        elapsed = time.perf_counter() - started
        print(f"{what}: {elapsed:.3f}s [{KERNEL_BACKEND}]", file=sys.stderr)


def _add_unfold_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="system file (DSL or JSON), or '-' for stdin")
    p.add_argument("--mode", choices=("sequential", "parallel"), default="sequential")
    p.add_argument("--threads", type=int, default=None, help="parallel worker cap")
    p.add_argument("--max-nodes", type=int, default=Limits.max_nodes, help="per-machine node cap")
    p.add_argument("--max-depth", type=int, default=Limits.max_depth, help="per-machine depth cap")
    p.add_argument("--time", action="store_true", help="print elapsed time to stderr")


def cmd_unfold(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    loaded = _sniff(_read_text(args.input))
    if isinstance(loaded, SumMachine):
        print("error: input is already an unfolded sum machine", file=sys.stderr)
        return EXIT_ERROR
    if not _gate(loaded):
        return EXIT_ERROR
    try:
        sm = unfold(loaded, limits=_limits(args), mode=args.mode, threads=args.threads)
    except LimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    if args.stats:
        st = sm.stats
        print(
            f"nodes={st['nodes']} cutoffs={st['cutoffs']} dead={st['dead']} "
            f"sync_pairs={st['sync_pairs']} d={st['d_measured']:.2f}",
            file=sys.stderr,
        )
    if args.dot:
        u = sm.unfolding_named(args.dot)
        out = unfolding_dot(sm, u)
    else:
        out = sum_to_json(sm)
    if args.output == "-":
        sys.stdout.write(out)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out)
    _stamp(args, started, "unfold")
    return EXIT_OK


def _parse_targets(spec: SystemSpec, text: str) -> ReachQuery:
    """Parse 'F1=B,F2=Y' into a query against the given system."""
    by_name: dict[str, str] = {}
    for part in text.split(","):
        name, eq, state = part.strip().partition("=")
        if not eq or not name or not state:
            raise ValueError(f"expected MACHINE=STATE, got {part.strip()!r}")
        if name in by_name:
            raise ValueError(f"machine {name} constrained twice")
        by_name[name] = state
    return ReachQuery.from_names(spec, by_name)


def cmd_reach(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    sm = _obtain_sum(args)
    if sm is None:
        return EXIT_ERROR
    q = _parse_targets(sm.spec, args.query)
    v = global_reachable(sm, q, mode=args.strategy, parallel_search=args.parallel)
    _stamp(args, started, "reach")
    if not v.reachable:
        print("unreachable")
        return EXIT_FALSE
    assert v.witness is not None
    print("reachable")
    for name, node in sorted(v.witness.nodes_by_name(sm.spec).items()):
        print(f"  {name}: {node}")
    if args.trace:
        trace = materialize_configuration(sm, v.witness)
        for step, label in enumerate(trace.labels):
            print(f"  step {step + 1}: {label} -> {'/'.join(trace.vectors[step + 1])}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    sm = _obtain_sum(args)
    if sm is None:
        return EXIT_ERROR
    g = parse_global(sm.spec, args.formula)
    holds, witness = eval_global(sm, g)
    _stamp(args, started, "eval")
    print("true" if holds else "false")
    if holds and witness is not None:
        for name, node in sorted(witness.nodes_by_name(sm.spec).items()):
            print(f"  {name}: {node}")
    return EXIT_OK if holds else EXIT_FALSE


def cmd_check(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    loaded = _sniff(_read_text(args.input))
    if isinstance(loaded, SumMachine):
        sm, spec = loaded, loaded.spec
    else:
        if not _gate(loaded):
            return EXIT_ERROR
        spec = loaded
        sm = unfold(spec, limits=_limits(args), mode=args.mode, threads=args.threads)
    pm = build_product(spec, bound=args.bound)
    if pm.truncated:
        print(f"error: product state bound {args.bound} hit; raise --bound", file=sys.stderr)
        return EXIT_LIMIT

    vectors = list(iproduct(*(m.states for m in spec.machines)))
    if len(vectors) > args.queries:
        vectors = random.Random(args.seed).sample(vectors, args.queries)
    mismatches = 0
    for vec in vectors:
        q = ReachQuery.of({i + 1: s for i, s in enumerate(vec)})
        got = global_reachable(sm, q).reachable
        want = product_reachable(pm, q.as_dict())
        if got != want:
            mismatches += 1
            print(f"mismatch: {'/'.join(vec)} sum={got} product={want}", file=sys.stderr)

    sum_dead = {
        tuple(c.node(i).base for i in sorted(c.components)) for c in list_deadlocks(sm)
    }
    oracle_dead = set(deadlock_states(pm))
    for vec in sorted(sum_dead ^ oracle_dead):
        mismatches += 1
        side = "sum only" if vec in sum_dead else "product only"
        print(f"deadlock mismatch ({side}): {'/'.join(vec)}", file=sys.stderr)

    print(
        f"{len(vectors)} queries, {mismatches} mismatches, "
        f"sizes {sm.stats['nodes']} vs {len(pm.states)}"
    )
    _stamp(args, started, "check")
    return EXIT_OK if mismatches == 0 else EXIT_ERROR


def cmd_gen(args: argparse.Namespace) -> int:
    try:
        spec = generate_system(
            seed=args.seed,
            n_machines=args.machines,
            states_per_machine=args.states,
            coupling=args.coupling,
            conflict_width=args.conflict_width,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.format == "json":
        sys.stdout.write(dumps_canonical(system_to_dict(spec)))
    else:
        sys.stdout.write(pretty_print(spec))
    return EXIT_OK


def cmd_deadlocks(args: argparse.Namespace) -> int:
    sm = _obtain_sum(args)
    if sm is None:
        return EXIT_ERROR
    found = list_deadlocks(sm)
    print(f"{len(found)} deadlock configuration(s)")
    for c in found:
        names = c.nodes_by_name(sm.spec)
        print("  " + " ".join(f"{m}:{s}" for m, s in sorted(names.items())))
    return EXIT_OK


def cmd_relations(args: argparse.Namespace) -> int:
    sm = _obtain_sum(args)
    if sm is None:
        return EXIT_ERROR
    rx = RelationIndex(sm)
    status = EXIT_OK
    if args.tsv:
        if args.tsv == "-":
            rx.dump_tsv(sys.stdout)
        else:
            with open(args.tsv, "w", encoding="utf-8") as fh:
                rx.dump_tsv(fh)
    if args.check:
        tot = rx.check_totality()
        print(
            f"totality: {tot['pairs']} pairs, {len(tot['uncovered'])} uncovered, "
            f"{tot['n_overlaps']} overlaps"
        )
        if tot["uncovered"]:
            status = EXIT_ERROR
        p1 = rx.check_property1()
        print(f"shortcut-vs-definition: {p1['checked']} pairs, {p1['n_mismatches']} mismatches")
        for a, b, fast, defn in p1["mismatches"][: args.examples]:
            print(f"  {rx.node_label(a)} {rx.node_label(b)} shortcut={fast} definition={defn}")
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="summachine",
        description="Unfold communicating state machines and answer global queries "
        "without building the full product.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("unfold", help="build a sum machine and emit canonical JSON")
    _add_unfold_flags(p)
    p.add_argument("-o", "--output", default="-", help="output path (default stdout)")
    p.add_argument("--dot", metavar="MACHINE", help="emit DOT for one unfolding instead")
    p.add_argument("--stats", action="store_true", help="print size statistics to stderr")
    p.set_defaults(fn=cmd_unfold)

    p = sub.add_parser("reach", help="decide global reachability of a state vector")
    _add_unfold_flags(p)
    p.add_argument("-q", "--query", required=True, help="targets, e.g. 'F1=B,F2=Y'")
    p.add_argument("--strategy", choices=("pairwise", "chain"), default="pairwise")
    p.add_argument("--parallel", action="store_true", help="search machines concurrently")
    p.add_argument("--trace", action="store_true", help="print a firing sequence witness")
    p.set_defaults(fn=cmd_reach)

    p = sub.add_parser("eval", help="evaluate a global conjunction formula")
    _add_unfold_flags(p)
    p.add_argument("-f", "--formula", required=True, help="e.g. 'conj-atoms F1:\"p\" F2:\"q\"'")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("check", help="cross-validate answers against the explicit product")
    _add_unfold_flags(p)
    p.add_argument("--bound", type=int, default=10**6, help="product state cap")
    p.add_argument("--queries", type=int, default=4096, help="max state vectors to test")
    p.add_argument("--seed", type=int, default=0, help="sampling seed when capped")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("gen", help="generate a random system")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--machines", type=int, required=True)
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--coupling", type=int, required=True, help="number of sync channels")
    p.add_argument("--conflict-width", type=int, default=3, help="local branching bound")
    p.add_argument("--format", choices=("dsl", "json"), default="dsl")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("deadlocks", help="list deadlocked configurations")
    _add_unfold_flags(p)
    p.set_defaults(fn=cmd_deadlocks)

    p = sub.add_parser("relations", help="dump or audit the node-pair relation table")
    _add_unfold_flags(p)
    p.add_argument("--tsv", metavar="PATH", help="write the full pair table ('-' for stdout)")
    p.add_argument("--check", action="store_true", help="run totality and shortcut audits")
    p.add_argument("--examples", type=int, default=5, help="max mismatch examples to print")
    p.set_defaults(fn=cmd_relations)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (SpecError, FormulaError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (LimitExceeded, OracleTruncated) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT


if __name__ == "__main__":
    sys.exit(main())
