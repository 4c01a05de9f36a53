"""Command-line front end.

Exit codes: 0 a verdict was produced, 2 parse error, 3 mode precondition
violated (convex mode on a theory not flagged convex), 4 resource bound
exceeded, 5 output write failure.
"""

from __future__ import annotations

import argparse
import csv
import random
import statistics
import sys
import time

from . import _kernels
from .analysis import probe_convexity, check_cross_prevention
from .combine import (
    CombinedProblem,
    ConvexityNotDeclared,
    combined_problem,
    solve_auto,
    solve_complete,
    solve_convex,
)
from .formulas import (
    PPFormula,
    ParseError,
    Problem,
    REL,
    RelationSymbol,
    parse_problem,
    render_problem,
)
from .henson import build_s_star, component_label_solve
from .oracle import BoundExceeded, superpose_bruteforce
from .theories import HensonWitness, SolveResult

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_MODE = 3
EXIT_BOUND = 4
EXIT_WRITE = 5


def _load(path: str) -> Problem:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ParseError(str(exc))
    return parse_problem(text)


def _print_witness(problem: CombinedProblem, result: SolveResult) -> None:
    witness = result.witness
    block_of = {}
    for index, block in enumerate(witness.arrangement):
        for v in block:
            block_of[v] = index
    for v in sorted(block_of):
        print(f"arrangement {v} {block_of[v]}")
    for tid in sorted(witness.part_witnesses):
        part_witness = witness.part_witnesses[tid]
        if part_witness is None:
            continue
        values = (
            part_witness.assignment
            if isinstance(part_witness, HensonWitness)
            else part_witness
        )
        for var in sorted(values):
            print(f"model {tid} {var} {values[var]}")


def cmd_solve(args) -> int:
    try:
        problem = _load(args.file)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    combined = combined_problem(problem)
    try:
        if args.mode == "convex":
            result = solve_convex(combined)
        elif args.mode == "complete":
            result = solve_complete(combined, parallel=args.parallel)
        else:
            result = solve_auto(combined, parallel=args.parallel)
    except ConvexityNotDeclared as exc:
        print(f"mode error: {exc}", file=sys.stderr)
        return EXIT_MODE
    except BoundExceeded as exc:
        print(f"bound error: {exc}", file=sys.stderr)
        return EXIT_BOUND
    print(result.verdict)
    if args.witness and result.sat:
        _print_witness(combined, result)
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        problem = _load(args.file)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    combined = combined_problem(problem)
    try:
        result = superpose_bruteforce(combined)
    except BoundExceeded as exc:
        print(f"bound error: {exc}", file=sys.stderr)
        return EXIT_BOUND
    print(result.verdict)
    return EXIT_OK


def _single_solver(problem: Problem):
    from .theories import solvers_for

    solvers = solvers_for(problem)
    if len(solvers) != 1:
        raise ParseError("this command needs a file declaring exactly one theory")
    return next(iter(solvers.values()))


def cmd_probe(args) -> int:
    try:
        problem = _load(args.file)
        solver = _single_solver(problem)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    mode = "random" if args.random is not None else "exhaustive"
    try:
        witness = probe_convexity(
            solver,
            max_vars=args.max_vars,
            max_atoms=args.max_atoms,
            mode=mode,
            count=args.random or 0,
            seed=args.seed,
        )
    except ValueError as exc:
        print(f"bound error: {exc}", file=sys.stderr)
        return EXIT_BOUND
    if witness is None:
        print("none")
        return EXIT_OK
    print("witness")
    for atom in witness.instance.sorted_atoms():
        if atom.kind == REL:
            print(f"atom {atom.symbol.theory_id} {atom.symbol.name} " + " ".join(atom.args))
        else:
            print(f"{atom.kind} {atom.args[0]} {atom.args[1]}")
    print(f"pair1 {witness.pair1[0]} {witness.pair1[1]}")
    print(f"pair2 {witness.pair2[0]} {witness.pair2[1]}")
    print(
        "verdicts "
        + " ".join(v.verdict for v in witness.verdicts)
    )
    return EXIT_OK


def cmd_cross(args) -> int:
    try:
        problem = _load(args.file)
        solver = _single_solver(problem)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    free = tuple(name.strip() for name in args.free.split(","))
    if len(free) != 4:
        print("cross-check needs exactly four free variables", file=sys.stderr)
        return EXIT_PARSE
    existential = frozenset(set(problem.instance.variables) - set(free))
    formula = PPFormula(free, existential, problem.instance.atoms)
    report = check_cross_prevention(solver, formula)
    print("pass" if report.passes() else "fail")
    print(f"cond1 {str(report.cond1).lower()}")
    print(f"cond2 {str(report.cond2).lower()}")
    print(f"cond3 {str(report.cond3).lower()}")
    return EXIT_OK


def _henson_context(problem: Problem):
    henson_theories = [
        decl for decl in problem.theories.values() if decl.kind == "henson"
    ]
    if len(henson_theories) != 1:
        raise ParseError("henson commands need exactly one henson theory")
    return henson_theories[0]


def cmd_henson(args) -> int:
    try:
        problem = _load(args.file)
        decl = _henson_context(problem)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.action == "reduce-up":
        symbol = problem.symbols.get((decl.theory_id, "E"), RelationSymbol(decl.theory_id, "E", 2))
        enlarged = build_s_star(problem.instance, e_symbol=symbol)
        out = Problem(problem.theories, problem.relations, problem.symbols, enlarged)
        sys.stdout.write(render_problem(out))
        return EXIT_OK
    if args.action == "solve":
        from .theories import henson_decide

        result = henson_decide(problem.instance, decl.forbidden)
    else:  # reduce-down
        result = component_label_solve(problem.instance, decl.forbidden)
    print(result.verdict)
    if args.witness and result.sat and result.witness is not None:
        assignment = result.witness.assignment
        for var in sorted(assignment):
            print(f"model {decl.theory_id} {var} {assignment[var]}")
    return EXIT_OK


def _bench_pa_pair(seed: int, shared: int) -> Problem:
    rng = random.Random(seed)
    lines = ["theory t1 point_algebra", "theory t2 point_algebra"]
    names = [f"v{i}" for i in range(shared)]
    for tid in ("t1", "t2"):
        order = names[:]
        rng.shuffle(order)
        for i in range(len(order) - 1):
            lines.append(f"atom {tid} leq {order[i]} {order[i + 1]}")
        for _ in range(max(1, shared // 2)):
            x, y = rng.sample(names, 2)
            lines.append(f"atom {tid} {rng.choice(['lt', 'leq'])} {x} {y}")
    x, y = rng.sample(names, 2)
    lines.append(f"neq {x} {y}")
    return parse_problem("\n".join(lines))


def _bench_mi_pair(seed: int, shared: int) -> Problem:
    rng = random.Random(seed)
    lines = [
        "theory t1 temporal",
        "relation t1 leq/2 ordertypes 0/0,0/1",
        "relation t1 mi/3 builtin mi",
        "theory t2 point_algebra",
    ]
    names = [f"v{i}" for i in range(shared)]
    for i in range(len(names)):
        lines.append(f"atom t1 leq {names[i]} {names[(i + 1) % len(names)]}")
        lines.append(f"atom t2 leq {names[i]} {names[(i + 1) % len(names)]}")
    if shared >= 3:
        for _ in range(shared - 1):
            x, y, z = rng.sample(names, 3)
            lines.append(f"atom t1 mi {x} {y} {z}")
    x, y = rng.sample(names, 2)
    lines.append(f"neq {x} {y}")
    return parse_problem("\n".join(lines))


def _median_time(fn, runs: int = 5) -> tuple[float, object]:
    times = []
    value = None
    for _ in range(runs):
        start = time.perf_counter()
        value = fn()
        times.append((time.perf_counter() - start) * 1000.0)
    return statistics.median(times), value


def _bench_rows(seed: int):
    rows = []
    for family, builder in (("pa_pair", _bench_pa_pair), ("mi_pair", _bench_mi_pair)):
        for size in range(2, 7):
            problem = builder(seed + size, size)
            combined = combined_problem(problem)
            if family == "pa_pair":
                median, convex_result = _median_time(lambda: solve_convex(combined))
                complete_result = solve_complete(combined)
                agree = convex_result.sat == complete_result.sat
                mode = "convex"
            else:
                median, complete_result = _median_time(lambda: solve_complete(combined))
                oracle_result = superpose_bruteforce(combined)
                agree = complete_result.sat == oracle_result.sat
                mode = "complete"
            rows.append(
                {
                    "family": family,
                    "shared": len(combined.shared),
                    "mode": mode,
                    "median_ms": round(median, 3),
                    "agree": "yes" if agree else "no",
                }
            )
    return rows


def _bench_backends(seed: int):
    rows = []
    for backend in _kernels.available_backends():
        with _use_kernels(backend):
            for family, builder in (("pa_pair", _bench_pa_pair), ("mi_pair", _bench_mi_pair)):
                problem = builder(seed + 6, 6)
                combined = combined_problem(problem)
                median, _ = _median_time(lambda: solve_complete(combined))
                rows.append(
                    {"backend": backend, "family": family, "median_ms": round(median, 3)}
                )
    return rows


class _use_kernels:
    """Temporarily rebind the kernel functions to a named backend."""

    def __init__(self, name: str):
        self.name = name
        self.saved = None

    def __enter__(self):
        module = _kernels.get_backend(self.name)
        self.saved = (_kernels.temporal_search, _kernels.find_induced_embedding)
        _kernels.temporal_search = module.temporal_search
        _kernels.find_induced_embedding = module.find_induced_embedding
        return self

    def __exit__(self, *exc):
        _kernels.temporal_search, _kernels.find_induced_embedding = self.saved
        return False


def cmd_bench(args) -> int:
    rows = _bench_rows(args.seed)
    header = ["family", "shared", "mode", "median_ms", "agree"]
    widths = {
        key: max(len(key), max(len(str(row[key])) for row in rows)) for key in header
    }
    print("  ".join(key.ljust(widths[key]) for key in header))
    for row in rows:
        print("  ".join(str(row[key]).ljust(widths[key]) for key in header))
    if args.backends:
        brows = _bench_backends(args.seed)
        print()
        print("backend  family   median_ms")
        for row in brows:
            print(f"{row['backend']:<8} {row['family']:<8} {row['median_ms']}")
    if args.out:
        try:
            with open(args.out, "w", newline="", encoding="utf-8") as handle:
                writer = csv.DictWriter(handle, fieldnames=header)
                writer.writeheader()
                writer.writerows(rows)
        except OSError as exc:
            print(f"write error: {exc}", file=sys.stderr)
            return EXIT_WRITE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcsp")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="decide a combined instance file")
    p_solve.add_argument("file")
    p_solve.add_argument("--mode", choices=["auto", "convex", "complete"], default="auto")
    p_solve.add_argument("--witness", action="store_true")
    p_solve.add_argument("--parallel", action="store_true")
    p_solve.set_defaults(fn=cmd_solve)

    p_oracle = sub.add_parser("oracle", help="brute-force superposition verdict")
    p_oracle.add_argument("file")
    p_oracle.set_defaults(fn=cmd_oracle)

    p_probe = sub.add_parser("probe-convexity", help="search for a convexity violation")
    p_probe.add_argument("file")
    p_probe.add_argument("--max-vars", type=int, required=True)
    p_probe.add_argument("--max-atoms", type=int, required=True)
    group = p_probe.add_mutually_exclusive_group()
    group.add_argument("--exhaustive", action="store_true")
    group.add_argument("--random", type=int, default=None, metavar="N")
    p_probe.add_argument("--seed", type=int, default=0)
    p_probe.set_defaults(fn=cmd_probe)

    p_cross = sub.add_parser("cross-check", help="verify a cross prevention formula")
    p_cross.add_argument("file")
    p_cross.add_argument("--free", required=True, metavar="x,y,u,v")
    p_cross.set_defaults(fn=cmd_cross)

    p_henson = sub.add_parser("henson", help="forbidden-tournament digraph commands")
    p_henson.add_argument("action", choices=["solve", "reduce-up", "reduce-down"])
    p_henson.add_argument("file")
    p_henson.add_argument("--witness", action="store_true")
    p_henson.set_defaults(fn=cmd_henson)

    p_bench = sub.add_parser("bench", help="compare combination modes on seeded families")
    p_bench.add_argument("--seed", type=int, default=1)
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--backends", action="store_true",
                         help="also compare kernel backends")
    p_bench.set_defaults(fn=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    code = args.fn(args)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
