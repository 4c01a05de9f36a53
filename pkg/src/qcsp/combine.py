"""Nelson-Oppen style combination engine.

Two modes decide the combined problem: convex equality propagation, complete
only when every theory is declared convex, and a complete arrangement search
that branches on the equality pattern of the shared variables.  Once shared
variables are made pairwise distinct, per-theory satisfiability implies joint
satisfiability, so exhausting arrangements is complete.
"""

from __future__ import annotations

from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import Iterable

from .formulas import (
    EQ,
    NEQ,
    Atom,
    Instance,
    Problem,
    collapse_equalities,
    eq,
    make_instance,
    neq,
    split_by_signature,
)
from .theories import SolveResult, TheorySolver, solvers_for


class ConvexityNotDeclared(ValueError):
    """Convex mode was requested for a theory not flagged convex."""


@dataclass(frozen=True)
class Arrangement:
    """A partition of the shared variables; blocks induce equalities inside
    and disequalities across."""

    partition: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        seen: set[str] = set()
        for block in self.partition:
            if not block:
                raise ValueError("empty arrangement block")
            for v in block:
                if v in seen:
                    raise ValueError(f"variable {v!r} in two blocks")
                seen.add(v)

    def induced_atoms(self) -> list[Atom]:
        atoms: list[Atom] = []
        for block in self.partition:
            members = sorted(block)
            for i in range(len(members) - 1):
                atoms.append(eq(members[i], members[i + 1]))
        for bi, block_a in enumerate(self.partition):
            for block_b in self.partition[bi + 1 :]:
                for u in block_a:
                    for v in block_b:
                        atoms.append(neq(u, v))
        return atoms


@dataclass(frozen=True)
class CombinedProblem:
    instance: Instance
    parts: dict[str, Instance]
    shared: frozenset[str]
    solvers: dict[str, TheorySolver]
    convex_flags: dict[str, bool]


@dataclass(frozen=True)
class CombinedWitness:
    arrangement: tuple[tuple[str, ...], ...]
    part_witnesses: dict[str, object]
    distinct_blocks: bool


def combined_problem(problem: Problem) -> CombinedProblem:
    solvers = solvers_for(problem)
    parts, shared = split_by_signature(problem.instance, problem.theories)
    return CombinedProblem(
        instance=problem.instance,
        parts=parts,
        shared=shared,
        solvers=solvers,
        convex_flags={tid: s.convex for tid, s in solvers.items()},
    )


def _neutral_atoms_consistent(instance: Instance) -> bool:
    """Eq/Neq atoms are duplicated into every part, but a problem with no
    theories has no part to reject a reflexive disequality; check directly."""
    collapsed, _ = collapse_equalities(instance)
    return not any(
        a.kind == NEQ and a.args[0] == a.args[1] for a in collapsed.atoms
    )


def _implied_reps(learned: Iterable[Atom], variables: Iterable[str]) -> dict[str, str]:
    parent = {v: v for v in variables}

    def find(v: str) -> str:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for atom in learned:
        a, b = find(atom.args[0]), find(atom.args[1])
        if a != b:
            if b < a:
                a, b = b, a
            parent[b] = a
    return {v: find(v) for v in variables}


def propagate_step(
    problem: CombinedProblem, learned: set[Atom]
) -> set[Atom]:
    """One propagation round: all shared equalities newly entailed by some
    theory under the learned set.  Empty result signals a fixpoint."""
    shared = sorted(problem.shared)
    rep = _implied_reps(learned, set(problem.instance.variables) | set(shared))

    collapsed_parts: dict[str, tuple[Instance, dict[str, str]]] = {}
    for tid, part in problem.parts.items():
        merged = make_instance(set(part.atoms) | set(learned))
        collapsed_parts[tid] = collapse_equalities(merged)

    found: set[Atom] = set()
    for i in range(len(shared)):
        for j in range(i + 1, len(shared)):
            x, y = shared[i], shared[j]
            if rep[x] == rep[y]:
                continue  # already implied by learned
            for tid in sorted(problem.parts):
                solver = problem.solvers[tid]
                collapsed, var_map = collapsed_parts[tid]
                cx = var_map.get(x, x)
                cy = var_map.get(y, y)
                if cx == cy:
                    continue
                if solver.entails_eq(collapsed, cx, cy):
                    # soundness: the atom is returned only when some part
                    # entails it right now
                    assert solver.entails_eq(collapsed, cx, cy)
                    found.add(eq(x, y))
                    break
    return found


def _decide_parts(
    problem: CombinedProblem,
    merges: Iterable[Atom],
    distinct_pairs: Iterable[tuple[str, str]],
) -> tuple[bool, dict[str, SolveResult], dict[str, tuple[Instance, dict[str, str]]]]:
    """Decide every part under the given equality/disequality decisions."""
    results: dict[str, SolveResult] = {}
    contexts: dict[str, tuple[Instance, dict[str, str]]] = {}
    merge_atoms = set(merges)
    neq_atoms = {neq(u, v) for u, v in distinct_pairs}
    for tid in sorted(problem.parts):
        part = problem.parts[tid]
        merged = make_instance(set(part.atoms) | merge_atoms | neq_atoms)
        collapsed, var_map = collapse_equalities(merged)
        contexts[tid] = (collapsed, var_map)
        result = problem.solvers[tid].decide(collapsed)
        results[tid] = result
        if not result.sat:
            return False, results, contexts
    return True, results, contexts


def _extend_witness(witness, var_map: dict[str, str]):
    """Map a witness on collapsed representatives back to the original
    variables.  Representatives whose every atom was an equality vanish from
    the collapsed instance; they are unconstrained, so they get fresh values.
    """
    reps = sorted(set(var_map.values()))
    if isinstance(witness, dict):
        values = dict(witness)
        fresh = max(values.values(), default=-1) + 1
        for r in reps:
            if r not in values:
                values[r] = fresh
                fresh += 1
        return {v: values[r] for v, r in var_map.items()}
    if witness is not None and hasattr(witness, "assignment"):
        from .theories import HensonWitness

        assignment = dict(witness.assignment)
        for r in reps:
            if r not in assignment:
                assignment[r] = f"n_{r}"
        extended = {v: assignment[r] for v, r in var_map.items()}
        return HensonWitness(extended, witness.arcs, witness.loop_vertex)
    return witness


@dataclass
class _SearchState:
    merges: frozenset[Atom]  # Eq atoms over shared variables
    distinct: frozenset[tuple[str, str]]  # rep pairs decided apart


def _rep_map(state: _SearchState, shared: list[str]) -> dict[str, str]:
    return _implied_reps(state.merges, shared)


def _undecided_pairs(state: _SearchState, shared: list[str]) -> list[tuple[str, str]]:
    rep = _rep_map(state, shared)
    pairs = []
    for i in range(len(shared)):
        for j in range(i + 1, len(shared)):
            u, v = shared[i], shared[j]
            ru, rv = rep[u], rep[v]
            if ru == rv:
                continue
            key = (ru, rv) if ru < rv else (rv, ru)
            if key in state.distinct:
                continue
            pairs.append((u, v))
    return pairs


def _search_node(
    problem: CombinedProblem, state: _SearchState
) -> SolveResult | None:
    """Returns a SAT result, UNSAT-as-None for this subtree."""
    shared = sorted(problem.shared)
    while True:
        ok, results, contexts = _decide_parts(
            problem, state.merges, state.distinct
        )
        if not ok:
            return None
        pending = _undecided_pairs(state, shared)
        if not pending:
            witness = CombinedWitness(
                arrangement=_arrangement_blocks(state, shared),
                part_witnesses={
                    tid: _extend_witness(results[tid].witness, contexts[tid][1])
                    for tid in results
                },
                distinct_blocks=True,
            )
            return SolveResult(True, witness)
        # propagation as pruning: merge pairs some theory already entails
        forced = None
        for u, v in pending:
            for tid in sorted(problem.parts):
                collapsed, var_map = contexts[tid]
                cu, cv = var_map.get(u, u), var_map.get(v, v)
                if cu == cv:
                    continue
                if problem.solvers[tid].entails_eq(collapsed, cu, cv):
                    forced = (u, v)
                    break
            if forced:
                break
        if forced:
            state = _SearchState(
                merges=state.merges | {eq(*forced)}, distinct=state.distinct
            )
            continue
        u, v = pending[0]
        rep = _rep_map(state, shared)
        ru, rv = rep[u], rep[v]
        key = (ru, rv) if ru < rv else (rv, ru)
        equal_branch = _SearchState(
            merges=state.merges | {eq(u, v)}, distinct=state.distinct
        )
        result = _search_node(problem, equal_branch)
        if result is not None:
            return result
        distinct_branch = _SearchState(
            merges=state.merges, distinct=state.distinct | {key}
        )
        return _search_node(problem, distinct_branch)


def _arrangement_blocks(
    state: _SearchState, shared: list[str]
) -> tuple[tuple[str, ...], ...]:
    rep = _rep_map(state, shared)
    blocks: dict[str, list[str]] = {}
    for v in shared:
        blocks.setdefault(rep[v], []).append(v)
    return tuple(tuple(sorted(blocks[r])) for r in sorted(blocks))


def solve_complete(problem: CombinedProblem, parallel: bool = False) -> SolveResult:
    """Complete arrangement search over the shared variables."""
    if not _neutral_atoms_consistent(problem.instance):
        return SolveResult(False)
    root = _SearchState(merges=frozenset(), distinct=frozenset())
    if not parallel:
        result = _search_node(problem, root)
        return result if result is not None else SolveResult(False)

    # expand a small frontier, then explore subtrees concurrently; the
    # verdict is schedule independent, the witness is whichever SAT subtree
    # reports first
    shared = sorted(problem.shared)
    frontier = [root]
    for _ in range(3):
        expanded: list[_SearchState] = []
        for state in frontier:
            pending = _undecided_pairs(state, shared)
            if not pending:
                expanded.append(state)
                continue
            u, v = pending[0]
            rep = _rep_map(state, shared)
            ru, rv = rep[u], rep[v]
            key = (ru, rv) if ru < rv else (rv, ru)
            expanded.append(
                _SearchState(merges=state.merges | {eq(u, v)}, distinct=state.distinct)
            )
            expanded.append(
                _SearchState(merges=state.merges, distinct=state.distinct | {key})
            )
        if expanded == frontier:
            break
        frontier = expanded

    with ThreadPoolExecutor(max_workers=min(8, max(2, len(frontier)))) as pool:
        futures = {pool.submit(_search_node, problem, state) for state in frontier}
        sat_result: SolveResult | None = None
        pending = set(futures)
        while pending:
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            for future in done:
                result = future.result()
                if result is not None and sat_result is None:
                    sat_result = result
            if sat_result is not None:
                break
        if sat_result is not None:
            return sat_result
    return SolveResult(False)


def solve_convex(problem: CombinedProblem) -> SolveResult:
    """Equality propagation to fixpoint, then one satisfiability check per
    part.  Requires every theory to be flagged convex."""
    not_convex = [tid for tid, flag in problem.convex_flags.items() if not flag]
    if not_convex:
        raise ConvexityNotDeclared(
            f"theories not declared convex: {', '.join(sorted(not_convex))}"
        )
    if not _neutral_atoms_consistent(problem.instance):
        return SolveResult(False)
    learned: set[Atom] = set()
    while True:
        new = propagate_step(problem, learned)
        if not new:
            break
        learned |= new

    results: dict[str, object] = {}
    for tid in sorted(problem.parts):
        merged = make_instance(set(problem.parts[tid].atoms) | learned)
        collapsed, var_map = collapse_equalities(merged)
        result = problem.solvers[tid].decide(collapsed)
        if not result.sat:
            return SolveResult(False)
        results[tid] = _extend_witness(result.witness, var_map)

    shared = sorted(problem.shared)
    state = _SearchState(merges=frozenset(learned), distinct=frozenset())
    witness = CombinedWitness(
        arrangement=_arrangement_blocks(state, shared),
        part_witnesses=results,
        distinct_blocks=False,
    )
    return SolveResult(True, witness)


def solve_auto(problem: CombinedProblem, parallel: bool = False) -> SolveResult:
    """Convex propagation when every theory is declared convex, complete
    arrangement search otherwise."""
    if all(problem.convex_flags.values()):
        return solve_convex(problem)
    return solve_complete(problem, parallel=parallel)
