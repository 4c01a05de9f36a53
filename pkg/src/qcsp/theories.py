"""Per-theory decision procedures behind a uniform solver contract.

Four theory kinds ship: equality (the pure-equality structure), point_algebra
(the order relations lt/leq over a dense order), temporal (relations given
extensionally as sets of allowed order types), and henson (digraphs omitting
a fixed set of finite tournaments, plus a loop-vertex variant used by the
reduction machinery).  Every solver returns a replayable witness on SAT.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from . import _kernels
from .formulas import EQ, NEQ, REL, Atom, Instance, collapse_equalities

LT_BIT = 1
EQ_BIT = 2
GT_BIT = 4


class ContractViolation(ValueError):
    """An instance contains atoms outside the solver's signature."""


def canonical_ranks(values: Iterable[int]) -> tuple[int, ...]:
    """Rank-compress values to the canonical weak order (contiguous from 0)."""
    values = tuple(values)
    rank_of = {v: r for r, v in enumerate(sorted(set(values)))}
    return tuple(rank_of[v] for v in values)


def is_weak_order(ranks: tuple[int, ...]) -> bool:
    used = set(ranks)
    return used == set(range(len(used)))


@dataclass(frozen=True)
class TemporalRelation:
    """A relation over the dense order, given as its set of allowed order types."""

    arity: int
    allowed: frozenset[tuple[int, ...]]

    def __post_init__(self):
        for ranks in self.allowed:
            if len(ranks) != self.arity or not is_weak_order(ranks):
                raise ValueError(f"bad order type {ranks} for arity {self.arity}")

    def admits(self, values: tuple[int, ...]) -> bool:
        return canonical_ranks(values) in self.allowed


@dataclass(frozen=True)
class Digraph:
    vertices: tuple[str, ...]
    arcs: frozenset[tuple[str, str]]

    def __post_init__(self):
        for a, b in self.arcs:
            if a not in self.vertices or b not in self.vertices:
                raise ValueError(f"arc ({a},{b}) uses unknown vertex")

    def is_tournament(self) -> bool:
        if len(self.vertices) < 2:
            return False
        for a, b in self.arcs:
            if a == b or (b, a) in self.arcs:
                return False
        expected = len(self.vertices) * (len(self.vertices) - 1) // 2
        return len(self.arcs) == expected


@dataclass(frozen=True)
class TournamentSet:
    tournaments: tuple[Digraph, ...]

    def __post_init__(self):
        for t in self.tournaments:
            if not t.is_tournament():
                raise ValueError("member is not a tournament")


@dataclass(frozen=True)
class HensonWitness:
    """A finite digraph in the age plus a variable-to-vertex assignment."""

    assignment: dict[str, str]
    arcs: frozenset[tuple[str, str]]
    loop_vertex: str | None = None


@dataclass(frozen=True)
class SolveResult:
    sat: bool
    witness: object | None = None

    @property
    def verdict(self) -> str:
        return "SAT" if self.sat else "UNSAT"


UNSAT = SolveResult(False, None)


def relation_from_predicate(
    arity: int, predicate: Callable[[tuple[int, ...]], bool], bound: int = 7
) -> TemporalRelation:
    """Build a temporal relation extensionally by filtering all weak orders on
    ``arity`` positions through the predicate."""
    from .oracle import enumerate_weak_orders

    if arity > bound:
        raise ValueError(f"arity {arity} exceeds enumeration bound {bound}")
    allowed = frozenset(w for w in enumerate_weak_orders(arity) if predicate(w))
    return TemporalRelation(arity, allowed)


_MI_CACHE: list[TemporalRelation] = []


def builtin_mi() -> TemporalRelation:
    """The ternary relation holding when x >= y or x > z (ranks compare values)."""
    if not _MI_CACHE:
        _MI_CACHE.append(
            relation_from_predicate(3, lambda w: w[0] >= w[1] or w[0] > w[2])
        )
    return _MI_CACHE[0]


_BINARY_RELATIONS = {
    "lt": TemporalRelation(2, frozenset({(0, 1)})),
    "leq": TemporalRelation(2, frozenset({(0, 1), (0, 0)})),
    "eq": TemporalRelation(2, frozenset({(0, 0)})),
    "neq": TemporalRelation(2, frozenset({(0, 1), (1, 0)})),
}


def relation_for_name(name: str) -> TemporalRelation | None:
    return _BINARY_RELATIONS.get(name)


class _UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {v: v for v in items}

    def find(self, v: str) -> str:
        parent = self.parent
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def eq_decide(inst: Instance) -> SolveResult:
    """Equality theory over an infinite domain: UNSAT iff a disequality links
    one equality class to itself."""
    for atom in inst.atoms:
        if atom.kind == REL:
            raise ContractViolation("equality solver got a relational atom")
    uf = _UnionFind(inst.variables)
    for atom in inst.atoms:
        if atom.kind == EQ:
            uf.union(*atom.args)
    for atom in inst.atoms:
        if atom.kind == NEQ and uf.find(atom.args[0]) == uf.find(atom.args[1]):
            return UNSAT
    classes: dict[str, list[str]] = {}
    for v in inst.variables:
        classes.setdefault(uf.find(v), []).append(v)
    witness: dict[str, int] = {}
    for index, rep in enumerate(sorted(classes)):
        for v in classes[rep]:
            witness[v] = index
    return SolveResult(True, witness)


def pa_decide(inst: Instance) -> SolveResult:
    """Point algebra over lt/leq: contract strongly connected components of
    the weak-order digraph, then reject strict or disequality atoms that fold
    into a single component."""
    for atom in inst.atoms:
        if atom.kind == REL and atom.symbol.name not in ("lt", "leq"):
            raise ContractViolation(
                f"point algebra solver got relation {atom.symbol.name!r}"
            )
    uf = _UnionFind(inst.variables)
    for atom in inst.atoms:
        if atom.kind == EQ:
            uf.union(*atom.args)

    reps = sorted({uf.find(v) for v in inst.variables})
    succ: dict[str, set[str]] = {r: set() for r in reps}
    strict: list[tuple[str, str]] = []
    for atom in inst.atoms:
        if atom.kind != REL:
            continue
        a, b = uf.find(atom.args[0]), uf.find(atom.args[1])
        succ[a].add(b)
        if atom.symbol.name == "lt":
            strict.append((a, b))

    comp = _tarjan_components(reps, succ)

    for a, b in strict:
        if comp[a] == comp[b]:
            return UNSAT
    for atom in inst.atoms:
        if atom.kind == NEQ:
            a, b = uf.find(atom.args[0]), uf.find(atom.args[1])
            if comp[a] == comp[b]:
                return UNSAT

    # rank components along a deterministic topological order
    n_comps = max(comp.values()) + 1 if comp else 0
    members: list[list[str]] = [[] for _ in range(n_comps)]
    for r in reps:
        members[comp[r]].append(r)
    indegree = [0] * n_comps
    out: list[set[int]] = [set() for _ in range(n_comps)]
    for a in reps:
        for b in succ[a]:
            ca, cb = comp[a], comp[b]
            if ca != cb and cb not in out[ca]:
                out[ca].add(cb)
                indegree[cb] += 1
    heap = [(min(members[c]), c) for c in range(n_comps) if indegree[c] == 0]
    heapq.heapify(heap)
    rank_of_comp: dict[int, int] = {}
    rank = 0
    while heap:
        _, c = heapq.heappop(heap)
        rank_of_comp[c] = rank
        rank += 1
        for d in sorted(out[c]):
            indegree[d] -= 1
            if indegree[d] == 0:
                heapq.heappush(heap, (min(members[d]), d))

    witness = {v: rank_of_comp[comp[uf.find(v)]] for v in inst.variables}
    return SolveResult(True, witness)


def _tarjan_components(nodes: list[str], succ: Mapping[str, set[str]]) -> dict[str, int]:
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    comp: dict[str, int] = {}
    counter = [0]
    comp_counter = [0]

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(sorted(succ[root])))]
        index[root] = lowlink[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = lowlink[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(sorted(succ[nxt]))))
                    advanced = True
                    break
                if nxt in on_stack:
                    lowlink[node] = min(lowlink[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                while True:
                    v = stack.pop()
                    on_stack.discard(v)
                    comp[v] = comp_counter[0]
                    if v == node:
                        break
                comp_counter[0] += 1
    return comp


def _prepare_temporal_atom(
    atom: Atom, idx: dict[str, int], relation: TemporalRelation
) -> tuple[tuple[tuple[int, int], ...], tuple[tuple[int, ...], ...]]:
    """Reduce an atom to kernel form: variable-index pairs plus the status
    bits each allowed pattern induces on them.  Patterns incompatible with
    repeated arguments are dropped here."""
    args = atom.args
    k = len(args)
    positions = [idx[v] for v in args]
    pair_slots: list[tuple[int, int, int, int]] = []  # (u, w, i, j)
    for u in range(k):
        for w in range(u + 1, k):
            if positions[u] != positions[w]:
                pair_slots.append((u, w, positions[u], positions[w]))
    patterns = []
    for p in sorted(relation.allowed):
        ok = True
        for u in range(k):
            for w in range(u + 1, k):
                if positions[u] == positions[w] and p[u] != p[w]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            bits = tuple(
                LT_BIT if p[u] < p[w] else (EQ_BIT if p[u] == p[w] else GT_BIT)
                for (u, w, _, _) in pair_slots
            )
            patterns.append(bits)
    pairs = tuple((i, j) for (_, _, i, j) in pair_slots)
    return pairs, tuple(patterns)


def temporal_decide(
    inst: Instance, relations: Mapping[str, TemporalRelation]
) -> SolveResult:
    """Branch-and-prune search for a weak order over all variables satisfying
    every atom's order-type set, merging Eq pairs and separating Neq pairs."""
    variables = inst.variables
    idx = {v: i for i, v in enumerate(variables)}
    n = len(variables)

    atoms = []
    resolved: list[tuple[Atom, TemporalRelation]] = []
    for atom in inst.sorted_atoms():
        if atom.kind != REL:
            continue
        relation = relations.get(atom.symbol.name) or relation_for_name(
            atom.symbol.name
        )
        if relation is None:
            raise ContractViolation(f"unresolved relation {atom.symbol.name!r}")
        if relation.arity != len(atom.args):
            raise ContractViolation(
                f"relation {atom.symbol.name!r} arity mismatch"
            )
        resolved.append((atom, relation))
        atoms.append(_prepare_temporal_atom(atom, idx, relation))

    constraints = []
    for atom in inst.sorted_atoms():
        if atom.kind == EQ:
            i, j = idx[atom.args[0]], idx[atom.args[1]]
            if i != j:
                constraints.append((i, j, EQ_BIT))
        elif atom.kind == NEQ:
            i, j = idx[atom.args[0]], idx[atom.args[1]]
            if i == j:
                return UNSAT
            constraints.append((i, j, LT_BIT | GT_BIT))

    ranks = _kernels.temporal_search(n, tuple(atoms), tuple(constraints))
    if ranks is None:
        return UNSAT

    witness = {v: ranks[idx[v]] for v in variables}
    for atom, relation in resolved:
        assert relation.admits(tuple(witness[v] for v in atom.args))
    for atom in inst.atoms:
        if atom.kind == EQ:
            assert witness[atom.args[0]] == witness[atom.args[1]]
        elif atom.kind == NEQ:
            assert witness[atom.args[0]] != witness[atom.args[1]]
    return SolveResult(True, witness)


def prepare_tournaments(
    forbidden: Iterable[Digraph],
) -> tuple[tuple[int, tuple[tuple[int, int], ...]], ...]:
    prepared = []
    for t in forbidden:
        order = {v: i for i, v in enumerate(t.vertices)}
        prepared.append(
            (len(t.vertices), tuple(sorted((order[a], order[b]) for a, b in t.arcs)))
        )
    return tuple(prepared)


def arcs_admissible(
    variables: tuple[str, ...],
    arcs: set[tuple[str, str]],
    prepared_forbidden,
) -> bool:
    """True when a loopless digon-free digraph on these arcs omits every
    forbidden tournament (induced match)."""
    idx = {v: i for i, v in enumerate(variables)}
    n = len(variables)
    adj = bytearray(n * n)
    for a, b in arcs:
        adj[idx[a] * n + idx[b]] = 1
    return not _kernels.find_induced_embedding(n, adj, prepared_forbidden)


def henson_decide(inst: Instance, forbidden: Iterable[Digraph]) -> SolveResult:
    """Satisfiability over the homogeneous digraph omitting the given
    tournaments.  The age is loopless and digon-free, so an instance is
    unsatisfiable exactly when a collapse yields a reflexive disequality, a
    loop, a digon, or an embedded forbidden tournament."""
    for atom in inst.atoms:
        if atom.kind == REL and (atom.symbol.name != "E" or len(atom.args) != 2):
            raise ContractViolation(
                f"henson solver got relation {atom.symbol.name!r}"
            )
    collapsed, _ = collapse_equalities(inst)
    arcs: set[tuple[str, str]] = set()
    for atom in collapsed.atoms:
        if atom.kind == NEQ and atom.args[0] == atom.args[1]:
            return UNSAT
        if atom.kind == REL:
            a, b = atom.args
            if a == b:
                return UNSAT
            arcs.add((a, b))
    for a, b in arcs:
        if (b, a) in arcs:
            return UNSAT
    prepared = prepare_tournaments(forbidden)
    if not arcs_admissible(collapsed.variables, arcs, prepared):
        return UNSAT
    witness = HensonWitness(
        assignment={v: v for v in collapsed.variables}, arcs=frozenset(arcs)
    )
    return SolveResult(True, witness)


@dataclass(frozen=True)
class TheorySolver:
    """Uniform front for one theory's decision procedure."""

    theory_id: str
    kind: str  # equality | point_algebra | temporal | henson
    convex: bool
    relations: Mapping[str, TemporalRelation] = field(default_factory=dict)
    forbidden: tuple[Digraph, ...] = ()

    def decide(self, inst: Instance) -> SolveResult:
        if self.kind == "equality":
            return eq_decide(inst)
        if self.kind == "point_algebra":
            return pa_decide(inst)
        if self.kind == "temporal":
            return temporal_decide(inst, self.relations)
        if self.kind == "henson":
            return henson_decide(inst, self.forbidden)
        raise ValueError(f"unknown theory kind {self.kind!r}")

    def entails_eq(self, inst: Instance, x: str, y: str) -> bool:
        from .formulas import make_instance, neq

        extended = make_instance(set(inst.atoms) | {neq(x, y)})
        return not self.decide(extended).sat


def entails_eq(solver: TheorySolver, inst: Instance, x: str, y: str) -> bool:
    return solver.entails_eq(inst, x, y)


def solvers_for(problem) -> dict[str, TheorySolver]:
    """Instantiate one solver per declared theory of a parsed problem."""
    solvers: dict[str, TheorySolver] = {}
    for tid, decl in problem.theories.items():
        relations = {
            name: relation
            for (rel_tid, name), relation in problem.relations.items()
            if rel_tid == tid
        }
        solvers[tid] = TheorySolver(
            theory_id=tid,
            kind=decl.kind,
            convex=decl.convex,
            relations=relations,
            forbidden=decl.forbidden,
        )
    return solvers
