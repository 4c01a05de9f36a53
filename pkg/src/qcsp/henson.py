"""Reductions between a forbidden-tournament digraph CSP and its combination
with the equality theory.

The upward reduction attaches a fresh loop variable and separates it from
everything else; the downward reduction labels weakly connected components
whose edge constraints are unsatisfiable in the loopless digraph and rejects
exactly when a disequality joins two labeled components.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formulas import (
    EQ,
    NEQ,
    REL,
    Atom,
    Instance,
    RelationSymbol,
    collapse_equalities,
    make_instance,
    neq,
)
from .theories import (
    ContractViolation,
    Digraph,
    HensonWitness,
    SolveResult,
    henson_decide,
)

DEFAULT_E = RelationSymbol("t1", "E", 2)


@dataclass(frozen=True)
class HensonProblem:
    forbidden: tuple[Digraph, ...]
    instance: Instance

    def __post_init__(self):
        for atom in self.instance.atoms:
            if atom.kind == REL and atom.symbol.name != "E":
                raise ContractViolation("henson problems use only the E relation")


def fresh_loop_variable(inst: Instance) -> str:
    name = "x0"
    while name in inst.variables:
        name += "_"
    return name


def build_s_star(inst: Instance, e_symbol: RelationSymbol | None = None) -> Instance:
    """Attach a fresh loop variable: the result is the input plus E(x0, x0)
    and x0 != xi for every variable xi of the input."""
    symbol = e_symbol
    if symbol is None:
        for atom in inst.atoms:
            if atom.kind == REL:
                symbol = atom.symbol
                break
        else:
            symbol = DEFAULT_E
    x0 = fresh_loop_variable(inst)
    assert x0 not in inst.variables
    atoms = set(inst.atoms)
    atoms.add(Atom(REL, symbol, (x0, x0)))
    for v in inst.variables:
        atoms.add(neq(x0, v))
    return make_instance(atoms)


def _weak_components(variables: tuple[str, ...], arcs) -> dict[str, int]:
    parent = {v: v for v in variables}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in arcs:
        ra, rb = find(a), find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            parent[rb] = ra
    comp_of: dict[str, int] = {}
    index: dict[str, int] = {}
    for v in variables:
        r = find(v)
        if r not in index:
            index[r] = len(index)
        comp_of[v] = index[r]
    return comp_of


def component_label_solve(inst: Instance, forbidden) -> SolveResult:
    """Decide the combined loop-vertex/equality problem by component labeling.

    A component whose edge constraints have no loopless solution can only be
    mapped to the loop vertex, so a disequality with both ends in labeled
    components is a contradiction; everything else is satisfiable.
    """
    for atom in inst.atoms:
        if atom.kind == REL and (atom.symbol.name != "E" or len(atom.args) != 2):
            raise ContractViolation(f"unexpected relation {atom.symbol.name!r}")
    collapsed, var_map = collapse_equalities(inst)
    arcs = []
    neqs = []
    for atom in collapsed.atoms:
        if atom.kind == NEQ:
            if atom.args[0] == atom.args[1]:
                return SolveResult(False)
            neqs.append(atom.args)
        elif atom.kind == REL:
            arcs.append(atom.args)

    comp_of = _weak_components(collapsed.variables, arcs)
    n_comps = len(set(comp_of.values())) if comp_of else 0
    comp_atoms: list[list[Atom]] = [[] for _ in range(n_comps)]
    for atom in collapsed.atoms:
        if atom.kind == REL:
            comp_atoms[comp_of[atom.args[0]]].append(atom)

    labeled = [
        not henson_decide(make_instance(atoms), forbidden).sat
        for atoms in comp_atoms
    ]

    for x, y in neqs:
        if labeled[comp_of[x]] and labeled[comp_of[y]]:
            return SolveResult(False)

    assignment = {}
    witness_arcs = set()
    any_labeled = any(labeled)
    for v in collapsed.variables:
        assignment[v] = "a" if labeled[comp_of[v]] else f"n_{v}"
    for a, b in arcs:
        if not labeled[comp_of[a]]:
            witness_arcs.add((assignment[a], assignment[b]))
    for original, rep in var_map.items():
        assignment[original] = assignment[rep]
    witness = HensonWitness(
        assignment, frozenset(witness_arcs), "a" if any_labeled else None
    )
    return SolveResult(True, witness)
