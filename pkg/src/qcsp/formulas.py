"""Core data model: relation symbols, atoms, instances, and the instance file format.

An instance is a finite conjunction of theory-tagged relational atoms plus
theory-neutral equality/disequality atoms over named variables.  This module
also owns the two structural operations every solver path relies on:
collapsing equality atoms by substitution and splitting an instance into
per-theory parts for combination.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")

REL = "rel"
EQ = "eq"
NEQ = "neq"


class ParseError(ValueError):
    """Malformed instance file; carries the 1-based source line when known."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class RelationSymbol(NamedTuple):
    theory_id: str
    name: str
    arity: int


class Atom(NamedTuple):
    kind: str  # REL, EQ or NEQ
    symbol: RelationSymbol | None
    args: tuple[str, ...]

    def sort_key(self):
        if self.kind == REL:
            return (0, self.symbol.theory_id, self.symbol.name, self.args)
        return (1 if self.kind == EQ else 2, "", "", self.args)


def rel(symbol: RelationSymbol, *args: str) -> Atom:
    if len(args) != symbol.arity:
        raise ValueError(
            f"{symbol.name} expects {symbol.arity} arguments, got {len(args)}"
        )
    return Atom(REL, symbol, tuple(args))


def eq(x: str, y: str) -> Atom:
    return Atom(EQ, None, (x, y) if x <= y else (y, x))


def neq(x: str, y: str) -> Atom:
    return Atom(NEQ, None, (x, y) if x <= y else (y, x))


@dataclass(frozen=True)
class Instance:
    """An immutable finite set of atoms; variables are exactly those occurring."""

    atoms: frozenset[Atom]
    variables: tuple[str, ...] = field(compare=False)

    def __iter__(self):
        return iter(self.atoms)

    def __len__(self):
        return len(self.atoms)

    def rel_atoms(self) -> list[Atom]:
        return [a for a in self.atoms if a.kind == REL]

    def eq_atoms(self) -> list[Atom]:
        return [a for a in self.atoms if a.kind == EQ]

    def neq_atoms(self) -> list[Atom]:
        return [a for a in self.atoms if a.kind == NEQ]

    def sorted_atoms(self) -> list[Atom]:
        return sorted(self.atoms, key=Atom.sort_key)


def make_instance(atoms: Iterable[Atom]) -> Instance:
    atom_set = frozenset(atoms)
    seen: set[str] = set()
    for atom in atom_set:
        seen.update(atom.args)
    return Instance(atom_set, tuple(sorted(seen)))


EMPTY_INSTANCE = make_instance(())


def collapse_equalities(inst: Instance) -> tuple[Instance, dict[str, str]]:
    """Remove all Eq atoms by substituting each equality class with its
    lexicographically least member.

    Returns the rewritten instance and the full substitution map (identity
    entries included).  A Neq whose endpoints collapse together is kept as
    Neq(v, v); solvers treat it as unsatisfiable.
    """
    parent: dict[str, str] = {v: v for v in inst.variables}

    def find(v: str) -> str:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for atom in inst.atoms:
        if atom.kind == EQ:
            a, b = find(atom.args[0]), find(atom.args[1])
            if a != b:
                # keep the lexicographically least name as representative
                if b < a:
                    a, b = b, a
                parent[b] = a

    var_map = {v: find(v) for v in inst.variables}
    out: set[Atom] = set()
    for atom in inst.atoms:
        if atom.kind == EQ:
            continue
        mapped = tuple(var_map[v] for v in atom.args)
        if atom.kind == REL:
            out.add(Atom(REL, atom.symbol, mapped))
        else:
            out.add(neq(*mapped))
    return make_instance(out), var_map


def split_by_signature(
    inst: Instance, theory_ids: Iterable[str]
) -> tuple[dict[str, Instance], frozenset[str]]:
    """Route Rel atoms to their theory's part and copy Eq/Neq atoms into every
    part.  Shared variables are those occurring in Rel atoms of at least two
    distinct theories."""
    theory_ids = list(theory_ids)
    neutral = [a for a in inst.atoms if a.kind != REL]
    by_theory: dict[str, list[Atom]] = {tid: [] for tid in theory_ids}
    occurs: dict[str, set[str]] = {}
    for atom in inst.atoms:
        if atom.kind != REL:
            continue
        tid = atom.symbol.theory_id
        if tid not in by_theory:
            raise ValueError(f"atom references undeclared theory {tid!r}")
        by_theory[tid].append(atom)
        for v in atom.args:
            occurs.setdefault(v, set()).add(tid)
    parts = {
        tid: make_instance(by_theory[tid] + neutral) for tid in theory_ids
    }
    shared = frozenset(v for v, tids in occurs.items() if len(tids) >= 2)
    return parts, shared


@dataclass(frozen=True)
class PPFormula:
    """Primitive positive formula: existentially quantified conjunction of atoms."""

    free_vars: tuple[str, ...]
    existential_vars: frozenset[str]
    body: frozenset[Atom]

    def __post_init__(self):
        free = set(self.free_vars)
        if free & self.existential_vars:
            raise ValueError("free and existential variables overlap")
        scope = free | self.existential_vars
        for atom in self.body:
            for v in atom.args:
                if v not in scope:
                    raise ValueError(f"unbound variable {v!r} in formula body")


@dataclass(frozen=True)
class TheoryDecl:
    theory_id: str
    kind: str  # equality | point_algebra | temporal | henson
    convex: bool
    forbidden: tuple = ()  # henson only: tuple of Digraph tournaments


@dataclass(frozen=True)
class Problem:
    theories: dict[str, TheoryDecl]
    relations: dict[tuple[str, str], "object"]  # (tid, name) -> TemporalRelation or arity marker
    symbols: dict[tuple[str, str], RelationSymbol]
    instance: Instance


def _check_ident(token: str, what: str, line_no: int) -> str:
    if not IDENT_RE.match(token) or token[0].isdigit():
        raise ParseError(f"invalid {what} {token!r}", line_no)
    return token


def _parse_ordertype(token: str, arity: int, line_no: int) -> tuple[int, ...]:
    from .theories import is_weak_order

    ranks = []
    for piece in token.split("/"):
        if not piece.isdigit():
            raise ParseError(f"bad rank {piece!r} in order type", line_no)
        ranks.append(int(piece))
    if len(ranks) != arity:
        raise ParseError(
            f"order type {token!r} has length {len(ranks)}, expected {arity}", line_no
        )
    ranks = tuple(ranks)
    if not is_weak_order(ranks):
        raise ParseError(f"order type {token!r} has non-contiguous ranks", line_no)
    return ranks


def _parse_tournament(token: str, line_no: int):
    from .theories import Digraph

    arcs = set()
    vertices = set()
    for arc in token.split(","):
        if ">" not in arc:
            raise ParseError(f"bad tournament arc {arc!r}", line_no)
        a, b = arc.split(">", 1)
        a, b = a.strip(), b.strip()
        _check_ident(a, "vertex", line_no)
        _check_ident(b, "vertex", line_no)
        arcs.add((a, b))
        vertices.update((a, b))
    graph = Digraph(tuple(sorted(vertices)), frozenset(arcs))
    if not graph.is_tournament():
        raise ParseError(f"{token!r} is not a tournament", line_no)
    return graph


def parse_problem(text: str) -> Problem:
    """Parse the line-oriented instance file format into a resolved Problem."""
    from .theories import (
        TemporalRelation,
        builtin_mi,
        relation_for_name,
    )

    theories: dict[str, TheoryDecl] = {}
    relations: dict[tuple[str, str], TemporalRelation] = {}
    symbols: dict[tuple[str, str], RelationSymbol] = {}
    atoms: list[Atom] = []

    def declare(tid: str, name: str, arity: int, line_no: int,
                semantics=None) -> None:
        key = (tid, name)
        if key in symbols:
            raise ParseError(f"duplicate relation declaration {tid}.{name}", line_no)
        symbols[key] = RelationSymbol(tid, name, arity)
        if semantics is not None:
            relations[key] = semantics

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]

        if head == "theory":
            if len(tokens) < 3:
                raise ParseError("theory line needs an id and a kind", line_no)
            tid = _check_ident(tokens[1], "theory id", line_no)
            kind = tokens[2]
            if tid in theories:
                raise ParseError(f"duplicate theory declaration {tid}", line_no)
            if kind == "equality":
                if len(tokens) != 3:
                    raise ParseError("trailing tokens after equality theory", line_no)
                theories[tid] = TheoryDecl(tid, kind, convex=True)
            elif kind == "point_algebra":
                if len(tokens) != 3:
                    raise ParseError("trailing tokens after point_algebra theory", line_no)
                theories[tid] = TheoryDecl(tid, kind, convex=True)
                declare(tid, "lt", 2, line_no, relation_for_name("lt"))
                declare(tid, "leq", 2, line_no, relation_for_name("leq"))
            elif kind == "temporal":
                # optional trailing "convex": convexity is a declared property
                convex = False
                if len(tokens) == 4 and tokens[3] == "convex":
                    convex = True
                elif len(tokens) != 3:
                    raise ParseError("bad temporal theory declaration", line_no)
                theories[tid] = TheoryDecl(tid, kind, convex=convex)
            elif kind == "henson":
                if len(tokens) < 5 or tokens[3] != "forbid":
                    raise ParseError(
                        "henson theory needs: forbid <tournament>[;<tournament>]", line_no
                    )
                spec = " ".join(tokens[4:])
                forbidden = tuple(
                    _parse_tournament(part.strip(), line_no)
                    for part in spec.split(";")
                    if part.strip()
                )
                if not forbidden:
                    raise ParseError("henson theory forbids nothing", line_no)
                theories[tid] = TheoryDecl(tid, kind, convex=False, forbidden=forbidden)
                declare(tid, "E", 2, line_no)
            else:
                raise ParseError(f"unknown theory kind {kind!r}", line_no)

        elif head == "relation":
            if len(tokens) < 4:
                raise ParseError("relation line too short", line_no)
            tid = tokens[1]
            if tid not in theories:
                raise ParseError(f"undeclared theory {tid!r}", line_no)
            if theories[tid].kind != "temporal":
                raise ParseError("relation declarations are for temporal theories", line_no)
            if "/" not in tokens[2]:
                raise ParseError("relation needs a <name>/<arity> token", line_no)
            name, arity_s = tokens[2].rsplit("/", 1)
            _check_ident(name, "relation name", line_no)
            if not arity_s.isdigit() or int(arity_s) < 1:
                raise ParseError(f"bad arity {arity_s!r}", line_no)
            arity = int(arity_s)
            mode = tokens[3]
            if mode == "ordertypes":
                if len(tokens) != 5:
                    raise ParseError("ordertypes needs one comma-separated list", line_no)
                allowed = frozenset(
                    _parse_ordertype(piece, arity, line_no)
                    for piece in tokens[4].split(",")
                )
                declare(tid, name, arity, line_no, TemporalRelation(arity, allowed))
            elif mode == "builtin":
                if len(tokens) != 5 or tokens[4] != "mi":
                    raise ParseError("only 'builtin mi' is available", line_no)
                if arity != 3:
                    raise ParseError("builtin mi has arity 3", line_no)
                declare(tid, name, 3, line_no, builtin_mi())
            else:
                raise ParseError(f"unknown relation mode {mode!r}", line_no)

        elif head == "atom":
            if len(tokens) < 3:
                raise ParseError("atom line too short", line_no)
            tid, name = tokens[1], tokens[2]
            if tid not in theories:
                raise ParseError(f"undeclared theory {tid!r}", line_no)
            key = (tid, name)
            if key not in symbols:
                raise ParseError(f"undeclared relation {tid}.{name}", line_no)
            args = [_check_ident(t, "variable", line_no) for t in tokens[3:]]
            symbol = symbols[key]
            if len(args) != symbol.arity:
                raise ParseError(
                    f"{tid}.{name} expects {symbol.arity} arguments, got {len(args)}",
                    line_no,
                )
            atoms.append(Atom(REL, symbol, tuple(args)))

        elif head in (EQ, NEQ):
            if len(tokens) != 3:
                raise ParseError(f"{head} needs exactly two variables", line_no)
            x = _check_ident(tokens[1], "variable", line_no)
            y = _check_ident(tokens[2], "variable", line_no)
            atoms.append(eq(x, y) if head == EQ else neq(x, y))

        else:
            raise ParseError(f"unknown directive {head!r}", line_no)

    return Problem(theories, relations, symbols, make_instance(atoms))


def render_problem(problem: Problem) -> str:
    """Canonical serializer; parse_problem(render_problem(p)) round-trips."""
    lines: list[str] = []
    for tid in sorted(problem.theories):
        decl = problem.theories[tid]
        if decl.kind == "henson":
            parts = []
            for tournament in decl.forbidden:
                arcs = ",".join(f"{a}>{b}" for a, b in sorted(tournament.arcs))
                parts.append(arcs)
            lines.append(f"theory {tid} henson forbid {';'.join(parts)}")
        elif decl.kind == "temporal" and decl.convex:
            lines.append(f"theory {tid} temporal convex")
        else:
            lines.append(f"theory {tid} {decl.kind}")
    for (tid, name), relation in sorted(problem.relations.items()):
        if problem.theories[tid].kind != "temporal":
            continue  # point-algebra relations are implicit
        ots = ",".join(
            "/".join(str(r) for r in ranks) for ranks in sorted(relation.allowed)
        )
        lines.append(f"relation {tid} {name}/{relation.arity} ordertypes {ots}")
    for atom in problem.instance.sorted_atoms():
        if atom.kind == REL:
            lines.append(
                f"atom {atom.symbol.theory_id} {atom.symbol.name} " + " ".join(atom.args)
            )
        else:
            lines.append(f"{atom.kind} {atom.args[0]} {atom.args[1]}")
    return "\n".join(lines) + "\n"
