"""Pure-Python kernels for the hot solver loops.

The compiled twin in ``_speed.pyx`` implements the same algorithms with the
same branching order; both must return identical results on identical inputs.
Pair statuses are bitmasks over {1: <, 2: =, 4: >} for ordered variable
pairs, held in a flat n*n byte table with table[j*n+i] the flip of
table[i*n+j].
"""

from __future__ import annotations

from itertools import permutations

LT = 1
EQB = 2
GT = 4
ALL = LT | EQB | GT

_FLIP = (0, 4, 2, 6, 1, 5, 3, 7)

# composition of definite statuses: (xi ? xj) o (xj ? xk) -> allowed (xi ? xk)
_COMPOSE = {
    (LT, LT): LT,
    (LT, EQB): LT,
    (EQB, LT): LT,
    (EQB, EQB): EQB,
    (GT, GT): GT,
    (GT, EQB): GT,
    (EQB, GT): GT,
    (LT, GT): ALL,
    (GT, LT): ALL,
}

_DEFINITE = (LT, EQB, GT)


def _propagate(n, state, atoms):
    """Tighten pair masks to a fixpoint; False when some pair empties."""
    changed = True
    while changed:
        changed = False
        for i in range(n):
            base_i = i * n
            for j in range(n):
                if i == j:
                    continue
                rij = state[base_i + j]
                if rij == 0:
                    return False
                if rij not in _DEFINITE:
                    continue
                base_j = j * n
                for k in range(n):
                    if k == i or k == j:
                        continue
                    rjk = state[base_j + k]
                    if rjk not in _DEFINITE:
                        continue
                    implied = _COMPOSE[rij, rjk]
                    if implied == ALL:
                        continue
                    old = state[base_i + k]
                    new = old & implied
                    if new != old:
                        if new == 0:
                            return False
                        state[base_i + k] = new
                        state[k * n + i] = _FLIP[new]
                        changed = True
        for pairs, patbits in atoms:
            union = [0] * len(pairs)
            alive = False
            for bits in patbits:
                ok = True
                for t, (pi, pj) in enumerate(pairs):
                    if not (state[pi * n + pj] & bits[t]):
                        ok = False
                        break
                if ok:
                    alive = True
                    for t in range(len(pairs)):
                        union[t] |= bits[t]
            if not alive:
                return False
            for t, (pi, pj) in enumerate(pairs):
                old = state[pi * n + pj]
                new = old & union[t]
                if new != old:
                    if new == 0:
                        return False
                    state[pi * n + pj] = new
                    state[pj * n + pi] = _FLIP[new]
                    changed = True
    return True


def _first_open_pair(n, state):
    for i in range(n):
        for j in range(i + 1, n):
            if state[i * n + j] not in _DEFINITE:
                return i, j
    return None


def _ranks_of(n, state):
    # key[i] = number of elements strictly below i; rank-compressing the keys
    # yields the canonical weak order since the relation is a total preorder
    keys = [0] * n
    for i in range(n):
        count = 0
        for j in range(n):
            if j != i and state[j * n + i] == LT:
                count += 1
        keys[i] = count
    distinct = sorted(set(keys))
    rank_of = {v: r for r, v in enumerate(distinct)}
    return tuple(rank_of[k] for k in keys)


def temporal_search(n, atoms, constraints):
    """Deterministic branch-and-prune over pairwise statuses.

    atoms: sequence of (pairs, patbits) where pairs is a tuple of (i, j)
    variable-index pairs and patbits the per-pattern status bits aligned with
    pairs.  constraints: (i, j, mask) initial restrictions.  Returns the
    canonical rank tuple of the first solution in <, =, > branch order, or
    None.
    """
    state = bytearray([ALL]) * (n * n)
    for i in range(n):
        state[i * n + i] = EQB
    for i, j, mask in constraints:
        new = state[i * n + j] & mask
        if new == 0:
            return None
        state[i * n + j] = new
        state[j * n + i] = _FLIP[new]

    stack = [state]
    while stack:
        current = stack.pop()
        if not _propagate(n, current, atoms):
            continue
        open_pair = _first_open_pair(n, current)
        if open_pair is None:
            return _ranks_of(n, current)
        i, j = open_pair
        mask = current[i * n + j]
        # push in reverse so < is explored first, then =, then >
        for bit in (GT, EQB, LT):
            if mask & bit:
                child = bytearray(current)
                child[i * n + j] = bit
                child[j * n + i] = _FLIP[bit]
                stack.append(child)
    return None


def find_induced_embedding(n, adj, tournaments):
    """True when some forbidden tournament embeds into the n-vertex digraph.

    adj is a flat n*n 0/1 table; an embedding is injective, maps every
    tournament arc to a present arc whose reverse is absent.
    """
    for k, arcs in tournaments:
        if k > n:
            continue
        for image in permutations(range(n), k):
            ok = True
            for u, w in arcs:
                a, b = image[u], image[w]
                if not adj[a * n + b] or adj[b * n + a]:
                    ok = False
                    break
            if ok:
                return True
    return False
