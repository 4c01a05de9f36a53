# cython: language_level=3
"""Compiled twins of the pure-Python kernels.

Same algorithms, same deterministic branch order; results must be identical
to qcsp._kernels.pure on every input.
"""

from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cdef int LT = 1
cdef int EQB = 2
cdef int GT = 4
cdef int ALL = 7

cdef unsigned char[8] FLIP
FLIP[0] = 0; FLIP[1] = 4; FLIP[2] = 2; FLIP[3] = 6
FLIP[4] = 1; FLIP[5] = 5; FLIP[6] = 3; FLIP[7] = 7

cdef int[3] BRANCH_ORDER
BRANCH_ORDER[0] = LT; BRANCH_ORDER[1] = EQB; BRANCH_ORDER[2] = GT

# composition of definite statuses; ALL means no information
cdef unsigned char[64] COMPOSE

cdef void _init_compose():
    cdef int a, b
    for a in range(8):
        for b in range(8):
            COMPOSE[a * 8 + b] = ALL
    COMPOSE[LT * 8 + LT] = LT
    COMPOSE[LT * 8 + EQB] = LT
    COMPOSE[EQB * 8 + LT] = LT
    COMPOSE[EQB * 8 + EQB] = EQB
    COMPOSE[GT * 8 + GT] = GT
    COMPOSE[GT * 8 + EQB] = GT
    COMPOSE[EQB * 8 + GT] = GT

_init_compose()


cdef struct AtomData:
    int n_pairs
    int n_pats
    int *pair_i
    int *pair_j
    unsigned char *patbits  # n_pats * n_pairs


cdef inline bint _is_definite(int mask) nogil:
    return mask == LT or mask == EQB or mask == GT


cdef int _propagate(int n, unsigned char *state, int natoms, AtomData *atoms,
                    unsigned char *union_buf) nogil:
    cdef bint changed = True
    cdef int i, j, k, t, p, rij, rjk, implied, old, new
    cdef bint ok, alive
    cdef AtomData *ad
    while changed:
        changed = False
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                rij = state[i * n + j]
                if rij == 0:
                    return 0
                if not _is_definite(rij):
                    continue
                for k in range(n):
                    if k == i or k == j:
                        continue
                    rjk = state[j * n + k]
                    if not _is_definite(rjk):
                        continue
                    implied = COMPOSE[rij * 8 + rjk]
                    if implied == ALL:
                        continue
                    old = state[i * n + k]
                    new = old & implied
                    if new != old:
                        if new == 0:
                            return 0
                        state[i * n + k] = <unsigned char> new
                        state[k * n + i] = FLIP[new]
                        changed = True
        for t in range(natoms):
            ad = &atoms[t]
            for p in range(ad.n_pairs):
                union_buf[p] = 0
            alive = False
            for p in range(ad.n_pats):
                ok = True
                for k in range(ad.n_pairs):
                    if not (state[ad.pair_i[k] * n + ad.pair_j[k]] &
                            ad.patbits[p * ad.n_pairs + k]):
                        ok = False
                        break
                if ok:
                    alive = True
                    for k in range(ad.n_pairs):
                        union_buf[k] = union_buf[k] | ad.patbits[p * ad.n_pairs + k]
            if not alive:
                return 0
            for k in range(ad.n_pairs):
                i = ad.pair_i[k]
                j = ad.pair_j[k]
                old = state[i * n + j]
                new = old & union_buf[k]
                if new != old:
                    if new == 0:
                        return 0
                    state[i * n + j] = <unsigned char> new
                    state[j * n + i] = FLIP[new]
                    changed = True
    return 1


cdef int _search(int n, unsigned char *state, int natoms, AtomData *atoms,
                 unsigned char *union_buf, unsigned char *scratch, int depth) nogil:
    cdef int i, j, b, bit, mask
    cdef unsigned char *child
    if not _propagate(n, state, natoms, atoms, union_buf):
        return 0
    for i in range(n):
        for j in range(i + 1, n):
            mask = state[i * n + j]
            if _is_definite(mask):
                continue
            # branch on the first open pair, statuses <, =, > in order
            child = scratch + depth * n * n
            for b in range(3):
                bit = BRANCH_ORDER[b]
                if mask & bit:
                    memcpy(child, state, n * n)
                    child[i * n + j] = <unsigned char> bit
                    child[j * n + i] = FLIP[bit]
                    if _search(n, child, natoms, atoms, union_buf, scratch,
                               depth + 1):
                        memcpy(state, child, n * n)
                        return 1
            return 0
    return 1


def temporal_search(int n, atoms, constraints):
    """See qcsp._kernels.pure.temporal_search."""
    if n == 0:
        return ()

    cdef int nn = n * n
    cdef int natoms = len(atoms)
    cdef int i, j, t, k, p, mask, new
    cdef int max_pairs = 1
    cdef int max_depth = n * (n - 1) // 2 + 1
    cdef int ok = 1

    cdef unsigned char *state = <unsigned char *> malloc(nn)
    cdef unsigned char *scratch = <unsigned char *> malloc(nn * max_depth)
    cdef AtomData *adata = <AtomData *> malloc((natoms + 1) * sizeof(AtomData))
    cdef unsigned char *union_buf = NULL

    for t in range(natoms):
        adata[t].pair_i = NULL
        adata[t].pair_j = NULL
        adata[t].patbits = NULL

    for i in range(nn):
        state[i] = <unsigned char> ALL
    for i in range(n):
        state[i * n + i] = <unsigned char> EQB

    try:
        for t in range(natoms):
            pairs, patbits = atoms[t]
            adata[t].n_pairs = len(pairs)
            adata[t].n_pats = len(patbits)
            if adata[t].n_pairs > max_pairs:
                max_pairs = adata[t].n_pairs
            adata[t].pair_i = <int *> malloc((adata[t].n_pairs + 1) * sizeof(int))
            adata[t].pair_j = <int *> malloc((adata[t].n_pairs + 1) * sizeof(int))
            adata[t].patbits = <unsigned char *> malloc(
                adata[t].n_pats * adata[t].n_pairs + 1)
            for k in range(adata[t].n_pairs):
                adata[t].pair_i[k] = pairs[k][0]
                adata[t].pair_j[k] = pairs[k][1]
            for p in range(adata[t].n_pats):
                for k in range(adata[t].n_pairs):
                    adata[t].patbits[p * adata[t].n_pairs + k] = patbits[p][k]

        for con in constraints:
            i = con[0]
            j = con[1]
            mask = con[2]
            new = state[i * n + j] & mask
            if new == 0:
                ok = 0
                break
            state[i * n + j] = <unsigned char> new
            state[j * n + i] = FLIP[new]

        if ok:
            union_buf = <unsigned char *> malloc(max_pairs)
            ok = _search(n, state, natoms, adata, union_buf, scratch, 0)

        if not ok:
            return None

        # canonical ranks from strictly-below counts
        keys = [0] * n
        for i in range(n):
            k = 0
            for j in range(n):
                if j != i and state[j * n + i] == LT:
                    k += 1
            keys[i] = k
        distinct = sorted(set(keys))
        rank_of = {v: r for r, v in enumerate(distinct)}
        return tuple(rank_of[v] for v in keys)
    finally:
        for t in range(natoms):
            if adata[t].pair_i != NULL:
                free(adata[t].pair_i)
            if adata[t].pair_j != NULL:
                free(adata[t].pair_j)
            if adata[t].patbits != NULL:
                free(adata[t].patbits)
        free(adata)
        free(state)
        free(scratch)
        if union_buf != NULL:
            free(union_buf)


def find_induced_embedding(int n, adj, tournaments):
    """See qcsp._kernels.pure.find_induced_embedding."""
    cdef unsigned char *mat = <unsigned char *> malloc(n * n + 1)
    cdef int *image = NULL
    cdef int *arc_u = NULL
    cdef int *arc_w = NULL
    cdef bint *used = NULL
    cdef int i, k, narcs, depth, cand, a, b, t
    cdef bint ok, found = False

    for i in range(n * n):
        mat[i] = 1 if adj[i] else 0

    try:
        for tournament in tournaments:
            k = tournament[0]
            arcs = tournament[1]
            if k > n:
                continue
            narcs = len(arcs)
            image = <int *> malloc((k + 1) * sizeof(int))
            arc_u = <int *> malloc((narcs + 1) * sizeof(int))
            arc_w = <int *> malloc((narcs + 1) * sizeof(int))
            used = <bint *> malloc((n + 1) * sizeof(bint))
            for t in range(narcs):
                arc_u[t] = arcs[t][0]
                arc_w[t] = arcs[t][1]
            for i in range(n):
                used[i] = False
            # injective maps enumerated lexicographically with backtracking
            depth = 0
            image[0] = -1
            while depth >= 0:
                cand = image[depth] + 1
                if image[depth] >= 0:
                    used[image[depth]] = False
                while cand < n and used[cand]:
                    cand += 1
                if cand >= n:
                    image[depth] = -1
                    depth -= 1
                    continue
                image[depth] = cand
                used[cand] = True
                if depth == k - 1:
                    ok = True
                    for t in range(narcs):
                        a = image[arc_u[t]]
                        b = image[arc_w[t]]
                        if not mat[a * n + b] or mat[b * n + a]:
                            ok = False
                            break
                    if ok:
                        found = True
                        break
                else:
                    depth += 1
                    image[depth] = -1
            free(image); image = NULL
            free(arc_u); arc_u = NULL
            free(arc_w); arc_w = NULL
            free(used); used = NULL
            if found:
                return True
        return False
    finally:
        if image != NULL:
            free(image)
        if arc_u != NULL:
            free(arc_u)
        if arc_w != NULL:
            free(arc_w)
        if used != NULL:
            free(used)
        free(mat)
