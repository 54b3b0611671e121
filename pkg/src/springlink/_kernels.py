"""Numba kernels for force and energy evaluation.

Everything here is deterministic and single-threaded; coincident points are
resolved with a hash-derived unit direction at an effective distance of
``COINCIDENCE_SCALE * K`` and counted, never raised. The array-based spatial
tree uses cube cells split into 2**dim children, with a depth cap beyond
which bodies chain into leaf buckets.
"""

import numpy as np
from numba import njit

DEPTH_CAP = 64
# distances below COINCIDENT_EPS*K are treated as coincident and jittered
COINCIDENT_EPS = 1e-9
COINCIDENCE_SCALE = 1e-6
_STACK_SIZE = 1024

_U64 = np.uint64
_LCG_MUL = _U64(6364136223846793005)
_LCG_ADD = _U64(1442695040888963407)
_INV_2_53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _pair_direction(a, b, out):
    """Deterministic unit vector for the id pair (a, b); antisymmetric in (a, b)."""
    if a < b:
        lo, hi, sign = a, b, 1.0
    else:
        lo, hi, sign = b, a, -1.0
    h = _U64(lo + 1) * _U64(2654435761) + _U64(hi + 1) * _U64(40503)
    dim = out.shape[0]
    norm2 = 0.0
    for k in range(dim):
        h = h * _LCG_MUL + _LCG_ADD
        val = np.float64(h >> _U64(11)) * _INV_2_53 - 0.5
        out[k] = val
        norm2 += val * val
    if norm2 == 0.0:
        out[0] = 1.0
        norm2 = 1.0
    inv = sign / np.sqrt(norm2)
    for k in range(dim):
        out[k] *= inv


@njit(cache=True)
def _repulsion_terms(d2, C, K, p):
    """(force_over_delta, energy) for one unit-mass pair at squared distance d2.

    force vector = delta * force_over_delta with delta pointing toward the
    repelled node; energy is the unordered-pair term.
    """
    d = np.sqrt(d2)
    if p == 2.0:
        ck = C * K * K * K
        return ck / (d2 * d), ck / d
    ck = C * K ** (1.0 + p)
    f = ck / d ** (p + 1.0)
    if p == 1.0:
        e = -ck * np.log(d)
    else:
        e = ck / ((p - 1.0) * d ** (p - 1.0))
    return f, e


@njit(cache=True)
def build_tree(pos, center, width, mass, comsum, child0, body_head, body_next):
    """Insert all bodies; returns the cell count, or -1 if capacity ran out."""
    n, dim = pos.shape
    nchild = 1 << dim
    cap = width.shape[0]

    w = 0.0
    for k in range(dim):
        lo = pos[0, k]
        hi = pos[0, k]
        for i in range(1, n):
            if pos[i, k] < lo:
                lo = pos[i, k]
            if pos[i, k] > hi:
                hi = pos[i, k]
        center[0, k] = 0.5 * (lo + hi)
        if hi - lo > w:
            w = hi - lo
    width[0] = w
    mass[0] = 0
    child0[0] = -1
    body_head[0] = -1
    for k in range(dim):
        comsum[0, k] = 0.0
    n_cells = 1

    for b in range(n):
        cur = 0
        depth = 0
        while True:
            mass[cur] += 1
            for k in range(dim):
                comsum[cur, k] += pos[b, k]
            if child0[cur] == -1:
                if body_head[cur] == -1:
                    body_head[cur] = b
                    break
                if depth >= DEPTH_CAP:
                    body_next[b] = body_head[cur]
                    body_head[cur] = b
                    break
                if n_cells + nchild > cap:
                    return -1
                c0 = n_cells
                n_cells += nchild
                child0[cur] = c0
                half = width[cur] * 0.5
                quarter = width[cur] * 0.25
                for ci in range(nchild):
                    cc = c0 + ci
                    width[cc] = half
                    mass[cc] = 0
                    child0[cc] = -1
                    body_head[cc] = -1
                    for k in range(dim):
                        off = quarter if (ci >> k) & 1 else -quarter
                        center[cc, k] = center[cur, k] + off
                        comsum[cc, k] = 0.0
                o = body_head[cur]
                body_head[cur] = -1
                ci = 0
                for k in range(dim):
                    if pos[o, k] > center[cur, k]:
                        ci |= 1 << k
                oc = c0 + ci
                body_head[oc] = o
                mass[oc] = 1
                for k in range(dim):
                    comsum[oc, k] = pos[o, k]
                ci = 0
                for k in range(dim):
                    if pos[b, k] > center[cur, k]:
                        ci |= 1 << k
                cur = c0 + ci
                depth += 1
            else:
                ci = 0
                for k in range(dim):
                    if pos[b, k] > center[cur, k]:
                        ci |= 1 << k
                cur = child0[cur] + ci
                depth += 1
    return n_cells


@njit(cache=True)
def bh_field(qpos, qids, tpos, tids, center, width, mass, com,
             child0, body_head, body_next, theta, C, K, p, out):
    """Barnes-Hut repulsion on each query node from the tree's bodies.

    Fills `out` with force vectors; returns (summed interaction energy,
    jitter event count). The opening distance D is measured from the query
    point to the cell's box (zero inside it), so cells containing the query
    are always opened and self-interaction through aggregates is impossible;
    at leaves, bodies whose global id equals the query's are skipped.
    """
    nq, dim = qpos.shape
    nchild = 1 << dim
    tiny2 = (COINCIDENT_EPS * K) * (COINCIDENT_EPS * K)
    eps2 = (COINCIDENCE_SCALE * K) * (COINCIDENCE_SCALE * K)
    stack = np.empty(_STACK_SIZE, np.int64)
    jdir = np.empty(dim, np.float64)
    energy = 0.0
    jitters = 0

    for i in range(nq):
        qid = qids[i]
        for k in range(dim):
            out[i, k] = 0.0
        sp = 1
        stack[0] = 0
        while sp > 0:
            sp -= 1
            c = stack[sp]
            if mass[c] == 0:
                continue
            if child0[c] == -1:
                o = body_head[c]
                while o != -1:
                    if tids[o] != qid:
                        d2 = 0.0
                        for k in range(dim):
                            delta = qpos[i, k] - tpos[o, k]
                            d2 += delta * delta
                        if d2 < tiny2:
                            _pair_direction(qid, tids[o], jdir)
                            f, e = _repulsion_terms(eps2, C, K, p)
                            scale = f * COINCIDENCE_SCALE * K
                            for k in range(dim):
                                out[i, k] += scale * jdir[k]
                            energy += e
                            jitters += 1
                        else:
                            f, e = _repulsion_terms(d2, C, K, p)
                            for k in range(dim):
                                out[i, k] += f * (qpos[i, k] - tpos[o, k])
                            energy += e
                    o = body_next[o]
            else:
                d2 = 0.0
                gap2 = 0.0
                for k in range(dim):
                    delta = qpos[i, k] - com[c, k]
                    d2 += delta * delta
                    g = abs(qpos[i, k] - center[c, k]) - 0.5 * width[c]
                    if g > 0.0:
                        gap2 += g * g
                if width[c] * width[c] < theta * theta * gap2:
                    m = np.float64(mass[c])
                    if d2 < tiny2:
                        _pair_direction(qid, -(c + 2), jdir)
                        f, e = _repulsion_terms(eps2, C, K, p)
                        scale = m * f * COINCIDENCE_SCALE * K
                        for k in range(dim):
                            out[i, k] += scale * jdir[k]
                        energy += m * e
                        jitters += 1
                    else:
                        f, e = _repulsion_terms(d2, C, K, p)
                        for k in range(dim):
                            out[i, k] += m * f * (qpos[i, k] - com[c, k])
                        energy += m * e
                else:
                    base = child0[c]
                    for ci in range(nchild):
                        stack[sp] = base + ci
                        sp += 1
        # stack bound: strict DFS over a depth-capped tree stays well under
        # _STACK_SIZE ((2**dim - 1) * depth + 1 <= 8 * 65 + 1)
    return energy, jitters


@njit(cache=True)
def exact_repulsion(pos, ids, C, K, p, out):
    """Exact pairwise repulsion field; returns (unordered energy, jitter count)."""
    n, dim = pos.shape
    tiny2 = (COINCIDENT_EPS * K) * (COINCIDENT_EPS * K)
    eps2 = (COINCIDENCE_SCALE * K) * (COINCIDENCE_SCALE * K)
    jdir = np.empty(dim, np.float64)
    energy = 0.0
    jitters = 0
    for i in range(n):
        for k in range(dim):
            out[i, k] = 0.0
    for u in range(n):
        for v in range(u + 1, n):
            d2 = 0.0
            for k in range(dim):
                delta = pos[u, k] - pos[v, k]
                d2 += delta * delta
            if d2 < tiny2:
                _pair_direction(ids[u], ids[v], jdir)
                f, e = _repulsion_terms(eps2, C, K, p)
                scale = f * COINCIDENCE_SCALE * K
                for k in range(dim):
                    out[u, k] += scale * jdir[k]
                    out[v, k] -= scale * jdir[k]
                energy += e
                jitters += 1
            else:
                f, e = _repulsion_terms(d2, C, K, p)
                for k in range(dim):
                    out[u, k] += f * (pos[u, k] - pos[v, k])
                    out[v, k] -= f * (pos[u, k] - pos[v, k])
                energy += e
    return energy, jitters


@njit(cache=True)
def exact_repulsion_groups(pos, groups, ids, C, K, p, out):
    """Exact repulsion restricted to pairs in different groups."""
    n, dim = pos.shape
    tiny2 = (COINCIDENT_EPS * K) * (COINCIDENT_EPS * K)
    eps2 = (COINCIDENCE_SCALE * K) * (COINCIDENCE_SCALE * K)
    jdir = np.empty(dim, np.float64)
    energy = 0.0
    jitters = 0
    for i in range(n):
        for k in range(dim):
            out[i, k] = 0.0
    for u in range(n):
        for v in range(u + 1, n):
            if groups[u] == groups[v]:
                continue
            d2 = 0.0
            for k in range(dim):
                delta = pos[u, k] - pos[v, k]
                d2 += delta * delta
            if d2 < tiny2:
                _pair_direction(ids[u], ids[v], jdir)
                f, e = _repulsion_terms(eps2, C, K, p)
                scale = f * COINCIDENCE_SCALE * K
                for k in range(dim):
                    out[u, k] += scale * jdir[k]
                    out[v, k] -= scale * jdir[k]
                energy += e
                jitters += 1
            else:
                f, e = _repulsion_terms(d2, C, K, p)
                for k in range(dim):
                    out[u, k] += f * (pos[u, k] - pos[v, k])
                    out[v, k] -= f * (pos[u, k] - pos[v, k])
                energy += e
    return energy, jitters


@njit(cache=True)
def exact_repulsion_matrix(pos, allowed, ids, C, K, p, out):
    """Exact repulsion restricted to pairs with allowed[u, v] true."""
    n, dim = pos.shape
    tiny2 = (COINCIDENT_EPS * K) * (COINCIDENT_EPS * K)
    eps2 = (COINCIDENCE_SCALE * K) * (COINCIDENCE_SCALE * K)
    jdir = np.empty(dim, np.float64)
    energy = 0.0
    jitters = 0
    for i in range(n):
        for k in range(dim):
            out[i, k] = 0.0
    for u in range(n):
        for v in range(u + 1, n):
            if not allowed[u, v]:
                continue
            d2 = 0.0
            for k in range(dim):
                delta = pos[u, k] - pos[v, k]
                d2 += delta * delta
            if d2 < tiny2:
                _pair_direction(ids[u], ids[v], jdir)
                f, e = _repulsion_terms(eps2, C, K, p)
                scale = f * COINCIDENCE_SCALE * K
                for k in range(dim):
                    out[u, k] += scale * jdir[k]
                    out[v, k] -= scale * jdir[k]
                energy += e
                jitters += 1
            else:
                f, e = _repulsion_terms(d2, C, K, p)
                for k in range(dim):
                    out[u, k] += f * (pos[u, k] - pos[v, k])
                    out[v, k] -= f * (pos[u, k] - pos[v, k])
                energy += e
    return energy, jitters


@njit(cache=True)
def attraction(pos, edges, mult, K, out):
    """Spring attraction over edges (force magnitude d^2/K per unit multiplicity).

    Fills `out`; returns the attraction energy. Coincident endpoints exert
    zero force, which is the continuous limit of the law.
    """
    n, dim = pos.shape
    m = edges.shape[0]
    for i in range(n):
        for k in range(dim):
            out[i, k] = 0.0
    energy = 0.0
    for e in range(m):
        u = edges[e, 0]
        v = edges[e, 1]
        d2 = 0.0
        for k in range(dim):
            delta = pos[v, k] - pos[u, k]
            d2 += delta * delta
        d = np.sqrt(d2)
        w = mult[e] * d / K
        for k in range(dim):
            out[u, k] += w * (pos[v, k] - pos[u, k])
            out[v, k] -= w * (pos[v, k] - pos[u, k])
        energy += mult[e] * d2 * d / (3.0 * K)
    return energy


@njit(cache=True)
def repulsive_energy_exact(pos, C, K, p):
    """(unordered repulsive energy, minimum squared pair distance)."""
    n, dim = pos.shape
    energy = 0.0
    min_d2 = np.inf
    for u in range(n):
        for v in range(u + 1, n):
            d2 = 0.0
            for k in range(dim):
                delta = pos[u, k] - pos[v, k]
                d2 += delta * delta
            if d2 < min_d2:
                min_d2 = d2
            if d2 > 0.0:
                _, e = _repulsion_terms(d2, C, K, p)
                energy += e
    return energy, min_d2


@njit(cache=True)
def max_pairwise_distance(pos):
    n, dim = pos.shape
    best = 0.0
    for u in range(n):
        for v in range(u + 1, n):
            d2 = 0.0
            for k in range(dim):
                delta = pos[u, k] - pos[v, k]
                d2 += delta * delta
            if d2 > best:
                best = d2
    return np.sqrt(best)


@njit(cache=True)
def attraction_energy_exact(pos, edges, mult, K):
    m = edges.shape[0]
    dim = pos.shape[1]
    energy = 0.0
    for e in range(m):
        u = edges[e, 0]
        v = edges[e, 1]
        d2 = 0.0
        for k in range(dim):
            delta = pos[v, k] - pos[u, k]
            d2 += delta * delta
        energy += mult[e] * d2 * np.sqrt(d2) / (3.0 * K)
    return energy
