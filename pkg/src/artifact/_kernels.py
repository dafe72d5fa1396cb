"""Hot loops, compiled with numba when available.

Every kernel is written once as numba-compatible Python.  Setting
ARTIFACT_NO_NUMBA=1 runs the plain Python body (or a vectorized numpy
variant where one exists) instead of the compiled one.
"""
import os

import numpy as np

USE_NUMBA = os.environ.get("ARTIFACT_NO_NUMBA", "") not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if not USE_NUMBA:
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


BACKEND = "numba" if USE_NUMBA else "numpy"

HOM, EMBEDDING, FULL, SURJECTIVE_HOM, FULL_SURJECTIVE = 0, 1, 2, 3, 4


# ---------------------------------------------------------------- canonical form

@njit(cache=True)
def _canon_rows_jit(bits, permmaps):
    n_rows, width = bits.shape
    out = np.empty_like(bits)
    cand = np.empty(width, dtype=np.uint8)
    for r in range(n_rows):
        row = bits[r]
        best = out[r]
        for j in range(width):
            best[j] = row[permmaps[0, j]]
        for p in range(1, permmaps.shape[0]):
            smaller = False
            for j in range(width):
                c = row[permmaps[p, j]]
                cand[j] = c
                if not smaller:
                    if c < best[j]:
                        smaller = True
                    elif c > best[j]:
                        break
            if smaller:
                for j in range(width):
                    best[j] = cand[j]
    return out


def _canon_rows_np(bits, permmaps):
    # candidates[r, p, :] = bits[r, permmaps[p]]; pick the lexicographically least p per row
    out = np.empty_like(bits)
    width = bits.shape[1]
    chunk = max(1, (1 << 22) // max(1, permmaps.shape[0] * max(width, 1)))
    for start in range(0, bits.shape[0], chunk):
        cand = bits[start:start + chunk][:, permmaps]
        alive = np.ones(cand.shape[:2], dtype=bool)
        for j in range(width):
            col = np.where(alive, cand[:, :, j], 2)
            alive &= col == col.min(axis=1, keepdims=True)
        first = alive.argmax(axis=1)
        out[start:start + chunk] = cand[np.arange(cand.shape[0]), first]
    return out


def canon_rows(bits, permmaps):
    """Lexicographically least image of every row under the permutation index maps."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    permmaps = np.ascontiguousarray(permmaps, dtype=np.int64)
    if bits.shape[1] == 0:
        return bits.copy()
    if USE_NUMBA:
        return _canon_rows_jit(bits, permmaps)
    return _canon_rows_np(bits, permmaps)


# ---------------------------------------------------------------- morphisms

@njit(cache=True)
def _morph_dfs_jit(arities, src, src_off, dst, dst_off, n_src, n_dst, kind):
    fmap = -np.ones(n_src, dtype=np.int64)
    used = np.zeros(n_dst, dtype=np.int64)
    distinct = 0
    injective = kind == EMBEDDING
    surjective = kind == SURJECTIVE_HOM or kind == FULL_SURJECTIVE
    full = kind == EMBEDDING or kind == FULL or kind == FULL_SURJECTIVE
    if surjective and n_src < n_dst:
        return fmap, False
    if injective and n_src > n_dst:
        return fmap, False
    digits = np.zeros(8, dtype=np.int64)
    v = 0
    while v >= 0:
        if fmap[v] >= 0:
            used[fmap[v]] -= 1
            if used[fmap[v]] == 0:
                distinct -= 1
        fmap[v] += 1
        found = False
        while fmap[v] < n_dst:
            cand = fmap[v]
            ok = True
            if injective and used[cand] > 0:
                ok = False
            if ok and surjective:
                fresh = 1 if used[cand] == 0 else 0
                if distinct + fresh + (n_src - 1 - v) < n_dst:
                    ok = False
            if ok:
                base = v + 1
                for rel in range(arities.shape[0]):
                    if not ok:
                        break
                    r = arities[rel]
                    total = 1
                    for _ in range(r):
                        total *= base
                    for k in range(total):
                        rest = k
                        has_v = False
                        for q in range(r - 1, -1, -1):
                            digits[q] = rest % base
                            rest //= base
                            if digits[q] == v:
                                has_v = True
                        if not has_v:
                            continue
                        si = 0
                        di = 0
                        for q in range(r):
                            si = si * n_src + digits[q]
                            img = cand if digits[q] == v else fmap[digits[q]]
                            di = di * n_dst + img
                        a = src[src_off[rel] + si]
                        b = dst[dst_off[rel] + di]
                        if full:
                            if a != b:
                                ok = False
                                break
                        elif a and not b:
                            ok = False
                            break
            if ok:
                found = True
                break
            fmap[v] += 1
        if not found:
            fmap[v] = -1
            v -= 1
            continue
        if used[fmap[v]] == 0:
            distinct += 1
        used[fmap[v]] += 1
        if v == n_src - 1:
            if not surjective or distinct == n_dst:
                return fmap, True
        else:
            v += 1
            fmap[v] = -1
    return fmap, False


def morph_dfs(arities, src, src_off, dst, dst_off, n_src, n_dst, kind):
    """First map in lexicographic order satisfying `kind`, or None.

    src/dst hold each relation's dense 0/1 tensor flattened big-endian and
    concatenated; *_off are the start offsets per relation.
    """
    fmap, ok = _morph_dfs_jit(arities, src, src_off, dst, dst_off, n_src, n_dst, kind)
    return [int(x) for x in fmap] if ok else None


# ---------------------------------------------------------------- grounded search

@njit(cache=True)
def _bucket_ok(cur, clauses, lo, hi):
    for c in range(lo, hi):
        sat = False
        complete = True
        for q in range(clauses.shape[1]):
            lit = clauses[c, q]
            if lit < 0:
                break
            val = cur[lit >> 1]
            if val < 0:
                complete = False
                break
            if val == (lit & 1):
                sat = True
                break
        if complete and not sat:
            return False
    return True


@njit(cache=True)
def _ground_dfs_jit(cur, free, clauses, bucket_start, budget, resume):
    nodes = 0
    n_slots = cur.shape[0]
    nfree = free.shape[0]
    if resume:
        if nfree == 0:
            return 1, nodes
        depth = nfree - 1
    else:
        for q in range(nfree):
            cur[free[q]] = -1
        # buckets of fixed slots complete before any free slot is set
        first = free[0] if nfree > 0 else n_slots
        if not _bucket_ok(cur, clauses, bucket_start[0], bucket_start[first]):
            return 1, nodes
        if nfree == 0:
            return 0, nodes
        depth = 0
    while depth >= 0:
        slot = free[depth]
        val = cur[slot]
        if val == 1:
            cur[slot] = -1
            depth -= 1
            continue
        cur[slot] = val + 1
        nodes += 1
        if nodes > budget:
            return 2, nodes
        hi = free[depth + 1] if depth + 1 < nfree else n_slots
        if not _bucket_ok(cur, clauses, bucket_start[slot], bucket_start[hi]):
            continue
        if depth == nfree - 1:
            return 0, nodes
        depth += 1
    return 1, nodes


def ground_dfs(cur, free, clauses, bucket_start, budget, resume):
    """Depth-first search over 0/1 slot assignments, trying 0 before 1.

    cur holds fixed slot values; free lists the searched slots ascending.
    clauses holds literal codes slot*2+sign (sign 1 = positive) padded with
    -1 and sorted by largest slot, bucket_start[j] being the first clause
    whose largest slot is j.  cur is updated in place.  Returns
    (status, nodes) with status 0 = leaf, 1 = exhausted, 2 = budget hit.
    With resume set the search continues after the leaf left in cur.
    """
    status, nodes = _ground_dfs_jit(cur, free, clauses, bucket_start, budget, resume)
    return int(status), int(nodes)
