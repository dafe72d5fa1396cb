"""Independent brute-force oracles used by the tests.

Nothing here calls the package's search code; structures are read through
their plain tuple sets only.
"""
import itertools

from artifact.relcore import Structure


def all_maps(n_src, n_dst):
    return itertools.product(range(n_dst), repeat=n_src)


def is_morphism(A, B, f, kind):
    for name, arity in A.sig:
        for t in itertools.product(range(A.n), repeat=arity):
            a = t in A.rels[name]
            b = tuple(f[x] for x in t) in B.rels[name]
            if a and not b:
                return False
            if kind in ("full", "embedding", "full-surjective") and b and not a:
                return False
    if kind == "embedding" and len(set(f)) != len(f):
        return False
    if kind in ("surjective-hom", "full-surjective") and len(set(f)) != B.n:
        return False
    return True


def first_morphism(A, B, kind):
    for f in all_maps(A.n, B.n):
        if is_morphism(A, B, f, kind):
            return f
    return None


def twin_pair(A, a, b):
    for name, arity in A.sig:
        for t in itertools.product(range(A.n), repeat=arity):
            for i in range(arity):
                ta = t[:i] + (a,) + t[i + 1:]
                tb = t[:i] + (b,) + t[i + 1:]
                if (ta in A.rels[name]) != (tb in A.rels[name]):
                    return False
    return True


def twin_pairs(A):
    return {frozenset((a, b)) for a in range(A.n) for b in range(a + 1, A.n) if twin_pair(A, a, b)}


def encoding(A):
    out = []
    for name, arity in A.sig:
        for t in itertools.product(range(A.n), repeat=arity):
            out.append(1 if t in A.rels[name] else 0)
    return tuple(out)


def relabel(A, p):
    """The structure whose R(i..) holds iff A has R(p(i)..)."""
    inv = {v: i for i, v in enumerate(p)}
    rels = {k: [tuple(inv[x] for x in t) for t in A.rels[k]] for k in A.sig.names}
    return Structure(A.sig, A.n, rels)


def canon(A):
    return min(encoding(relabel(A, p)) for p in itertools.permutations(range(A.n)))


def isomorphic(A, B):
    return A.sig == B.sig and A.n == B.n and canon(A) == canon(B)


def labeled(sig, n):
    slots = [(name, t) for name, arity in sig for t in itertools.product(range(n), repeat=arity)]
    for mask in itertools.product((0, 1), repeat=len(slots)):
        rels = {name: [] for name, _ in sig}
        for bit, (name, t) in zip(mask, slots):
            if bit:
                rels[name].append(t)
        yield Structure(sig, n, rels)


def induced(A, keep):
    keep = sorted(keep)
    idx = {a: i for i, a in enumerate(keep)}
    return Structure(A.sig, len(keep), {k: [tuple(idx[x] for x in t) for t in A.rels[k]
                                             if all(x in idx for x in t)] for k in A.sig.names})


def subsets(n):
    for size in range(1, n + 1):
        yield from itertools.combinations(range(n), size)


def embeds(F, A):
    return first_morphism(F, A, "embedding") is not None


def components(A):
    adj = {x: set() for x in range(A.n)}
    for name in A.sig.names:
        for t in A.rels[name]:
            for x in t:
                adj[x].update(t)
    seen, out = set(), []
    for x in range(A.n):
        if x in seen:
            continue
        stack, comp = [x], set()
        while stack:
            y = stack.pop()
            if y in comp:
                continue
            comp.add(y)
            stack.extend(adj[y] - comp)
        seen |= comp
        out.append(tuple(sorted(comp)))
    return out


def graph(n, edges, symmetric=True, name="E"):
    es = set()
    for a, b in edges:
        es.add((a, b))
        if symmetric:
            es.add((b, a))
    return Structure([(name, 2)], n, {name: es})


def has_cycle(n, edges):
    """Directed cycle detection (loops count) by repeated sink removal."""
    alive = set(range(n))
    es = set(edges)
    while True:
        sinks = [v for v in alive if not any(a == v and b in alive for a, b in es)]
        if not sinks:
            return bool(alive)
        alive -= set(sinks)


def colorable(n, edges, k):
    for col in itertools.product(range(k), repeat=n):
        if all(col[a] != col[b] for a, b in edges):
            return True
    return False


def holds(f, A, env=None):
    """Plain recursive Tarskian evaluation."""
    from artifact import logic as L
    env = env or {}
    if isinstance(f, L.Const):
        return f.value
    if isinstance(f, L.Atom):
        return tuple(env[v] for v in f.args) in A.rels[f.sym]
    if isinstance(f, L.Eq):
        return env[f.left] == env[f.right]
    if isinstance(f, L.Not):
        return not holds(f.body, A, env)
    if isinstance(f, L.And):
        return all(holds(c, A, env) for c in f.args)
    if isinstance(f, L.Or):
        return any(holds(c, A, env) for c in f.args)
    if isinstance(f, L.Implies):
        return (not holds(f.left, A, env)) or holds(f.right, A, env)
    if isinstance(f, L.Iff):
        return holds(f.left, A, env) == holds(f.right, A, env)
    test = all if isinstance(f, L.Forall) else any
    return test(holds(f.body, A, {**env, **dict(zip(f.vars, vals))})
                for vals in itertools.product(range(A.n), repeat=len(f.vars)))


def hereditary(f, A):
    for S in subsets(A.n):
        if not holds(f, induced(A, S)):
            return False, S
    return True, None


def eso_holds(sentence, A):
    """Brute-force ESO semantics: try every expansion (extended symbols grow from R')."""
    from artifact import logic as L
    slots = []
    for name, arity, ext in sentence.existentials:
        for t in itertools.product(range(A.n), repeat=arity):
            if ext is None or t not in A.rels[ext]:
                slots.append((name, t))
    for mask in itertools.product((0, 1), repeat=len(slots)):
        rels = dict(A.rels)
        for name, arity, ext in sentence.existentials:
            rels[name] = set(A.rels[ext]) if ext else set()
        for bit, (name, t) in zip(mask, slots):
            if bit:
                rels[name].add(t)
        B = Structure(sentence.full_sig, A.n, rels)
        if holds(sentence.matrix, B):
            return True
    return False


def quotient(A):
    """Keep the least element of every twin class."""
    keep = [a for a in range(A.n) if not any(twin_pair(A, b, a) for b in range(a))]
    return induced(A, keep)


def bipartite(n, edges):
    return colorable(n, edges, 2)


def undirected_pairs(n):
    return list(itertools.combinations(range(n), 2))


def triangle_free(edges):
    es = {frozenset(e) for e in edges}
    verts = {x for e in edges for x in e}
    return not any({frozenset((a, b)), frozenset((b, c)), frozenset((a, c))} <= es
                   for a, b, c in itertools.combinations(sorted(verts), 3))


def sandwich_k3(E1, E2):
    """Some triangle-free edge set between E1 and E2 (edges as 2-sets)."""
    E1, E2 = set(map(frozenset, E1)), set(map(frozenset, E2))
    if not E1 <= E2:
        return False
    optional = sorted(E2 - E1, key=sorted)
    for mask in itertools.product((0, 1), repeat=len(optional)):
        chosen = E1 | {e for bit, e in zip(mask, optional) if bit}
        if triangle_free([tuple(e) for e in chosen]):
            return True
    return False


def orientations(n, edges, fixed=()):
    """Every orientation of the undirected edge set keeping the fixed arcs."""
    pairs = sorted({tuple(sorted(e)) for e in edges if e[0] != e[1]})
    fixed = set(fixed)
    for mask in itertools.product((0, 1), repeat=len(pairs)):
        arcs = {(a, b) if bit else (b, a) for bit, (a, b) in zip(mask, pairs)}
        if fixed <= arcs:
            yield arcs


def iso_extends(G, H, partial):
    if G.n != H.n:
        return False
    for p in itertools.permutations(range(H.n)):
        if any(p[a] != b for a, b in partial.items()):
            continue
        if all(((a, b) in G.rels["E"]) == ((p[a], p[b]) in H.rels["E"])
               for a in range(G.n) for b in range(G.n)):
            return True
    return False


def is_dual(phi, psi, n):
    """psi equals the dual of phi as Boolean functions on n variables."""
    for bits in itertools.product((0, 1), repeat=n):
        d = any(all(bits[v] for v in c) for c in phi)
        g = all(any(bits[v] for v in c) for c in psi)
        if d != g:
            return False
    return True


def topological_orders(n, edges):
    for p in itertools.permutations(range(n)):
        pos = {v: i for i, v in enumerate(p)}
        if all(pos[a] < pos[b] for a, b in edges):
            yield p


def graphs_up_to_iso(n):
    seen, out = set(), []
    pairs = undirected_pairs(n)
    for mask in itertools.product((0, 1), repeat=len(pairs)):
        G = graph(n, [e for bit, e in zip(mask, pairs) if bit])
        key = canon(G)
        if key not in seen:
            seen.add(key)
            out.append(G)
    return out
