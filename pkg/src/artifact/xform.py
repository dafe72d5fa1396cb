"""Sentence transforms and their paired instance transforms.

Every reduction returns a Reduction whose `polarity` says whether the
forward map preserves membership ("same") or flips it ("complemented").
"""
import itertools
import re
from dataclasses import dataclass, field

from .errors import (CapExceeded, NotExtensional, NotMonotone, NotSNP, ProbeExhausted,
                     SymbolClash, TrivialSentence)
from .eval import eval_fo, her_check
from .logic import (FALSE, TRUE, And, Atom, Const, Eq, EsoSentence, Exists, Forall, Iff, Implies,
                    Not, Or, _extension_clause, all_vars, atom, build_prefix, classify,
                    clause_formula, conj, disj, exists, forall, lit_formula, nnf, prenex_cnf,
                    relativize, rename_symbols, substitute)
from .relcore import (Signature, Structure, connected_components, find_morphism, structures_of_size,
                      substructure, twins)
from .solver import decide_ext_eso

PROBE_MAX = 4


@dataclass
class Reduction:
    outSentence: object
    forward: object
    reverse: object = None
    polarity: str = "same"
    info: dict = field(default_factory=dict)


def _name(base, taken):
    """base itself when free, else base followed by the first free number."""
    if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", base):
        base = "R"
    if base not in taken:
        taken.add(base)
        return base
    i = 0
    while f"{base}{i}" in taken:
        i += 1
    taken.add(f"{base}{i}")
    return f"{base}{i}"


def _lit_vars(lit):
    a = lit[1]
    return a.args if isinstance(a, Atom) else (a.left, a.right)


def _clause_vars(clause):
    out = []
    for lit in clause:
        for v in _lit_vars(lit):
            if v not in out:
                out.append(v)
    return out


def _used_prefix(prefix, clauses):
    used = {v for c in clauses for v in _clause_vars(c)}
    return [(q, v) for q, v in prefix if v in used]


def _split_extension(psi):
    """prefix, extension clauses and remaining clauses of psi's matrix."""
    prefix, clauses = prenex_cnf(psi.matrix)
    universal = {v for q, v in prefix if q == "A"}
    ext, rest = [], []
    for c in clauses:
        if any(e is not None and _extension_clause(c, universal, e, n, a)
               for n, a, e in psi.existentials):
            ext.append(c)
        else:
            rest.append(c)
    return prefix, ext, rest


# ---------------------------------------------------------------- hereditary FO to monadic extensional ESO

def herfo_to_exteso(phi, sig):
    sig = Signature(sig)
    if "S" in sig or "Sbar" in sig:
        raise SymbolClash("the signature already uses S or Sbar")
    prefix, clauses = prenex_cnf(Not(phi))
    matrix = conj(*(clause_formula(c) for c in clauses)) if clauses != [()] else FALSE

    def hidden(v):
        return atom("Sbar", v)

    ex = [v for q, v in prefix if q == "E"]
    un = [v for q, v in prefix if q == "A"]
    taken = {v for _, v in prefix}
    y = _name("y", taken)
    parts = [forall([y], Implies(atom("S", y), hidden(y)))]
    parts += [Not(hidden(v)) for v in ex]
    if un:
        parts.append(Implies(conj(*(Not(hidden(v)) for v in un)), matrix))
    else:
        parts.append(matrix)
    body = build_prefix(prefix, conj(*parts))
    if not ex:
        w = _name("w", taken)
        body = And((body, exists([w], Not(hidden(w)))))
    out_sig = sig + Signature([("S", 1)])
    Psi = EsoSentence(out_sig, (("Sbar", 1, "S"),), body)
    fallback = {}

    def forward(A):
        return Structure(out_sig, A.n, dict(A.rels, S=()))

    def reverse(B):
        rest = [a for a in range(B.n) if (a,) not in B.rels["S"]]
        if rest:
            return substructure(B, rest).reduct(sig.names)
        # S covers everything: decide the corner directly and pick a fixed instance
        want = not decide_ext_eso(Psi, B).accepted
        if want not in fallback:
            fallback[want] = _probe_her(phi, sig, want)
        return fallback[want]

    return Reduction(Psi, forward, reverse, "complemented", {"sig": sig})


def _probe_her(phi, sig, member=True):
    for n in range(1, PROBE_MAX + 1):
        try:
            candidates = structures_of_size(sig, n, upToIso=True)
            for A in candidates:
                if her_check(phi, A).member == member:
                    return A
        except CapExceeded:
            break
    kind = "member" if member else "non-member"
    raise ProbeExhausted(f"no hereditary {kind} found within the probe cap")


# ---------------------------------------------------------------- extensional ESO to hereditary FO

def _probe(psi, max_size=PROBE_MAX):
    yes = no = None
    exhausted = True
    for n in range(1, max_size + 1):
        try:
            for A in structures_of_size(psi.sig, n, upToIso=True):
                if decide_ext_eso(psi, A).accepted:
                    yes = yes or A
                else:
                    no = no or A
                if yes is not None and no is not None:
                    return yes, no, False
        except CapExceeded:
            exhausted = False
            break
    if not exhausted:
        raise ProbeExhausted(f"could not find both a model and a non-model of size <= {max_size}")
    return yes, no, True


def _replace_existentials(f, smap, z):
    if isinstance(f, Atom):
        if f.sym in smap:
            return Forall((z,), Not(Atom(smap[f.sym], f.args + (z,))))
        return f
    if isinstance(f, (Eq, Const)):
        return f
    if isinstance(f, Not):
        return Not(_replace_existentials(f.body, smap, z))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_replace_existentials(c, smap, z) for c in f.args))
    if isinstance(f, (Implies, Iff)):
        return type(f)(_replace_existentials(f.left, smap, z), _replace_existentials(f.right, smap, z))
    return type(f)(f.vars, _replace_existentials(f.body, smap, z))


def _other_tuple_clauses(rho, s_name, s_arity):
    """Marker y of S(xs, y) occurs in no other tuple of the structure."""
    xs = tuple(f"x{k}" for k in range(s_arity - 1))
    y = "y"
    own = xs + (y,)
    parts = []
    for T, k in rho:
        for p in range(k):
            zs = tuple(y if q == p else f"z{q}" for q in range(k))
            if T == s_name:
                same = conj(*(Eq(zs[q], own[q]) for q in range(k)))
            else:
                same = FALSE
            body = Implies(And((Atom(s_name, own), Atom(T, zs))), same)
            vs = list(xs) + [y] + [v for v in zs if v not in own and v != y]
            parts.append(forall(vs, body))
    # nor inside its own tuple, which would hide it from the no-cycle argument
    for k in xs:
        parts.append(forall(own, Implies(Atom(s_name, own), Not(Eq(k, y)))))
    return parts


def exteso_to_herfo(psi, probe_max=PROBE_MAX, allow_trivial=True):
    rep = classify(psi)
    if not rep.isExtensional:
        raise NotExtensional(rep.diagnostics.get("isExtensional", "not extensional"))
    tau = psi.sig
    primed = [e for _, _, e in psi.existentials]
    plain = [n for n in tau.names if n not in primed]
    yes, no, exhausted = _probe(psi, probe_max)
    if yes is None or no is None:
        if not allow_trivial:
            raise TrivialSentence("the sentence is constant on every probed structure")
        const = FALSE if no is None else TRUE
        fixed = no if no is not None else yes
        return Reduction(const, lambda A: A, lambda B: fixed, "complemented",
                         {"trivial": True, "yes": yes, "no": no})

    taken = set(psi.full_sig.names)
    D = _name("D", taken)
    E = _name("E", taken)
    LT = _name("lt", taken)
    S = {}
    for name, arity, _ in psi.existentials:
        S[name] = (_name("S_" + (re.sub(r"\W", "", name) or "lt"), taken), arity + 1)
    rho = tau + Signature([(D, 1), (E, 2), (LT, 2)] + list(S.values()))

    prefix, _, rest = _split_extension(psi)
    prefix = _used_prefix(prefix, rest)
    z = _name("z", set(taken) | {v for _, v in prefix})
    smap = {k: v[0] for k, v in S.items()}
    if all(q == "A" for q, _ in prefix):
        pieces = []
        for c in rest:
            vs = _clause_vars(c)
            body = conj(*([atom(D, v) for v in vs] + [nnf(Not(clause_formula(c)))]))
            pieces.append(exists(vs, body))
        chi = disj(*pieces)
    else:
        flipped = [("E" if q == "A" else "A", v) for q, v in prefix]
        neg = build_prefix(flipped, nnf(Not(conj(*(clause_formula(c) for c in rest)))))
        chi = relativize(neg, atom(D, "u_"))
    phi1 = _replace_existentials(chi, smap, z)

    side = [atom(E, "x0", "y")] + [Atom(s, tuple(f"x{k}" for k in range(a - 1)) + ("y",))
                                  for s, a in S.values()]
    phi2 = Exists(("y",), conj(*(forall([v for v in a.args if v != "y"], Not(a)) for a in side)))
    phi3 = []
    for s, a in S.values():
        phi3 += _other_tuple_clauses(rho, s, a)
    phi4 = forall(["x", "y"], Implies(atom(E, "x", "y"), And((atom(D, "x"), atom(D, "y")))))
    phi5 = conj(
        forall(["x", "y", "z"], Implies(And((atom(E, "x", "y"), atom(E, "x", "z"))), Eq("y", "z"))),
        forall(["x", "y", "z"], Implies(And((atom(E, "y", "x"), atom(E, "z", "x"))), Eq("y", "z"))))

    def le(a, b):
        return Or((Eq(a, b), atom(LT, a, b)))

    def dom(*vs):
        return conj(*(atom(D, v) for v in vs))

    phi6 = conj(
        forall(["x"], Implies(dom("x"), Not(atom(LT, "x", "x")))),
        forall(["x", "y", "z"], Implies(conj(dom("x", "y", "z"), atom(LT, "x", "y"), atom(LT, "y", "z")),
                                        atom(LT, "x", "z"))),
        forall(["x", "y"], Implies(dom("x", "y"), disj(Eq("x", "y"), atom(LT, "x", "y"), atom(LT, "y", "x")))),
        forall(["x", "y", "z", "w"], Implies(
            conj(dom("x", "y", "z", "w"), le("x", "y"), le("z", "w"), atom(E, "y", "x"), atom(E, "w", "z")),
            And((Eq("x", "z"), Eq("y", "w"))))))
    guard = conj(*phi3, phi4, phi5, phi6)
    phi = conj(Or((phi1, phi2)), *phi3, phi4, phi5, phi6)
    exist_index = [(name, arity, ext) for name, arity, ext in psi.existentials]

    def forward(A):
        if A.sig != tau:
            raise ValueError("forward expects a structure over the input signature")
        n = A.n
        rels = {k: set(A.rels[k]) for k in plain}
        rels[D] = {(a,) for a in range(n)}
        rels[E] = {((a - 1) % n, a) for a in range(n)}
        rels[LT] = {(a, b) for a in range(n) for b in range(n) if a < b}
        size = n
        for name, arity, ext in exist_index:
            s = S[name][0]
            rels[s] = set()
            for t in itertools.product(range(n), repeat=arity):
                if t not in A.rels[ext]:
                    rels[s].add(t + (size,))
                    size += 1
        return Structure(rho, size, rels)

    def reverse(B):
        if not eval_fo(guard, B):
            return yes
        markers = set()
        for s, _ in S.values():
            markers |= {t[-1] for t in B.rels[s]}
        X = [b for b in range(B.n) if b not in markers]
        succ = {a: b for a, b in B.rels[E]}
        cycles = []
        seen = set()
        for start in X:
            if start in seen:
                continue
            path = [start]
            cur = start
            while cur in succ and succ[cur] not in path:
                cur = succ[cur]
                path.append(cur)
            seen.update(path)
            if cur in succ and succ[cur] == start:
                cycles.append(sorted(path))
        if not cycles:
            return no
        X1 = cycles[0]
        index = {b: i for i, b in enumerate(X1)}
        rels = {k: [tuple(index[x] for x in t) for t in B.rels[k] if all(x in index for x in t)]
                for k in plain}
        for name, arity, ext in exist_index:
            s = S[name][0]
            covered = {t[:-1] for t in B.rels[s]}
            rels[ext] = [tuple(index[x] for x in t) for t in itertools.product(X1, repeat=arity)
                         if t not in covered]
        return Structure(tau, len(X1), rels)

    info = {"rho": rho, "D": D, "E": E, "lt": LT, "S": {k: v[0] for k, v in S.items()},
            "yes": yes, "no": no, "phi1": phi1, "phi2": phi2}
    return Reduction(phi, forward, reverse, "complemented", info)


def gadget_size(A, psi):
    return A.n + sum(A.n ** a - len(A.rels[e]) for _, a, e in psi.existentials)


# ---------------------------------------------------------------- monotone extensional SNP and CSPs

def _require(psi, *flags):
    rep = classify(psi)
    errors = {"isSNP": NotSNP, "isMonotone": NotMonotone, "isExtensional": NotExtensional}
    for flag in flags:
        if not getattr(rep, flag):
            raise errors[flag](rep.diagnostics.get(flag, flag))
    return rep


def snp_to_csp(psi):
    _require(psi, "isSNP", "isExtensional", "isMonotone")
    if not psi.existentials:
        out = psi.matrix
    else:
        prefix, _, rest = _split_extension(psi)
        mapping = {name: ext for name, _, ext in psi.existentials}
        body = conj(*(rename_symbols(clause_formula(c), mapping) for c in rest)) \
            if rest != [()] else FALSE
        out = build_prefix(_used_prefix(prefix, rest), body)
    return Reduction(out, lambda A: A, lambda A: A, "same", {"sig": psi.sig})


def _universal_width(phi):
    """Most variables in one clause: every minimal violator is at most this big."""
    prefix, clauses = prenex_cnf(phi)
    if any(q != "A" for q, _ in prefix):
        raise NotSNP("expected a universal sentence")
    return max([1] + [len(_clause_vars(c)) for c in clauses])


def bounds_of_universal(phi, sig):
    sig = Signature(sig)
    k = _universal_width(phi)
    out = []
    for n in range(1, k + 1):
        for A in structures_of_size(sig, n, upToIso=True):
            if eval_fo(phi, A):
                continue
            if n == 1 or all(eval_fo(phi, substructure(A, [x for x in range(n) if x != d]))
                             for d in range(n)):
                out.append(A)
    return out


def nt_formula(sig, x="x", y="y"):
    """Existential formula true of a pair exactly when it is not a pair of twins."""
    parts = []
    for name, r in Signature(sig):
        for i in range(r):
            zs = [f"z{j}" for j in range(r) if j != i]
            left = tuple(x if j == i else f"z{j}" for j in range(r))
            right = tuple(y if j == i else f"z{j}" for j in range(r))
            parts.append(exists(zs, Iff(Atom(name, left), Not(Atom(name, right)))))
    return disj(*parts)


def pd_diagram(F, prefix="x"):
    """Point-determining diagram of F with free variables x0..x(n-1)."""
    xs = [f"{prefix}{a}" for a in range(F.n)]
    lits = []
    for name, r in F.sig:
        for t in itertools.product(range(F.n), repeat=r):
            a = Atom(name, tuple(xs[i] for i in t))
            lits.append(a if t in F.rels[name] else Not(a))
    for a, b in itertools.combinations(range(F.n), 2):
        lits.append(nt_formula(F.sig, xs[a], xs[b]))
    return conj(*lits)


def blowup_sentence(bounds):
    parts = []
    for F in bounds:
        xs = [f"x{a}" for a in range(F.n)]
        parts.append(forall(xs, Not(pd_diagram(F))))
    return conj(*parts)


def csp_to_snp(phi, sig):
    sig = Signature(sig)
    bounds = bounds_of_universal(phi, sig)
    blown = blowup_sentence(bounds)
    taken = set(sig.names)
    star = {name: _name(name + "_s", taken) for name in sig.names}
    existentials = tuple((star[n], a, n) for n, a in sig)
    nu = []
    for name, r in sig:
        xs = [f"x{i}" for i in range(r)]
        nu.append(forall(xs, Implies(Atom(name, tuple(xs)), Atom(star[name], tuple(xs)))))
    Psi = EsoSentence(sig, existentials, conj(*nu, rename_symbols(blown, star)))
    return Reduction(Psi, lambda A: A, lambda A: A, "same", {"bounds": bounds, "star": star})


def full_csp_bounds(B):
    out = []
    for n in range(1, B.n + 2):
        for A in structures_of_size(B.sig, n, upToIso=True):
            if find_morphism(A, B, "full") is not None:
                continue
            if twins(A):
                continue
            if n == 1 or all(find_morphism(substructure(A, [x for x in range(n) if x != d]), B, "full")
                             is not None for d in range(n)):
                out.append(A)
    return out


# ---------------------------------------------------------------- connectedization

def connectedize(psi):
    _require(psi, "isSNP", "isExtensional")
    prefix, ext_clauses, rest = _split_extension(psi)
    taken = set(psi.full_sig.names)
    E = _name("E", taken)
    Ein = E + "'"
    while Ein in taken:
        E = _name("E", taken)
        Ein = E + "'"
    taken.add(Ein)
    primed = {e for _, _, e in psi.existentials}
    parts = [forall(_clause_vars(c), clause_formula(c)) for c in ext_clauses]
    parts.append(forall(["z1", "z2"], Implies(atom(Ein, "z1", "z2"), atom(E, "z1", "z2"))))
    parts.append(forall(["z1", "z2", "z3"],
                        Implies(And((atom(E, "z1", "z2"), atom(E, "z2", "z3"))), atom(E, "z1", "z3"))))
    parts.append(forall(["z1", "z2"], Implies(atom(E, "z1", "z2"), atom(E, "z2", "z1"))))
    guarded = [(n, a) for n, a in psi.sig if n not in primed]
    guarded += [(n, a) for n, a, _ in psi.existentials]
    for name, r in guarded:
        xs = tuple(f"x{i}" for i in range(r))
        for i, j in itertools.combinations(range(r), 2):
            parts.append(forall(xs, Implies(Atom(name, xs), atom(E, xs[i], xs[j]))))
    for c in rest:
        vs = _clause_vars(c)
        guard = [Not(atom(E, a, b)) for a, b in itertools.combinations(vs, 2)]
        parts.append(forall(vs, disj(*(lit_formula(l) for l in c), *guard)))
    out_sig = psi.sig + Signature([(Ein, 2)])
    Psi = EsoSentence(out_sig, psi.existentials + ((E, 2, Ein),), conj(*parts))

    def forward(A):
        full = [(a, b) for a in range(A.n) for b in range(A.n)]
        return Structure(out_sig, A.n, dict(A.rels, **{Ein: full}))

    def reverse(B):
        return [substructure(B, comp).reduct(psi.sig.names) for comp in connected_components(B)]

    return Reduction(Psi, forward, reverse, "same", {"E": E, "E'": Ein, "conjunctive": True})


# ---------------------------------------------------------------- extension scaffold

def add_extension_scaffold(psi):
    taken = set(psi.full_sig.names)
    primes = {}
    for name, arity, _ in psi.existentials:
        p = (name if re.fullmatch(r"[A-Za-z]\w*", name) else "lt") + "'"
        if p in taken:
            raise SymbolClash(f"symbol {p} already in use")
        primes[name] = (p, arity)
    if not primes:
        return psi
    width = max(a for _, a in primes.values())
    xs = tuple(f"x{i}" for i in range(width))
    body = []
    for name, (p, a) in primes.items():
        body.append(Not(Atom(p, xs[:a])))
    for name, (p, a) in primes.items():
        body.append(Implies(Atom(p, xs[:a]), Atom(name, xs[:a])))
    out_sig = psi.sig + Signature(list(primes.values()))
    existentials = tuple((n, a, primes[n][0]) for n, a, _ in psi.existentials)
    return EsoSentence(out_sig, existentials, And((psi.matrix, forall(xs, conj(*body)))))
