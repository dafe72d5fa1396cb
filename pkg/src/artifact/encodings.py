"""Problem encodings as extensional ESO sentences, with instance builders.

`encode(problem, **params)` returns the sentence for a problem of the
catalogue (`henson` returns a tournament instead).  Graph isomorphism
completion and monotone dualization also come with forward instance
builders and reverse maps back to problem instances.
"""
import itertools
from dataclasses import dataclass

from .errors import BadParams, NonOrderSignature, UnboundVariable, VariableMismatch
from .eval import eval_fo
from .logic import (And, Atom, Const, Eq, EsoSentence, Exists, Forall, Iff, Implies, Not, Or,
                    all_vars, atom, conj, disj, exists, forall, free_vars, neq, symbols)
from .relcore import Signature, Structure, substructure, twins
from .xform import full_csp_bounds

GRAPH = Signature([("E", 2)])


def _fresh(base, taken):
    name, i = base, 0
    while name in taken:
        name = f"{base}{i}"
        i += 1
    taken.add(name)
    return name


def _slo(lt):
    """Strict linear order axioms for the binary symbol lt."""
    return conj(
        forall(["x"], Not(atom(lt, "x", "x"))),
        forall(["x", "y", "z"], Implies(And((atom(lt, "x", "y"), atom(lt, "y", "z"))), atom(lt, "x", "z"))),
        forall(["x", "y"], disj(Eq("x", "y"), atom(lt, "x", "y"), atom(lt, "y", "x"))))


def _extends(new, old, arity):
    xs = tuple(f"x{i}" for i in range(arity))
    return forall(xs, Implies(Atom(old, xs), Atom(new, xs)))


def _diagram(F, xs, lit):
    """Conjunction of lit(symbol, args, holds) over all tuples of F."""
    parts = []
    for name, r in F.sig:
        for t in itertools.product(range(F.n), repeat=r):
            parts.append(lit(name, tuple(xs[i] for i in t), t in F.rels[name]))
    return parts


def _plain(name, args, holds, rename=None):
    a = Atom(rename.get(name, name) if rename else name, args)
    return a if holds else Not(a)


def _twin_inequalities(F, xs):
    # collapsing two non-twins contradicts the diagram, so only twins need x != y
    return [neq(xs[a], xs[b]) for a, b in sorted(tuple(sorted(p)) for p in twins(F))]


def _forbid(F, lit):
    """Universal sentence: no injective copy of F's diagram."""
    xs = [f"x{a}" for a in range(F.n)]
    body = conj(*_diagram(F, xs, lit), *_twin_inequalities(F, xs))
    return forall(xs, Not(body))


# ---------------------------------------------------------------- small catalogue

def dag():
    """Acyclic digraphs: E spans a strict linear order."""
    matrix = conj(_extends("<", "E", 2), _slo("<"))
    return EsoSentence(GRAPH, (("<", 2, "E"),), matrix)


def precol3():
    sig = Signature([("E", 2), ("R'", 1), ("G'", 1), ("B'", 1)])
    cols = ("R", "G", "B")
    clash = conj(*(Not(And((atom(c, "x"), atom(c, "y")))) for c in cols))
    matrix = conj(*(_extends(c, c + "'", 1) for c in cols),
                  forall(["x"], disj(*(atom(c, "x") for c in cols))),
                  forall(["x", "y"], Implies(atom("E", "x", "y"), clash)))
    return EsoSentence(sig, tuple((c, 1, c + "'") for c in cols), matrix)


def kcolor(k):
    """k-colourability: E extends to a complete k-partite graph E1."""
    k = int(k)
    if k < 1:
        raise BadParams("kcolor needs k >= 1")
    e = "E1"
    xs = [f"x{i}" for i in range(k + 1)]
    clique = conj(*(atom(e, a, b) for a, b in itertools.combinations(xs, 2)))
    matrix = conj(
        _extends(e, "E", 2),
        forall(["x"], Not(atom(e, "x", "x"))),
        forall(["x", "y"], Implies(atom(e, "x", "y"), atom(e, "y", "x"))),
        # no induced K1 + K2
        forall(["x", "y", "z"], disj(Not(atom(e, "x", "y")), atom(e, "x", "z"), atom(e, "y", "z"))),
        forall(xs, Not(clique)))
    return EsoSentence(GRAPH, ((e, 2, "E"),), matrix)


def _check_graphs(family, what):
    family = list(family)
    for F in family:
        if not isinstance(F, Structure) or len(F.sig) != 1 or F.sig[0][1] != 2:
            raise BadParams(f"{what} expects structures over one binary symbol")
    return family


def sandwich(forbidden):
    """Sandwich problem for graphs avoiding every member of `forbidden` as induced subgraph.

    Input E (required edges) and N (forbidden edges); E' is the graph sought
    and N' its complement.
    """
    family = _check_graphs(forbidden, "sandwich")
    sig = Signature([("E", 2), ("N", 2)])

    def lit(name, args, holds):
        return Atom("E'" if holds else "N'", args)

    parts = [
        _extends("E'", "E", 2),
        _extends("N'", "N", 2),
        forall(["x", "y"], Iff(atom("N'", "x", "y"), Not(atom("E'", "x", "y")))),
        forall(["x"], atom("N'", "x", "x")),
        forall(["x", "y"], Or((atom("N'", "x", "y"), atom("E'", "y", "x")))),
    ]
    parts += [_forbid(F, lit) for F in family]
    return EsoSentence(sig, (("E'", 2, "E"), ("N'", 2, "N")), conj(*parts))


def orient(forbidden):
    """Orientation completion avoiding every oriented graph in `forbidden`."""
    family = _check_graphs(forbidden, "orient")
    sig = Signature([("E", 2), ("A'", 2)])

    def lit(name, args, holds):
        return _plain("A", args, holds)

    parts = [
        _extends("A", "A'", 2),
        forall(["x", "y"], Iff(Or((atom("A", "x", "y"), atom("A", "y", "x"))), atom("E", "x", "y"))),
        forall(["x", "y"], Not(And((atom("A", "x", "y"), atom("A", "y", "x"))))),
    ]
    parts += [_forbid(F, lit) for F in family]
    return EsoSentence(sig, (("A", 2, "A'"),), conj(*parts))


def _successor(a, b, taken):
    z = _fresh("z", taken)
    between = And((atom("<", a, z), atom("<", z, b)))
    return And((atom("<", a, b), Forall((z,), Implies(between, Or((Eq(z, a), Eq(z, b)))))))


def _expand_successor(f, taken):
    if isinstance(f, Atom):
        if f.sym == "s":
            return _successor(f.args[0], f.args[1], taken)
        return f
    if isinstance(f, (Eq, Const)):
        return f
    if isinstance(f, Not):
        return Not(_expand_successor(f.body, taken))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_expand_successor(c, taken) for c in f.args))
    if isinstance(f, (Implies, Iff)):
        return type(f)(_expand_successor(f.left, taken), _expand_successor(f.right, taken))
    return type(f)(f.vars, _expand_successor(f.body, taken))


def cts(phi, alphabet):
    """Constraint topological sorting for the word property phi.

    phi is a sentence over the letters (unary), `<` and optionally the
    successor `s`, which is expanded through its first-order definition.
    """
    letters = [str(a) for a in alphabet]
    if not letters or len(set(letters)) != len(letters):
        raise BadParams("cts needs a nonempty alphabet of distinct letters")
    if set(letters) & {"E", "<", "s"}:
        raise BadParams("letters may not be named E, < or s")
    if isinstance(phi, EsoSentence):
        phi = phi.matrix
    allowed = set(letters) | {"<", "s"}
    extra = symbols(phi) - allowed
    if extra:
        raise NonOrderSignature(f"symbols {sorted(extra)} are outside the letters and <")
    if free_vars(phi):
        raise UnboundVariable("the word property must be a sentence")
    sig = Signature([("E", 2)] + [(a, 1) for a in letters])
    taken = {"x", "y"} | all_vars(phi)
    one_letter = forall(["x"], conj(
        disj(*(atom(a, "x") for a in letters)),
        *(Not(And((atom(a, "x"), atom(b, "x")))) for a, b in itertools.combinations(letters, 2))))
    matrix = conj(_extends("<", "E", 2), _slo("<"), one_letter, _expand_successor(phi, taken))
    return EsoSentence(sig, (("<", 2, "E"),), matrix)


# ---------------------------------------------------------------- CSP encodings

def _primed_names(sig):
    taken = set(sig.names)
    return {name: _fresh(name + "'", taken) for name in sig.names}


def _full_part(B, ren):
    bounds = full_csp_bounds(B)

    def lit(name, args, holds):
        return _plain(name, args, holds, ren)

    return [_forbid(F, lit) for F in bounds]


def csp_full(B):
    """Structures with a full homomorphism to B, forbidding its minimal bounds."""
    return EsoSentence(B.sig, (), conj(*_full_part(B, None)))


def csp(B):
    """CSP(B): some extension of the input maps fully to B."""
    ren = _primed_names(B.sig)
    parts = [_extends(ren[name], name, r) for name, r in B.sig]
    parts += _full_part(B, ren)
    ex = tuple((ren[name], r, name) for name, r in B.sig)
    return EsoSentence(B.sig, ex, conj(*parts))


def surj_csp(B):
    """Surjective CSP(B): as csp(B), plus a copy of B's diagram in the extension."""
    base = csp(B)
    ren = {ext: name for name, _, ext in base.existentials}
    xs = [f"u{b}" for b in range(B.n)]

    def lit(name, args, holds):
        return _plain(name, args, holds, ren)

    copy = exists(xs, conj(*_diagram(B, xs, lit), *_twin_inequalities(B, xs)))
    return EsoSentence(base.sig, base.existentials, conj(base.matrix, copy))


# ---------------------------------------------------------------- graph isomorphism completion

GI_SIG = Signature([("U1", 1), ("U2", 1), ("E", 2), ("I'", 2)])


def gi():
    iso = conj(
        forall(["x", "y"], Implies(atom("I", "x", "y"), And((atom("U1", "x"), atom("U2", "y"))))),
        forall(["x", "y", "z"], Implies(And((atom("I", "x", "y"), atom("I", "x", "z"))), Eq("y", "z"))),
        forall(["x", "y", "z"], Implies(And((atom("I", "y", "x"), atom("I", "z", "x"))), Eq("y", "z"))),
        forall(["x"], Implies(atom("U1", "x"), Exists(("y",), atom("I", "x", "y")))),
        forall(["x"], Implies(atom("U2", "x"), Exists(("y",), atom("I", "y", "x")))),
        forall(["x1", "x2", "y1", "y2"], Implies(
            And((atom("I", "x1", "x2"), atom("I", "y1", "y2"))),
            Iff(atom("E", "x1", "y1"), atom("E", "x2", "y2")))))
    graphs = conj(
        forall(["x"], Not(And((atom("U1", "x"), atom("U2", "x"))))),
        forall(["x"], Not(atom("E", "x", "x"))),
        forall(["x", "y"], Implies(atom("E", "x", "y"), atom("E", "y", "x"))),
        forall(["x", "y"], Implies(atom("E", "x", "y"), Or((
            And((atom("U1", "x"), atom("U1", "y"))), And((atom("U2", "x"), atom("U2", "y"))))))))
    return EsoSentence(GI_SIG, (("I", 2, "I'"),), conj(_extends("I", "I'", 2), iso, graphs))


@dataclass(frozen=True)
class GiInstance:
    G: Structure
    H: Structure
    partial: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "partial", tuple(sorted(dict(self.partial).items())))


def _is_graph(G):
    if G.sig != GRAPH:
        return False
    E = G.rels["E"]
    return all(a != b and (b, a) in E for a, b in E)


def _partial_iso(G, H, pairs):
    m = dict(pairs)
    if len(set(m.values())) != len(m):
        return False
    if any(not 0 <= a < G.n or not 0 <= b < H.n for a, b in m.items()):
        return False
    for a, c in itertools.product(m, repeat=2):
        if ((a, c) in G.rels["E"]) != ((m[a], m[c]) in H.rels["E"]):
            return False
    return True


GI_NO = GiInstance(Structure(GRAPH, 1, {}), Structure(GRAPH, 2, {"E": [(0, 1), (1, 0)]}))
GI_YES = GiInstance(Structure(GRAPH, 1, {}), Structure(GRAPH, 1, {}))


def build_gi_instance(inst):
    if not (_is_graph(inst.G) and _is_graph(inst.H)):
        inst = GI_NO
    G, H = inst.G, inst.H
    shift = G.n
    rels = {
        "U1": [(a,) for a in range(G.n)],
        "U2": [(shift + b,) for b in range(H.n)],
        "E": list(G.rels["E"]) + [(shift + a, shift + b) for a, b in H.rels["E"]],
        "I'": [(a, shift + b) for a, b in inst.partial],
    }
    return Structure(GI_SIG, G.n + H.n, rels)


def reverse_gi(A):
    """Problem instance equivalent to A, or a fixed instance when A is malformed."""
    U1 = sorted(a for (a,) in A.rels["U1"])
    U2 = sorted(a for (a,) in A.rels["U2"])
    E = A.rels["E"]
    if set(U1) & set(U2):
        return GI_NO
    side = {a: 1 for a in U1}
    side.update({a: 2 for a in U2})
    for a, b in E:
        if a == b or (b, a) not in E or side.get(a) is None or side.get(a) != side.get(b):
            return GI_NO
    gi_index = {a: i for i, a in enumerate(U1)}
    hi_index = {b: i for i, b in enumerate(U2)}
    pairs = list(A.rels["I'"])
    if any(a not in gi_index or b not in hi_index for a, b in pairs):
        return GI_NO
    if not U1 and not U2:
        return GI_YES
    if not U1 or not U2:
        return GI_NO
    if len({a for a, _ in pairs}) != len(pairs):
        return GI_NO
    G = substructure(A, U1).reduct(["E"])
    H = substructure(A, U2).reduct(["E"])
    partial = tuple((gi_index[a], hi_index[b]) for a, b in pairs)
    if not _partial_iso(G, H, partial):
        return GI_NO
    return GiInstance(G, H, partial)


# ---------------------------------------------------------------- monotone dualization

@dataclass(frozen=True)
class MonotoneCnf:
    varCount: int
    clauses: tuple

    def __post_init__(self):
        clauses = tuple(tuple(sorted(set(int(v) for v in c))) for c in self.clauses)
        for c in clauses:
            if not c:
                raise BadParams("monotone CNF clauses must be nonempty")
            if c[0] < 0 or c[-1] >= self.varCount:
                raise BadParams(f"clause {c} uses a variable outside 0..{self.varCount - 1}")
        object.__setattr__(self, "clauses", clauses)

    def variables(self):
        return sorted({v for c in self.clauses for v in c})

    def value(self, bits):
        return all(any(bits[v] for v in c) for c in self.clauses)

    def dual_value(self, bits):
        """Value of the dual DNF (conjunction and disjunction swapped)."""
        return any(all(bits[v] for v in c) for c in self.clauses)


MD_SIG = Signature([("U1'", 1), ("Uf", 1), ("Ug", 1), ("C", 2), ("EQ", 2)])
MD_NONDUAL = (MonotoneCnf(2, ((0, 1),)), MonotoneCnf(2, ((0, 1),)))
MD_DUAL = (MonotoneCnf(1, ((0,),)), MonotoneCnf(1, ((0,),)))


def _equivalence(r):
    return conj(
        forall(["x"], atom(r, "x", "x")),
        forall(["x", "y"], Implies(atom(r, "x", "y"), atom(r, "y", "x"))),
        forall(["x", "y", "z"], Implies(And((atom(r, "x", "y"), atom(r, "y", "z"))), atom(r, "x", "z"))))


def _mdual_rho():
    f, g = atom("Uf", "x"), atom("Ug", "x")
    return conj(
        forall(["x"], And((Or((f, g)), Not(And((f, g)))))),
        forall(["x", "y"], Implies(atom("C", "x", "y"), Or((
            And((atom("Uf", "x"), atom("Uf", "y"))), And((atom("Ug", "x"), atom("Ug", "y"))))))),
        forall(["x"], Implies(atom("Uf", "x"),
                              Exists(("y",), And((atom("EQ", "x", "y"), atom("Ug", "y")))))),
        forall(["x"], Implies(atom("Ug", "x"),
                              Exists(("y",), And((atom("EQ", "x", "y"), atom("Uf", "y")))))))


def _mdual_delta_frame():
    return conj(_equivalence("C"), _equivalence("EQ"))


def mdual():
    """Non-duality of two monotone CNFs: some evaluation separates the dual of the first from the second."""
    delta = conj(_mdual_delta_frame(),
                 forall(["x", "y"], Implies(atom("EQ", "x", "y"), Iff(atom("U1", "x"), atom("U1", "y")))))
    true_d = Exists(("x",), And((atom("Uf", "x"), Forall(("y",), Implies(
        And((atom("Uf", "y"), atom("C", "x", "y"))), atom("U1", "y"))))))
    true_c = Forall(("x",), Implies(atom("Ug", "x"), Exists(("y",), conj(
        atom("Ug", "y"), atom("C", "x", "y"), atom("U1", "y")))))
    split = Or((And((true_d, Not(true_c))), And((Not(true_d), true_c))))
    matrix = conj(_extends("U1", "U1'", 1), _mdual_rho(), delta, split)
    return EsoSentence(MD_SIG, (("U1", 1, "U1'"),), matrix)


def build_mdual_instance(phi, psi):
    if phi.varCount != psi.varCount or phi.variables() != psi.variables():
        raise VariableMismatch("both formulas must use the same variables")
    if not phi.clauses:
        raise BadParams("formulas without clauses have no occurrences to encode")
    occ = []
    for side, cnf in (("f", phi), ("g", psi)):
        for ci, c in enumerate(cnf.clauses):
            for v in c:
                occ.append((side, ci, v))
    n = len(occ)
    rels = {
        "U1'": [],
        "Uf": [(i,) for i, o in enumerate(occ) if o[0] == "f"],
        "Ug": [(i,) for i, o in enumerate(occ) if o[0] == "g"],
        "C": [(i, j) for i in range(n) for j in range(n) if occ[i][:2] == occ[j][:2]],
        "EQ": [(i, j) for i in range(n) for j in range(n) if occ[i][2] == occ[j][2]],
    }
    return Structure(MD_SIG, n, rels)


def _classes(n, rel):
    out, seen = [], set()
    for a in range(n):
        if a in seen:
            continue
        cls = sorted(b for b in range(n) if (a, b) in rel)
        seen.update(cls)
        out.append(cls)
    return out


def _nondual(phi_clauses, psi_clauses, free):
    for bits in itertools.product((0, 1), repeat=len(free)):
        val = dict(zip(free, bits))
        d = any(all(val[v] for v in c) for c in phi_clauses)
        g = all(any(val[v] for v in c) for c in psi_clauses)
        if d != g:
            return True
    return False


def reverse_mdual(A):
    """Pair (phi, psi) with A satisfying the sentence iff psi is not the dual of phi."""
    frame = conj(_mdual_rho(), _mdual_delta_frame())
    if not eval_fo(frame, A):
        # A fails the sentence, so the answer must be a dual pair
        return MD_DUAL
    eq = _classes(A.n, A.rels["EQ"])
    var_of = {a: i for i, cls in enumerate(eq) for a in cls}
    forced = {var_of[a] for (a,) in A.rels["U1'"]}
    free = [v for v in range(len(eq)) if v not in forced]
    index = {v: i for i, v in enumerate(free)}
    phi, psi = [], []
    for cls in _classes(A.n, A.rels["C"]):
        vs = sorted({var_of[a] for a in cls})
        if (cls[0],) in A.rels["Uf"]:
            # the first formula is read through its dual: a true variable leaves its monomial
            phi.append([v for v in vs if v not in forced])
        elif not set(vs) & forced:
            psi.append(vs)
    if free and all(phi):
        return (MonotoneCnf(len(free), tuple(tuple(index[v] for v in c) for c in phi)),
                MonotoneCnf(len(free), tuple(tuple(index[v] for v in c) for c in psi)))
    # degenerate restriction: decide it and hand back a fixed pair
    return MD_NONDUAL if _nondual(phi, psi, free) else MD_DUAL


# ---------------------------------------------------------------- Henson tournaments

def henson(n):
    """The tournament on n >= 5 vertices from the Henson set (0-based labels)."""
    n = int(n)
    if n < 5:
        raise BadParams("henson needs n >= 5")
    edges = {(0, n - 1)}
    edges |= {(i, i + 1) for i in range(n - 1)}
    edges |= {(j, i) for i in range(n) for j in range(i + 2, n) if (j, i) != (n - 1, 0)}
    return Structure(GRAPH, n, {"E": sorted(edges)})


# ---------------------------------------------------------------- instance helpers

def sandwich_instance(required, allowed):
    """(E, N) instance: E the required edges, N the non-edges of `allowed`."""
    if required.n != allowed.n:
        raise BadParams("both graphs need the same vertex set")
    n = required.n
    non = [(a, b) for a in range(n) for b in range(n) if a != b and (a, b) not in allowed.rels["E"]]
    return Structure([("E", 2), ("N", 2)], n, {"E": list(required.rels["E"]), "N": non})


def orient_instance(G, arcs=()):
    return Structure([("E", 2), ("A'", 2)], G.n, {"E": list(G.rels["E"]), "A'": list(arcs)})


def precol3_instance(G, colouring=None):
    colouring = colouring or {}
    rels = {"E": list(G.rels["E"]), "R'": [], "G'": [], "B'": []}
    for v, c in colouring.items():
        rels[c + "'"].append((v,))
    return Structure(precol3().sig, G.n, rels)


PROBLEMS = {
    "dag": dag,
    "precol3": precol3,
    "kcolor": kcolor,
    "sandwich": sandwich,
    "orient": orient,
    "cts": cts,
    "csp": csp,
    "csp_full": csp_full,
    "surj_csp": surj_csp,
    "gi": gi,
    "mdual": mdual,
    "henson": henson,
}


def encode(problem, **params):
    try:
        build = PROBLEMS[problem]
    except KeyError:
        raise BadParams(f"unknown problem {problem!r}; known: {', '.join(PROBLEMS)}") from None
    try:
        return build(**params)
    except TypeError as exc:
        raise BadParams(f"{problem}: {exc}") from None
