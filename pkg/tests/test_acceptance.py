"""Acceptance criteria 1-8, one test per criterion.

Each test prints `CRITERION k: PASS|FAIL ...` as it finishes, and the
summary is repeated at the end of the pytest run.  Runtime targets are part
of each criterion and are asserted.
"""
import functools
import itertools
import random
import sys
import time

import pytest

import oracles as O
from sentences import DAG, INDSET, KCOLOR2, PRECOL3
from artifact import encodings as enc
from artifact.eval import eval_fo, her_check
from artifact.logic import classify, is_universal, parse_formula, parse_sentence
from artifact.relcore import (Signature, Structure, disjoint_union, enumerate_structures,
                              structures_of_size, twin_quotient)
from artifact.solver import decide_csp_universal, decide_ext_eso, extract_witness, forb_member
from artifact.xform import (add_extension_scaffold, blowup_sentence, connectedize, csp_to_snp,
                            exteso_to_herfo, gadget_size, herfo_to_exteso, nt_formula, snp_to_csp)

RESULTS = []
E = Signature([("E", 2)])
EU = Signature([("E", 2), ("U", 1)])


def criterion(k, seconds):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            try:
                detail = fn(*args, **kwargs) or ""
            except BaseException as exc:
                line = f"CRITERION {k}: FAIL ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
                _report(line)
                raise
            took = time.perf_counter() - start
            ok = took < seconds
            status = "PASS" if ok else "FAIL"
            _report(f"CRITERION {k}: {status} ({detail}; {took:.1f} s, target < {seconds} s)")
            assert ok, f"criterion {k} took {took:.1f} s"
        return run
    return wrap


def _report(line):
    RESULTS.append(line)
    sys.__stdout__.write("\n" + line + "\n")
    sys.__stdout__.flush()


def accepts(s, A):
    return decide_ext_eso(s, A).accepted


def rand_structure(rng, sig, n, p):
    rels = {name: [t for t in itertools.product(range(n), repeat=r) if rng.random() < p] for name, r in sig}
    return Structure(sig, n, rels)


class Tally:
    def __init__(self):
        self.count = 0
        self.bad = []

    def check(self, ok, what):
        self.count += 1
        if not ok:
            self.bad.append(what)

    def done(self, label):
        assert not self.bad, f"{len(self.bad)} disagreements, first {self.bad[:3]}"
        return f"{self.count} {label}, 0 disagreements"


# ---------------------------------------------------------------- 1

HER_FORMULAS = [
    "(forall (x y) (implies (E x y) (E y x)))",
    "(forall (x y) (or (= x y) (E x y)))",
    "(exists (x y) (and (E x y) (not (= x y))))",
    "(exists (x y) (and (E x x) (not (E y y))))",
    "(forall (x) (exists (y) (E x y)))",
    "(forall (x) (exists (y) (and (not (= x y)) (not (E x y)))))",
    "(exists (x) (forall (y) (E x y)))",
    "(exists (x) (forall (y) (or (= x y) (not (E y x)))))",
]


@criterion(1, 60)
def test_criterion_1_her_to_ext():
    t = Tally()
    rng = random.Random(1)
    randoms = [rand_structure(rng, E, rng.randint(1, 5), rng.choice([0.2, 0.4, 0.6])) for _ in range(200)]
    structures = list(enumerate_structures(E, 3)) + randoms
    for text in HER_FORMULAS:
        phi = parse_formula(text, E)
        red = herfo_to_exteso(phi, E)
        for A in structures:
            t.check(her_check(phi, A).member == (not accepts(red.outSentence, red.forward(A))), (text, A))
    return t.done(f"pairs over {len(HER_FORMULAS)} formulas")


# ---------------------------------------------------------------- 2

@criterion(2, 300)
def test_criterion_2_ext_to_her():
    t = Tally()
    for text in (DAG, KCOLOR2, PRECOL3):
        psi = parse_sentence(text)
        red = exteso_to_herfo(psi)
        for n in (1, 2, 3):
            # precol3 at n = 3 runs over isomorphism classes (44736 of 262144 labelled structures)
            for A in structures_of_size(psi.sig, n, upToIso=(text is PRECOL3 and n == 3)):
                B = red.forward(A)
                t.check(accepts(psi, A) == (not her_check(red.outSentence, B).member), ("fwd", A))
                t.check(red.reverse(B) == A, ("roundtrip", A))
        rng = random.Random(2)
        rho = red.info["rho"]
        for _ in range(100):
            B = rand_structure(rng, rho, rng.randint(1, 8), rng.choice([0.01, 0.03, 0.08]))
            t.check(accepts(psi, red.reverse(B)) == (not her_check(red.outSentence, B).member), ("rev", B))
    return t.done("checks")


# ---------------------------------------------------------------- 3

@criterion(3, 60)
def test_criterion_3_gadget():
    indset = parse_sentence(INDSET)
    red = exteso_to_herfo(indset)
    cycle = [(0, 1), (1, 2), (2, 3), (3, 0)]
    A = Structure(indset.sig, 4, {"R": cycle + [(b, a) for a, b in cycle], "U'": [(1,), (2,)]})
    B = red.forward(A)
    info = red.info
    sU, D, Eg, lt = info["S"]["U"], info["D"], info["E"], info["lt"]
    assert B.n == 6
    assert len(B.rels[sU]) == 2
    assert B.rels[Eg] == {(0, 1), (1, 2), (2, 3), (3, 0)}
    dom = sorted(a for (a,) in B.rels[D])
    assert B.rels[lt] == {(a, b) for a in dom for b in dom if a < b}
    rng = random.Random(3)
    sentences = [indset, parse_sentence(DAG), parse_sentence(PRECOL3), parse_sentence(KCOLOR2)]
    for i in range(20):
        psi = sentences[i % len(sentences)]
        X = rand_structure(rng, psi.sig, rng.randint(1, 4), 0.3)
        law = X.n + sum(X.n ** r - len(X.rels[e]) for _, r, e in psi.existentials)
        assert exteso_to_herfo(psi).forward(X).n == law == gadget_size(X, psi)
    return "gadget shape exact, size law on 20 instances"


# ---------------------------------------------------------------- 4

@criterion(4, 120)
def test_criterion_4_csp_snp():
    t = Tally()
    k2 = enc.kcolor(2)
    out = snp_to_csp(k2).outSentence
    assert is_universal(out)
    graphs = [O.graph(n, [e for b, e in zip(m, O.undirected_pairs(n)) if b])
              for n in range(1, 5) for m in itertools.product((0, 1), repeat=n * (n - 1) // 2)]
    for G in graphs:
        t.check(decide_csp_universal(out, G).accepted == O.bipartite(G.n, G.rels["E"]), G)
    slo = parse_formula("""(and (forall (x) (not (E x x)))
                               (forall (x y z) (implies (and (E x y) (E y z)) (E x z)))
                               (forall (x y) (or (= x y) (E x y) (E y x))))""", E)
    Psi = csp_to_snp(slo, E).outSentence
    rep = classify(Psi)
    assert rep.isSNP and rep.isExtensional and rep.isMonotone
    dag = enc.dag()
    for A in enumerate_structures(E, 3):
        t.check(accepts(Psi, A) == accepts(dag, A), A)
    return t.done("instances")


# ---------------------------------------------------------------- 5

BOUND_SETS = [
    [Structure(E, 1, {"E": [(0, 0)]})],
    [O.graph(3, [(0, 1), (1, 2), (0, 2)])],
    [Structure(E, 2, {"E": [(0, 1)]}), Structure(E, 1, {"E": [(0, 0)]})],
    [O.graph(2, [(0, 1)]), Structure(E, 2, {"E": [(0, 1), (1, 1)]})],
]


@criterion(5, 120)
def test_criterion_5_blowups():
    t = Tally()
    nt = nt_formula(EU)
    for A in enumerate_structures(EU, 3):
        for a, b in itertools.product(range(A.n), repeat=2):
            t.check(eval_fo(nt, A, {"x": a, "y": b}) == (not O.twin_pair(A, a, b)), (A, a, b))
    for bounds in BOUND_SETS:
        s = blowup_sentence(bounds)
        for A in enumerate_structures(E, 3):
            Q = O.quotient(A)
            t.check(eval_fo(s, A) == (not any(O.embeds(F, Q) for F in bounds)), (bounds, A))
    for A in enumerate_structures(E, 4):
        Q = twin_quotient(A)[0]
        t.check(twin_quotient(Q)[0] == Q, A)
    return t.done("checks")


# ---------------------------------------------------------------- 6

K3 = O.graph(3, [(0, 1), (1, 2), (0, 2)])
DC3 = O.graph(3, [(0, 1), (1, 2), (2, 0)], symmetric=False)


def _graphs(n):
    pairs = O.undirected_pairs(n)
    for m in itertools.product((0, 1), repeat=len(pairs)):
        yield [e for b, e in zip(m, pairs) if b]


def _partials(n):
    for k in range(n + 1):
        for dom in itertools.combinations(range(n), k):
            for img in itertools.permutations(range(n), k):
                yield dict(zip(dom, img))


def _csp_templates():
    seen, out = set(), []
    for n in (1, 2):
        for B in O.labeled(E, n):
            if O.canon(B) not in seen:
                seen.add(O.canon(B))
                out.append(B)
    return out + [K3, DC3, O.graph(3, [(0, 1), (1, 2)]), Structure(E, 3, {"E": [(0, 1), (1, 2), (2, 2)]})]


@criterion(6, 600)
def test_criterion_6_encodings():
    t = Tally()
    for k in (2, 3):
        s = enc.kcolor(k)
        for n in range(1, 6):
            for edges in _graphs(n):
                t.check(accepts(s, O.graph(n, edges)) == O.colorable(n, edges, k), ("kcolor", k, edges))
    dag = enc.dag()
    for n in range(1, 5):
        # every labelled digraph up to 3 vertices, isomorphism classes at 4
        for A in structures_of_size(E, n, upToIso=(n == 4)):
            t.check(accepts(dag, A) == (not O.has_cycle(n, A.rels["E"])), ("dag", A))
    s = enc.sandwich([K3])
    for n in range(1, 5):
        for E1 in _graphs(n):
            for E2 in _graphs(n):
                A = enc.sandwich_instance(O.graph(n, E1), O.graph(n, E2))
                t.check(accepts(s, A) == O.sandwich_k3(E1, E2), ("sandwich", E1, E2))
    s = enc.orient([DC3])
    for n in range(1, 5):
        for G in O.graphs_up_to_iso(n):
            es = sorted((a, b) for a, b in G.rels["E"] if a < b)
            for choice in itertools.product((None, 0, 1), repeat=len(es)):
                fixed = [(a, b) if c == 0 else (b, a) for c, (a, b) in zip(choice, es) if c is not None]
                want = any(not O.embeds(DC3, O.graph(n, arcs, symmetric=False))
                           for arcs in O.orientations(n, G.rels["E"], fixed))
                t.check(accepts(s, enc.orient_instance(G, fixed)) == want, ("orient", G, fixed))
    s = enc.gi()
    rng = random.Random(6)
    for n in range(1, 5):
        classes = O.graphs_up_to_iso(n)
        for G, H in itertools.product(classes, repeat=2):
            partials = list(_partials(n)) if n <= 3 else [{}] + [
                dict(zip(rng.sample(range(n), k), rng.sample(range(n), k))) for k in (1, 2, 2, 3)]
            for p in partials:
                inst = enc.GiInstance(G, H, p)
                t.check(accepts(s, enc.build_gi_instance(inst)) == O.iso_extends(G, H, p), ("gi", inst))
    s = enc.mdual()
    for n in range(1, 4):
        clauses = [c for r in range(1, n + 1) for c in itertools.combinations(range(n), r)]
        cnfs = [c for k in (1, 2, 3) for c in itertools.combinations(clauses, k)]
        for phi in cnfs:
            used = {v for c in phi for v in c}
            for psi in cnfs:
                if {v for c in psi for v in c} == used:
                    A = enc.build_mdual_instance(enc.MonotoneCnf(n, phi), enc.MonotoneCnf(n, psi))
                    t.check(accepts(s, A) == (not O.is_dual(phi, psi, n)), ("mdual", phi, psi))
    inputs = list(enumerate_structures(E, 2)) + list(structures_of_size(E, 3, upToIso=True))
    rng = random.Random(7)
    inputs += [rand_structure(rng, E, 4, rng.choice([0.15, 0.3, 0.5])) for _ in range(40)]
    for B in _csp_templates():
        builders = {"hom": enc.csp(B), "full": enc.csp_full(B), "surjective-hom": enc.surj_csp(B)}
        for A in inputs:
            for kind, s in builders.items():
                t.check(accepts(s, A) == (O.first_morphism(A, B, kind) is not None), (kind, B, A))
    return t.done("instances")


# ---------------------------------------------------------------- 7

@criterion(7, 180)
def test_criterion_7_self_reduction():
    t = Tally()
    strategies = ("bruteforce", "backtrack", "selfreduce")
    sentences = [parse_sentence(x) for x in (DAG, KCOLOR2, INDSET, PRECOL3)]
    for psi in sentences[:3]:
        for A in enumerate_structures(psi.sig, 3 if psi.sig == E else 2):
            verdicts = {st: decide_ext_eso(psi, A, st).accepted for st in strategies}
            t.check(len(set(verdicts.values())) == 1, (psi.sig, A, verdicts))
    rng = random.Random(8)
    for i in range(200):
        psi = sentences[i % 4]
        n = rng.randint(1, 5)
        A = rand_structure(rng, psi.sig, n, rng.choice([0.1, 0.25]))
        used = strategies if sum(n ** r for _, r, _ in psi.existentials) <= 16 else strategies[1:]
        verdicts = {st: decide_ext_eso(psi, A, st).accepted for st in used}
        t.check(len(set(verdicts.values())) == 1, (i, verdicts))
        if verdicts["backtrack"]:
            chain = extract_witness(psi, A)
            final = chain[-1]
            full = Structure(psi.full_sig, final.n,
                             dict(final.rels, **{name: final.rels[ext] for name, _, ext in psi.existentials}))
            t.check(chain[0] == A and eval_fo(psi.matrix, full), ("witness", i))
    F = [enc.henson(n) for n in range(5, 9)]
    for _ in range(200):
        A = rand_structure(rng, E, rng.randint(1, 6), 0.45)
        t.check(forb_member(F, A, "direct").accepted == forb_member(F, A, "selfreduce").accepted, ("forb", A))
    for n in range(5, 13):
        T = enc.henson(n).rels["E"]
        t.check(all((a, a) not in T for a in range(n)), ("loop", n))
        t.check(all(((a, b) in T) != ((b, a) in T) for a, b in itertools.combinations(range(n), 2)),
                ("tournament", n))
    published = {(1, 5), (1, 2), (2, 3), (3, 4), (4, 5), (3, 1), (4, 1), (4, 2), (5, 2), (5, 3)}
    t.check(enc.henson(5).rels["E"] == {(a - 1, b - 1) for a, b in published}, "henson(5)")
    return t.done("checks")


# ---------------------------------------------------------------- 8

def _two_components(psi, red, A1, A2):
    U = disjoint_union(A1, A2)
    inner = red.info["E'"]
    full = [(a, b) for block in (range(A1.n), range(A1.n, U.n)) for a in block for b in block]
    return Structure(red.outSentence.sig, U.n, dict(U.rels, **{inner: full}))


@criterion(8, 120)
def test_criterion_8_appendix():
    t = Tally()
    for text in (KCOLOR2, INDSET):
        psi = parse_sentence(text)
        red = connectedize(psi)
        rep, before = classify(red.outSentence), classify(psi)
        assert rep.isConnected and rep.isSNP and rep.isExtensional
        assert rep.isMonotone == before.isMonotone
        top = 4 if psi.sig == E else 3
        for A in itertools.chain.from_iterable(structures_of_size(psi.sig, n, upToIso=True)
                                               for n in range(1, top + 1)):
            t.check(accepts(red.outSentence, red.forward(A)) == accepts(psi, A), ("one", A))
        for n1 in (1, 2):
            for n2 in range(n1, 4 - n1 + 1):
                # each component up to isomorphism: the semantics are invariant under relabelling
                for A1 in structures_of_size(psi.sig, n1, upToIso=True):
                    for A2 in structures_of_size(psi.sig, n2, upToIso=True):
                        B = _two_components(psi, red, A1, A2)
                        want = accepts(psi, A1) and accepts(psi, A2)
                        t.check(accepts(red.outSentence, B) == want, ("two", A1, A2))
    plain = parse_sentence("""(signature (E 2))
        (exists2 ((C 1))
          (forall (x y) (implies (E x y) (not (iff (C x) (C y))))))""")
    out = add_extension_scaffold(plain)
    assert classify(out).hasExtensionClauses
    for A in enumerate_structures(E, 3):
        lifted = Structure(out.sig, A.n, dict(A.rels))
        t.check(accepts(out, lifted) == O.eso_holds(plain, A), ("scaffold", A))
    return t.done("checks")
