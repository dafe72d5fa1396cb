import itertools
import random

import pytest

import oracles
from sentences import DAG, KCOLOR2, PRECOL3, TWOCOLOR_PLAIN
from artifact.errors import BudgetExceeded, NotExtensional, OracleInconsistent, SignatureMismatch
from artifact.eval import eval_fo
from artifact.logic import parse_formula, parse_sentence
from artifact.relcore import Signature, Structure, enumerate_structures
from artifact.solver import (decide_csp_universal, decide_ext_eso, extract_witness, forb_member,
                             self_reduce_step, witness_holds)

E = Signature([("E", 2)])
dag = parse_sentence(DAG)
kcolor2 = parse_sentence(KCOLOR2)
precol3 = parse_sentence(PRECOL3)
plain2 = parse_sentence(TWOCOLOR_PLAIN)
STRATEGIES = ["bruteforce", "backtrack", "selfreduce"]


def digraph(n, edges):
    return Structure(E, n, {"E": edges})


def k3(**colours):
    rels = {"E": [(a, b) for a in range(3) for b in range(3) if a != b]}
    rels.update(colours)
    return Structure(precol3.sig, 3, rels)


def random_structure(rng, sig, n, p=0.3):
    rels = {}
    for name, arity in sig:
        rels[name] = [t for t in itertools.product(range(n), repeat=arity) if rng.random() < p]
    return Structure(sig, n, rels)


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_dag_examples(strategy):
    assert decide_ext_eso(dag, digraph(3, [(0, 1), (1, 2)]), strategy).accepted
    assert not decide_ext_eso(dag, digraph(3, [(0, 1), (1, 2), (2, 0)]), strategy).accepted


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_precol3_examples(strategy):
    assert decide_ext_eso(precol3, k3(**{"R'": [(0,)], "G'": [(1,)], "B'": [(2,)]}), strategy).accepted
    assert not decide_ext_eso(precol3, k3(**{"R'": [(0,), (1,)]}), strategy).accepted


def test_dag_witness_is_the_path_order():
    v = decide_ext_eso(dag, digraph(3, [(0, 1), (1, 2)]))
    assert v.witness.assigned["<"] == {(0, 1), (1, 2), (0, 2)}


@pytest.mark.parametrize("psi", [dag, kcolor2], ids=["dag", "kcolor2"])
def test_against_brute_force_semantics(psi):
    rng = random.Random(7)
    cases = list(enumerate_structures(E, 2))
    cases += rng.sample(list(enumerate_structures(E, 3))[-512:], 40)
    for A in cases:
        expected = oracles.eso_holds(psi, A)
        for strategy in STRATEGIES:
            v = decide_ext_eso(psi, A, strategy)
            assert v.accepted == expected, (A, strategy)
            if v.accepted:
                assert witness_holds(psi, v)


def test_precol3_against_brute_force_semantics():
    rng = random.Random(3)
    for _ in range(60):
        A = random_structure(rng, precol3.sig, rng.randint(1, 3))
        expected = oracles.eso_holds(precol3, A)
        for strategy in STRATEGIES:
            assert decide_ext_eso(precol3, A, strategy).accepted == expected


def test_plain_existentials_searched_freely():
    for A in enumerate_structures(E, 3):
        expected = oracles.colorable(A.n, A.rels["E"], 2)
        assert decide_ext_eso(plain2, A, "bruteforce").accepted == expected
        assert decide_ext_eso(plain2, A, "backtrack").accepted == expected
    with pytest.raises(NotExtensional):
        decide_ext_eso(plain2, digraph(2, []), "selfreduce")


@pytest.mark.parametrize("psi", [dag, kcolor2, plain2], ids=["dag", "kcolor2", "plain2"])
def test_strategies_agree_exhaustively(psi):
    strategies = STRATEGIES if psi is not plain2 else STRATEGIES[:2]
    for A in enumerate_structures(E, 3):
        verdicts = [decide_ext_eso(psi, A, s) for s in strategies]
        assert len({v.accepted for v in verdicts}) == 1, A
        if verdicts[0].accepted:
            # the two slot-order searches find the same lexicographically first witness
            assert verdicts[0].witness == verdicts[1].witness
            for v in verdicts:
                assert witness_holds(psi, v)


def test_auto_strategy_switches_to_backtracking():
    A = digraph(5, [(i, i + 1) for i in range(4)])
    v = decide_ext_eso(dag, A)
    assert "nodes" in v.stats
    assert witness_holds(dag, v)


def test_budget():
    A = digraph(5, [])
    with pytest.raises(BudgetExceeded):
        decide_ext_eso(dag, A, "bruteforce", budget=1000)
    with pytest.raises(BudgetExceeded):
        decide_ext_eso(kcolor2, digraph(5, [(i, (i + 1) % 5) for i in range(5)]), "selfreduce", budget=10)


def test_selfreduce_prunes_dead_states():
    # the odd cycle has no 2-colouring; branching on falsified clauses settles it quickly
    v = decide_ext_eso(kcolor2, digraph(5, [(i, (i + 1) % 5) for i in range(5)]), "selfreduce")
    assert not v.accepted and v.stats["nodes"] < 1000


def test_signature_must_match():
    with pytest.raises(SignatureMismatch):
        decide_ext_eso(dag, Structure([("F", 2)], 2, {}))


def test_self_reduce_base_case():
    assert self_reduce_step(dag, digraph(2, [(0, 1)])) == ("decided", True)


def test_self_reduce_four_successors():
    kind, succ = self_reduce_step(dag, digraph(2, []))
    assert kind == "successors"
    assert [sorted(S.rels["E"]) for S in succ] == [[(0, 0)], [(0, 1)], [(1, 0)], [(1, 1)]]


def test_self_reduce_saturated_rejects():
    full = [(a, b) for a in range(2) for b in range(2)]
    assert self_reduce_step(dag, digraph(2, full)) == ("decided", False)


def test_successors_grow_primed_relations():
    for A in enumerate_structures(E, 2):
        kind, payload = self_reduce_step(kcolor2, A)
        if kind == "successors":
            for S in payload:
                assert S.rels["E"] > A.rels["E"] and len(S.rels["E"]) == len(A.rels["E"]) + 1


def test_selfreduce_chain_is_monotone():
    for A in enumerate_structures(E, 3):
        v = decide_ext_eso(dag, A, "selfreduce")
        if v.accepted:
            assert len(v.chain) <= A.n ** 2 + 1
            for a, b in zip(v.chain, v.chain[1:]):
                assert a.rels["E"] < b.rels["E"] and len(b.rels["E"] - a.rels["E"]) == 1


def test_extract_witness_base_case():
    A = digraph(2, [(0, 1)])
    assert extract_witness(dag, A) == [A]


def test_extract_witness_path():
    A = digraph(3, [(0, 1), (1, 2)])
    chain = extract_witness(dag, A)
    last = chain[-1]
    assert last.rels["E"] == {(0, 1), (1, 2), (0, 2)}
    expansion = Structure(dag.full_sig, 3, {"E": last.rels["E"], "<": last.rels["E"]})
    assert eval_fo(dag.matrix, expansion)


def test_extract_witness_counts_oracle_calls():
    calls = []

    def oracle(B):
        calls.append(B)
        return decide_ext_eso(dag, B).accepted

    A = digraph(3, [])
    chain = extract_witness(dag, A, oracle)
    assert chain[0] == A and len(chain) == 4
    assert len(calls) <= (A.n ** 2) * len(chain)


def test_extract_witness_rejected():
    assert extract_witness(dag, digraph(2, [(0, 1), (1, 0)])) is None


def test_extract_witness_broken_oracles():
    with pytest.raises(OracleInconsistent):
        extract_witness(dag, digraph(2, [(0, 1)]), lambda B: False)
    A = digraph(2, [])
    with pytest.raises(OracleInconsistent):
        extract_witness(dag, A, lambda B: B == A)


def test_extract_witness_chains_verify():
    for A in enumerate_structures(E, 3):
        chain = extract_witness(kcolor2, A)
        if chain is None:
            continue
        last = chain[-1]
        expansion = Structure(kcolor2.full_sig, A.n, {"E": last.rels["E"], "E1": last.rels["E"]})
        assert eval_fo(kcolor2.matrix, expansion)


LT = Signature([("<", 2)])
SLO = parse_formula("""
(and (forall (x) (not (< x x)))
     (forall (x y z) (implies (and (< x y) (< y z)) (< x z)))
     (forall (x y) (or (= x y) (< x y) (< y x))))""", LT)


def test_csp_universal_examples():
    v = decide_csp_universal(SLO, Structure(LT, 3, {"<": [(0, 1), (1, 2)]}))
    assert v.accepted
    B, m = v.witness
    assert B.n == 3 and eval_fo(SLO, B)
    assert not decide_csp_universal(parse_formula("(forall (x) (not (E x x)))", E),
                                    digraph(1, [(0, 0)])).accepted
    assert decide_csp_universal(SLO, Structure(LT, 3, {})).accepted


def test_csp_universal_matches_acyclicity():
    for A in enumerate_structures(LT, 3):
        assert decide_csp_universal(SLO, A).accepted == (not oracles.has_cycle(A.n, A.rels["<"]))


def test_forb_member_examples():
    tri = Structure(E, 3, {"E": [(a, b) for a in range(3) for b in range(3) if a != b]})
    k4 = Structure(E, 4, {"E": [(a, b) for a in range(4) for b in range(4) if a != b]})
    for mode in ("direct", "selfreduce"):
        assert forb_member([tri], k4, mode).accepted
        assert forb_member([tri], tri, mode).accepted
        assert not forb_member([tri], digraph(3, [(0, 1), (1, 0)]), mode).accepted
    assert forb_member([tri], tri, "selfreduce").chain == [[0, 1, 2]]


def test_forb_member_modes_agree():
    rng = random.Random(11)
    cyc = digraph(3, [(0, 1), (1, 2), (2, 0)])
    loop = digraph(1, [(0, 0)])
    for _ in range(100):
        A = random_structure(rng, E, rng.randint(1, 5))
        d = forb_member([cyc, loop], A, "direct").accepted
        assert d == forb_member([cyc, loop], A, "selfreduce").accepted
        assert d == any(oracles.embeds(F, A) for F in (cyc, loop))
