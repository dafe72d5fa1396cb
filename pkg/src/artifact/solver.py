"""Deciders for extensional ESO sentences and CSPs of universal sentences.

Extension search works over "slots": one per (existential symbol, tuple)
pair.  Slots of an extended symbol whose tuple already lies in the primed
input relation are fixed to true; the rest are free.  Free slots are
ordered by (largest element of the tuple, symbol index, tuple), so that
partial assignments over a prefix of the domain come first.
"""
import itertools
import sys
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import BudgetExceeded, NotExtensional, OracleInconsistent, SignatureMismatch
from .eval import eval_batch, eval_fo
from .logic import And, Atom, Eq, prenex_cnf
from .relcore import Structure, find_morphism, is_isomorphic, structures_of_size, substructure

DEFAULT_BUDGET = 10 ** 6
AUTO_BRUTEFORCE_SLOTS = 16


@dataclass(frozen=True)
class ExtensionState:
    base: Structure
    assigned: dict

    def expansion(self, sentence):
        rels = dict(self.base.rels)
        rels.update(self.assigned)
        return Structure(sentence.full_sig, self.base.n, rels)


@dataclass
class Verdict:
    accepted: bool
    witness: object = None
    chain: list = None
    stats: dict = field(default_factory=dict)


def _slots(psi, A):
    fixed, free = [], []
    for idx, (name, arity, ext) in enumerate(psi.existentials):
        for t in itertools.product(range(A.n), repeat=arity):
            key = (max(t), idx, t)
            if ext is not None and t in A.rels[ext]:
                fixed.append(key)
            else:
                free.append(key)
    free.sort()
    return fixed, free


def _base_tensors(psi, A, batch=1):
    out = {}
    for name, arity, ext in psi.existentials:
        arr = np.zeros((batch,) + (A.n,) * arity, dtype=bool)
        if ext is not None:
            arr[:] = A.tensor(ext)
        out[name] = arr
    return out


def _state(psi, A, tensors, row=0):
    assigned = {}
    for name, arity, _ in psi.existentials:
        assigned[name] = frozenset(tuple(int(x) for x in t) for t in np.argwhere(tensors[name][row]))
    return ExtensionState(A, assigned)


def _conjuncts(matrix):
    return matrix.args if isinstance(matrix, And) else (matrix,)


def _bruteforce(psi, A, budget):
    _, free = _slots(psi, A)
    nfree = len(free)
    if 2 ** nfree > budget:
        raise BudgetExceeded(f"bruteforce needs 2^{nfree} candidates, budget is {budget}")
    names = [e[0] for e in psi.existentials]
    parts = _conjuncts(psi.matrix)
    total = 1 << nfree
    chunk = max(1, min(total, (1 << 22) // max(1, A.n ** 3)))
    weights = np.left_shift(np.int64(1), np.arange(nfree - 1, -1, -1, dtype=np.int64))
    checked = 0
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        bits = (codes[:, None] & weights[None, :]) != 0
        alive = np.arange(len(codes))
        for part in parts:
            tensors = _base_tensors(psi, A, len(alive))
            for j, (_, idx, t) in enumerate(free):
                tensors[names[idx]][(slice(None),) + t] = bits[alive, j]
            ok = np.broadcast_to(eval_batch(part, A, extra=tensors), (len(alive),))
            alive = alive[ok]
            if not len(alive):
                break
        checked += len(codes)
        if len(alive):
            row = int(alive[0])
            tensors = _base_tensors(psi, A, 1)
            for j, (_, idx, t) in enumerate(free):
                tensors[names[idx]][(0,) + t] = bits[row, j]
            return Verdict(True, _state(psi, A, tensors), stats={"candidates": checked})
    return Verdict(False, stats={"candidates": checked})


# ---------------------------------------------------------------- grounded backtracking

class _Template:
    """Universal clauses of a sentence grounded over a domain of size n."""

    def __init__(self, psi, n):
        prefix, clauses = prenex_cnf(psi.matrix)
        universal = {v for q, v in prefix if q == "A"}
        self.complete = all(q == "A" for q, _ in prefix)
        exist = {name: idx for idx, (name, _, _) in enumerate(psi.existentials)}
        self.ground = []
        for clause in clauses:
            vs = []
            for _, a in clause:
                for v in (a.args if isinstance(a, Atom) else (a.left, a.right)):
                    if v not in vs:
                        vs.append(v)
            if not set(vs) <= universal:
                self.complete = False
                continue
            for vals in itertools.product(range(n), repeat=len(vs)):
                env = dict(zip(vs, vals))
                lits = []
                for sign, a in clause:
                    if isinstance(a, Eq):
                        lits.append(("const", sign == (env[a.left] == env[a.right])))
                    elif a.sym in exist:
                        lits.append(("slot", sign, (exist[a.sym], tuple(env[v] for v in a.args))))
                    else:
                        lits.append(("input", sign, a.sym, tuple(env[v] for v in a.args)))
                self.ground.append(lits)


_TEMPLATES = {}


def _template(psi, n):
    key = (psi, n)
    if key not in _TEMPLATES:
        if len(_TEMPLATES) > 64:
            _TEMPLATES.clear()
        _TEMPLATES[key] = _Template(psi, n)
    return _TEMPLATES[key]


def _backtrack(psi, A, budget):
    tpl = _template(psi, A.n)
    fixed, free = _slots(psi, A)
    order = sorted(fixed + free)
    index = {(idx, t): j for j, (_, idx, t) in enumerate(order)}
    cur = np.full(len(order), -1, dtype=np.int64)
    for _, idx, t in fixed:
        cur[index[(idx, t)]] = 1
    free_idx = np.array([index[(idx, t)] for _, idx, t in free], dtype=np.int64)
    fixed_idx = {index[(idx, t)] for _, idx, t in fixed}
    ground = []
    seen = set()
    for lits in tpl.ground:
        out = []
        sat = False
        for lit in lits:
            if lit[0] == "const":
                if lit[1]:
                    sat = True
                    break
            elif lit[0] == "input":
                if (lit[3] in A.rels[lit[2]]) == lit[1]:
                    sat = True
                    break
            else:
                j = index[lit[2]]
                code = 2 * j + (1 if lit[1] else 0)
                if j in fixed_idx:
                    if lit[1]:
                        sat = True
                        break
                    continue
                out.append(code)
        if sat:
            continue
        if not out:
            return Verdict(False, stats={"nodes": 0})
        key = tuple(sorted(set(out)))
        if key in seen:
            continue
        seen.add(key)
        ground.append(key)
    width = max((len(c) for c in ground), default=1)
    ground.sort(key=lambda c: max(x >> 1 for x in c))
    mat = np.full((len(ground), width), -1, dtype=np.int64)
    for i, c in enumerate(ground):
        mat[i, :len(c)] = c
    tops = np.array([max(x >> 1 for x in c) for c in ground], dtype=np.int64)
    bucket_start = np.searchsorted(tops, np.arange(len(order) + 1)).astype(np.int64)
    names = [e[0] for e in psi.existentials]
    nodes = 0
    resume = False
    while True:
        status, used = _kernels.ground_dfs(cur, free_idx, mat, bucket_start, budget - nodes, resume)
        nodes += used
        if status == 2:
            raise BudgetExceeded(f"backtracking exceeded {budget} nodes")
        if status == 1:
            return Verdict(False, stats={"nodes": nodes})
        tensors = _base_tensors(psi, A, 1)
        for j, (_, idx, t) in enumerate(order):
            tensors[names[idx]][(0,) + t] = cur[j] == 1
        if tpl.complete or bool(eval_batch(psi.matrix, A, extra=tensors)[0]):
            return Verdict(True, _state(psi, A, tensors), stats={"nodes": nodes})
        resume = True


# ---------------------------------------------------------------- self-reduction

def _primed_state(psi, A):
    return tuple(A.rels[ext] for _, _, ext in psi.existentials)


def _require_extended(psi):
    for name, _, ext in psi.existentials:
        if ext is None:
            raise NotExtensional(f"self-reduction needs every existential extended; {name} is not")


def base_case(psi, A):
    """Whether interpreting every existential by its primed relation satisfies the matrix."""
    tensors = _base_tensors(psi, A, 1)
    return bool(eval_batch(psi.matrix, A, extra=tensors)[0])


def self_reduce_step(psi, A):
    """("decided", bool) or ("successors", [structures with one tuple added])."""
    _require_extended(psi)
    if base_case(psi, A):
        return "decided", True
    succ = []
    for name, arity, ext in psi.existentials:
        for t in itertools.product(range(A.n), repeat=arity):
            if t not in A.rels[ext]:
                succ.append(A.with_rels(**{ext: A.rels[ext] | {t}}))
    if not succ:
        return "decided", False
    return "successors", succ


def _ground_base(psi, A):
    """Universal matrix grounded under the base interpretation, or None.

    Each clause is a list of (sign, relation, tuple) over the primed relations;
    literals over the other input relations are already resolved against A.
    """
    tpl = _template(psi, A.n)
    if not tpl.complete:
        return None
    primed = {ext for _, _, ext in psi.existentials}
    clauses = []
    for lits in tpl.ground:
        out = []
        for lit in lits:
            if lit[0] == "const":
                if lit[1]:
                    break
                continue
            if lit[0] == "slot":
                sign, (idx, t) = lit[1], lit[2]
                rel = psi.existentials[idx][2]
            else:
                sign, rel, t = lit[1:]
            if rel in primed:
                out.append((sign, rel, t))
            elif (t in A.rels[rel]) == sign:
                break
        else:
            clauses.append(out)
    return clauses


def _repairs(clauses, B):
    """Additions that can satisfy the first falsified clause, or None if none is falsified."""
    for clause in clauses:
        if not any((t in B.rels[rel]) == sign for sign, rel, t in clause):
            return {(rel, t) for sign, rel, t in clause if sign}
    return None


def _selfreduce(psi, A, budget):
    _require_extended(psi)
    failed = set()
    nodes = [0]
    # Tuples are only ever added, so a falsified clause is fixed by adding one of
    # its positive tuples or never; branching on those keeps the disjunction complete.
    clauses = _ground_base(psi, A)

    def visit(B):
        key = _primed_state(psi, B)
        if key in failed:
            return None
        nodes[0] += 1
        if nodes[0] > budget:
            raise BudgetExceeded(f"self-reduction exceeded {budget} states")
        if clauses is not None:
            need = _repairs(clauses, B)
            if need is None:
                return [B]
            payload = [B.with_rels(**{rel: B.rels[rel] | {t}}) for rel, t in sorted(need)]
        else:
            kind, payload = self_reduce_step(psi, B)
            if kind == "decided":
                if payload:
                    return [B]
                failed.add(key)
                return None
        for S in payload:
            tail = visit(S)
            if tail is not None:
                return [B] + tail
        failed.add(key)
        return None

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10000))
    try:
        chain = visit(A)
    finally:
        sys.setrecursionlimit(limit)
    if chain is None:
        return Verdict(False, stats={"nodes": nodes[0]})
    last = chain[-1]
    assigned = {name: last.rels[ext] for name, _, ext in psi.existentials}
    return Verdict(True, ExtensionState(A, assigned), chain, stats={"nodes": nodes[0]})


def decide_ext_eso(psi, A, strategy="auto", budget=DEFAULT_BUDGET):
    if A.sig != psi.sig:
        raise SignatureMismatch(f"input signature {A.sig} differs from {psi.sig}")
    if strategy == "auto":
        _, free = _slots(psi, A)
        strategy = "bruteforce" if len(free) <= AUTO_BRUTEFORCE_SLOTS else "backtrack"
    if strategy == "bruteforce":
        return _bruteforce(psi, A, budget)
    if strategy == "backtrack":
        return _backtrack(psi, A, budget)
    if strategy == "selfreduce":
        return _selfreduce(psi, A, budget)
    raise ValueError(f"unknown strategy {strategy!r}")


def witness_holds(psi, verdict):
    """Re-check an accepted verdict's witness with the evaluator."""
    B = verdict.witness.expansion(psi)
    for name, _, ext in psi.existentials:
        if ext is not None and not verdict.witness.base.rels[ext] <= B.rels[name]:
            return False
    return eval_fo(psi.matrix, B)


def extract_witness(psi, A, oracle=None):
    """Chain A = v1 < ... < vk of single-tuple additions ending in a base case."""
    _require_extended(psi)
    if oracle is None:
        def oracle(B):
            return decide_ext_eso(psi, B).accepted
    kind, payload = self_reduce_step(psi, A)
    if kind == "decided" and payload:
        if not oracle(A):
            raise OracleInconsistent("oracle rejects an instance whose base case holds")
        return [A]
    if not oracle(A):
        return None
    chain = [A]
    cur = A
    while True:
        kind, payload = self_reduce_step(psi, cur)
        if kind == "decided":
            if payload:
                return chain
            raise OracleInconsistent("oracle accepted an instance with no extension left")
        for S in payload:
            if oracle(S):
                cur = S
                chain.append(S)
                break
        else:
            raise OracleInconsistent("oracle accepted an instance but no successor")


# ---------------------------------------------------------------- CSPs of universal sentences

_MODELS = {}


def _models(phi, sig, n):
    key = (phi, sig, n)
    if key not in _MODELS:
        found = []
        for B in structures_of_size(sig, n, upToIso=True):
            if eval_fo(phi, B):
                found.append(B)
        _MODELS[key] = found
    return _MODELS[key]


def decide_csp_universal(phi, A):
    for n in range(1, A.n + 1):
        for B in _models(phi, A.sig, n):
            m = find_morphism(A, B, "hom")
            if m is not None:
                return Verdict(True, (B, m))
    return Verdict(False)


# ---------------------------------------------------------------- forbidden substructures

def forb_member(F, A, mode="direct"):
    """Whether some structure of F embeds into A."""
    if mode == "direct":
        for G in F:
            if G.n <= A.n:
                m = find_morphism(G, A, "embedding")
                if m is not None:
                    return Verdict(True, (G, m))
        return Verdict(False)
    if mode != "selfreduce":
        raise ValueError(f"unknown mode {mode!r}")
    sizes = {G.n for G in F}
    memo = {}

    def visit(B, keep):
        key = frozenset(keep)
        if key in memo:
            return memo[key]
        for G in F:
            if G.n == B.n and is_isomorphic(G, B):
                memo[key] = [keep]
                return memo[key]
        result = None
        if B.n > min(sizes, default=0):
            for drop in range(B.n):
                sub = [x for i, x in enumerate(keep) if i != drop]
                tail = visit(substructure(A, sub), sub)
                if tail is not None:
                    result = [keep] + tail
                    break
        memo[key] = result
        return result

    chain = visit(A, list(range(A.n))) if F else None
    return Verdict(chain is not None, chain=chain)
