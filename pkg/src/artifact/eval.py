"""First-order model checking and the hereditary checker.

A formula is evaluated bottom-up into boolean tensors: every subformula
yields the tuple of its free variables and an array with a leading batch
axis followed by one domain axis per variable.  The batch axis lets one
call evaluate many structures that share a domain size, for instance all
candidate expansions in the brute-force solver or all induced
substructures (given as domain masks) in the hereditary checker.
"""
import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CnfBlowup, UnboundVariable
from .logic import (And, Atom, Const, Eq, EsoSentence, Exists, Forall, Iff, Implies, Not, Or,
                    free_vars, nnf, prenex_cnf)
from .relcore import substructure

CELL_LIMIT = 1 << 24


# ---------------------------------------------------------------- scoping

def _flatten(cls, parts):
    out = []
    for p in parts:
        if isinstance(p, cls):
            out.extend(p.args)
        else:
            out.append(p)
    return tuple(out)


def _push(q, v, body):
    """Quantify v over body, pushing the quantifier as deep as it goes."""
    if v not in free_vars(body):
        return body
    split, join = (And, Or) if q is Forall else (Or, And)
    if isinstance(body, split):
        return split(_flatten(split, tuple(_push(q, v, c) for c in body.args)))
    if isinstance(body, join):
        inside = tuple(c for c in body.args if v in free_vars(c))
        outside = tuple(c for c in body.args if v not in free_vars(c))
        if outside:
            inner = inside[0] if len(inside) == 1 else join(inside)
            return join(outside + (_push(q, v, inner),))
    if isinstance(body, q):
        return q((v,) + body.vars, body.body)
    return q((v,), body)


def _scope(f):
    if isinstance(f, (And, Or)):
        return type(f)(_flatten(type(f), tuple(_scope(c) for c in f.args)))
    if isinstance(f, Not):
        return f
    if isinstance(f, (Forall, Exists)):
        body = _scope(f.body)
        for v in reversed(f.vars):
            body = _push(type(f), v, body)
        return body
    return f


@lru_cache(maxsize=4096)
def prepare(f):
    """Negation normal form with quantifiers pushed inward."""
    return _scope(nnf(f))


# ---------------------------------------------------------------- tensors

class _Ctx:
    """Evaluation context.

    With `packed` set the batch axis of every array is bit-packed (8 batch
    entries per uint8), which is how subset masks are evaluated; bitwise
    operators then act on 8 entries at once.
    """

    def __init__(self, A, extra, mask, packed=False):
        self.A = A
        self.n = A.n
        self.extra = extra or {}
        self.packed = packed
        self.mask = np.packbits(mask, axis=0) if packed and mask is not None else mask
        self.grids = {}
        self.rels = {}
        self.true = np.uint8(255) if packed else True
        self.false = np.uint8(0) if packed else False

    def rel(self, sym):
        if sym in self.extra:
            return self.extra[sym]
        if sym not in self.rels:
            t = self.A.tensor(sym)[None]
            self.rels[sym] = t.astype(np.uint8) * np.uint8(255) if self.packed else t
        return self.rels[sym]

    def eye(self):
        if "=" not in self.rels:
            e = np.eye(self.n, dtype=bool)[None]
            self.rels["="] = e.astype(np.uint8) * np.uint8(255) if self.packed else e
        return self.rels["="]

    def grid(self, k):
        if k not in self.grids:
            self.grids[k] = np.indices((self.n,) * k)
        return self.grids[k]


def _layout(vs, target):
    """Transpose and broadcast pattern placing axes vs inside target."""
    order = [v for v in target if v in vs]
    perm = None if tuple(order) == vs else (0,) + tuple(1 + vs.index(v) for v in order)
    return perm, tuple(v in vs for v in target)


@lru_cache(maxsize=4096)
def _compile(f):
    """Flatten a prepared formula into a postorder program.

    Structurally equal subformulas share one step.  Each step is a tuple
    (kind, payload, vars) and refers to earlier steps by index.
    """
    steps = []
    index = {}

    def visit(g):
        if g in index:
            return index[g]
        if isinstance(g, Const):
            step = ("const", g.value, ())
        elif isinstance(g, Atom):
            uv = tuple(dict.fromkeys(g.args))
            if len(uv) == len(g.args):
                step = ("atom", (g.sym, None), g.args)
            else:
                step = ("atom", (g.sym, tuple(uv.index(a) for a in g.args)), uv)
        elif isinstance(g, Eq):
            step = ("const", True, ()) if g.left == g.right else ("eq", None, (g.left, g.right))
        elif isinstance(g, Not):
            c = visit(g.body)
            step = ("not", c, steps[c][2])
        elif isinstance(g, (And, Or)):
            kids = [visit(c) for c in g.args]
            target = []
            for k in kids:
                for v in steps[k][2]:
                    if v not in target:
                        target.append(v)
            target = tuple(target)
            parts = tuple((k,) + _layout(steps[k][2], target) for k in kids)
            step = ("and" if isinstance(g, And) else "or", parts, target)
        else:
            c = visit(g.body)
            vs = steps[c][2]
            quantified = [v for v in g.vars if v in vs]
            axes = tuple(1 + vs.index(v) for v in quantified)
            rest = tuple(v for v in vs if v not in quantified)
            step = ("forall" if isinstance(g, Forall) else "exists", (c, axes), rest)
        steps.append(step)
        index[g] = len(steps) - 1
        return index[g]

    visit(f)
    return tuple(steps)


def _run(plan, ctx):
    n = ctx.n
    vals = []
    for kind, payload, vs in plan:
        if kind == "const":
            out = np.full((1,), ctx.true if payload else ctx.false)
        elif kind == "atom":
            sym, pos = payload
            out = ctx.rel(sym)
            if pos is not None:
                g = ctx.grid(len(vs))
                out = out[(slice(None),) + tuple(g[k] for k in pos)]
        elif kind == "eq":
            out = ctx.eye()
        elif kind == "not":
            out = ~vals[payload]
        elif kind in ("and", "or"):
            op = np.bitwise_and if kind == "and" else np.bitwise_or
            out = None
            for k, perm, present in payload:
                arr = vals[k]
                if perm is not None:
                    arr = arr.transpose(perm)
                arr = arr.reshape((arr.shape[0],) + tuple(n if p else 1 for p in present))
                out = arr if out is None else op(out, arr)
        else:
            c, axes = payload
            arr = vals[c]
            red = np.bitwise_and if kind == "forall" else np.bitwise_or
            if not axes:
                out = arr
            elif ctx.mask is None:
                out = red.reduce(arr, axis=axes)
            else:
                m = ctx.mask
                for ax in sorted(axes, reverse=True):
                    shape = [m.shape[0]] + [1] * (arr.ndim - 1)
                    shape[ax] = n
                    mm = m.reshape(shape)
                    arr = red.reduce(arr | ~mm if kind == "forall" else arr & mm, axis=ax)
                out = arr
        vals.append(out)
    return plan[-1][2], vals[-1]


def _ev(f, ctx):
    return _run(_compile(f), ctx)


def _expand(vs, arr, target, n):
    perm, present = _layout(vs, target)
    if perm is not None:
        arr = arr.transpose(perm)
    return arr.reshape((arr.shape[0],) + tuple(n if p else 1 for p in present))


def _matrix(phi):
    if isinstance(phi, EsoSentence):
        if phi.existentials:
            raise ValueError("eval_fo needs a first-order formula")
        return phi.matrix
    return phi


def tensor(phi, A, free_order=None, extra=None, mask=None):
    """Truth table of phi over its free variables, with a leading batch axis."""
    f = prepare(_matrix(phi))
    vs, arr = _ev(f, _Ctx(A, extra, mask))
    order = tuple(free_order) if free_order is not None else vs
    missing = set(vs) - set(order)
    if missing:
        raise UnboundVariable(f"free variables {sorted(missing)} not assigned")
    return order, _expand(vs, arr, order, A.n) * np.ones((1,) + (A.n,) * len(order), dtype=bool)


@lru_cache(maxsize=4096)
def _free(f):
    return frozenset(free_vars(f))


def eval_fo(phi, A, env=None):
    env = env or {}
    f = _matrix(phi)
    fv = _free(f)
    missing = fv - set(env)
    if missing:
        raise UnboundVariable(f"free variables {sorted(missing)} not assigned")
    vs, arr = _ev(prepare(f), _Ctx(A, None, None))
    return bool(arr[0][tuple(env[v] for v in vs)])


def eval_batch(phi, A, extra=None, mask=None):
    """Truth value of a sentence for every batch entry."""
    f = prepare(_matrix(phi))
    vs, arr = _ev(f, _Ctx(A, extra, mask))
    if vs:
        raise UnboundVariable(f"free variables {sorted(vs)} not assigned")
    return arr


# ---------------------------------------------------------------- hereditary check

@dataclass(frozen=True)
class HerVerdict:
    member: bool
    counterexample: tuple = None


@lru_cache(maxsize=1024)
def _universal_parts(f):
    """Split top-level conjuncts into (universal, other)."""
    parts = f.args if isinstance(f, And) else (f,)
    uni, rest = [], []
    for p in parts:
        try:
            prefix, _ = prenex_cnf(p)
        except CnfBlowup:
            rest.append(p)
            continue
        (uni if all(q == "A" for q, _ in prefix) else rest).append(p)
    return tuple(uni), tuple(rest)


@lru_cache(maxsize=32)
def _all_subsets(n):
    block = [S for size in range(1, n + 1) for S in itertools.combinations(range(n), size)]
    mask = np.zeros((len(block), n), dtype=bool)
    for i, S in enumerate(block):
        mask[i, list(S)] = True
    mask.flags.writeable = False
    return block, mask


def _subset_masks(n, chunk):
    """Boolean masks of all nonempty subsets, by size then combination order."""
    if n <= 16:
        block, mask = _all_subsets(n)
        for start in range(0, len(block), chunk):
            yield block[start:start + chunk], mask[start:start + chunk]
        return
    it = (S for size in range(1, n + 1) for S in itertools.combinations(range(n), size))
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        mask = np.zeros((len(block), n), dtype=bool)
        for i, S in enumerate(block):
            mask[i, list(S)] = True
        yield block, mask


@lru_cache(maxsize=4096)
def _width(f):
    """Largest number of variables live in one subformula."""
    if isinstance(f, (Atom, Eq)):
        return len(free_vars(f))
    inner = max((_width(c) for c in _kids(f)), default=0)
    return max(inner, len(free_vars(f)))


def _kids(f):
    if isinstance(f, Not):
        return (f.body,)
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, (Implies, Iff)):
        return (f.left, f.right)
    if isinstance(f, (Forall, Exists)):
        return (f.body,)
    return ()


def her_check(phi, A, chunk=4096):
    f = _matrix(phi)
    if _free(f):
        raise UnboundVariable("her_check needs a sentence")
    uni, rest = _universal_parts(f)
    if uni and not rest:
        if eval_fo(f, A):
            return HerVerdict(True)
        target = f
    elif uni and eval_fo(_conj(uni), A):
        # universal conjuncts are inherited by every substructure
        target = _conj(rest)
    else:
        target = f
    g = prepare(target)
    step = max(1, min(chunk, CELL_LIMIT // max(1, A.n ** _width(g))))
    for block, mask in _subset_masks(A.n, step):
        vs, arr = _ev(g, _Ctx(A, None, mask, packed=True))
        packed = np.broadcast_to(arr, ((len(block) + 7) // 8,))
        ok = np.unpackbits(packed, count=len(block)).astype(bool)
        if not ok.all():
            return HerVerdict(False, block[int(np.argmin(ok))])
    return HerVerdict(True)


@lru_cache(maxsize=1024)
def _conj(parts):
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def her_check_naive(phi, A):
    """Reference implementation: one substructure at a time."""
    for size in range(1, A.n + 1):
        for S in itertools.combinations(range(A.n), size):
            if not eval_fo(phi, substructure(A, S)):
                return HerVerdict(False, S)
    return HerVerdict(True)
