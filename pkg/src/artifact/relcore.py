"""Finite relational structures.

A structure has a signature (ordered symbol/arity pairs), a domain
0..n-1 and one frozenset of tuples per symbol.  Dense boolean tensors are
derived lazily and cached; they back the morphism, twin and canonical
form kernels.
"""
import itertools
import re
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (ArityError, CapExceeded, EmptyDomain, ParseError,
                     RangeError, SignatureMismatch)

NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_']*|<")

DEFAULT_CAP = 10 ** 7

KINDS = {
    "hom": _kernels.HOM,
    "embedding": _kernels.EMBEDDING,
    "full": _kernels.FULL,
    "surjective-hom": _kernels.SURJECTIVE_HOM,
    "full-surjective": _kernels.FULL_SURJECTIVE,
}


class Signature(tuple):
    """Ordered tuple of (name, arity) pairs."""

    def __new__(cls, items=()):
        if isinstance(items, dict):
            items = items.items()
        items = tuple((str(k), int(v)) for k, v in items)
        seen = set()
        for name, arity in items:
            if not NAME_RE.fullmatch(name):
                raise ParseError(0, f"bad symbol name {name!r}")
            if arity < 1:
                raise ArityError(f"symbol {name} has arity {arity}")
            if name in seen:
                raise ParseError(0, f"duplicate symbol {name}")
            seen.add(name)
        return super().__new__(cls, items)

    @property
    def names(self):
        return tuple(k for k, _ in self)

    def arity(self, name):
        for k, v in self:
            if k == name:
                return v
        raise KeyError(name)

    def __contains__(self, name):
        return any(k == name for k, _ in self)

    def as_dict(self):
        return dict(self)

    def __add__(self, other):
        return Signature(tuple(self) + tuple(Signature(other)))

    def without(self, names):
        names = set(names)
        return Signature(p for p in self if p[0] not in names)

    def __repr__(self):
        return "Signature(" + " ".join(f"{k}/{v}" for k, v in self) + ")"


@dataclass(frozen=True, eq=False)
class Structure:
    sig: Signature
    n: int
    rels: dict = field(default_factory=dict)

    def __post_init__(self):
        sig = self.sig if isinstance(self.sig, Signature) else Signature(self.sig)
        object.__setattr__(self, "sig", sig)
        if self.n < 1:
            raise EmptyDomain("structures have nonempty domains")
        rels = {}
        for name, arity in sig:
            tuples = set()
            for t in self.rels.get(name, ()):
                t = tuple(int(x) for x in t)
                if len(t) != arity:
                    raise ArityError(f"{name} expects {arity} entries, got {len(t)}")
                for x in t:
                    if not 0 <= x < self.n:
                        raise RangeError(f"element {x} outside domain of size {self.n}")
                tuples.add(t)
            rels[name] = frozenset(tuples)
        for name in self.rels:
            if name not in sig:
                raise SignatureMismatch(f"relation {name} not in signature")
        object.__setattr__(self, "rels", rels)
        object.__setattr__(self, "_cache", {})

    # -- dense views

    def tensor(self, name):
        key = ("t", name)
        if key not in self._cache:
            arity = self.sig.arity(name)
            arr = np.zeros((self.n,) * arity, dtype=bool)
            if self.rels[name]:
                idx = np.array(sorted(self.rels[name]), dtype=np.int64)
                arr[tuple(idx.T)] = True
            arr.flags.writeable = False
            self._cache[key] = arr
        return self._cache[key]

    def bits(self):
        """Concatenated big-endian flattening of all relation tensors."""
        if "bits" not in self._cache:
            parts = [self.tensor(k).ravel() for k in self.sig.names]
            b = np.concatenate(parts).astype(np.uint8) if parts else np.zeros(0, np.uint8)
            b.flags.writeable = False
            self._cache["bits"] = b
        return self._cache["bits"]

    def holds(self, name, t):
        return tuple(t) in self.rels[name]

    def key(self):
        return (self.sig, self.n, self.bits().tobytes())

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return self.sig == other.sig and self.n == other.n and self.rels == other.rels

    def __hash__(self):
        return hash((self.sig, self.n, tuple(self.rels[k] for k in self.sig.names)))

    def __repr__(self):
        body = "; ".join(f"{k}={sorted(self.rels[k])}" for k in self.sig.names)
        return f"Structure(n={self.n}; {body})"

    def with_rels(self, sig=None, **updates):
        sig = self.sig if sig is None else Signature(sig)
        rels = {k: self.rels.get(k, ()) for k in sig.names}
        rels.update(updates)
        return Structure(sig, self.n, rels)

    def reduct(self, names):
        sig = Signature(p for p in self.sig if p[0] in set(names))
        return Structure(sig, self.n, {k: self.rels[k] for k in sig.names})


@dataclass(frozen=True)
class Morphism:
    map: tuple
    kind: str


def from_bits(sig, n, bits):
    sig = Signature(sig)
    rels = {}
    pos = 0
    for name, arity in sig:
        size = n ** arity
        block = np.asarray(bits[pos:pos + size], dtype=bool).reshape((n,) * arity)
        rels[name] = [tuple(int(x) for x in t) for t in np.argwhere(block)]
        pos += size
    return Structure(sig, n, rels)


# ---------------------------------------------------------------- text format

def parse_structure(text):
    sig = None
    n = None
    rels = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        head = words[0]
        if head == "signature":
            if sig is not None:
                raise ParseError(lineno, "signature declared twice")
            items = []
            for w in words[1:]:
                name, slash, ar = w.rpartition("/")
                if not slash or not ar.isdigit():
                    raise ParseError(lineno, f"expected name/arity, got {w!r}")
                items.append((name, int(ar)))
            try:
                sig = Signature(items)
            except ParseError as e:
                raise ParseError(lineno, e.reason) from None
            rels = {k: [] for k in sig.names}
        elif head == "domain":
            if sig is None:
                raise ParseError(lineno, "domain before signature")
            if n is not None:
                raise ParseError(lineno, "domain declared twice")
            if len(words) != 2 or not words[1].isdigit():
                raise ParseError(lineno, "expected: domain <n>")
            n = int(words[1])
            if n < 1:
                raise ParseError(lineno, "domain must be nonempty")
        else:
            if sig is None or n is None:
                raise ParseError(lineno, "tuple before signature and domain")
            if head not in rels:
                raise ParseError(lineno, f"unknown symbol {head!r}")
            try:
                t = tuple(int(x) for x in words[1:])
            except ValueError:
                raise ParseError(lineno, "tuple entries must be integers") from None
            if len(t) != sig.arity(head):
                raise ArityError(f"line {lineno}: {head} expects {sig.arity(head)} entries, got {len(t)}")
            for x in t:
                if not 0 <= x < n:
                    raise RangeError(f"line {lineno}: element {x} outside domain of size {n}")
            rels[head].append(t)
    if sig is None:
        raise ParseError(0, "missing signature line")
    if n is None:
        raise ParseError(0, "missing domain line")
    return Structure(sig, n, rels)


def serialize_structure(A):
    lines = ["signature " + " ".join(f"{k}/{v}" for k, v in A.sig), f"domain {A.n}"]
    for name in A.sig.names:
        for t in sorted(A.rels[name]):
            lines.append(" ".join([name] + [str(x) for x in t]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- substructures

def substructure(A, keep):
    keep = sorted(set(int(x) for x in keep))
    if not keep:
        raise EmptyDomain("substructure needs a nonempty subset")
    index = {a: i for i, a in enumerate(keep)}
    rels = {}
    for name in A.sig.names:
        rels[name] = [tuple(index[x] for x in t) for t in A.rels[name]
                      if all(x in index for x in t)]
    return Structure(A.sig, len(keep), rels)


def enumerate_substructures(A):
    for size in range(1, A.n + 1):
        for subset in itertools.combinations(range(A.n), size):
            yield subset, substructure(A, subset)


def disjoint_union(A, B):
    if A.sig != B.sig:
        raise SignatureMismatch("disjoint union needs a common signature")
    rels = {}
    for name in A.sig.names:
        shifted = [tuple(x + A.n for x in t) for t in B.rels[name]]
        rels[name] = list(A.rels[name]) + shifted
    return Structure(A.sig, A.n + B.n, rels)


def connected_components(A):
    parent = list(range(A.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for name in A.sig.names:
        for t in A.rels[name]:
            for x in t[1:]:
                ra, rb = find(t[0]), find(x)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for x in range(A.n):
        groups.setdefault(find(x), []).append(x)
    return [tuple(g) for g in sorted(groups.values())]


# ---------------------------------------------------------------- morphisms

def _flat(A):
    parts = [A.tensor(k).ravel().astype(np.uint8) for k in A.sig.names]
    sizes = [len(p) for p in parts]
    off = np.zeros(len(parts), dtype=np.int64)
    if parts:
        off[1:] = np.cumsum(sizes)[:-1]
    flat = np.concatenate(parts) if parts else np.zeros(0, np.uint8)
    return flat, off


def find_morphism(A, B, kind="hom"):
    if A.sig != B.sig:
        raise SignatureMismatch("morphisms need a common signature")
    code = KINDS[kind]
    arities = np.array([v for _, v in A.sig], dtype=np.int64)
    if arities.size and arities.max() > 8:
        raise ArityError("arity above 8 is not supported by the morphism search")
    src, src_off = _flat(A)
    dst, dst_off = _flat(B)
    fmap = _kernels.morph_dfs(arities, src, src_off, dst, dst_off, A.n, B.n, code)
    return None if fmap is None else Morphism(tuple(fmap), kind)


def image(A, fmap, target_n):
    rels = {k: [tuple(fmap[x] for x in t) for t in A.rels[k]] for k in A.sig.names}
    return Structure(A.sig, target_n, rels)


# ---------------------------------------------------------------- twins

def _twin_rows(A):
    rows = [np.zeros((A.n, 0), dtype=bool)]
    for name, arity in A.sig:
        T = A.tensor(name)
        for i in range(arity):
            rows.append(np.moveaxis(T, i, 0).reshape(A.n, -1))
    return np.concatenate(rows, axis=1)


def twins(A):
    rows = _twin_rows(A)
    same = (rows[:, None, :] == rows[None, :, :]).all(axis=2)
    return {frozenset((a, b)) for a in range(A.n) for b in range(a + 1, A.n) if same[a, b]}


def twin_quotient(A):
    """Remove twins until none remain; returns (B0, projection onto B0)."""
    current = A
    proj = list(range(A.n))
    while True:
        pairs = sorted(tuple(sorted(p)) for p in twins(current))
        if not pairs:
            return current, Morphism(tuple(proj), "full-surjective")
        a, b = pairs[0]
        keep = [x for x in range(current.n) if x != b]
        index = {x: i for i, x in enumerate(keep)}
        index[b] = index[a]
        proj = [index[p] for p in proj]
        current = substructure(current, keep)


def blow_up(A, mult):
    mult = [int(m) for m in mult]
    if len(mult) != A.n or min(mult) < 1:
        raise ValueError("blow_up needs one positive multiplicity per element")
    start = np.concatenate([[0], np.cumsum(mult)])
    copies = [list(range(start[a], start[a + 1])) for a in range(A.n)]
    rels = {}
    for name in A.sig.names:
        rels[name] = [t2 for t in A.rels[name] for t2 in itertools.product(*(copies[x] for x in t))]
    return Structure(A.sig, int(start[-1]), rels)


# ---------------------------------------------------------------- canonical forms

_PERMMAPS = {}


def permmaps(sig, n):
    """Index maps sending a structure's bits to those of each relabelling.

    Row p of the result lists, for every position of the permuted
    encoding, the position in the original encoding it copies from:
    the permuted structure holds R(i1..ir) iff the original holds
    R(p(i1)..p(ir)).
    """
    key = (tuple(v for _, v in sig), n)
    if key not in _PERMMAPS:
        perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
        blocks = []
        offset = 0
        for arity in key[0]:
            grid = np.array(list(itertools.product(range(n), repeat=arity)), dtype=np.int64)
            weights = n ** np.arange(arity - 1, -1, -1)
            mapped = perms[:, grid]  # (P, n^r, r)
            blocks.append(offset + mapped @ weights)
            offset += n ** arity
        _PERMMAPS[key] = np.concatenate(blocks, axis=1) if blocks else np.zeros((len(perms), 0), np.int64)
    return _PERMMAPS[key]


def canonical_bits(A):
    if "canon" not in A._cache:
        if A.n > 8:
            raise CapExceeded("canonical form is limited to n <= 8")
        c = _kernels.canon_rows(A.bits()[None, :], permmaps(A.sig, A.n))[0]
        c.flags.writeable = False
        A._cache["canon"] = c
    return A._cache["canon"]


def canonical_form(A):
    return from_bits(A.sig, A.n, canonical_bits(A))


def canonical_key(A):
    return (A.n, canonical_bits(A).tobytes())


def is_isomorphic(A, B):
    return A.sig == B.sig and A.n == B.n and canonical_key(A) == canonical_key(B)


def _width(sig, n):
    return sum(n ** v for _, v in sig)


def count_structures(sig, maxN):
    return sum(2 ** _width(sig, n) for n in range(1, maxN + 1))


def _codes_to_bits(codes, width):
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(np.uint8)


def _bits_to_codes(bits):
    width = bits.shape[1]
    weights = np.left_shift(np.int64(1), np.arange(width - 1, -1, -1, dtype=np.int64))
    return bits.astype(np.int64) @ weights


def iso_codes(sig, n, chunk=1 << 16):
    """Sorted canonical codes of all structures of size n over sig."""
    width = _width(sig, n)
    if width > 62:
        raise CapExceeded("encoding too wide for exhaustive enumeration")
    maps = permmaps(sig, n)
    found = []
    total = 1 << width
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        canon = _kernels.canon_rows(_codes_to_bits(codes, width), maps)
        found.append(np.unique(_bits_to_codes(canon)))
    return np.unique(np.concatenate(found))


def enumerate_structures(sig, maxN, upToIso=False, cap=DEFAULT_CAP):
    sig = Signature(sig)
    if maxN < 1:
        raise ValueError("maxN must be at least 1")
    projected = count_structures(sig, maxN)
    if projected > cap:
        raise CapExceeded(f"{projected} candidate structures exceed the cap of {cap}")
    for n in range(1, maxN + 1):
        width = _width(sig, n)
        if upToIso:
            for code in iso_codes(sig, n):
                yield from_bits(sig, n, _codes_to_bits(np.array([code]), width)[0])
        else:
            for code in range(1 << width):
                yield from_bits(sig, n, _codes_to_bits(np.array([code], dtype=np.int64), width)[0])


def structures_of_size(sig, n, upToIso=False, cap=DEFAULT_CAP):
    sig = Signature(sig)
    width = _width(sig, n)
    if 2 ** width > cap:
        raise CapExceeded(f"{2 ** width} candidate structures exceed the cap of {cap}")
    codes = iso_codes(sig, n) if upToIso else np.arange(1 << width, dtype=np.int64)
    bits = _codes_to_bits(codes, width)
    for row in bits:
        yield from_bits(sig, n, row)
