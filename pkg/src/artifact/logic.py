"""First-order and existential second-order syntax.

Formulas are immutable dataclasses.  The surface language is an
S-expression grammar; `parse_sentence` reads a whole file (signature,
optional second-order block, first-order body) and `serialize_sentence`
writes it back.  Normalization to prenex CNF and the fragment classifier
live here as well.
"""
from dataclasses import dataclass, field

from .errors import (ArityError, CnfBlowup, DuplicateExistential, NotExtensional,
                     NotPrenex, ParseError, PositiveEquality, UnknownSymbol)
from .relcore import NAME_RE, Signature, Structure, connected_components

CNF_BUDGET = 10 ** 5


# ---------------------------------------------------------------- AST

def _node(cls):
    """Frozen dataclass whose hash is computed once; formulas are hashed often."""
    cls = dataclass(frozen=True)(cls)
    plain = cls.__hash__

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = plain(self)
            object.__setattr__(self, "_hash", h)
        return h

    cls.__hash__ = __hash__
    return cls


@_node
class Atom:
    sym: str
    args: tuple


@_node
class Eq:
    left: str
    right: str


@_node
class Not:
    body: object


@_node
class And:
    args: tuple


@_node
class Or:
    args: tuple


@_node
class Implies:
    left: object
    right: object


@_node
class Iff:
    left: object
    right: object


@_node
class Forall:
    vars: tuple
    body: object


@_node
class Exists:
    vars: tuple
    body: object


@_node
class Const:
    value: bool


TRUE = Const(True)
FALSE = Const(False)


def atom(sym, *args):
    return Atom(sym, tuple(args))


def conj(*parts):
    parts = tuple(parts)
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else And(parts)


def disj(*parts):
    parts = tuple(parts)
    if not parts:
        return FALSE
    return parts[0] if len(parts) == 1 else Or(parts)


def forall(vars, body):
    vars = tuple(vars)
    return Forall(vars, body) if vars else body


def exists(vars, body):
    vars = tuple(vars)
    return Exists(vars, body) if vars else body


def neq(a, b):
    return Not(Eq(a, b))


@dataclass(frozen=True)
class EsoSentence:
    sig: Signature
    existentials: tuple
    matrix: object

    def __post_init__(self):
        object.__setattr__(self, "sig", Signature(self.sig))
        decls = tuple((str(n), int(a), e) for n, a, e in self.existentials)
        object.__setattr__(self, "existentials", decls)

    @property
    def full_sig(self):
        return Signature(tuple(self.sig) + tuple((n, a) for n, a, _ in self.existentials))

    @property
    def is_fo(self):
        return not self.existentials


def as_sentence(f, sig):
    return f if isinstance(f, EsoSentence) else EsoSentence(sig, (), f)


# ---------------------------------------------------------------- traversal

def children(f):
    if isinstance(f, (Not,)):
        return (f.body,)
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, (Implies, Iff)):
        return (f.left, f.right)
    if isinstance(f, (Forall, Exists)):
        return (f.body,)
    return ()


def free_vars(f):
    if isinstance(f, Atom):
        return set(f.args)
    if isinstance(f, Eq):
        return {f.left, f.right}
    if isinstance(f, (Forall, Exists)):
        return free_vars(f.body) - set(f.vars)
    out = set()
    for c in children(f):
        out |= free_vars(c)
    return out


def all_vars(f):
    if isinstance(f, Atom):
        return set(f.args)
    if isinstance(f, Eq):
        return {f.left, f.right}
    out = set(f.vars) if isinstance(f, (Forall, Exists)) else set()
    for c in children(f):
        out |= all_vars(c)
    return out


def symbols(f):
    if isinstance(f, Atom):
        return {f.sym}
    out = set()
    for c in children(f):
        out |= symbols(c)
    return out


def uses_equality(f):
    return isinstance(f, Eq) or any(uses_equality(c) for c in children(f))


def fresh(base, taken):
    i = 0
    while f"{base}{i}" in taken:
        i += 1
    name = f"{base}{i}"
    taken.add(name)
    return name


def substitute(f, mapping):
    """Capture-avoiding substitution of variables by variables."""
    if not mapping:
        return f
    if isinstance(f, Atom):
        return Atom(f.sym, tuple(mapping.get(v, v) for v in f.args))
    if isinstance(f, Eq):
        return Eq(mapping.get(f.left, f.left), mapping.get(f.right, f.right))
    if isinstance(f, Const):
        return f
    if isinstance(f, Not):
        return Not(substitute(f.body, mapping))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(substitute(c, mapping) for c in f.args))
    if isinstance(f, (Implies, Iff)):
        return type(f)(substitute(f.left, mapping), substitute(f.right, mapping))
    inner = {k: v for k, v in mapping.items() if k not in f.vars}
    targets = set(inner.values())
    taken = all_vars(f) | set(mapping) | targets
    new_vars = []
    renames = {}
    for v in f.vars:
        if v in targets and any(k in free_vars(f.body) for k in inner):
            w = fresh(v + "_", taken)
            renames[v] = w
            new_vars.append(w)
        else:
            new_vars.append(v)
    inner.update(renames)
    return type(f)(tuple(new_vars), substitute(f.body, inner))


def rename_symbols(f, mapping):
    if isinstance(f, Atom):
        return Atom(mapping.get(f.sym, f.sym), f.args)
    if isinstance(f, (Eq, Const)):
        return f
    if isinstance(f, Not):
        return Not(rename_symbols(f.body, mapping))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(rename_symbols(c, mapping) for c in f.args))
    if isinstance(f, (Implies, Iff)):
        return type(f)(rename_symbols(f.left, mapping), rename_symbols(f.right, mapping))
    return type(f)(f.vars, rename_symbols(f.body, mapping))


# ---------------------------------------------------------------- parser

KEYWORDS = {"signature", "exists2", "extends", "forall", "exists", "and", "or",
            "not", "implies", "iff", "=", "true", "false"}


@dataclass
class _Node:
    items: list
    line: int
    word: str = None
    is_list: bool = field(default=True)


def _tokens(text):
    line = 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            i += 1
        elif ch.isspace():
            i += 1
        elif ch == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch, line
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "();":
                j += 1
            yield text[i:j], line
            i = j


def _read(text):
    stack = [_Node([], 1)]
    for tok, line in _tokens(text):
        if tok == "(":
            stack.append(_Node([], line))
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError(line, "unbalanced ')'")
            node = stack.pop()
            stack[-1].items.append(node)
        else:
            stack[-1].items.append(_Node([], line, tok, False))
    if len(stack) > 1:
        raise ParseError(stack[-1].line, "unclosed '('")
    return stack[0].items


def _word(node, what):
    if node.is_list:
        raise ParseError(node.line, f"expected {what}, got a list")
    return node.word


def _int(node, what):
    w = _word(node, what)
    if not w.isdigit():
        raise ParseError(node.line, f"expected {what}, got {w!r}")
    return int(w)


class _FormulaReader:
    def __init__(self, arities):
        self.arities = arities

    def var(self, node, bound):
        name = _word(node, "a variable")
        if name in KEYWORDS or not NAME_RE.fullmatch(name) or name == "<":
            raise ParseError(node.line, f"bad variable name {name!r}")
        if name not in bound:
            raise ParseError(node.line, f"unbound variable {name!r}")
        return name

    def read(self, node, bound):
        if not node.is_list:
            if node.word == "true":
                return TRUE
            if node.word == "false":
                return FALSE
            raise ParseError(node.line, f"unexpected token {node.word!r}")
        if not node.items:
            raise ParseError(node.line, "empty list")
        head = node.items[0]
        rest = node.items[1:]
        op = _word(head, "an operator")
        if op in ("forall", "exists"):
            if len(rest) != 2 or not rest[0].is_list or not rest[0].items:
                raise ParseError(node.line, f"expected ({op} (<var>+) <fo>)")
            names = []
            for v in rest[0].items:
                name = _word(v, "a variable")
                if name in KEYWORDS or not NAME_RE.fullmatch(name) or name == "<":
                    raise ParseError(v.line, f"bad variable name {name!r}")
                names.append(name)
            body = self.read(rest[1], bound | set(names))
            return (Forall if op == "forall" else Exists)(tuple(names), body)
        if op in ("and", "or"):
            if not rest:
                raise ParseError(node.line, f"({op}) needs at least one argument")
            return (And if op == "and" else Or)(tuple(self.read(c, bound) for c in rest))
        if op == "not":
            if len(rest) != 1:
                raise ParseError(node.line, "(not) takes one argument")
            return Not(self.read(rest[0], bound))
        if op in ("implies", "iff"):
            if len(rest) != 2:
                raise ParseError(node.line, f"({op}) takes two arguments")
            cls = Implies if op == "implies" else Iff
            return cls(self.read(rest[0], bound), self.read(rest[1], bound))
        if op == "=":
            if len(rest) != 2:
                raise ParseError(node.line, "(=) takes two variables")
            return Eq(self.var(rest[0], bound), self.var(rest[1], bound))
        if op in KEYWORDS:
            raise ParseError(node.line, f"misplaced keyword {op!r}")
        if op not in self.arities:
            raise UnknownSymbol(f"line {node.line}: unknown symbol {op!r}")
        if len(rest) != self.arities[op]:
            raise ArityError(f"line {node.line}: {op} expects {self.arities[op]} arguments, got {len(rest)}")
        return Atom(op, tuple(self.var(v, bound) for v in rest))


def _read_signature(node):
    if not node.is_list or not node.items or node.items[0].is_list or node.items[0].word != "signature":
        raise ParseError(node.line, "file must start with (signature (<name> <arity>)+)")
    items = []
    for decl in node.items[1:]:
        if not decl.is_list or len(decl.items) != 2:
            raise ParseError(decl.line, "expected (<name> <arity>)")
        items.append((_word(decl.items[0], "a symbol name"), _int(decl.items[1], "an arity")))
    try:
        return Signature(items)
    except ParseError as e:
        raise ParseError(node.line, e.reason) from None


def parse_sentence(text):
    nodes = _read(text)
    if len(nodes) != 2:
        line = nodes[-1].line if nodes else 1
        raise ParseError(line, "expected a signature followed by one sentence")
    sig = _read_signature(nodes[0])
    body = nodes[1]
    existentials = []
    if body.is_list and body.items and not body.items[0].is_list and body.items[0].word == "exists2":
        if len(body.items) != 3 or not body.items[1].is_list or not body.items[1].items:
            raise ParseError(body.line, "expected (exists2 (<rdecl>+) <fo>)")
        seen = set(sig.names)
        for decl in body.items[1].items:
            if not decl.is_list or len(decl.items) not in (2, 4):
                raise ParseError(decl.line, "expected (<name> <arity>) or (<name> <arity> extends <name>)")
            name = _word(decl.items[0], "a symbol name")
            if not NAME_RE.fullmatch(name) or name in KEYWORDS:
                raise ParseError(decl.line, f"bad symbol name {name!r}")
            arity = _int(decl.items[1], "an arity")
            if arity < 1:
                raise ArityError(f"line {decl.line}: arity must be positive")
            ext = None
            if len(decl.items) == 4:
                if _word(decl.items[2], "'extends'") != "extends":
                    raise ParseError(decl.line, "expected 'extends'")
                ext = _word(decl.items[3], "a symbol name")
                if ext not in sig:
                    raise UnknownSymbol(f"line {decl.line}: {name} extends unknown input symbol {ext!r}")
                if sig.arity(ext) != arity:
                    raise ArityError(f"line {decl.line}: {name}/{arity} cannot extend {ext}/{sig.arity(ext)}")
            if name in seen:
                raise DuplicateExistential(f"line {decl.line}: symbol {name!r} declared twice")
            seen.add(name)
            existentials.append((name, arity, ext))
        fo = body.items[2]
    else:
        fo = body
    arities = dict(sig)
    arities.update({n: a for n, a, _ in existentials})
    matrix = _FormulaReader(arities).read(fo, set())
    return EsoSentence(sig, tuple(existentials), matrix)


def parse_formula(text, sig, free=()):
    nodes = _read(text)
    if len(nodes) != 1:
        raise ParseError(1, "expected exactly one formula")
    return _FormulaReader(dict(Signature(sig))).read(nodes[0], set(free))


# ---------------------------------------------------------------- serializer

def formula_to_sexpr(f):
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return "(" + " ".join((f.sym,) + f.args) + ")"
    if isinstance(f, Eq):
        return f"(= {f.left} {f.right})"
    if isinstance(f, Not):
        return f"(not {formula_to_sexpr(f.body)})"
    if isinstance(f, (And, Or)):
        op = "and" if isinstance(f, And) else "or"
        return f"({op} " + " ".join(formula_to_sexpr(c) for c in f.args) + ")"
    if isinstance(f, (Implies, Iff)):
        op = "implies" if isinstance(f, Implies) else "iff"
        return f"({op} {formula_to_sexpr(f.left)} {formula_to_sexpr(f.right)})"
    op = "forall" if isinstance(f, Forall) else "exists"
    return f"({op} (" + " ".join(f.vars) + f") {formula_to_sexpr(f.body)})"


def _pretty(f, indent, width=88):
    flat = formula_to_sexpr(f)
    pad = " " * indent
    if len(flat) + indent <= width or isinstance(f, (Atom, Eq, Const)):
        return pad + flat
    inner = indent + 2
    if isinstance(f, Not):
        return pad + "(not\n" + _pretty(f.body, inner, width) + ")"
    if isinstance(f, (And, Or)):
        op = "and" if isinstance(f, And) else "or"
        return pad + f"({op}\n" + "\n".join(_pretty(c, inner, width) for c in f.args) + ")"
    if isinstance(f, (Implies, Iff)):
        op = "implies" if isinstance(f, Implies) else "iff"
        return pad + f"({op}\n" + _pretty(f.left, inner, width) + "\n" + _pretty(f.right, inner, width) + ")"
    op = "forall" if isinstance(f, Forall) else "exists"
    return pad + f"({op} (" + " ".join(f.vars) + ")\n" + _pretty(f.body, inner, width) + ")"


def serialize_sentence(s):
    head = "(signature " + " ".join(f"({k} {v})" for k, v in s.sig) + ")"
    if not s.existentials:
        return head + "\n" + _pretty(s.matrix, 0) + "\n"
    decls = []
    for name, arity, ext in s.existentials:
        decls.append(f"({name} {arity} extends {ext})" if ext else f"({name} {arity})")
    return head + "\n(exists2 (" + " ".join(decls) + ")\n" + _pretty(s.matrix, 2) + ")\n"


def serialize_formula(f):
    return _pretty(f, 0) + "\n"


# ---------------------------------------------------------------- normal forms

def nnf(f, negate=False):
    if isinstance(f, Const):
        return Const(f.value != negate)
    if isinstance(f, (Atom, Eq)):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return nnf(f.body, not negate)
    if isinstance(f, And):
        parts = tuple(nnf(c, negate) for c in f.args)
        return Or(parts) if negate else And(parts)
    if isinstance(f, Or):
        parts = tuple(nnf(c, negate) for c in f.args)
        return And(parts) if negate else Or(parts)
    if isinstance(f, Implies):
        return nnf(Or((Not(f.left), f.right)), negate)
    if isinstance(f, Iff):
        both = And((Or((Not(f.left), f.right)), Or((f.left, Not(f.right)))))
        return nnf(both, negate)
    if isinstance(f, Forall):
        return (Exists if negate else Forall)(f.vars, nnf(f.body, negate))
    return (Forall if negate else Exists)(f.vars, nnf(f.body, negate))


def _rename_apart(f, taken, env):
    if isinstance(f, Atom):
        return Atom(f.sym, tuple(env.get(v, v) for v in f.args))
    if isinstance(f, Eq):
        return Eq(env.get(f.left, f.left), env.get(f.right, f.right))
    if isinstance(f, (Const,)):
        return f
    if isinstance(f, Not):
        return Not(_rename_apart(f.body, taken, env))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_rename_apart(c, taken, env) for c in f.args))
    env = dict(env)
    new_vars = []
    for v in f.vars:
        w = fresh("_v", taken)
        env[v] = w
        new_vars.append(w)
    return type(f)(tuple(new_vars), _rename_apart(f.body, taken, env))


def _pull(f, prefix):
    """Move quantifiers of an NNF formula (renamed apart) into prefix."""
    if isinstance(f, (Forall, Exists)):
        q = "A" if isinstance(f, Forall) else "E"
        prefix.extend((q, v) for v in f.vars)
        return _pull(f.body, prefix)
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_pull(c, prefix) for c in f.args))
    return f


def _lit_neg(lit):
    sign, a = lit
    return (not sign, a)


def _cnf(f, budget, counter):
    if isinstance(f, Const):
        return [] if f.value else [()]
    if isinstance(f, (Atom, Eq)):
        return [((True, f),)]
    if isinstance(f, Not):
        return [((False, f.body),)]
    if isinstance(f, And):
        out = []
        for c in f.args:
            out.extend(_cnf(c, budget, counter))
        return out
    # Or
    acc = [()]
    for c in f.args:
        part = _cnf(c, budget, counter)
        nxt = []
        for a in acc:
            for b in part:
                counter[0] += len(a) + len(b)
                if counter[0] > budget:
                    raise CnfBlowup(f"CNF distribution exceeded {budget} literals")
                nxt.append(a + b)
        acc = nxt
    return acc


def _tidy_clause(clause):
    """Dedupe literals, drop x≠x, report tautologies as None."""
    out = []
    seen = set()
    for lit in clause:
        sign, a = lit
        if isinstance(a, Eq) and a.left == a.right:
            if sign:
                return None
            continue
        if (not sign, a) in seen:
            return None
        if lit not in seen:
            seen.add(lit)
            out.append(lit)
    return tuple(out)


def _lit_vars(lit):
    a = lit[1]
    return set(a.args) if isinstance(a, Atom) else {a.left, a.right}


def _subst_lit(lit, mapping):
    sign, a = lit
    if isinstance(a, Atom):
        return (sign, Atom(a.sym, tuple(mapping.get(v, v) for v in a.args)))
    return (sign, Eq(mapping.get(a.left, a.left), mapping.get(a.right, a.right)))


def _eliminate_diseq(clause, universal, order):
    while True:
        clause = _tidy_clause(clause)
        if clause is None:
            return None
        target = None
        for lit in clause:
            sign, a = lit
            if not sign and isinstance(a, Eq):
                target = lit
                break
        if target is None:
            return clause
        vs = set().union(*(_lit_vars(l) for l in clause))
        if not vs <= universal:
            return clause
        a = target[1]
        keep, drop = sorted((a.left, a.right), key=order.__getitem__)
        clause = tuple(_subst_lit(l, {drop: keep}) for l in clause if l is not target)


def prenex_cnf(f, budget=CNF_BUDGET, rename=True):
    """Prenex CNF as (prefix, clauses).

    prefix is a list of ("A"|"E", var); clauses is a list of literal tuples,
    each literal a (sign, Atom|Eq) pair.  An empty clause means false.
    """
    free = free_vars(f)
    taken = set(all_vars(f)) | set(free)
    g = _rename_apart(nnf(f), taken, {})
    prefix = []
    matrix = _pull(g, prefix)
    clauses = _cnf(matrix, budget, [0])
    order = {v: i for i, (_, v) in enumerate(prefix)}
    for v in sorted(free):
        order[v] = -1 - len(order)
    universal = {v for q, v in prefix if q == "A"}
    out = []
    seen = set()
    for c in clauses:
        c = _eliminate_diseq(c, universal, order)
        if c is None or frozenset(c) in seen:
            continue
        seen.add(frozenset(c))
        out.append(c)
    if any(len(c) == 0 for c in out):
        out = [()]
    used = set()
    for c in out:
        for lit in c:
            used |= _lit_vars(lit)
    prefix = [(q, v) for q, v in prefix if v in used]
    if rename:
        names = set(free)
        mapping = {}
        i = 0
        for _, v in prefix:
            while f"x{i}" in names:
                i += 1
            mapping[v] = f"x{i}"
            i += 1
        prefix = [(q, mapping[v]) for q, v in prefix]
        out = [tuple(_subst_lit(l, mapping) for l in c) for c in out]
    return prefix, out


def lit_formula(lit):
    sign, a = lit
    return a if sign else Not(a)


def clause_formula(clause):
    return disj(*(lit_formula(l) for l in clause))


def build_prenex(prefix, clauses):
    if any(len(c) == 0 for c in clauses):
        body = FALSE
    else:
        body = conj(*(clause_formula(c) for c in clauses))
    return build_prefix(prefix, body)


def to_prenex_cnf(f, budget=CNF_BUDGET):
    return build_prenex(*prenex_cnf(f, budget))


def split_prenex(f):
    """(prefix, matrix) of a formula already in prenex form."""
    prefix = []
    while isinstance(f, (Forall, Exists)):
        q = "A" if isinstance(f, Forall) else "E"
        prefix.extend((q, v) for v in f.vars)
        f = f.body
    if _has_quantifier(f):
        raise NotPrenex("quantifier inside the matrix")
    return prefix, f


def _has_quantifier(f):
    return isinstance(f, (Forall, Exists)) or any(_has_quantifier(c) for c in children(f))


def is_universal(f):
    """Whether f is equivalent, syntactically, to a universal sentence."""
    try:
        prefix, _ = prenex_cnf(f)
    except CnfBlowup:
        return False
    return all(q == "A" for q, _ in prefix)


# ---------------------------------------------------------------- fragments

@dataclass
class FragmentReport:
    isFO: bool
    isSNP: bool
    isMonadic: bool
    isMonotone: bool
    isConnected: bool
    isEqualityFree: bool
    isExtensional: bool
    hasExtensionClauses: bool
    extensionalPairs: list
    diagnostics: dict

    def flags(self):
        return {k: getattr(self, k) for k in
                ("isFO", "isSNP", "isMonadic", "isMonotone", "isConnected",
                 "isEqualityFree", "isExtensional", "hasExtensionClauses")}


def canonical_database(clause, sig=None):
    """Structure read off the negative literals of a clause.

    Accepts a clause as a formula or as a tuple of (sign, atom) literals.
    Elements are the clause's variables in first-occurrence order.
    """
    lits = clause if isinstance(clause, tuple) and all(isinstance(l, tuple) for l in clause) \
        else _clause_lits(clause)
    order = []
    for sign, a in lits:
        if isinstance(a, Eq):
            if sign:
                raise PositiveEquality("canonical database of a clause with x = y")
        for v in (a.args if isinstance(a, Atom) else (a.left, a.right)):
            if v not in order:
                order.append(v)
    if sig is None:
        sig = []
        for _, a in lits:
            if isinstance(a, Atom) and a.sym not in [k for k, _ in sig]:
                sig.append((a.sym, len(a.args)))
    index = {v: i for i, v in enumerate(order)}
    rels = {k: [] for k, _ in Signature(sig)}
    for sign, a in lits:
        if not sign and isinstance(a, Atom):
            rels[a.sym].append(tuple(index[v] for v in a.args))
    if not order:
        return None
    return Structure(sig, len(order), rels)


def _clause_lits(f):
    parts = f.args if isinstance(f, Or) else (f,)
    out = []
    for p in parts:
        if isinstance(p, Not):
            out.append((False, p.body))
        elif isinstance(p, (Atom, Eq)):
            out.append((True, p))
        else:
            raise ValueError("not a clause")
    return tuple(out)


def _extension_clause(clause, prefix_universal, primed, target, arity):
    if len(clause) != 2:
        return False
    neg = [a for s, a in clause if not s]
    pos = [a for s, a in clause if s]
    if len(neg) != 1 or len(pos) != 1:
        return False
    a, b = neg[0], pos[0]
    if not (isinstance(a, Atom) and isinstance(b, Atom)):
        return False
    if a.sym != primed or b.sym != target or a.args != b.args:
        return False
    return len(set(a.args)) == arity and set(a.args) <= prefix_universal


def classify(s, budget=CNF_BUDGET):
    prefix, clauses = prenex_cnf(s.matrix, budget)
    universal = {v for q, v in prefix if q == "A"}
    diag = {}
    input_syms = set(s.sig.names)
    exist_syms = {n for n, _, _ in s.existentials}

    is_fo = not s.existentials
    if not is_fo:
        diag["isFO"] = "has existentially quantified relations"
    is_snp = all(q == "A" for q, _ in prefix)
    if not is_snp:
        diag["isSNP"] = "first-order prefix contains an existential quantifier"
    is_monadic = all(a == 1 for _, a, _ in s.existentials)
    if not is_monadic:
        diag["isMonadic"] = "an existential relation has arity above 1"

    monotone = True
    eq_free = True
    pos_eq = False
    for c in clauses:
        for sign, a in c:
            if isinstance(a, Eq):
                eq_free = False
                if sign:
                    pos_eq = True
                    monotone = False
            elif sign and a.sym in input_syms:
                monotone = False
    if not monotone:
        diag["isMonotone"] = "an input symbol or equality occurs positively"
    if not eq_free:
        diag["isEqualityFree"] = "equality remains after normalization"
    if uses_equality(s.matrix) and eq_free:
        diag["notes"] = "inequalities were eliminated by variable identification"

    connected = not pos_eq
    if pos_eq:
        diag["isConnected"] = "a clause contains a positive equality"
    else:
        for c in clauses:
            db = canonical_database(c, s.full_sig)
            if db is not None and len(connected_components(db)) > 1:
                connected = False
                diag["isConnected"] = "clause " + formula_to_sexpr(clause_formula(c)) + " is disconnected"
                break

    pairs = []
    weak_ok = True
    strict_ok = True
    reasons = []
    for name, arity, ext in s.existentials:
        if ext is None:
            weak_ok = strict_ok = False
            reasons.append(f"{name} declares no extended symbol")
            continue
        found = [c for c in clauses if _extension_clause(c, universal, ext, name, arity)]
        if not found:
            weak_ok = strict_ok = False
            reasons.append(f"no clause {ext} => {name}")
            continue
        pairs.append((name, ext))
        others = sum(1 for c in clauses for _, a in c if isinstance(a, Atom) and a.sym == ext) - 1
        if others > 0:
            strict_ok = False
            reasons.append(f"{ext} occurs outside its extension clause")
        if ext in exist_syms:
            strict_ok = False
    if len({e for _, e in pairs}) != len(pairs):
        strict_ok = False
        reasons.append("two existentials extend the same symbol")
    if reasons:
        diag["isExtensional"] = "; ".join(reasons)
    return FragmentReport(is_fo, is_snp, is_monadic, monotone, connected, eq_free,
                          strict_ok, weak_ok, pairs, diag)


def check_extensional(s):
    rep = classify(s)
    if not rep.isExtensional:
        raise NotExtensional(rep.diagnostics.get("isExtensional", "not extensional"))
    return rep


# ---------------------------------------------------------------- relativization

def relativize(phi, psi):
    """Relativize the prenex formula phi to the set defined by psi(y)."""
    fv = free_vars(psi)
    if len(fv) > 1:
        raise ValueError("psi must have at most one free variable")
    prefix, matrix = split_prenex(phi)
    y = next(iter(fv)) if fv else None

    def guard(v):
        return psi if y is None else substitute(psi, {y: v})

    ante = [guard(v) for q, v in prefix if q == "A"]
    cons = [guard(v) for q, v in prefix if q == "E"] + [matrix]
    body = conj(*cons)
    if ante:
        body = Implies(conj(*ante), body)
    return build_prefix(prefix, body)


def build_prefix(prefix, body):
    groups = []
    for q, v in prefix:
        if groups and groups[-1][0] == q:
            groups[-1][1].append(v)
        else:
            groups.append((q, [v]))
    for q, vs in reversed(groups):
        body = (Forall if q == "A" else Exists)(tuple(vs), body)
    return body
