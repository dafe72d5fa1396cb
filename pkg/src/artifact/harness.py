"""Cross-check harness: run both sides of a reduction and count agreements."""
import hashlib
import random
import time
from dataclasses import dataclass, field

from .encodings import dag, kcolor
from .errors import BadParams
from .eval import eval_fo, her_check
from .logic import EsoSentence, parse_sentence
from .relcore import Structure, enumerate_structures, serialize_structure
from .solver import DEFAULT_BUDGET, decide_csp_universal, decide_ext_eso
from .xform import add_extension_scaffold, connectedize, csp_to_snp, exteso_to_herfo, herfo_to_exteso, snp_to_csp


def digest(text):
    return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass
class XcheckReport:
    reduction: str
    instanceCount: int = 0
    agreements: int = 0
    disagreements: list = field(default_factory=list)
    elapsed: float = 0.0
    seed: int = 0

    @property
    def ok(self):
        return not self.disagreements

    def as_dict(self, limit=10):
        return {
            "reduction": self.reduction,
            "instanceCount": self.instanceCount,
            "agreements": self.agreements,
            "disagreements": [{"input": d, "expected": e, "got": g} for d, e, g in self.disagreements[:limit]],
            "elapsed": round(self.elapsed, 3),
            "seed": self.seed,
        }


def decide(sentence, A, budget=DEFAULT_BUDGET):
    if sentence.is_fo:
        return eval_fo(sentence.matrix, A)
    return decide_ext_eso(sentence, A, budget=budget).accepted


# each builder takes the input sentence and returns (lhs, rhs) deciders on input structures

def _ext2her(psi, budget):
    red = exteso_to_herfo(psi)
    return (lambda A: decide(psi, A, budget),
            lambda A: not her_check(red.outSentence, red.forward(A)).member)


def _her2ext(phi, budget):
    red = herfo_to_exteso(phi.matrix, phi.sig)
    return (lambda A: her_check(phi.matrix, A).member,
            lambda A: not decide(red.outSentence, red.forward(A), budget))


def _snp2csp(psi, budget):
    out = snp_to_csp(psi).outSentence
    return (lambda A: decide(psi, A, budget),
            lambda A: decide_csp_universal(out, A).accepted)


def _csp2snp(phi, budget):
    Psi = csp_to_snp(phi.matrix, phi.sig).outSentence
    return (lambda A: decide_csp_universal(phi.matrix, A).accepted,
            lambda A: decide(Psi, A, budget))


def _connectedize(psi, budget):
    red = connectedize(psi)
    return (lambda A: decide(psi, A, budget),
            lambda A: decide(red.outSentence, red.forward(A), budget))


def _scaffold(psi, budget):
    out = add_extension_scaffold(psi)

    def lift(A):
        return Structure(out.sig, A.n, dict(A.rels))

    return (lambda A: decide(psi, A, budget), lambda A: decide(out, lift(A), budget))


HER_BATTERY = [
    "(signature (E 2)) (forall (x) (not (E x x)))",
    "(signature (E 2)) (forall (x y) (implies (E x y) (E y x)))",
    "(signature (E 2)) (exists (x y) (not (= x y)))",
    "(signature (E 2)) (forall (x) (exists (y) (E x y)))",
    "(signature (E 2)) (exists (x) (forall (y) (or (= x y) (E x y))))",
]

SLO = """(signature (E 2))
(and (forall (x) (not (E x x)))
     (forall (x y z) (implies (and (E x y) (E y z)) (E x z))))"""

CATALOGUE = {
    "ext2her": (_ext2her, lambda: [dag()]),
    "her2ext": (_her2ext, lambda: [parse_sentence(t) for t in HER_BATTERY]),
    "snp2csp": (_snp2csp, lambda: [kcolor(2)]),
    "csp2snp": (_csp2snp, lambda: [parse_sentence(SLO)]),
    "connectedize": (_connectedize, lambda: [kcolor(2)]),
    "scaffold": (_scaffold, lambda: [dag()]),
}


def _random_structure(rng, sig, n):
    p = rng.choice([0.2, 0.35, 0.5])
    rels = {}
    for name, r in sig:
        rels[name] = [t for t in _tuples(n, r) if rng.random() < p]
    return Structure(sig, n, rels)


def _tuples(n, r):
    if r == 0:
        return [()]
    return [(a,) + t for a in range(n) for t in _tuples(n, r - 1)]


def instances(sig, exhaustive_n, samples, seed, max_n=None):
    """Every labelled structure up to exhaustive_n, then seeded random ones."""
    yield from enumerate_structures(sig, exhaustive_n)
    rng = random.Random(seed)
    hi = max_n or exhaustive_n + 2
    for _ in range(samples):
        yield _random_structure(rng, sig, rng.randint(1, hi))


def run_xcheck(name, sentences=None, exhaustive_n=2, samples=20, seed=0, budget=DEFAULT_BUDGET, builder=None):
    if builder is None:
        if name not in CATALOGUE:
            raise BadParams(f"unknown reduction {name!r}; known: {', '.join(CATALOGUE)}")
        builder = CATALOGUE[name][0]
    if sentences is None:
        sentences = CATALOGUE[name][1]()
    report = XcheckReport(name, seed=seed)
    start = time.perf_counter()
    for s in sentences:
        lhs, rhs = builder(s, budget)
        for A in instances(s.sig, exhaustive_n, samples, seed):
            want, got = lhs(A), rhs(A)
            report.instanceCount += 1
            if want == got:
                report.agreements += 1
            else:
                report.disagreements.append((digest(serialize_structure(A)), want, got))
    report.elapsed = time.perf_counter() - start
    return report


def as_eso(s, sig=None):
    return s if isinstance(s, EsoSentence) else EsoSentence(sig, (), s)
