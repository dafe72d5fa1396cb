"""Command-line front end.

Exit codes: 0 success, 1 disagreement or inconsistent oracle, 2 parse and
validation errors, 3 budget and size limits.  Errors are reported as one
JSON object on stderr.
"""
import json
import sys
from pathlib import Path

import click

from . import encodings as enc
from .errors import ArtifactError, BadParams
from .eval import eval_fo, her_check
from .harness import CATALOGUE, digest, run_xcheck
from .logic import EsoSentence, parse_sentence, serialize_sentence
from .relcore import Structure, parse_structure, serialize_structure
from .solver import DEFAULT_BUDGET, decide_csp_universal, decide_ext_eso, extract_witness
from .xform import (add_extension_scaffold, bounds_of_universal, connectedize, csp_to_snp, exteso_to_herfo,
                    herfo_to_exteso, snp_to_csp)


def _read(path):
    return Path(path).read_text()


def _sentence(path):
    return parse_sentence(_read(path))


def _structure(path):
    return parse_structure(_read(path))


def _emit(ctx, payload, text):
    if ctx.obj["json"]:
        click.echo(json.dumps(payload, sort_keys=True))
    else:
        click.echo(text)


def _write(ctx, text, ext):
    """Store text under --out with a content-addressed name, or print it when --out is unset."""
    out = ctx.obj["out"]
    if out is None:
        return None
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{digest(text)}.{ext}"
    path.write_text(text)
    return str(path)


def _write_or_print(ctx, text, ext, summary):
    path = _write(ctx, text, ext)
    if path is None:
        click.echo(text, nl=False)
    else:
        _emit(ctx, dict(summary, path=path), path)


def _rels(A, names):
    return {name: [list(t) for t in sorted(A.rels[name])] for name in names}


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ArtifactError as exc:
            err = {"error": type(exc).__name__, "message": str(exc), "exit": exc.exit_code}
            click.echo(json.dumps(err, sort_keys=True), err=True)
            ctx.exit(exc.exit_code)
        except (OSError, UnicodeDecodeError) as exc:
            err = {"error": type(exc).__name__, "message": str(exc), "exit": 2}
            click.echo(json.dumps(err, sort_keys=True), err=True)
            ctx.exit(2)


@click.group(cls=_Group)
@click.option("--budget", type=int, default=DEFAULT_BUDGET, show_default=True, help="Search node budget.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for sampled instances.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Directory for generated files (content-addressed names).")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable JSON output.")
@click.pass_context
def main(ctx, budget, seed, out, as_json):
    """Decide, transform and cross-check extensional ESO sentences."""
    ctx.obj = {"budget": budget, "seed": seed, "out": out, "json": as_json}


@main.command()
@click.argument("sentence_file")
@click.argument("structure_file")
@click.pass_context
def check(ctx, sentence_file, structure_file):
    """Decide a sentence on a structure."""
    s, A = _sentence(sentence_file), _structure(structure_file)
    if s.is_fo:
        value = eval_fo(s.matrix, A)
        _emit(ctx, value, "true" if value else "false")
        return
    v = decide_ext_eso(s, A, budget=ctx.obj["budget"])
    payload = {"accepted": v.accepted}
    if v.accepted:
        payload["witness"] = _rels(v.witness.expansion(s), [n for n, _, _ in s.existentials])
    _emit(ctx, payload, "accepted" if v.accepted else "rejected")


@main.command()
@click.argument("sentence_file")
@click.argument("structure_file")
@click.option("--strategy", type=click.Choice(["auto", "bruteforce", "backtrack", "selfreduce"]), default="auto")
@click.pass_context
def solve(ctx, sentence_file, structure_file, strategy):
    """Decide an extensional sentence with a chosen strategy and report search statistics."""
    s, A = _sentence(sentence_file), _structure(structure_file)
    v = decide_ext_eso(s, A, strategy=strategy, budget=ctx.obj["budget"])
    payload = {"accepted": v.accepted, "strategy": strategy, "stats": v.stats}
    if v.accepted and v.witness is not None:
        payload["witness"] = _rels(v.witness.expansion(s), [n for n, _, _ in s.existentials])
    _emit(ctx, payload, "accepted" if v.accepted else "rejected")


@main.command()
@click.argument("phi_file")
@click.argument("structure_file")
@click.pass_context
def her(ctx, phi_file, structure_file):
    """Whether every nonempty induced substructure satisfies a first-order sentence."""
    s, A = _sentence(phi_file), _structure(structure_file)
    if not s.is_fo:
        raise BadParams("her expects a first-order sentence")
    v = her_check(s.matrix, A)
    cx = list(v.counterexample) if v.counterexample is not None else None
    _emit(ctx, {"member": v.member, "counterexample": cx},
          "member" if v.member else f"not a member; counterexample {cx}")


@main.command()
@click.argument("phi_file")
@click.argument("structure_file")
@click.pass_context
def csp(ctx, phi_file, structure_file):
    """Whether a structure maps homomorphically to a model of a universal sentence."""
    s, A = _sentence(phi_file), _structure(structure_file)
    v = decide_csp_universal(s.matrix, A)
    payload = {"accepted": v.accepted}
    if v.accepted:
        B, m = v.witness
        payload["template"] = serialize_structure(B)
        payload["map"] = list(m.map)
    _emit(ctx, payload, "accepted" if v.accepted else "rejected")


REDUCTIONS = ("her2ext", "ext2her", "snp2csp", "csp2snp", "connectedize", "scaffold", "bounds")


@main.command()
@click.argument("name", type=click.Choice(REDUCTIONS))
@click.argument("sentence_file")
@click.argument("structure_file", required=False)
@click.pass_context
def reduce(ctx, name, sentence_file, structure_file):
    """Apply a reduction to a sentence and optionally to a structure."""
    if ctx.obj["out"] is None:
        ctx.obj["out"] = Path("out")
    s = _sentence(sentence_file)
    A = _structure(structure_file) if structure_file else None
    polarity, forward, extra = "same", None, {}
    if name == "her2ext":
        red = herfo_to_exteso(s.matrix, s.sig)
        out, forward, polarity = red.outSentence, red.forward, red.polarity
    elif name == "ext2her":
        red = exteso_to_herfo(s)
        sig = red.info.get("rho", s.sig)
        out, forward, polarity = EsoSentence(sig, (), red.outSentence), red.forward, red.polarity
    elif name == "snp2csp":
        out = EsoSentence(s.sig, (), snp_to_csp(s).outSentence)
        extra["decide"] = "csp"
    elif name == "csp2snp":
        out = csp_to_snp(s.matrix, s.sig).outSentence
    elif name == "connectedize":
        red = connectedize(s)
        out, forward = red.outSentence, red.forward
    elif name == "scaffold":
        out = add_extension_scaffold(s)

        def forward(B):
            return Structure(out.sig, B.n, dict(B.rels))
    else:
        bounds = bounds_of_universal(s.matrix, s.sig)
        paths = [_write(ctx, serialize_structure(F), "fst") for F in bounds]
        _emit(ctx, {"reduction": name, "bounds": paths}, "\n".join(paths))
        return
    payload = {"reduction": name, "polarity": polarity, "sentence": _write(ctx, serialize_sentence(out), "eso")}
    payload.update(extra)
    lines = [f"polarity {polarity}", payload["sentence"]]
    if A is not None:
        B = (forward or (lambda X: X))(A)
        payload["structure"] = _write(ctx, serialize_structure(B), "fst")
        payload["size"] = B.n
        lines.append(payload["structure"])
    _emit(ctx, payload, "\n".join(lines))


def _pairs(text):
    out = {}
    for item in filter(None, (text or "").split(",")):
        a, _, b = item.partition(":")
        out[a.strip()] = b.strip()
    return out


def _cnf(text, n):
    clauses = [tuple(int(v) for v in c.split()) for c in text.split(";") if c.strip()]
    if n is None:
        n = 1 + max((v for c in clauses for v in c), default=-1)
    return enc.MonotoneCnf(n, clauses)


@main.command()
@click.argument("problem", type=click.Choice(sorted(enc.PROBLEMS)))
@click.option("--k", type=int, help="Number of colours (kcolor).")
@click.option("--bounds", "bound_files", multiple=True, help="Forbidden structures (sandwich, orient).")
@click.option("--template", help="Template structure (csp, csp_full, surj_csp).")
@click.option("--phi", "phi_file", help="Word property over the letters, < and s (cts).")
@click.option("--alphabet", help="Comma-separated letters (cts); defaults to the unary symbols of --phi.")
@click.option("--n", type=int, help="Tournament size (henson).")
@click.pass_context
def encode(ctx, problem, k, bound_files, template, phi_file, alphabet, n):
    """Emit the sentence for a catalogue problem."""
    params = {}
    if problem == "kcolor":
        params["k"] = k if k is not None else 3
    elif problem in ("sandwich", "orient"):
        params["forbidden"] = [_structure(f) for f in bound_files]
    elif problem in ("csp", "csp_full", "surj_csp"):
        if not template:
            raise BadParams(f"{problem} needs --template")
        params["B"] = _structure(template)
    elif problem == "cts":
        if not phi_file:
            raise BadParams("cts needs --phi")
        phi = _sentence(phi_file)
        letters = alphabet.split(",") if alphabet else [a for a, r in phi.sig if r == 1]
        params = {"phi": phi.matrix, "alphabet": letters}
    elif problem == "henson":
        params["n"] = n if n is not None else 5
    result = enc.encode(problem, **params)
    if isinstance(result, Structure):
        _write_or_print(ctx, serialize_structure(result), "fst", {"problem": problem})
    else:
        _write_or_print(ctx, serialize_sentence(result), "eso", {"problem": problem})


@main.group()
def instance():
    """Build problem instances as structures."""


@instance.command("gi")
@click.option("--G", "g_file", required=True)
@click.option("--H", "h_file", required=True)
@click.option("--partial", default="", help="Pairs a:b of the partial map.")
@click.pass_context
def instance_gi(ctx, g_file, h_file, partial):
    pairs = {int(a): int(b) for a, b in _pairs(partial).items()}
    A = enc.build_gi_instance(enc.GiInstance(_structure(g_file), _structure(h_file), pairs))
    _write_or_print(ctx, serialize_structure(A), "fst", {"problem": "gi"})


@instance.command("mdual")
@click.option("--phi", required=True, help="Clauses as space-separated variables, joined by ';'.")
@click.option("--psi", required=True)
@click.option("--vars", "nvars", type=int, default=None)
@click.pass_context
def instance_mdual(ctx, phi, psi, nvars):
    f, g = _cnf(phi, nvars), _cnf(psi, nvars)
    if nvars is None:
        n = max(f.varCount, g.varCount)
        f, g = enc.MonotoneCnf(n, f.clauses), enc.MonotoneCnf(n, g.clauses)
    A = enc.build_mdual_instance(f, g)
    _write_or_print(ctx, serialize_structure(A), "fst", {"problem": "mdual"})


@instance.command("sandwich")
@click.option("--required", required=True)
@click.option("--allowed", required=True)
@click.pass_context
def instance_sandwich(ctx, required, allowed):
    A = enc.sandwich_instance(_structure(required), _structure(allowed))
    _write_or_print(ctx, serialize_structure(A), "fst", {"problem": "sandwich"})


@instance.command("orient")
@click.option("--graph", "graph_file", required=True)
@click.option("--arcs", default="", help="Fixed arcs a:b.")
@click.pass_context
def instance_orient(ctx, graph_file, arcs):
    fixed = [(int(a), int(b)) for a, b in _pairs(arcs).items()]
    A = enc.orient_instance(_structure(graph_file), fixed)
    _write_or_print(ctx, serialize_structure(A), "fst", {"problem": "orient"})


@instance.command("precol3")
@click.option("--graph", "graph_file", required=True)
@click.option("--colours", default="", help="Pre-colouring v:R, v:G or v:B.")
@click.pass_context
def instance_precol3(ctx, graph_file, colours):
    col = {int(v): c for v, c in _pairs(colours).items()}
    if any(c not in ("R", "G", "B") for c in col.values()):
        raise BadParams("colours are R, G and B")
    A = enc.precol3_instance(_structure(graph_file), col)
    _write_or_print(ctx, serialize_structure(A), "fst", {"problem": "precol3"})


@main.command()
@click.argument("sentence_file")
@click.argument("structure_file")
@click.pass_context
def witness(ctx, sentence_file, structure_file):
    """Build a witness chain by self-reduction, using the solver as oracle."""
    if ctx.obj["out"] is None:
        ctx.obj["out"] = Path("out")
    s, A = _sentence(sentence_file), _structure(structure_file)
    budget = ctx.obj["budget"]
    chain = extract_witness(s, A, oracle=lambda B: decide_ext_eso(s, B, budget=budget).accepted)
    if chain is None:
        _emit(ctx, {"accepted": False, "chain": None}, "rejected")
        return
    paths = [_write(ctx, serialize_structure(B), "fst") for B in chain]
    _emit(ctx, {"accepted": True, "chain": paths}, "\n".join(paths))


@main.command()
@click.argument("name", type=click.Choice(sorted(CATALOGUE)))
@click.option("--sentence", "sentence_files", multiple=True, help="Input sentences (default: built-in battery).")
@click.option("--exhaustive-n", type=int, default=2, show_default=True)
@click.option("--samples", type=int, default=20, show_default=True)
@click.pass_context
def xcheck(ctx, name, sentence_files, exhaustive_n, samples):
    """Check a reduction against the deciders on both sides."""
    sentences = [_sentence(f) for f in sentence_files] or None
    report = run_xcheck(name, sentences, exhaustive_n=exhaustive_n, samples=samples,
                        seed=ctx.obj["seed"], budget=ctx.obj["budget"])
    text = (f"{name}: {report.agreements}/{report.instanceCount} agree, "
            f"{len(report.disagreements)} disagreements (seed {report.seed})")
    _emit(ctx, report.as_dict(), text)
    ctx.exit(0 if report.ok else 1)


@main.group()
def gen():
    """Generate structures."""


@gen.command("henson")
@click.option("--n", type=int, required=True)
@click.pass_context
def gen_henson(ctx, n):
    _write_or_print(ctx, serialize_structure(enc.henson(n)), "fst", {"problem": "henson"})


if __name__ == "__main__":
    sys.exit(main())
