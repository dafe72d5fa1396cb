"""Compare the numba kernels with the ARTIFACT_NO_NUMBA=1 fallback.

Each backend runs in its own interpreter, since the switch is read at import.
Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, random, sys, time
from artifact import _kernels
from artifact.relcore import Signature, Structure, canonical_form, find_morphism
from artifact.encodings import dag, henson, precol3
from artifact.solver import decide_ext_eso

repeat = int(sys.argv[1])
E = Signature([("E", 2)])
timings = {}

def clock(name, fn):
    fn()  # warm-up, includes compilation for numba
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    timings[name] = best

rng = random.Random(0)
pool = [Structure(E, 6, {"E": [(a, b) for a in range(6) for b in range(6) if rng.random() < 0.4]})
        for _ in range(200)]
clock("canonical forms, 200 random digraphs n=6",
      lambda: [canonical_form(Structure(A.sig, A.n, A.rels)) for A in pool])
big = henson(9)
targets = [henson(n) for n in range(5, 9)]
clock("embedding search, henson(5..8) into henson(9)",
      lambda: [find_morphism(T, big, "embedding") for T in targets])
rng = random.Random(5)
graphs = []
for _ in range(3):
    und = [(a, b) for a in range(20) for b in range(a + 1, 20) if rng.random() < 0.3]
    graphs.append(Structure(precol3().sig, 20, {"E": und + [(b, a) for a, b in und]}))
clock("backtracking search, precol3 on three random graphs n=20",
      lambda: [decide_ext_eso(precol3(), G, "backtrack") for G in graphs])
path = Structure(E, 5, {"E": [(i, i + 1) for i in range(4)]})
clock("backtracking search, dag on a 5-path", lambda: decide_ext_eso(dag(), path, "backtrack"))
print(json.dumps({"backend": _kernels.BACKEND, "timings": timings}))
"""


def run(no_numba, repeat):
    env = dict(os.environ)
    env.pop("ARTIFACT_NO_NUMBA", None)
    if no_numba:
        env["ARTIFACT_NO_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", WORKLOAD, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    jit = run(False, args.repeat)
    plain = run(True, args.repeat)
    print(f"{'workload':58} {jit['backend']:>10} {plain['backend']:>10} {'speedup':>8}")
    for name, t_jit in jit["timings"].items():
        t_plain = plain["timings"][name]
        print(f"{name:58} {t_jit * 1e3:9.1f}ms {t_plain * 1e3:9.1f}ms {t_plain / t_jit:7.1f}x")


if __name__ == "__main__":
    main()
