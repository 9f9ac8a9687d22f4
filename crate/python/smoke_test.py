"""Exercises the tailmut extension module end to end on the bundled fixtures.

Build and install first:

    pip install --no-build-isolation -e crates/python
"""

import math
import pathlib
import sys

import tailmut

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "crates" / "core" / "fixtures"

SOURCE = """fn lt(a: int, b: int) -> bool {
  return a < b;
}
"""


def check(cond, what):
    if not cond:
        raise AssertionError(what)
    print(f"ok  {what}")


def main():
    print("tailmut", tailmut.version())

    prog = tailmut.compile(SOURCE)
    check(prog.functions == ["lt"], "compile lists functions")
    check(prog.call("lt", 1, 2) is True and prog.call("lt", 2, 1) is False, "call runs the interpreter")
    check("lt" in prog.cfg_dot(), "cfg_dot has one graph per function")

    try:
        tailmut.compile("fn f() -> int {\n  return true;\n}\n")
    except ValueError as e:
        check("type error" in str(e), "type errors raise ValueError")
    else:
        raise AssertionError("bad program compiled")

    pool = tailmut.mutate(prog, operators="traditional")
    counts = pool.operator_counts()
    check(len(pool) == 7 and counts["ROR"] == 5 and counts["ORU"] == 2, "traditional pool of a < b")
    ror = sorted(m.replacement for m in pool.mutants() if m.operator == "ROR")
    check(ror == sorted(["<=", ">", ">=", "==", "!="]), "ROR replacements")
    first = pool[0]
    check(first.apply(prog) != SOURCE, "apply rewrites the source")
    again = tailmut.MutantPool.from_json_lines(pool.to_json_lines())
    check(again.ids() == pool.ids(), "pool JSON lines round-trip")

    model = tailmut.NgramModel.train([SOURCE, (FIXTURES / "corpus" / "util.mini").read_text()])
    ctx = ["return", "a"]
    vocab_total = sum(model.prob(t, ctx) for t in set(prog.tokens) | {"<unk>", "</s>"})
    check(0.0 < vocab_total <= 1.0 + 1e-9, "probabilities of known tokens sum to at most 1")
    toks = prog.tokens
    i = toks.index("<")
    check(model.score(toks, i, "<") == 0.0, "score of the original token is zero")
    check(math.isfinite(model.score(toks, i, ">=")), "score of a replacement is finite")
    check(tailmut.NgramModel.from_json(model.to_json()).prob("a", ["return"]) == model.prob("a", ["return"]),
          "model JSON round-trip")

    all_ids = tailmut.select(prog, pool, policy="random", budget=len(pool), seed=7)
    check(sorted(all_ids) == sorted(pool.ids()), "full budget selects the whole pool")
    check(tailmut.select(prog, pool, policy="random", budget=3, seed=7) == all_ids[:3], "plans are prefix closed")
    nat = tailmut.select(prog, pool, policy="min-dist-nat", budget=2)
    check(len(nat) == 2, "min-dist-nat honours the budget")
    try:
        tailmut.select(prog, pool, policy="min-dist-oracle", budget=1)
    except ValueError:
        check(True, "oracle policy needs coupled ids")
    else:
        raise AssertionError("oracle policy ran without coupled ids")

    report = tailmut.analyze(str(FIXTURES / "defects" / "sign_check"))
    coupled = report["coupled"]
    check(len(coupled["class"]) == 2, "sign_check has two coupled mutants")
    check(set(coupled["line"]) <= set(coupled["method"]) <= set(coupled["class"]), "scopes nest")

    points = tailmut.curve([str(FIXTURES / "defects")], policy="random", steps=10, trials=100, seed=1)
    means = [p[1] for p in points]
    check(len(points) == 10 and means == sorted(means) and means[-1] == 1.0, "random curve rises to 1")
    print("all smoke checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
