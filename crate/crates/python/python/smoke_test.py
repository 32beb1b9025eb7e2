"""Smoke test for the x10clocks extension module."""

import pathlib

import x10clocks

CORPUS = pathlib.Path(__file__).resolve().parents[2] / "core" / "corpus"


def load(name):
    return x10clocks.Program((CORPUS / f"{name}.xc").read_text())


def main():
    ex1 = load("ex1")
    notes = ex1.check()
    assert any(n.startswith("5:7") and n.endswith("{alpha1},{alpha1}") for n in notes), notes

    r = ex1.run(policy="random", seed=3, typed_exec=True)
    assert r.verdict == "finished", r
    assert r.steps == len(r.trace_jsonl.splitlines())

    try:
        load("ex4").check()
    except x10clocks.TypeCheckError as e:
        assert "already quiescent" in str(e)
    else:
        raise AssertionError("ex4 type-checked")

    assert load("ex4").run().error_kind == "E-resume"
    assert load("ex5").run().error_kind == "E-act"

    report = load("ex3").explore()
    assert report.is_clean() and report.states == 147, report
    assert load("ex6").explore().deadlocks >= 1
    assert load("ex7").equiv(seeds=10) == 0

    try:
        x10clocks.Program("let x = in ()")
    except x10clocks.ParseError:
        pass
    else:
        raise AssertionError("parse error not raised")
    print("smoke test ok")


if __name__ == "__main__":
    main()
