"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one pass/fail
line per criterion.  Each criterion enforces its own runtime budget.
"""

import functools
import json
import time

import pytest

from stexify.corpus import build_entries, collect_documents, to_training_examples
from stexify.evaluator import (CHECK_ORDER, EvalReport, Outcome, aggregate,
                               render_report, run_checks)
from stexify.latex import find_math, parse, render
from stexify.normalize import normalize
from stexify.registry import expand
from stexify.semantics import infer_type, is_trivially_typed
from stexify.synth import SynthConfig, gen_term, synth_corpus, task_rng
from stexify.terms import contains_symbol


def criterion(name, seconds):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\n[acceptance] {name}: FAIL")
                raise
            elapsed = time.perf_counter() - start
            if elapsed > seconds:
                print(f"\n[acceptance] {name}: FAIL (took {elapsed:.1f}s > {seconds}s)")
                raise AssertionError(f"{name} exceeded {seconds}s: {elapsed:.1f}s")
            print(f"\n[acceptance] {name}: PASS ({elapsed:.2f}s)")
        return wrapper
    return deco


# --- 1. signature-module golden test -------------------------------------------


@criterion("figure golden expansions + OMDoc", seconds=1.0)
def test_figure_goldens(registry, ctx, data_dir):
    def expanded(source):
        return render(normalize(expand(parse(source, registry), registry)))

    assert expanded(r"$\nattimes[cdot]{a,b}$") == r"$a\cdot b$"
    assert expanded(r"$\nattimes{a,b}$") == r"$a\*b$"
    assert expanded(r"$\nattimes[x]{a,b}$") == r"$a\times b$"

    from stexify.semantics import omdoc_equal, stex_to_term, term_to_omdoc
    (seg,) = parse(r"$\eq{\nattimes[cdot]{x,0},0}$", registry)
    xml = term_to_omdoc(stex_to_term(seg.body, registry))
    fixture = (data_dir / "fixtures" / "multiplication_eq.xml").read_text()
    assert omdoc_equal(xml, fixture)


# --- 2. round-trip property suite ------------------------------------------------


@pytest.fixture(scope="module")
def bundled_fragments(registry, ctx, templates, data_dir):
    docs = collect_documents(data_dir / "corpus_src")
    entries, reports = build_entries(docs, registry)
    assert not [e for r in reports for e in r.errors]
    synth = synth_corpus(ctx, templates, 50, SynthConfig(seed=1234))
    fragments = []
    for entry in entries + synth:
        fragments.append(entry.s_stex)
        fragments.append(entry.s_latex)
    return fragments


@criterion("round-trip + idempotence over bundled corpus", seconds=10.0)
def test_round_trip_suite(registry, bundled_fragments):
    assert len(bundled_fragments) >= 500
    failures = 0
    for text in bundled_fragments:
        tree = parse(text, registry)
        if render(tree) != text:
            failures += 1
            continue
        once = normalize(tree)
        if normalize(once) != once:
            failures += 1
    assert failures == 0


# --- 3. synthesizer soundness ------------------------------------------------------


@criterion("synthesizer soundness over 10,000 terms", seconds=30.0)
def test_synthesizer_soundness(ctx):
    starts = [s for s in ctx.symbols if s.alignment is not None]
    assert len(ctx.symbols) == 12
    per_start = 10_000 // len(starts) + 1

    def run(seed):
        terms = []
        for start in starts:
            decl = ctx.registry.index[start.alignment.macro_name]
            for i in range(per_start):
                term = gen_term(ctx, start, SynthConfig(seed=seed),
                                task_rng(seed, start.name, i))
                assert contains_symbol(term, decl.module, decl.omdoc_name)
                if not is_trivially_typed(term):
                    infer_type(term, ctx)  # raises on unsound output
                terms.append(repr(term))
        return terms

    first = run(99)
    assert len(first) >= 10_000
    assert first == run(99)  # byte-identical replay


# --- 4. corpus accounting -----------------------------------------------------------


@criterion("corpus accounting on bundled documents", seconds=60.0)
def test_corpus_accounting(registry, data_dir):
    docs = collect_documents(data_dir / "corpus_src")
    entries, _ = build_entries(docs, registry)
    lines = [line for e in entries for line in to_training_examples(e)]
    recount = sum(len(find_math(parse(e.s_stex, registry))) for e in entries)
    assert len(lines) == recount
    assert all(line.count("<s>") == 3 for line in lines)


def _make_stub_world(tmp_path):
    """92 aligned stub symbols (46 unary functions + 46 constants) backed by
    a generated signature module."""
    reg_dir = tmp_path / "registry"
    reg_dir.mkdir()
    decls = []
    symbols = []
    for k in range(46):
        decls.append(rf"\symdef[name=stubfn{k}]{{stubfn{k}}}[1]{{\mathsf{{f}}_{{{k}}}(#1)}}")
        symbols.append({"name": f"stubfn{k}", "type": "(-> Nat Nat)",
                        "alignment": {"macro_name": f"stubfn{k}", "variants": [None]}})
        decls.append(rf"\symdef[name=stubc{k}]{{stubc{k}}}{{\mathsf{{c}}_{{{k}}}}}")
        symbols.append({"name": f"stubc{k}", "type": "Nat",
                        "alignment": {"macro_name": f"stubc{k}", "variants": [None]}})
    (reg_dir / "stub.tex").write_text(
        "\\begin{modsig}{stub}\n" + "\n".join(decls) + "\n\\end{modsig}\n")
    (reg_dir / "MANIFEST").write_text("stub.tex\n")
    symfile = tmp_path / "symbols.jsonl"
    symfile.write_text("\n".join(json.dumps(s) for s in symbols))
    return reg_dir / "MANIFEST", symfile


@criterion("synth --per-symbol 250 x 92 symbols = 23,000 entries", seconds=60.0)
def test_paper_scale_synthesis_arithmetic(tmp_path):
    from stexify.cli import main

    manifest, symfile = _make_stub_world(tmp_path)
    out = tmp_path / "synth.jsonl"
    code = main(["synth", "--registry", str(manifest), "--symbols", str(symfile),
                 "--per-symbol", "250", "--seed", "0", "-o", str(out)])
    assert code == 0
    n = sum(1 for line in out.open() if line.strip())
    assert n == 23_000


# --- 5. evaluator lattice + goldens ---------------------------------------------------


def _mutate(m_latex, m_stex, i):
    """Deterministic model-output variants for fixture triples."""
    variant = i % 5
    if variant == 0:
        return m_stex                      # perfect output
    if variant == 1:
        return m_latex                     # identity output
    if variant == 2:
        return m_stex[:-1] if m_stex.endswith("}") else m_stex + "}"  # broken braces
    if variant == 3:
        return f"{m_stex}=x"               # spurious bare infix
    return f"\\unknownmacro{{{m_latex}}}"  # undisambiguated command


@criterion("evaluator lattice over 200 fixtures + goldens + identity run", seconds=30.0)
def test_evaluator_fixture_set(registry, ctx, templates, data_dir):
    rows = [json.loads(line) for line in
            (data_dir / "fixtures" / "evalex.jsonl").read_text().splitlines()]
    triples = [(r["s_latex"], r["s_stex"], r["s_r"]) for r in rows]
    expected = [r["expected"] for r in rows]

    synth = synth_corpus(ctx, templates, 10, SynthConfig(seed=77))
    i = 0
    for entry in synth:
        for m_latex, m_stex in zip(entry.math_latex, entry.math_stex):
            triples.append((m_latex, m_stex, _mutate(m_latex, m_stex, i)))
            i += 1
            if len(triples) >= 200:
                break
        if len(triples) >= 200:
            break
    assert len(triples) == 200

    results = [run_checks(sl, ss, sr, registry, ctx) for sl, ss, sr in triples]
    for row_expected, result in zip(expected, results):
        got = {c: result.outcomes[c].value for c in CHECK_ORDER}
        assert got == row_expected
    for result in results:
        assert result.lattice_violations == []

    # identity translator on a macro-free corpus: eval_latex = islatex = 100%
    macro_free = [("$n$", "$n$"), ("$a+b$", "$a+b$"), (r"$x\leq y$", r"$x\leq y$"),
                  ("$f(a)$", "$f(a)$"), ("$2$", "$2$")]
    identity_results = [run_checks(sl, ss, sl, registry, ctx)
                        for sl, ss in macro_free]
    report = aggregate(identity_results)
    assert report.percentages["islatex"] == 100.0
    assert report.percentages["eval_latex"] == 100.0

    # report renders with the fixed row order
    lines = render_report(aggregate(results)).splitlines()
    assert [line.split()[0] for line in lines] == ["Total", *CHECK_ORDER]


# --- 6. paper-scale table format -------------------------------------------------------


@criterion("eight-row table format for externally produced outputs", seconds=5.0)
def test_table_format_for_any_model(registry, ctx):
    # The published percentages (islatex 96.9, eval_latex 64.0, stexcheck 60.2,
    # provided_stex 47.2, omdoc 76.4, translated 63.5, inferred 59.6,
    # stex_as_omdoc 53.4 over 161 inputs) required a large pretrained model
    # and are NOT reproduced here; the harness only guarantees the format.
    reference = EvalReport(total=161, percentages={
        "islatex": 96.9, "stexcheck": 60.2, "eval_latex": 64.0,
        "omdoc": 76.4, "translated": 63.5, "inferred": 59.6,
        "provided_stex": 47.2, "stex_as_omdoc": 53.4})
    table = render_report(reference)
    lines = table.splitlines()
    assert lines[0].split() == ["Total", "inputs", "161"]
    assert [line.split()[0] for line in lines[1:]] == list(CHECK_ORDER)
    assert lines[1].endswith("96.9%")

    # arbitrary externally produced outputs flow through the same path
    triples = [("$n$", "$n$", "$n$"), ("$m$", "$m$", "$m"),
               (r"a\cdot b", r"\nattimes[cdot]{a,b}", r"\nattimes[cdot]{a,b}")]
    table2 = render_report(aggregate(
        [run_checks(*t, registry, ctx) for t in triples]))
    assert [line.split()[0] for line in table2.splitlines()] == ["Total", *CHECK_ORDER]
    assert all(line.endswith("%") for line in table2.splitlines()[1:])
