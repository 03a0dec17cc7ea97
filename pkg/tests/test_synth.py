import pytest

from stexify.registry import Registry, load_modsig
from stexify.semantics import SymbolContext, infer_type, is_trivially_typed
from stexify.synth import (
    GenerationFailure, MissingVerbalization, SynthConfig, gen_term,
    synth_corpus, task_rng, verbalize,
)
from stexify.terms import (
    Alignment, Apply, Base, Fun, IntLit, SubtypeLattice, Sym, TypedSymbol,
    Var, contains_symbol, free_vars, subterms,
)


def _mini_ctx():
    """zero : Nat and succ : Nat -> Nat over a tiny registry."""
    _, decls = load_modsig(
        r"\begin{modsig}{mini}"
        r"\symdef[name=successor]{succ}[1]{S(#1)}"
        r"\end{modsig}", archive="t")
    reg = Registry()
    reg.add_module("t?mini", decls)
    symbols = [
        TypedSymbol("zero", Base("Nat"), literal="0"),
        TypedSymbol("succ", Fun((Base("Nat"),), Base("Nat")),
                    alignment=Alignment("succ")),
    ]
    return SymbolContext(reg, symbols, SubtypeLattice.from_edges(["Nat"], []))


def test_forced_single_choice():
    ctx = _mini_ctx()
    succ = ctx.symbols[1]
    cfg = SynthConfig(p_var=0.0, p_fun=0.0, p_up=0.0)
    term = gen_term(ctx, succ, cfg, task_rng(0, "succ", 0))
    assert term == Apply(Sym("t?mini", "successor"), (IntLit(0),))


def test_p_var_one_makes_every_argument_a_variable(ctx):
    cfg = SynthConfig(p_var=1.0, p_fun=0.0, p_up=0.0)
    times = next(s for s in ctx.symbols if s.name == "multiplication")
    for i in range(50):
        term = gen_term(ctx, times, cfg, task_rng(3, "multiplication", i))
        assert all(isinstance(a, Var) for a in term.args)


def test_p_up_zero_keeps_start_at_root(ctx):
    cfg = SynthConfig(p_up=0.0)
    times = next(s for s in ctx.symbols if s.name == "multiplication")
    for i in range(50):
        term = gen_term(ctx, times, cfg, task_rng(4, "multiplication", i))
        assert term.head == Sym("arithmetics?natarith", "multiplication")


def test_containment_and_soundness_sample(ctx):
    cfg = SynthConfig(seed=5)
    starts = [s for s in ctx.symbols if s.alignment is not None]
    for start in starts:
        for i in range(40):
            term = gen_term(ctx, start, cfg, task_rng(5, start.name, i))
            decl = ctx.registry.index[start.alignment.macro_name]
            assert contains_symbol(term, decl.module, decl.omdoc_name)
            if not is_trivially_typed(term):
                infer_type(term, ctx)  # raises on ill-typed output


def test_subtype_narrowing_never_widens(ctx, lattice):
    # Real slots may receive Nat/Int subterms; Nat slots never receive Real
    cfg = SynthConfig(seed=9, subtype_prob=1.0)
    times = next(s for s in ctx.symbols if s.name == "multiplication")
    real_syms = {
        (d.module, d.omdoc_name)
        for s in ctx.symbols if s.alignment is not None
        for d in [ctx.registry.index[s.alignment.macro_name]]
        if isinstance(s.type, Fun) and s.type.result == Base("Real")
    }
    for i in range(80):
        term = gen_term(ctx, times, cfg, task_rng(9, "multiplication", i))
        for sub in subterms(term):
            if isinstance(sub, Apply) and sub.head == Sym(
                    "arithmetics?natarith", "multiplication"):
                for arg in sub.args:
                    if isinstance(arg, Apply):
                        assert (arg.head.module, arg.head.name) not in real_syms
                    if isinstance(arg, Var):
                        assert lattice.is_subtype(arg.type, Base("Nat"))


def test_determinism(ctx):
    cfg = SynthConfig(seed=21)
    start = next(s for s in ctx.symbols if s.name == "equal")
    a = [gen_term(ctx, start, cfg, task_rng(21, "equal", i)) for i in range(25)]
    b = [gen_term(ctx, start, cfg, task_rng(21, "equal", i)) for i in range(25)]
    assert a == b


def test_generation_failure_reported():
    # a function whose parameter type has no inhabitants at all
    _, decls = load_modsig(
        r"\begin{modsig}{m}\symdef[name=f]{ff}[1]{f(#1)}\end{modsig}")
    reg = Registry()
    reg.add_module("m", decls)
    f = TypedSymbol("f", Fun((Base("Void"),), Base("Nat")),
                    alignment=Alignment("ff"))
    ctx = SymbolContext(reg, [f], SubtypeLattice.from_edges(["Void", "Nat"], []))
    cfg = SynthConfig(p_var=0.0, p_fun=0.0)
    with pytest.raises(GenerationFailure):
        gen_term(ctx, f, cfg, task_rng(0, "f", 0))


def test_bad_config_rejected():
    with pytest.raises(ValueError):
        SynthConfig(p_var=0.7, p_fun=0.7)
    with pytest.raises(ValueError):
        SynthConfig(p_var=-0.1)
    with pytest.raises(ValueError):
        SynthConfig(fun_decay=1.0)


# --- verbalization ---------------------------------------------------------------


def _sample_terms(ctx, n=30, seed=13):
    starts = [s for s in ctx.symbols if s.alignment is not None]
    cfg = SynthConfig(seed=seed)
    out = []
    for start in starts:
        for i in range(n // len(starts) + 1):
            out.append(gen_term(ctx, start, cfg, task_rng(seed, start.name, i)))
    return out[:n]


def test_closed_term_degenerates_to_conclusion(ctx, templates):
    term = Apply(Sym("arithmetics?natarith", "multiplication"),
                 (IntLit(2), IntLit(3)))
    sentence = verbalize(term, templates, task_rng(1, "t", 0), ctx)
    assert sentence.count("$") == 2
    assert sentence.endswith(".")


def test_prefixed_frames_use_prefixed_forms(ctx, templates):
    # a frame starting with "Assume"/"Whenever" never picks "<var> be a ..."
    term = Apply(Sym("arithmetics?natarith", "multiplication"),
                 (Var("a", Base("Nat")), Var("b", Base("Nat"))))
    for i in range(40):
        sentence = verbalize(term, templates, task_rng(2, "t", i), ctx)
        if sentence.startswith(("Assume", "Whenever", "Suppose")):
            assert " be " not in sentence.split(". ")[0].split(", then")[0]
        else:
            assert sentence.startswith("Let ")


def test_missing_verbalization_raises(ctx):
    from stexify.synth import VerbalizationSet, Frame
    empty = VerbalizationSet(frames=[Frame("Let <vars>. ", "Then <expr>.", "suffixed")],
                             closed_frames=["<expr>."], types={})
    term = Apply(Sym("arithmetics?natarith", "multiplication"),
                 (Var("a", Base("Nat")), IntLit(1)))
    with pytest.raises(MissingVerbalization):
        verbalize(term, empty, task_rng(3, "t", 0), ctx)


def test_verbalized_sentences_parse_with_registry(ctx, templates, registry):
    from stexify.latex import parse

    for i, term in enumerate(_sample_terms(ctx)):
        sentence = verbalize(term, templates, task_rng(17, "s", i), ctx)
        parse(sentence, registry)


# --- corpus synthesis -------------------------------------------------------------


def test_synth_corpus_counts_and_validation(ctx, templates, registry):
    entries = synth_corpus(ctx, templates, 4, SynthConfig(seed=2))
    starts = [s for s in ctx.symbols if s.alignment is not None]
    assert len(entries) == 4 * len(starts)
    for entry in entries:
        assert entry.synthetic
        entry.validate(registry)


def test_synth_corpus_deterministic_replay(ctx, templates):
    a = synth_corpus(ctx, templates, 3, SynthConfig(seed=8))
    b = synth_corpus(ctx, templates, 3, SynthConfig(seed=8))
    assert [e.to_json() for e in a] == [e.to_json() for e in b]


def test_synth_corpus_rejects_nonpositive_count(ctx, templates):
    with pytest.raises(ValueError):
        synth_corpus(ctx, templates, 0, SynthConfig())
