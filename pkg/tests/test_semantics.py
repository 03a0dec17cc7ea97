import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stexify.latex import parse
from stexify.semantics import (
    MalformedApplication, SymbolContext, TypeError_, infer_type,
    is_trivially_typed, omdoc_equal, stex_to_term, term_to_omdoc,
    term_to_stex, unaligned_symbols,
)
from stexify.terms import (
    Apply, Base, Fun, IntLit, Sym, Var, free_vars, parse_type, strip_var_types,
)


def to_term(source, registry, recover=False):
    (seg,) = parse(source, registry)
    return stex_to_term(seg.body, registry, recover)


EQ = Sym("mv?equal", "equal")
TIMES = Sym("arithmetics?natarith", "multiplication")


def test_figure_term(registry):
    term = to_term(r"$\eq{\nattimes[cdot]{x,0},0}$", registry)
    assert term == Apply(EQ, (Apply(TIMES, (Var("x"), IntLit(0))), IntLit(0)))


def test_figure_omdoc_matches_checked_in_xml(registry, data_dir):
    term = to_term(r"$\eq{\nattimes[cdot]{x,0},0}$", registry)
    fixture = (data_dir / "fixtures" / "multiplication_eq.xml").read_text()
    assert omdoc_equal(term_to_omdoc(term), fixture)


def test_bare_variable(registry):
    term = to_term("$n$", registry)
    assert term == Var("n")
    assert is_trivially_typed(term)


def test_digit_run_is_integer_literal(registry):
    assert to_term("$42$", registry) == IntLit(42)


def test_operator_mention_is_bare_symbol(registry):
    assert to_term(r"$\nattimesOp$", registry) == TIMES


def test_variable_former_builds_variable(registry):
    assert to_term(r"$\livar{\mathcal{C}}{2}$", registry) == Var(r"\mathcal{C}_2")


def test_styled_variable(registry):
    assert to_term(r"$\mathcal{G}$", registry) == Var(r"\mathcal{G}")


@pytest.mark.parametrize("source", [
    "$ab$",            # juxtaposition
    "$x+1$",           # bare infix without recovery
    r"$\mathbb{N}$",   # non-registry command
    r"$\natplus{}$",   # empty argument
])
def test_malformed_applications(registry, source):
    with pytest.raises(MalformedApplication):
        to_term(source, registry)


def test_infix_recovery_flag(registry):
    term = to_term(r"$\NaturalNumbers=\set{0,1}$", registry, recover=True)
    assert isinstance(term, Apply)
    assert term.head == Sym("generic", "equals")
    # recovered symbols are never aligned, so translation still fails


def test_unaligned_detection(registry, ctx):
    term = to_term(r"$\setdots{0,1,2,3}$", registry)
    missing = unaligned_symbols(term, ctx)
    assert [f"{s.module}?{s.name}" for s in missing] == ["sets?sets?setwithdots"]

    aligned = to_term(r"$\nattimes{a,b}$", registry)
    assert unaligned_symbols(aligned, ctx) == []


# --- type inference -------------------------------------------------------------


def test_infer_multiplication(registry, ctx):
    term = Apply(TIMES, (Var("x", Base("Nat")), IntLit(0)))
    assert infer_type(term, ctx) == Base("Nat")


def test_infer_assigns_untyped_variables(registry, ctx):
    term = to_term(r"$\nattimes[cdot]{x,0}$", registry)
    assert infer_type(term, ctx) == Base("Nat")


def test_infer_subtyping_literal_in_real_slot(registry, ctx):
    term = to_term(r"$\realplus{1,r}$", registry)
    assert infer_type(term, ctx) == Base("Real")


def test_infer_rejects_real_in_nat_slot(registry, ctx):
    real_plus = Sym("arithmetics?realarith", "addition")
    term = Apply(TIMES, (Apply(real_plus, (IntLit(1), IntLit(2))), IntLit(3)))
    with pytest.raises(TypeError_):
        infer_type(term, ctx)


def test_infer_flexary_variadic(registry, ctx):
    term = to_term(r"$\natplus{1,2,3,4,5}$", registry)
    assert infer_type(term, ctx) == Base("Nat")


def test_infer_monotone_under_subtyping(registry, ctx, lattice):
    # a Nat-typed term checks wherever Int or Real is expected
    nat_term = to_term(r"$\natplus{1,2}$", registry)
    inferred = infer_type(nat_term, ctx)
    real_slot = Apply(Sym("arithmetics?realarith", "addition"),
                      (nat_term, IntLit(1)))
    assert lattice.is_subtype(inferred, Base("Real"))
    assert infer_type(real_slot, ctx) == Base("Real")


def test_parse_type_round_trips():
    for text in ("Nat", "(-> Nat Nat)", "(-> Nat Nat Nat)", "(-> (-> Nat Nat) Nat)"):
        ty = parse_type(text)
        assert parse_type(str(ty)) == ty
    with pytest.raises(ValueError):
        parse_type("(Nat Nat)")


# --- OMDoc properties ------------------------------------------------------------


def test_omdoc_equal_ignores_attribute_order_and_whitespace():
    a = '<OMA><OMS cd="smglom:m" name="f"/><OMI>1</OMI></OMA>'
    b = '<OMA>\n  <OMS name="f" cd="smglom:m"/>\n  <OMI>1</OMI>\n</OMA>'
    assert omdoc_equal(a, b)
    assert omdoc_equal(a, a)


def test_omdoc_not_equal_on_different_terms():
    a = term_to_omdoc(Apply(TIMES, (Var("x"), IntLit(0))))
    b = term_to_omdoc(Apply(TIMES, (Var("x"), IntLit(1))))
    assert not omdoc_equal(a, b)


_TERMS = st.deferred(lambda: st.one_of(
    st.integers(min_value=0, max_value=9).map(IntLit),
    st.sampled_from("xyzw").map(Var),
    st.sampled_from([EQ, TIMES]).map(lambda s: s),
    st.tuples(st.sampled_from([EQ, TIMES]),
              st.lists(_TERMS, min_size=1, max_size=3)).map(
        lambda p: Apply(p[0], tuple(p[1]))),
))


@given(_TERMS, _TERMS)
@settings(max_examples=150)
def test_omdoc_injective_up_to_equality(a, b):
    ea, eb = term_to_omdoc(a), term_to_omdoc(b)
    assert omdoc_equal(ea, eb) == (a == b)
    assert omdoc_equal(ea, ea)
    assert omdoc_equal(ea, eb) == omdoc_equal(eb, ea)


# --- round trip with the generator ------------------------------------------------


def test_generated_terms_round_trip(registry, ctx, templates):
    from stexify.synth import SynthConfig, gen_term, task_rng

    cfg = SynthConfig(seed=11)
    starts = [s for s in ctx.symbols if s.alignment is not None]
    rng = random.Random(5)
    for _ in range(150):
        start = rng.choice(starts)
        term = gen_term(ctx, start, cfg, task_rng(11, start.name, rng.randrange(50)))
        rendered = term_to_stex(
            term, ctx, pick_variant=lambda decl, allowed: rng.choice(list(allowed)))
        back = to_term(f"${rendered}$", registry)
        assert strip_var_types(back) == strip_var_types(term)


def test_standalone_alignment_file(tmp_path, registry, typed_symbols, lattice):
    import json

    from stexify.terms import load_alignment_file

    path = tmp_path / "align.jsonl"
    path.write_text(json.dumps(
        {"macro_name": "intplus", "symbol": "realaddition", "variants": [None]}))
    realigned = load_alignment_file(path, typed_symbols)
    ctx2 = SymbolContext(registry, realigned, lattice)
    ts = next(s for s in realigned if s.name == "realaddition")
    assert ts.alignment.macro_name == "intplus"
    assert ctx2.typed(Sym("arithmetics?intarith", "addition")) is ts

    bad = tmp_path / "bad.jsonl"
    bad.write_text(json.dumps({"macro_name": "eq", "symbol": "ghost"}))
    with pytest.raises(ValueError):
        load_alignment_file(bad, typed_symbols)
