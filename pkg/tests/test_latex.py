import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stexify.latex import (
    Command, Group, MathDelim, MathSegment, ParseError, Text, Whitespace,
    find_math, parse, render,
)

MULTIPLICATION_SENTENCE = (
    r"Multiplication $\cdot$ computes the product $a\cdot b$ "
    r"(also written as $ab$ or $a\times b$) of natural numbers $a$ and $b$."
)


@pytest.mark.parametrize("source", [
    "",
    "plain words only",
    r"$a\cdot b$",
    r"$a \* b$",
    "a $x$$y$ b",
    "$$x+y$$",
    r"\[ x \] and \( y \)",
    r"\frac 12 vs \frac{1}{2}",
    r"\sqrt[3]{x}",
    "% a comment\nnext line",
    r"\begin{definition}[scope] body $m$ \end{definition}",
    r"\begin{verbatim}${unbalanced\end{verbatim} tail",
    r"\text{nested $m$ math}",
    r"\symdef[assocarg=1,name=multiplication]{nattimes}[1]{\assoc[p=600]{\nattimesOp}{#1}}",
    "under_score ^caret & ~tilde [brackets]",
    r"\\ line break \{escaped\} \$",
    "tab\tand\r\nnewlines",
])
def test_round_trip(source):
    assert render(parse(source)) == source


def test_parse_inline_math_structure():
    (seg,) = parse(r"$a\cdot b$")
    assert isinstance(seg, MathSegment)
    assert seg.delim is MathDelim.INLINE
    assert seg.body == (Text("a"), Command("cdot"), Whitespace(" "), Text("b"))


def test_empty_source_gives_empty_ast():
    assert parse("") == ()


@pytest.mark.parametrize("source,fragment", [
    (r"\foral{x}{A}\inset{x}{B}}", "extra closing brace"),
    ("{unclosed", "unbalanced group"),
    ("$unclosed", "never closed"),
    ("$$only one $ here", "single '$'"),
    (r"\[ no close", "never closed"),
    (r"\begin{definition} no end", "never closed"),
    (r"\end{definition}", "without matching"),
    (r"\frac{1}", "wrong argument count"),
    (r"$\[ nested \]$", "inside math"),
])
def test_parse_errors(source, fragment):
    with pytest.raises(ParseError) as err:
        parse(source)
    assert fragment in str(err.value)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse(r"ab{cd")
    assert err.value.pos == len("ab{cd")


def test_find_math_on_the_multiplication_sentence():
    segments = find_math(parse(MULTIPLICATION_SENTENCE))
    assert len(segments) == 6
    assert [render(seg) for _, seg in segments] == [
        r"$\cdot$", r"$a\cdot b$", "$ab$", r"$a\times b$", "$a$", "$b$"]


def test_find_math_empty_without_dollars():
    assert find_math(parse("no math at all")) == []


def _scan_spans(source):
    """Independent regex-free scanner for inline-$ spans."""
    spans, i, open_at = [], 0, None
    while i < len(source):
        c = source[i]
        if c == "\\":
            i += 2
            continue
        if c == "$":
            if open_at is None:
                open_at = i
            else:
                spans.append((open_at, i + 1))
                open_at = None
        i += 1
    return spans


def test_find_math_spans_match_independent_scan():
    source = "intro $x+1$ middle $\\cdot$ more text $abc$ end"
    got = [span for span, _ in find_math(parse(source))]
    assert got == _scan_spans(source)


def test_find_math_spans_slice_to_source():
    source = r"text $a\cdot b$ more \text{inner $x$} $$d$$"
    for (start, end), seg in find_math(parse(source)):
        assert source[start:end] == render(seg)


def test_command_arg_views():
    (cmd,) = parse(r"\nattimesOp")
    assert cmd.args == ()
    (cmd, ) = [n for n in parse(r"\sqrt[3]{x}") if isinstance(n, Command)]
    assert cmd.optional_args == [[Text("3")]]
    assert cmd.braced_args == [[Text("x")]]


def test_math_never_nests():
    with pytest.raises(ParseError):
        parse(r"$\[x\]$")
    # '$$' straddling a close and an open splits into two segments
    a, b = parse(r"$a $$ b$")
    assert isinstance(a, MathSegment) and isinstance(b, MathSegment)


# --- property tests -----------------------------------------------------------

_SAFE_TEXT = st.text(
    alphabet=string.ascii_letters + string.digits + "+-*/=<>.,;:()!?&^_~'",
    min_size=1, max_size=8)
_WS = st.sampled_from([" ", "  ", "\n", "\t", " \n "])
_KNOWN_0ARG = st.sampled_from(["cdot", "times", "ldots", "alpha", "quad", ","])


_LEAF = st.one_of(
    _SAFE_TEXT.map(Text),
    _WS.map(Whitespace),
    _KNOWN_0ARG.map(Command),
)


def _math_body(depth):
    if depth == 0:
        return st.lists(_LEAF, max_size=4).map(tuple)
    return st.lists(st.one_of(
        _LEAF,
        _math_body(depth - 1).map(Group),
    ), max_size=4).map(tuple)


def _nodes(depth):
    # empty inline math would render '$$', which re-reads as an unterminated
    # display opener; parsing never produces an empty segment
    math = _math_body(depth).filter(lambda ns: len(ns) > 0).map(
        lambda b: MathSegment(MathDelim.INLINE, b))
    if depth == 0:
        return st.lists(_LEAF, max_size=4).map(tuple)
    return st.lists(st.one_of(
        _LEAF,
        _nodes(depth - 1).map(Group),
        math,
    ), max_size=4).map(tuple)


@given(_nodes(2))
@settings(max_examples=200)
def test_render_parse_render_is_identity(tree):
    # strings in the image of render are accepted and stable under
    # one more parse/render cycle
    first = render(tree)
    reparsed = parse(first)
    assert render(reparsed) == first


@given(st.text(alphabet=string.printable, max_size=40))
@settings(max_examples=300)
def test_parse_is_total(source):
    # arbitrary input either parses losslessly or raises ParseError
    try:
        tree = parse(source)
    except ParseError:
        return
    assert render(tree) == source
