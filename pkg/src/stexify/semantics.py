"""Mini OMDoc layer: sTeX math to typed terms, type inference, OMDoc XML.

Stands in for the LaTeXML + MMT pipeline: registry macros map to symbols
identified by (module, omdoc-name); alignments attach types from the
typed symbol set so terms can be checked by inference.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .latex import Command, Comment, Group, MathSegment, Text, Whitespace, render
from .normalize import DEFAULT_CONFIG, NormalizationConfig, _norm_nodes
from .registry import Registry, SymbolDecl, _VAR_COMMANDS, _split_top_commas
from .terms import (
    Apply, Base, Fun, IntLit, SubtypeLattice, Sym, Term, TypedSymbol, Var,
    subterms,
)


class SemanticError(Exception):
    pass


class MalformedApplication(SemanticError):
    pass


class UnalignedSymbol(SemanticError):
    pass


class TypeError_(SemanticError):
    def __init__(self, where: str, expected, found):
        super().__init__(f"{where}: expected {expected}, found {found}")
        self.where = where
        self.expected = expected
        self.found = found


# Macros that merely build decorated variable names rather than symbols.
_VARIABLE_FORMERS = frozenset({"livar"})

# Optional LaTeXML-style recovery of bare infix characters, lowest
# precedence first so the weakest operator splits the expression.
_INFIX_RECOVERY = (("=", "equals"), ("<", "lessthan"), (">", "greaterthan"),
                   ("+", "plus"), ("-", "minus"))
_RECOVERY_MODULE = "generic"


@dataclass
class SymbolContext:
    """Joins a registry with a typed symbol set through alignments."""

    registry: Registry
    symbols: Sequence[TypedSymbol] = ()
    lattice: SubtypeLattice = field(default_factory=lambda: SubtypeLattice({}))

    def __post_init__(self):
        self.types: dict[tuple[str, str], TypedSymbol] = {}
        self.renderings: dict[tuple[str, str], tuple[SymbolDecl, TypedSymbol]] = {}
        for ts in self.symbols:
            if ts.alignment is None:
                continue
            decl = self.registry.index.get(ts.alignment.macro_name)
            if decl is None:
                raise UnalignedSymbol(
                    f"alignment of {ts.name} targets unknown macro "
                    f"\\{ts.alignment.macro_name}")
            n_params = len(ts.type.params) if isinstance(ts.type, Fun) else 0
            if not decl.flexary and n_params != decl.arity:
                raise UnalignedSymbol(
                    f"{ts.name}: {n_params} parameter(s) do not match "
                    f"\\{decl.macro_name} arity {decl.arity}")
            key = (decl.module, decl.omdoc_name)
            self.types[key] = ts
            self.renderings[key] = (decl, ts)

    def typed(self, sym: Sym) -> Optional[TypedSymbol]:
        return self.types.get((sym.module, sym.name))

    def decl_of(self, sym: Sym) -> Optional[SymbolDecl]:
        entry = self.renderings.get((sym.module, sym.name))
        return entry[0] if entry else None

    def flexary(self, sym: Sym) -> bool:
        for decl in self.registry.index.values():
            if (decl.module, decl.omdoc_name) == (sym.module, sym.name) and decl.flexary:
                return True
        return False


def _significant(nodes) -> list:
    return [n for n in nodes if not isinstance(n, (Whitespace, Comment))]


def _var_name(node) -> str:
    return render(node)


def stex_to_term(math: Sequence, reg: Registry, recover: bool = False,
                 cfg: NormalizationConfig = DEFAULT_CONFIG) -> Term:
    """Convert the body of a fully disambiguated math segment to a term.

    ``recover`` enables the heuristic mapping of a few bare infix characters
    (e.g. '=') to generic unaligned symbols, mirroring what a full LaTeXML
    conversion would salvage; off by default.
    """
    nodes = _norm_nodes(list(math), cfg, in_math=True)
    return _term_of_nodes(nodes, reg, recover)


def _term_of_nodes(nodes, reg: Registry, recover: bool) -> Term:
    sig = _significant(nodes)
    terms: list = []
    for node in sig:
        if isinstance(node, Text):
            for tok in _tokenize_text(node.content, recover):
                if recover and tok in dict(_INFIX_RECOVERY):
                    terms.append(_OpMarker(tok))
                else:
                    terms.append(_term_of_token(tok, nodes, reg))
        elif isinstance(node, Group):
            terms.append(_term_of_nodes(node.children, reg, recover))
        elif isinstance(node, Command):
            terms.append(_term_of_command(node, reg, recover))
        elif isinstance(node, MathSegment):
            raise MalformedApplication("nested math segment")
        else:
            raise MalformedApplication(f"unexpected node {node!r}")

    if not terms:
        raise MalformedApplication("empty expression")
    if len(terms) == 1 and not isinstance(terms[0], _OpMarker):
        return terms[0]
    if recover:
        return _recover_infix(terms)
    raise MalformedApplication(
        f"cannot interpret juxtaposition of {len(terms)} parts: "
        f"{render(tuple(nodes))!r}")


@dataclass(frozen=True)
class _OpMarker:
    char: str


def _tokenize_text(content: str, recover: bool):
    ops = dict(_INFIX_RECOVERY)
    token = ""
    for ch in content:
        if ch.isdigit():
            if token and not token.isdigit():
                yield token
                token = ""
            token += ch
        elif ch.isalpha() or ch == "'":
            if token and token.isdigit():
                yield token
                token = ""
            token += ch
        else:
            if token:
                yield token
                token = ""
            if ch in ops or not recover:
                yield ch
    if token:
        yield token


def _term_of_token(tok: str, nodes, reg: Registry) -> Term:
    if tok.isdigit():
        return IntLit(int(tok))
    if tok[0].isalpha() and len(tok.rstrip("'")) == 1:
        return Var(tok)
    raise MalformedApplication(
        f"token {tok!r} is neither a variable, a literal nor a macro in "
        f"{render(tuple(nodes))!r}")


def _term_of_command(cmd: Command, reg: Registry, recover: bool) -> Term:
    decl = reg.index.get(cmd.name)
    if decl is not None:
        if cmd.name in _VARIABLE_FORMERS:
            parts = [render(arg).strip() for arg in cmd.braced_args]
            return Var("_".join(parts))
        args: list[Term] = []
        braced = cmd.braced_args
        if len(braced) != decl.arity:
            raise MalformedApplication(
                f"\\{decl.macro_name} applied to {len(braced)} argument(s), "
                f"expected {decl.arity}")
        for i, arg in enumerate(braced, start=1):
            if decl.flexary and i == decl.assoc_arg:
                for item in _split_top_commas(arg):
                    args.append(_term_of_nodes(item, reg, recover))
            else:
                args.append(_term_of_nodes(arg, reg, recover))
        head = Sym(decl.module, decl.omdoc_name)
        return Apply(head, tuple(args)) if args else head
    if cmd.name in _VAR_COMMANDS:
        return Var(_var_name(cmd))
    raise MalformedApplication(f"\\{cmd.name} is not a registry macro")


def _recover_infix(parts: list) -> Term:
    ops = [op for op, _ in _INFIX_RECOVERY]
    for op in ops:
        positions = [i for i, p in enumerate(parts)
                     if isinstance(p, _OpMarker) and p.char == op]
        if positions:
            name = dict(_INFIX_RECOVERY)[op]
            segments: list[list] = [[]]
            for p in parts:
                if isinstance(p, _OpMarker) and p.char == op:
                    segments.append([])
                else:
                    segments[-1].append(p)
            args = []
            for seg in segments:
                if len(seg) != 1:
                    raise MalformedApplication("cannot recover mixed juxtaposition")
                if isinstance(seg[0], _OpMarker):
                    raise MalformedApplication("dangling operator")
                args.append(seg[0])
            return Apply(Sym(_RECOVERY_MODULE, name), tuple(args))
    raise MalformedApplication("juxtaposition without known operator")


def unaligned_symbols(t: Term, ctx: SymbolContext) -> list[Sym]:
    out = []
    for sub in subterms(t):
        if isinstance(sub, Sym) and ctx.typed(sub) is None:
            out.append(sub)
    return out


# --- type inference ----------------------------------------------------------


def is_trivially_typed(t: Term) -> bool:
    """A bare variable has no inferrable type but checks trivially."""
    return isinstance(t, Var)


def infer_type(t: Term, ctx: SymbolContext,
               env: Optional[dict] = None) -> TypeExpr:
    """Principal type of ``t`` under the subtype lattice.

    Untyped variables are assigned the type of the first slot they fill
    (narrowed on later, more specific uses); non-negative literals are Nat.
    """
    env = {} if env is None else env

    def infer(term: Term, where: str) -> TypeExpr:
        if isinstance(term, IntLit):
            return Base("Nat") if term.value >= 0 else Base("Int")
        if isinstance(term, Var):
            if term.type is not None:
                return term.type
            return env.get(term.name, Base(f"?{term.name}"))
        if isinstance(term, Sym):
            ts = ctx.typed(term)
            if ts is None:
                raise TypeError_(where, "a typed symbol", f"{term.module}?{term.name}")
            return ts.type
        if isinstance(term, Apply):
            head_ty = infer(term.head, where + "/head")
            if not isinstance(head_ty, Fun):
                raise TypeError_(where, "a function", head_ty)
            params = list(head_ty.params)
            if len(term.args) != len(params):
                flexary = (isinstance(term.head, Sym) and ctx.flexary(term.head)
                           and len(set(params)) == 1 and len(term.args) >= 1)
                if not flexary:
                    raise TypeError_(where, f"{len(params)} argument(s)",
                                     len(term.args))
                params = [params[0]] * len(term.args)
            for i, (arg, want) in enumerate(zip(term.args, params)):
                got = infer(arg, f"{where}/arg{i + 1}")
                if not self_check(arg, got, want, f"{where}/arg{i + 1}"):
                    raise TypeError_(f"{where}/arg{i + 1}", want, got)
            return head_ty.result
        raise TypeError_(where, "a term", term)

    def self_check(arg: Term, got: TypeExpr, want: TypeExpr, where: str) -> bool:
        if isinstance(arg, Var) and arg.type is None:
            bound = env.get(arg.name)
            if bound is None or isinstance(bound, Base) and bound.name.startswith("?"):
                env[arg.name] = want
                return True
            if ctx.lattice.is_subtype(bound, want):
                return True
            if ctx.lattice.is_subtype(want, bound):
                env[arg.name] = want  # narrow to the stricter use
                return True
            return False
        if isinstance(got, Base) and got.name.startswith("?"):
            return True
        return ctx.lattice.is_subtype(got, want)

    return infer(t, "term")


# --- OMDoc -------------------------------------------------------------------


def term_to_omdoc(t: Term) -> str:
    """Canonical OMDoc XML (OMA/OMS/OMV/OMI elements only)."""

    def emit(term: Term) -> str:
        if isinstance(term, Apply):
            inner = "".join(emit(x) for x in (term.head, *term.args))
            return f"<OMA>{inner}</OMA>"
        if isinstance(term, Sym):
            return f'<OMS cd="smglom:{term.module}" name="{term.name}"/>'
        if isinstance(term, Var):
            return f'<OMV name="{_xml_escape(term.name)}"/>'
        if isinstance(term, IntLit):
            return f"<OMI>{term.value}</OMI>"
        raise TypeError(f"not a term: {term!r}")

    return emit(t)


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace('"', "&quot;")


def omdoc_equal(a: str, b: str) -> bool:
    """Structural equality of OMDoc XML, ignoring whitespace and
    attribute order."""
    try:
        ta, tb = ET.fromstring(a), ET.fromstring(b)
    except ET.ParseError:
        return False

    def eq(x: ET.Element, y: ET.Element) -> bool:
        if x.tag != y.tag or dict(x.attrib) != dict(y.attrib):
            return False
        if (x.text or "").strip() != (y.text or "").strip():
            return False
        xs, ys = list(x), list(y)
        return len(xs) == len(ys) and all(eq(p, q) for p, q in zip(xs, ys))

    return eq(ta, tb)


# --- term -> sTeX rendering (inverse of stex_to_term over aligned symbols) ---


def term_to_stex(t: Term, ctx: SymbolContext, pick_variant=None) -> str:
    """Render a term as an sTeX expression using the alignment's macros.

    ``pick_variant(decl, allowed)`` chooses a notation variant per
    occurrence (default: the base notation).
    """

    def rend(term: Term) -> str:
        if isinstance(term, IntLit):
            return str(term.value)
        if isinstance(term, Var):
            return term.name
        if isinstance(term, Sym):
            ts = ctx.typed(term)
            if ts is not None and ts.literal is not None:
                return ts.literal
            return "\\" + _decl_for(term)[0].macro_name + _variant_suffix(term)
        if isinstance(term, Apply):
            if not isinstance(term.head, Sym):
                raise UnalignedSymbol(f"cannot render head {term.head!r}")
            decl, _ = _decl_for(term.head)
            parts = [rend(a) for a in term.args]
            if decl.flexary:
                joined = ",".join(parts)
                argstr = "{" + joined + "}"
            else:
                if len(parts) != decl.arity:
                    raise UnalignedSymbol(
                        f"\\{decl.macro_name} arity {decl.arity} vs {len(parts)} args")
                argstr = "".join("{" + p + "}" for p in parts)
            return "\\" + decl.macro_name + _variant_suffix(term.head) + argstr
        raise TypeError(f"not a term: {term!r}")

    def _decl_for(sym: Sym):
        entry = ctx.renderings.get((sym.module, sym.name))
        if entry is None:
            raise UnalignedSymbol(f"{sym.module}?{sym.name} has no aligned macro")
        return entry

    def _variant_suffix(sym: Sym) -> str:
        decl, ts = _decl_for(sym)
        allowed = ts.alignment.variants if ts.alignment else (None,)
        choice = pick_variant(decl, allowed) if pick_variant else None
        return f"[{choice}]" if choice else ""

    return rend(t)
