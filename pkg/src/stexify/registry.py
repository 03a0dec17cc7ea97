"""sTeX signature modules: symbol tables, macro expansion, stexcheck.

``\\symdef[<keys>]{<macro>}[<arity>]{<notation>}`` introduces a symbol;
``\\symvariant{<macro>}[<arity>]{<variant>}{<notation>}`` adds alternative
notations selected via the macro's optional argument.  Notation templates
use ``#1..#n`` placeholders; ``\\assoc[p=<prec>]{<op>}{#k}`` interleaves the
operator between the items of a flexary argument, bracketing items whose
head symbol binds more weakly than ``<prec>``.
"""

from __future__ import annotations

import math as _math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .latex import (
    ArgKind, Command, CommandArg, Comment, Environment, Group, MathSegment,
    Text, Whitespace, parse, render, render_with_spans, walk_nodes,
)
from .normalize import DEFAULT_CONFIG, NormalizationConfig


class LoadError(Exception):
    pass


class ExpandError(Exception):
    pass


class UnknownMacro(ExpandError):
    pass


class UnknownVariant(ExpandError):
    pass


class ArityMismatch(ExpandError):
    pass


_PLACEHOLDER_RE = re.compile(r"#(\d)")


@dataclass
class SymbolDecl:
    macro_name: str
    omdoc_name: str
    module: str
    arity: int
    flexary: bool = False
    assoc_arg: Optional[int] = None
    precedence: Optional[int] = None
    notation: tuple = ()
    variants: dict = field(default_factory=dict)

    @property
    def signature(self) -> str:
        return "o" + "m" * self.arity

    def template(self, variant: Optional[str]) -> tuple:
        if variant is None:
            return self.notation
        if variant not in self.variants:
            raise UnknownVariant(
                f"\\{self.macro_name}: unknown notation variant [{variant}]")
        return self.variants[variant]

    def placeholders(self, nodes: Optional[tuple] = None) -> set:
        found: set[int] = set()
        for node in walk_nodes(self.notation if nodes is None else nodes):
            if isinstance(node, Text):
                found.update(int(d) for d in _PLACEHOLDER_RE.findall(node.content))
        return found


@dataclass
class Registry:
    modules: dict = field(default_factory=dict)
    index: dict = field(default_factory=dict)

    def signature(self, name: str) -> Optional[str]:
        decl = self.index.get(name)
        return decl.signature if decl else None

    def add_module(self, module: str, decls: Sequence[SymbolDecl]) -> None:
        if module in self.modules:
            raise LoadError(f"duplicate module {module!r}")
        for decl in decls:
            if decl.macro_name in self.index:
                raise LoadError(f"duplicate macro \\{decl.macro_name}")
        self.modules[module] = list(decls)
        for decl in decls:
            self.index[decl.macro_name] = decl

    @classmethod
    def load(cls, manifest: Path | str) -> "Registry":
        """Load from a manifest file: one modsig .tex path per line,
        relative to the manifest, dependencies first.  The parent directory
        of each file becomes the archive prefix of the module name."""
        manifest = Path(manifest)
        reg = cls()
        for line in manifest.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            path = manifest.parent / line
            archive = Path(line).parent.as_posix()
            archive = "" if archive == "." else archive
            module, decls = load_modsig(path.read_text(encoding="utf-8"), archive, base=reg)
            reg.add_module(module, decls)
        return reg


def _parse_keyvals(nodes: Sequence) -> dict:
    """Split rendered ``k=v,k2=v2,flag`` option text into a dict."""
    text = render(nodes).strip()
    out: dict[str, str] = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" in item:
            key, _, value = item.partition("=")
            if not key.strip():
                raise LoadError(f"malformed option {item!r}")
            out[key.strip()] = value.strip()
        else:
            out[item] = ""
    return out


def _arg_nodes(cmd: Command, kind: ArgKind, index: int) -> Optional[tuple]:
    matching = [a for a in cmd.args if (a.kind is ArgKind.OPTIONAL) == (kind is ArgKind.OPTIONAL)]
    if index < len(matching):
        return matching[index].nodes
    return None


def _extract_precedence(opts: dict, notation: tuple) -> Optional[int]:
    if "p" in opts:
        return int(opts["p"])
    for node in walk_nodes(notation):
        if isinstance(node, Command) and node.name == "assoc":
            sub = _parse_keyvals(node.optional_args[0]) if node.optional_args else {}
            if "p" in sub:
                return int(sub["p"])
    return None


class _SigOverlay:
    """Signature source for the second parsing pass: macros declared in the
    file being loaded plus everything already in the base registry."""

    def __init__(self, arities: Mapping[str, int], base: Optional[Registry]):
        self.arities = arities
        self.base = base

    def signature(self, name: str) -> Optional[str]:
        if name in self.arities:
            return "o" + "m" * self.arities[name]
        return self.base.signature(name) if self.base is not None else None


def _scan_arities(tree) -> dict[str, int]:
    arities: dict[str, int] = {}
    for node in walk_nodes(tree):
        if isinstance(node, Command) and node.name == "symdef":
            braced = [a.nodes for a in node.args if a.kind is not ArgKind.OPTIONAL]
            if not braced:
                continue
            macro = render(braced[0]).strip()
            arity_nodes = _arg_nodes(node, ArgKind.OPTIONAL, 1)
            try:
                arity = int(render(arity_nodes).strip()) if arity_nodes else 0
            except ValueError:
                arity = 0
            arities[macro] = arity
    return arities


def load_modsig(source: str, archive: str = "",
                base: Optional[Registry] = None) -> tuple[str, list[SymbolDecl]]:
    """Parse the ``modsig`` environment in ``source`` into symbol decls.

    Returns ``(qualified_module_name, decls)``.  Accepts either a full file
    containing the environment or a bare environment body; in the latter
    case the module name is empty.  Parsing happens in two passes so that
    notation templates may apply macros declared in the same file (or in
    ``base``) and still get their arguments attached correctly.
    """
    arities = _scan_arities(parse(source))
    tree = parse(source, registry=_SigOverlay(arities, base))
    env = next((n for n in walk_nodes(tree)
                if isinstance(n, Environment) and n.name == "modsig"), None)
    if env is not None:
        modname = render(env.args[0].nodes).strip() if env.args else ""
        body = env.body
    else:
        modname = ""
        body = tree
    module = f"{archive}?{modname}" if archive else modname

    decls: list[SymbolDecl] = []
    by_name: dict[str, SymbolDecl] = {}
    for node in body:
        if not isinstance(node, Command):
            continue
        if node.name == "symdef":
            opts_nodes = _arg_nodes(node, ArgKind.OPTIONAL, 0)
            opts = _parse_keyvals(opts_nodes) if opts_nodes else {}
            braced = [a.nodes for a in node.args if a.kind is not ArgKind.OPTIONAL]
            if len(braced) != 2:
                raise LoadError("\\symdef needs a macro name and a notation")
            macro = render(braced[0]).strip()
            arity_nodes = _arg_nodes(node, ArgKind.OPTIONAL, 1)
            arity = int(render(arity_nodes).strip()) if arity_nodes else 0
            notation = braced[1]
            assoc_arg = int(opts["assocarg"]) if "assocarg" in opts else None
            decl = SymbolDecl(
                macro_name=macro,
                omdoc_name=opts.get("name", macro),
                module=module,
                arity=arity,
                flexary=assoc_arg is not None,
                assoc_arg=assoc_arg,
                precedence=_extract_precedence(opts, notation),
                notation=notation,
            )
            holes = decl.placeholders()
            if holes != set(range(1, arity + 1)):
                raise LoadError(
                    f"\\{macro}: notation placeholders {sorted(holes)} "
                    f"do not match arity {arity}")
            if macro in by_name:
                raise LoadError(f"duplicate macro \\{macro}")
            by_name[macro] = decl
            decls.append(decl)
        elif node.name == "symvariant":
            braced = [a.nodes for a in node.args if a.kind is not ArgKind.OPTIONAL]
            if len(braced) != 3:
                raise LoadError("\\symvariant needs macro, variant and notation")
            macro = render(braced[0]).strip()
            variant = render(braced[1]).strip()
            notation = braced[2]
            decl = by_name.get(macro)
            if decl is None:
                raise LoadError(f"\\symvariant for unknown symbol \\{macro}")
            if decl.placeholders(notation) != decl.placeholders():
                raise LoadError(
                    f"\\{macro}[{variant}]: variant placeholders differ from base notation")
            decl.variants[variant] = notation
    return module, decls


# --- presentation expansion of sTeX text-level macros -----------------------

def _cap(s: str) -> str:
    return s[:1].upper() + s[1:]


def _join_args(cmd: Command) -> str:
    return " ".join(render(a).strip() for a in cmd.braced_args)


TEXT_MACROS = {
    "defi": _join_args, "defii": _join_args, "defiii": _join_args,
    "Defi": lambda c: _cap(_join_args(c)), "Defii": lambda c: _cap(_join_args(c)),
    "defis": lambda c: _join_args(c) + "s", "Defis": lambda c: _cap(_join_args(c)) + "s",
    "defiis": lambda c: _join_args(c) + "s",
    "trefi": _join_args, "trefii": _join_args, "atrefi": _join_args,
    "Trefi": lambda c: _cap(_join_args(c)), "Trefii": lambda c: _cap(_join_args(c)),
    "trefiis": lambda c: _join_args(c) + "s",
    "Trefiis": lambda c: _cap(_join_args(c)) + "s",
    "adefi": lambda c: render(c.braced_args[0]).strip() if c.braced_args else "",
}

_ATOMIC = _math.inf
_NEVER_BRACKET = -_math.inf


def _split_top_commas(nodes: Sequence) -> list[list]:
    """Split a flexary argument on commas at top brace level."""
    items: list[list] = [[]]
    for node in nodes:
        if isinstance(node, Text) and "," in node.content:
            pieces = node.content.split(",")
            for i, piece in enumerate(pieces):
                if i:
                    items.append([])
                if piece:
                    items[-1].append(Text(piece))
        else:
            items[-1].append(node)
    return items


def _significant(nodes: Iterable) -> list:
    return [n for n in nodes if not isinstance(n, (Whitespace, Comment))]


class _Expander:
    def __init__(self, reg: Registry):
        self.reg = reg

    def expand_nodes(self, nodes: Sequence) -> list:
        out: list = []
        for node in nodes:
            if isinstance(node, Command):
                decl = self.reg.index.get(node.name)
                if decl is not None:
                    expanded, _ = self.expand_macro(node, decl)
                    out.extend(expanded)
                    continue
                if node.name in TEXT_MACROS:
                    out.append(Text(TEXT_MACROS[node.name](node)))
                    continue
                out.append(Command(node.name, tuple(
                    CommandArg(a.kind, tuple(self.expand_nodes(a.nodes)), a.pre)
                    for a in node.args)))
            elif isinstance(node, Group):
                out.append(Group(tuple(self.expand_nodes(node.children))))
            elif isinstance(node, MathSegment):
                out.append(MathSegment(node.delim, tuple(self.expand_nodes(node.body))))
            elif isinstance(node, Environment):
                out.append(Environment(
                    node.name,
                    tuple(CommandArg(a.kind, tuple(self.expand_nodes(a.nodes)), a.pre)
                          for a in node.args),
                    tuple(self.expand_nodes(node.body))))
            else:
                out.append(node)
        return out

    def expand_item(self, nodes: Sequence) -> tuple[list, float]:
        """Expand an argument/item; its precedence is that of its head
        registry macro when it is exactly one macro call, atomic otherwise."""
        sig = _significant(nodes)
        if len(sig) == 1 and isinstance(sig[0], Command):
            decl = self.reg.index.get(sig[0].name)
            if decl is not None:
                return self.expand_macro(sig[0], decl)
        return self.expand_nodes(nodes), _ATOMIC

    def expand_macro(self, cmd: Command, decl: SymbolDecl) -> tuple[list, float]:
        opt = cmd.optional_args
        variant = render(opt[0]).strip() if opt else None
        template = decl.template(variant)
        braced = cmd.braced_args
        if len(braced) != decl.arity:
            raise ArityMismatch(
                f"\\{decl.macro_name} expects {decl.arity} argument(s), got {len(braced)}")
        args: dict[int, tuple[list, float]] = {}
        items: dict[int, list[tuple[list, float]]] = {}
        for i, arg in enumerate(braced, start=1):
            if decl.flexary and i == decl.assoc_arg:
                items[i] = [self.expand_item(item) for item in _split_top_commas(arg)]
            else:
                args[i] = self.expand_item(arg)
        own = decl.precedence if decl.precedence is not None else _NEVER_BRACKET
        result = self.instantiate(template, args, items, own)
        item_prec = decl.precedence if decl.precedence is not None else _ATOMIC
        return self.expand_nodes(result), item_prec

    def instantiate(self, template: Sequence, args, items, slot_prec: float) -> list:
        out: list = []
        for node in template:
            if isinstance(node, Text):
                out.extend(self._subst_text(node.content, args, items, slot_prec))
            elif isinstance(node, Command) and node.name == "assoc":
                out.extend(self._assoc(node, args, items, slot_prec))
            elif isinstance(node, Command):
                out.append(Command(node.name, tuple(
                    CommandArg(a.kind,
                               tuple(self.instantiate(a.nodes, args, items, slot_prec)),
                               a.pre)
                    for a in node.args)))
            elif isinstance(node, Group):
                out.append(Group(tuple(self.instantiate(node.children, args, items, slot_prec))))
            else:
                out.append(node)
        return out

    def _subst_text(self, text: str, args, items, slot_prec: float) -> list:
        out: list = []
        last = 0
        for m in _PLACEHOLDER_RE.finditer(text):
            if m.start() > last:
                out.append(Text(text[last:m.start()]))
            k = int(m.group(1))
            if k in items:
                for j, (nodes, prec) in enumerate(items[k]):
                    if j:
                        out.append(Text(","))
                    out.extend(self._bracket(nodes, prec, slot_prec))
            elif k in args:
                nodes, prec = args[k]
                out.extend(self._bracket(nodes, prec, slot_prec))
            else:
                raise ExpandError(f"template placeholder #{k} has no argument")
            last = m.end()
        if last < len(text):
            out.append(Text(text[last:]))
        return out

    def _assoc(self, cmd: Command, args, items, outer_prec: float) -> list:
        opt = cmd.optional_args
        keys = _parse_keyvals(opt[0]) if opt else {}
        prec = int(keys["p"]) if "p" in keys else outer_prec
        braced = cmd.braced_args
        if len(braced) != 2:
            raise ExpandError("\\assoc needs an operator and an argument list")
        op = self.expand_nodes(braced[0])
        holes = [int(d) for d in _PLACEHOLDER_RE.findall(render(braced[1]))]
        if len(holes) != 1:
            raise ExpandError("\\assoc expects exactly one placeholder")
        k = holes[0]
        parts = items.get(k)
        if parts is None:
            parts = [args[k]] if k in args else None
        if parts is None:
            raise ExpandError(f"\\assoc placeholder #{k} has no argument")
        out: list = []
        for j, (nodes, item_prec) in enumerate(parts):
            if j:
                out.extend(op)
            out.extend(self._bracket(nodes, item_prec, prec))
        return out

    @staticmethod
    def _bracket(nodes: list, item_prec: float, slot_prec: float) -> list:
        if item_prec < slot_prec:
            return [Text("("), *nodes, Text(")")]
        return list(nodes)


def expand(nodes: Sequence, reg: Registry) -> tuple:
    """Expand every sTeX macro into its presentation LaTeX."""
    return tuple(_Expander(reg).expand_nodes(nodes))


# --- stexcheck ---------------------------------------------------------------

_VAR_COMMANDS = frozenset({
    "mathcal", "mathfrak", "mathscr", "ell", "varepsilon", "varphi",
    "vartheta", "varrho", "varsigma", "varpi",
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
    "iota", "kappa", "lambda", "mu", "nu", "xi", "pi", "rho", "sigma",
    "tau", "upsilon", "phi", "chi", "psi", "omega",
    "Gamma", "Delta", "Theta", "Lambda", "Xi", "Pi", "Sigma", "Upsilon",
    "Phi", "Psi", "Omega",
})

_ALLOWED_TEXT = frozenset(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    ",.;:'()! \t\n")
# '!' would be factorial; keep it out.
_ALLOWED_TEXT = _ALLOWED_TEXT - frozenset("!")


def is_fully_disambiguated(nodes: Sequence, reg: Registry,
                           cfg: NormalizationConfig = DEFAULT_CONFIG,
                           ) -> tuple[bool, list[tuple[int, int]]]:
    """The stexcheck predicate: every math segment consists only of
    variables, correctly applied registry macros, integer literals and
    non-semantic material.  Returns (ok, offending source spans)."""
    _, spans = render_with_spans(nodes)
    offending: list[tuple[int, int]] = []
    allowed_cmds = cfg.non_semantic_commands | cfg.unwrap_commands

    def offend(node):
        offending.append(spans.get(id(node), (0, 0)))

    def check_math(ns):
        for node in ns:
            if isinstance(node, (Whitespace, Comment)):
                continue
            if isinstance(node, Text):
                if not set(node.content) <= _ALLOWED_TEXT:
                    offend(node)
            elif isinstance(node, Group):
                check_math(node.children)
            elif isinstance(node, Command):
                decl = reg.index.get(node.name)
                if decl is not None:
                    opt = node.optional_args
                    if opt and render(opt[0]).strip() not in decl.variants:
                        offend(node)
                    if len(node.braced_args) != decl.arity:
                        offend(node)
                    for arg in node.args:
                        check_math(arg.nodes)
                elif node.name in allowed_cmds:
                    for arg in node.args:
                        check_math(arg.nodes)
                elif node.name in _VAR_COMMANDS:
                    for arg in node.args:
                        check_math(arg.nodes)
                else:
                    offend(node)
            elif isinstance(node, MathSegment):
                check_math(node.body)
            elif isinstance(node, Environment):
                offend(node)

    def scan(ns):
        for node in ns:
            if isinstance(node, MathSegment):
                check_math(node.body)
            elif isinstance(node, Group):
                scan(node.children)
            elif isinstance(node, Command):
                for arg in node.args:
                    scan(arg.nodes)
            elif isinstance(node, Environment):
                for arg in node.args:
                    scan(arg.nodes)
                scan(node.body)

    scan(nodes)
    offending.sort()
    return not offending, offending
