"""Lossless LaTeX tokenizer, parser and renderer.

The AST is designed so that ``render(parse(s)) == s`` byte-for-byte for
every string ``s`` the parser accepts.  Whitespace and comments are kept
as explicit nodes; command arguments remember how they were written
(optional ``[...]``, braced ``{...}`` or bare single-token).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Optional, Union


class ParseError(Exception):
    """Raised on malformed input; carries the byte offset of the problem."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at offset {pos})")
        self.message = message
        self.pos = pos


class MathDelim(Enum):
    """Concrete math delimiters.  PAREN is the ``\\(..\\)`` synonym of INLINE."""

    INLINE = ("$", "$")
    DISPLAY = ("$$", "$$")
    BRACKET = ("\\[", "\\]")
    PAREN = ("\\(", "\\)")

    @property
    def open(self) -> str:
        return self.value[0]

    @property
    def close(self) -> str:
        return self.value[1]

    @property
    def is_display(self) -> bool:
        return self in (MathDelim.DISPLAY, MathDelim.BRACKET)


class ArgKind(Enum):
    OPTIONAL = "optional"
    BRACED = "braced"
    BARE = "bare"


@dataclass(frozen=True)
class Text:
    content: str


@dataclass(frozen=True)
class Whitespace:
    content: str


@dataclass(frozen=True)
class Comment:
    # content excludes the leading '%' but includes the trailing newline,
    # mirroring TeX's consumption of the line end
    content: str


@dataclass(frozen=True)
class CommandArg:
    kind: ArgKind
    nodes: tuple
    # whitespace that appeared between the command (or previous argument)
    # and this argument, preserved for losslessness
    pre: str = ""


@dataclass(frozen=True)
class Command:
    name: str
    args: tuple = ()

    @property
    def optional_args(self) -> list:
        return [list(a.nodes) for a in self.args if a.kind is ArgKind.OPTIONAL]

    @property
    def braced_args(self) -> list:
        return [list(a.nodes) for a in self.args if a.kind is not ArgKind.OPTIONAL]


@dataclass(frozen=True)
class Group:
    children: tuple


@dataclass(frozen=True)
class MathSegment:
    delim: MathDelim
    body: tuple


@dataclass(frozen=True)
class Environment:
    name: str
    args: tuple
    body: tuple


LatexNode = Union[Text, Whitespace, Comment, Command, Group, MathSegment, Environment]

# Argument signatures: 'o' optional [..], 'm' mandatory {..} or bare token,
# 'd' TeX dimension (for kerning commands).  Commands absent from this
# table and from the registry consume nothing implicitly.
BUILTIN_COMMANDS: dict[str, str] = {
    # math layout / styling with arguments
    "frac": "mm", "tfrac": "mm", "dfrac": "mm", "binom": "mm", "sqrt": "om",
    "overset": "mm", "underset": "mm", "stackrel": "mm",
    "mathop": "m", "mathrel": "m", "mathbin": "m", "mathord": "m", "mathinner": "m",
    "mathcal": "m", "mathbb": "m", "mathfrak": "m", "mathscr": "m",
    "mathrm": "m", "mathbf": "m", "mathsf": "m", "mathtt": "m", "mathit": "m",
    "boldsymbol": "m", "operatorname": "m", "ensuremath": "m",
    "hat": "m", "bar": "m", "vec": "m", "dot": "m", "ddot": "m", "tilde": "m",
    "widehat": "m", "widetilde": "m", "overline": "m", "underline": "m",
    "overbrace": "m", "underbrace": "m", "phantom": "m", "smash": "m",
    "left": "m", "right": "m",
    "kern": "d", "mkern": "d", "hspace": "m", "vspace": "m",
    # text-mode commands
    "text": "m", "textbf": "m", "textit": "m", "textrm": "m", "texttt": "m",
    "emph": "m", "mbox": "m", "footnote": "m", "caption": "m",
    "label": "m", "ref": "m", "autoref": "m", "cite": "om", "url": "m",
    "section": "om", "subsection": "om", "subsubsection": "om", "paragraph": "om",
    "title": "m", "author": "m", "item": "o",
    "documentclass": "om", "usepackage": "om",
    # sTeX infrastructure
    "symdef": "omom", "symvariant": "momm", "assoc": "omm",
    "defi": "om", "Defi": "om", "defii": "omm", "Defii": "omm",
    "defiii": "ommm", "defis": "om", "Defis": "om", "defiis": "omm",
    "trefi": "om", "Trefi": "om", "trefii": "omm", "Trefii": "omm",
    "trefiis": "omm", "Trefiis": "omm", "atrefi": "omm", "adefi": "omm",
    "gimport": "om", "importmhmodule": "omm", "usemhmodule": "omm",
}

ENV_SIGNATURES: dict[str, str] = {
    "modsig": "m", "mhmodnl": "mm", "importmodule": "om",
    "definition": "o", "example": "o", "assertion": "o", "omtext": "o",
    "theorem": "o", "lemma": "o", "proof": "o", "remark": "o",
}

VERBATIM_ENVS = frozenset({"verbatim", "verbatim*", "lstlisting", "minted", "Verbatim"})

_LETTERS = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
_SPECIALS = frozenset("\\{}$%")
_WS = frozenset(" \t\r\n")
_DIMEN_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)\s*(?:pt|em|ex|mu|cm|mm|in|sp|bp|dd|pc)")


class _Parser:
    def __init__(self, source: str, signature: Callable[[str], Optional[str]]):
        self.s = source
        self.n = len(source)
        self.pos = 0
        self.signature = signature

    def error(self, message: str, pos: Optional[int] = None):
        raise ParseError(message, self.pos if pos is None else pos)

    def peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.s[i] if i < self.n else ""

    # --- node-sequence parsing -------------------------------------------

    def parse_seq(self, stop: Optional[str], math: Optional[MathDelim],
                  env: Optional[str]) -> tuple:
        """Parse nodes until the requested terminator is consumed.

        stop: '}' or ']' group/optional terminator; math: currently open
        math delimiter; env: environment whose \\end{env} terminates us.
        """
        nodes: list[LatexNode] = []
        while True:
            if self.pos >= self.n:
                if stop == "}":
                    self.error("unbalanced group: missing '}'")
                if stop == "]":
                    self.error("unclosed optional argument")
                if math is not None:
                    self.error(f"math delimiter {math.open!r} never closed")
                if env is not None:
                    self.error(f"environment {env!r} never closed")
                return tuple(nodes)
            c = self.s[self.pos]
            if c == "}":
                if stop == "}":
                    self.pos += 1
                    return tuple(nodes)
                self.error("extra closing brace")
            if c == "]" and stop == "]":
                self.pos += 1
                return tuple(nodes)
            if c == "%":
                nodes.append(self.read_comment())
                continue
            if c in _WS:
                nodes.append(Whitespace(self.read_ws()))
                continue
            if c == "$":
                if math is MathDelim.INLINE:
                    self.pos += 1
                    return tuple(nodes)
                if math is MathDelim.DISPLAY:
                    if self.peek(1) == "$":
                        self.pos += 2
                        return tuple(nodes)
                    self.error("single '$' inside '$$' display math")
                if math is not None:
                    self.error(f"'$' inside {math.open!r} math")
                nodes.append(self.read_math())
                continue
            if c == "{":
                self.pos += 1
                children = self.parse_seq("}", math, None)
                nodes.append(Group(children))
                continue
            if c == "\\":
                node = self.read_control(stop, math, env)
                if node is _END_MARKER:
                    return tuple(nodes)
                nodes.append(node)
                continue
            nodes.append(Text(self.read_text(stop)))

    def read_text(self, stop: Optional[str] = None) -> str:
        # ']' terminates text only at the top level of an optional argument
        start = self.pos
        while self.pos < self.n:
            c = self.s[self.pos]
            if c in _SPECIALS or c in _WS or (c == "]" and stop == "]"):
                break
            self.pos += 1
        return self.s[start:self.pos]

    def read_ws(self) -> str:
        start = self.pos
        while self.pos < self.n and self.s[self.pos] in _WS:
            self.pos += 1
        return self.s[start:self.pos]

    def read_comment(self) -> Comment:
        start = self.pos + 1
        end = self.s.find("\n", start)
        if end == -1:
            self.pos = self.n
            return Comment(self.s[start:])
        self.pos = end + 1
        return Comment(self.s[start:self.pos])

    def read_math(self) -> MathSegment:
        if self.peek(1) == "$":
            self.pos += 2
            body = self.parse_seq(None, MathDelim.DISPLAY, None)
            return MathSegment(MathDelim.DISPLAY, body)
        self.pos += 1
        body = self.parse_seq(None, MathDelim.INLINE, None)
        return MathSegment(MathDelim.INLINE, body)

    # --- control sequences ------------------------------------------------

    def read_control(self, stop, math, env):
        at = self.pos
        self.pos += 1
        if self.pos >= self.n:
            self.error("lone '\\' at end of input", at)
        c = self.s[self.pos]
        if c in _LETTERS:
            start = self.pos
            while self.pos < self.n and self.s[self.pos] in _LETTERS:
                self.pos += 1
            if self.peek() == "*":
                self.pos += 1
            name = self.s[start:self.pos]
            if name == "begin":
                return self.read_environment(math)
            if name == "end":
                got = self.read_env_name()
                if env is not None and got == env:
                    return _END_MARKER
                self.error(f"\\end{{{got}}} without matching \\begin", at)
            return self.read_command(name, math)
        # control symbol
        self.pos += 1
        if c == "[":
            if math is not None:
                self.error("'\\[' opened inside math mode", at)
            body = self.parse_seq(None, MathDelim.BRACKET, None)
            return MathSegment(MathDelim.BRACKET, body)
        if c == "]":
            if math is MathDelim.BRACKET:
                return _END_MARKER
            self.error("'\\]' without matching '\\['", at)
        if c == "(":
            if math is not None:
                self.error("'\\(' opened inside math mode", at)
            body = self.parse_seq(None, MathDelim.PAREN, None)
            return MathSegment(MathDelim.PAREN, body)
        if c == ")":
            if math is MathDelim.PAREN:
                return _END_MARKER
            self.error("'\\)' without matching '\\('", at)
        return Command(c)

    def read_env_name(self) -> str:
        if self.peek() != "{":
            self.error("expected '{' after \\begin or \\end")
        start = self.pos + 1
        end = self.s.find("}", start)
        if end == -1:
            self.error("unterminated environment name")
        self.pos = end + 1
        return self.s[start:end]

    def read_environment(self, math) -> Environment:
        name = self.read_env_name()
        if name in VERBATIM_ENVS:
            marker = f"\\end{{{name}}}"
            end = self.s.find(marker, self.pos)
            if end == -1:
                self.error(f"environment {name!r} never closed")
            raw = self.s[self.pos:end]
            self.pos = end + len(marker)
            body = (Text(raw),) if raw else ()
            return Environment(name, (), body)
        sig = ENV_SIGNATURES.get(name, "")
        args = self.read_args(name, sig, math)
        body = self.parse_seq(None, math, name)
        return Environment(name, tuple(args), body)

    def read_command(self, name: str, math) -> Command:
        sig = self.signature(name)
        if sig is None:
            sig = BUILTIN_COMMANDS.get(name, "")
        args = self.read_args(name, sig, math)
        return Command(name, tuple(args))

    def read_args(self, name: str, sig: str, math) -> list:
        args: list[CommandArg] = []
        for code in sig:
            mark = self.pos
            pre_start = self.pos
            while self.pos < self.n and self.s[self.pos] in _WS:
                self.pos += 1
            pre = self.s[pre_start:self.pos]
            if code == "o":
                if self.peek() == "[":
                    self.pos += 1
                    nodes = self.parse_seq("]", math, None)
                    args.append(CommandArg(ArgKind.OPTIONAL, nodes, pre))
                else:
                    self.pos = mark
                continue
            if code == "d":
                m = _DIMEN_RE.match(self.s, self.pos)
                if not m:
                    self.error(f"\\{name}: expected a dimension")
                self.pos = m.end()
                args.append(CommandArg(ArgKind.BARE, (Text(m.group()),), pre))
                continue
            # mandatory argument
            c = self.peek()
            if c == "{":
                self.pos += 1
                nodes = self.parse_seq("}", math, None)
                args.append(CommandArg(ArgKind.BRACED, nodes, pre))
            elif c == "\\":
                at = self.pos
                self.pos += 1
                if self.pos >= self.n:
                    self.error(f"\\{name}: missing argument", at)
                t = self.s[self.pos]
                if t in _LETTERS:
                    start = self.pos
                    while self.pos < self.n and self.s[self.pos] in _LETTERS:
                        self.pos += 1
                    tok = self.s[start:self.pos]
                else:
                    self.pos += 1
                    tok = t
                args.append(CommandArg(ArgKind.BARE, (Command(tok),), pre))
            elif c and c not in "}]$%" and c not in _WS:
                self.pos += 1
                args.append(CommandArg(ArgKind.BARE, (Text(c),), pre))
            else:
                self.error(f"wrong argument count for \\{name}", mark)
        return args


_END_MARKER = object()


def parse(source: str, registry=None, commands: Optional[Mapping[str, str]] = None) -> tuple:
    """Parse LaTeX source into a lossless node tuple.

    ``registry`` (any object with a ``signature(name)`` method returning an
    argument signature or None) adds argument-count awareness for sTeX
    macros; ``commands`` overrides/extends the built-in command table.
    Raises ParseError on unbalanced input or argument-count violations.
    """
    table = dict(BUILTIN_COMMANDS)
    if commands:
        table.update(commands)

    def signature(name: str) -> Optional[str]:
        if registry is not None:
            sig = registry.signature(name)
            if sig is not None:
                return sig
        return table.get(name)

    return _Parser(source, signature).parse_seq(None, None, None)


# --- rendering -------------------------------------------------------------

# a trailing '*' already terminates a control word, so no separator then
_CW_TAIL_RE = re.compile(r"(\\+)([A-Za-z]+)\Z")


class _Emitter:
    """Accumulates rendered text, inserting a separating space only where
    re-tokenization would otherwise merge a control word with following
    letters; never triggered on freshly parsed trees."""

    def __init__(self, sink=None):
        self.parts: list[str] = []
        self.length = 0
        self.tail = ""
        self.sink = sink

    def emit(self, s: str) -> None:
        if not s:
            return
        if self.parts and self._needs_sep(s[0]):
            self.parts.append(" ")
            self.length += 1
            self.tail += " "
        self.parts.append(s)
        self.length += len(s)
        self.tail = (self.tail + s)[-24:]

    def _needs_sep(self, nxt: str) -> bool:
        if nxt in _LETTERS:
            m = _CW_TAIL_RE.search(self.tail)
            return bool(m) and len(m.group(1)) % 2 == 1
        return False

    def text(self) -> str:
        return "".join(self.parts)


def _emit_node(node: LatexNode, out: _Emitter) -> None:
    start = out.length
    if isinstance(node, Text) or isinstance(node, Whitespace):
        out.emit(node.content)
    elif isinstance(node, Comment):
        out.emit("%" + node.content)
    elif isinstance(node, Command):
        out.emit("\\" + node.name)
        for arg in node.args:
            _emit_arg(arg, out)
    elif isinstance(node, Group):
        out.emit("{")
        _emit_nodes(node.children, out)
        out.emit("}")
    elif isinstance(node, MathSegment):
        out.emit(node.delim.open)
        _emit_nodes(node.body, out)
        out.emit(node.delim.close)
    elif isinstance(node, Environment):
        out.emit(f"\\begin{{{node.name}}}")
        for arg in node.args:
            _emit_arg(arg, out)
        _emit_nodes(node.body, out)
        out.emit(f"\\end{{{node.name}}}")
    else:
        raise TypeError(f"not a LatexNode: {node!r}")
    if out.sink is not None:
        out.sink(node, start, out.length)


def _emit_arg(arg: CommandArg, out: _Emitter) -> None:
    out.emit(arg.pre)
    if arg.kind is ArgKind.OPTIONAL:
        out.emit("[")
        _emit_nodes(arg.nodes, out)
        out.emit("]")
    elif arg.kind is ArgKind.BRACED:
        out.emit("{")
        _emit_nodes(arg.nodes, out)
        out.emit("}")
    else:
        _emit_nodes(arg.nodes, out)


def _emit_nodes(nodes: Iterable[LatexNode], out: _Emitter) -> None:
    for node in nodes:
        _emit_node(node, out)


def render(nodes) -> str:
    """Render a node or node sequence back to LaTeX source."""
    out = _Emitter()
    if isinstance(nodes, (Text, Whitespace, Comment, Command, Group, MathSegment, Environment)):
        _emit_node(nodes, out)
    else:
        _emit_nodes(nodes, out)
    return out.text()


def render_with_spans(nodes) -> tuple[str, dict[int, tuple[int, int]]]:
    """Render, also returning ``id(node) -> (start, end)`` source spans."""
    spans: dict[int, tuple[int, int]] = {}
    out = _Emitter(sink=lambda n, s, e: spans.__setitem__(id(n), (s, e)))
    _emit_nodes(nodes, out)
    return out.text(), spans


def find_math(nodes) -> list[tuple[tuple[int, int], MathSegment]]:
    """All math segments in document order with their rendered-source spans."""
    _, spans = render_with_spans(nodes)
    found: list[tuple[tuple[int, int], MathSegment]] = []

    def walk(ns):
        for node in ns:
            if isinstance(node, MathSegment):
                found.append((spans[id(node)], node))
            elif isinstance(node, Group):
                walk(node.children)
            elif isinstance(node, Command):
                for arg in node.args:
                    walk(arg.nodes)
            elif isinstance(node, Environment):
                for arg in node.args:
                    walk(arg.nodes)
                walk(node.body)

    walk(nodes)
    found.sort(key=lambda item: item[0][0])
    return found


def walk_nodes(nodes):
    """Depth-first iterator over every node in the tree."""
    for node in nodes:
        yield node
        if isinstance(node, Group):
            yield from walk_nodes(node.children)
        elif isinstance(node, MathSegment):
            yield from walk_nodes(node.body)
        elif isinstance(node, Command):
            for arg in node.args:
                yield from walk_nodes(arg.nodes)
        elif isinstance(node, Environment):
            for arg in node.args:
                yield from walk_nodes(arg.nodes)
            yield from walk_nodes(node.body)


def to_dict(node) -> object:
    """JSON-friendly AST dump (used by the CLI)."""
    if isinstance(node, Text):
        return {"kind": "text", "content": node.content}
    if isinstance(node, Whitespace):
        return {"kind": "whitespace", "content": node.content}
    if isinstance(node, Comment):
        return {"kind": "comment", "content": node.content}
    if isinstance(node, Command):
        return {
            "kind": "command",
            "name": node.name,
            "args": [
                {"kind": a.kind.value, "nodes": [to_dict(n) for n in a.nodes]}
                for a in node.args
            ],
        }
    if isinstance(node, Group):
        return {"kind": "group", "children": [to_dict(n) for n in node.children]}
    if isinstance(node, MathSegment):
        return {
            "kind": "math",
            "delim": node.delim.name.lower(),
            "body": [to_dict(n) for n in node.body],
        }
    if isinstance(node, Environment):
        return {
            "kind": "environment",
            "name": node.name,
            "args": [
                {"kind": a.kind.value, "nodes": [to_dict(n) for n in a.nodes]}
                for a in node.args
            ],
            "body": [to_dict(n) for n in node.body],
        }
    raise TypeError(f"not a LatexNode: {node!r}")
