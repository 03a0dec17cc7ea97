"""Canonicalization of LaTeX ASTs to minimize author bias.

Two fragments that print identically should normalize to equal trees:
spacing/kerning commands are removed, bare arguments are braced,
whitespace is collapsed (dropped entirely inside math), comments are
stripped and redundant groups are flattened.  The result is idempotent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .latex import (
    ArgKind, Command, CommandArg, Comment, Environment, Group, MathDelim,
    MathSegment, Text, Whitespace,
)

# Commands removed together with their arguments.
DEFAULT_DROP = frozenset({
    ",", ";", "!", ":", ">", " ", "quad", "qquad", "enspace", "thinspace",
    "negthinspace", "negmedspace", "negthickspace", "kern", "mkern",
    "hspace", "vspace", "mathstrut", "strut", "smash", "phantom",
    "displaystyle", "textstyle", "scriptstyle", "scriptscriptstyle",
    "limits", "nolimits", "noindent", "allowbreak", "-", "/",
})

# Commands replaced by their (last) argument's content.
DEFAULT_UNWRAP = frozenset({
    "mathop", "mathrel", "mathbin", "mathord", "mathinner",
    "ensuremath", "left", "right",
})


@dataclass(frozen=True)
class NormalizationConfig:
    non_semantic_commands: frozenset = DEFAULT_DROP
    unwrap_commands: frozenset = DEFAULT_UNWRAP
    strip_comments: bool = True
    collapse_whitespace: bool = True

    @classmethod
    def from_file(cls, path) -> "NormalizationConfig":
        """Load overrides from a JSON config: {"drop": [...], "unwrap": [...],
        "strip_comments": bool, "collapse_whitespace": bool}."""
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        kwargs = {}
        if "drop" in raw:
            kwargs["non_semantic_commands"] = frozenset(
                name.lstrip("\\") for name in raw["drop"])
        if "unwrap" in raw:
            kwargs["unwrap_commands"] = frozenset(
                name.lstrip("\\") for name in raw["unwrap"])
        if "strip_comments" in raw:
            kwargs["strip_comments"] = bool(raw["strip_comments"])
        if "collapse_whitespace" in raw:
            kwargs["collapse_whitespace"] = bool(raw["collapse_whitespace"])
        return cls(**kwargs)

    def check_against_registry(self, registry) -> None:
        clash = (self.non_semantic_commands | self.unwrap_commands) & set(registry.index)
        if clash:
            raise ValueError(f"non-semantic whitelist clashes with registry macros: {sorted(clash)}")


DEFAULT_CONFIG = NormalizationConfig()


def _is_atom(node, in_math: bool) -> bool:
    # single-token only: {12} after '_' must keep its braces
    if isinstance(node, Text):
        return len(node.content) == 1
    if isinstance(node, Command):
        # outside math, unwrapping {\cmd} before a letter would force the
        # renderer to insert a space the canonical form cannot keep stable
        return in_math and not node.args
    return isinstance(node, MathSegment)


def _norm_nodes(nodes, cfg: NormalizationConfig, in_math: bool) -> list:
    out: list = []
    for node in nodes:
        if isinstance(node, Comment):
            if cfg.strip_comments:
                continue
            out.append(node)
        elif isinstance(node, Whitespace):
            out.append(node)
        elif isinstance(node, Text):
            out.append(node)
        elif isinstance(node, Command):
            if node.name in cfg.non_semantic_commands:
                continue
            if node.name in cfg.unwrap_commands:
                inner = node.args[-1].nodes if node.args else ()
                out.extend(_norm_nodes(inner, cfg, in_math))
                continue
            args = []
            for arg in node.args:
                kind = ArgKind.OPTIONAL if arg.kind is ArgKind.OPTIONAL else ArgKind.BRACED
                args.append(CommandArg(kind, tuple(
                    _strip_ws(_norm_nodes(arg.nodes, cfg, in_math), cfg))))
            out.append(Command(node.name, tuple(args)))
        elif isinstance(node, Group):
            children = _strip_ws(_norm_nodes(node.children, cfg, in_math), cfg)
            if not children:
                if in_math:
                    continue
                out.append(Group(()))  # '{}' after a control word is load-bearing
            elif len(children) == 1 and _is_atom(children[0], in_math):
                out.append(children[0])
            else:
                out.append(Group(tuple(children)))
        elif isinstance(node, MathSegment):
            delim = MathDelim.INLINE if node.delim is MathDelim.PAREN else node.delim
            body = _strip_ws(_norm_nodes(node.body, cfg, in_math=True), cfg)
            if not body:
                continue  # '$ $' is just space; '$$' would re-read as display
            out.append(MathSegment(delim, tuple(body)))
        elif isinstance(node, Environment):
            args = tuple(
                CommandArg(a.kind if a.kind is ArgKind.OPTIONAL else ArgKind.BRACED,
                           tuple(_strip_ws(_norm_nodes(a.nodes, cfg, in_math), cfg)))
                for a in node.args)
            body = _strip_ws(_norm_nodes(node.body, cfg, in_math), cfg)
            out.append(Environment(node.name, args, tuple(body)))
        else:
            raise TypeError(f"not a LatexNode: {node!r}")
    return _collapse_ws(out, cfg, in_math)


def _collapse_ws(nodes: list, cfg: NormalizationConfig, in_math: bool) -> list:
    if not cfg.collapse_whitespace:
        return _merge_text(nodes)
    out = []
    for node in nodes:
        if isinstance(node, Whitespace):
            if in_math:
                continue
            if out and isinstance(out[-1], Whitespace):
                continue
            out.append(Whitespace(" "))
        else:
            out.append(node)
    return _fix_adjacency(_merge_text(out), in_math)


def _fix_adjacency(nodes: list, in_math: bool) -> list:
    """Outside math, removing nodes can leave a control word directly before
    letters; the renderer would have to insert a space there, so make that
    space part of the canonical tree (in math it is dropped anyway)."""
    if in_math:
        return nodes
    out: list = []
    for node in nodes:
        if (out and isinstance(out[-1], Command) and not out[-1].args
                and out[-1].name[-1:].isalpha()
                and isinstance(node, Text) and node.content[:1].isalpha()):
            out.append(Whitespace(" "))
        out.append(node)
    return out


def _merge_text(nodes: list) -> list:
    out = []
    for node in nodes:
        if isinstance(node, Text) and out and isinstance(out[-1], Text):
            out[-1] = Text(out[-1].content + node.content)
        else:
            out.append(node)
    return out


def _strip_ws(nodes: list, cfg: NormalizationConfig) -> list:
    if not cfg.collapse_whitespace:
        return nodes
    start, end = 0, len(nodes)
    while start < end and isinstance(nodes[start], Whitespace):
        start += 1
    while end > start and isinstance(nodes[end - 1], Whitespace):
        end -= 1
    return nodes[start:end]


def normalize(nodes, cfg: NormalizationConfig = DEFAULT_CONFIG) -> tuple:
    """Return the canonical form of a parsed node sequence."""
    return tuple(_strip_ws(_norm_nodes(nodes, cfg, in_math=False), cfg))
