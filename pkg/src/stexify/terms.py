"""Typed terms over an aligned symbol set: the mini strongly-typed layer.

Terms mirror OpenMath objects (application / symbol / variable / integer
literal); types are simple function types over base types ordered by a
small subtype lattice (e.g. Nat <= Int <= Real).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union


@dataclass(frozen=True)
class Base:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Fun:
    params: tuple
    result: Base

    def __post_init__(self):
        if not self.params:
            raise ValueError("function type needs at least one parameter")

    def __str__(self):
        inner = " ".join(str(t) for t in (*self.params, self.result))
        return f"(-> {inner})"


TypeExpr = Union[Base, Fun]


def parse_type(text: str) -> TypeExpr:
    """Parse a type written as an s-expression: ``Nat``, ``(-> Nat Nat Nat)``."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()

    def read(pos: int) -> tuple[TypeExpr, int]:
        tok = tokens[pos]
        if tok == "(":
            if tokens[pos + 1] != "->":
                raise ValueError(f"expected '->' in type {text!r}")
            parts = []
            pos += 2
            while tokens[pos] != ")":
                part, pos = read(pos)
                parts.append(part)
            if len(parts) < 2:
                raise ValueError(f"function type needs parameters and a result: {text!r}")
            result = parts[-1]
            if not isinstance(result, Base):
                raise ValueError(f"higher-order result types unsupported: {text!r}")
            return Fun(tuple(parts[:-1]), result), pos + 1
        if tok == ")":
            raise ValueError(f"unbalanced ')' in type {text!r}")
        return Base(tok), pos + 1

    ty, end = read(0)
    if end != len(tokens):
        raise ValueError(f"trailing tokens in type {text!r}")
    return ty


@dataclass(frozen=True)
class Alignment:
    macro_name: str
    variants: tuple = (None,)


@dataclass(frozen=True)
class TypedSymbol:
    name: str
    type: TypeExpr
    alignment: Optional[Alignment] = None
    literal: Optional[str] = None  # digit constants render as integer literals

    @property
    def is_function(self) -> bool:
        return isinstance(self.type, Fun)

    @property
    def is_aligned(self) -> bool:
        return self.alignment is not None or self.literal is not None


def load_typed_symbols(path: Path | str) -> list[TypedSymbol]:
    """Read a JSON Lines file of typed symbols.

    Each line: {"name": ..., "type": "<s-expression>",
                "alignment": {"macro_name": ..., "variants": [null, "cdot"]}?,
                "literal": "0"?}
    """
    symbols = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        raw = json.loads(line)
        alignment = None
        if raw.get("alignment"):
            a = raw["alignment"]
            alignment = Alignment(a["macro_name"], tuple(a.get("variants", [None])))
        symbols.append(TypedSymbol(
            name=raw["name"],
            type=parse_type(raw["type"]),
            alignment=alignment,
            literal=raw.get("literal"),
        ))
    names = [s.name for s in symbols]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate typed symbol names in {path}")
    return symbols


def load_alignment_file(path: Path | str, symbols: Sequence[TypedSymbol]) -> list[TypedSymbol]:
    """Apply a standalone alignment file to a typed symbol list.

    Each line: {"macro_name": ..., "symbol": ..., "variants": [null, ...]?};
    returns a new list where the named symbols carry (replaced) alignments.
    """
    by_name = {s.name: s for s in symbols}
    out = dict(by_name)
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        raw = json.loads(line)
        name = raw["symbol"]
        if name not in by_name:
            raise ValueError(f"alignment for unknown typed symbol {name!r}")
        old = by_name[name]
        out[name] = TypedSymbol(
            name=old.name, type=old.type, literal=old.literal,
            alignment=Alignment(raw["macro_name"],
                                tuple(raw.get("variants", [None]))))
    return list(out.values())


@dataclass
class SubtypeLattice:
    """Reflexive-transitive closure of declared base-subtype edges."""

    supertypes: dict = field(default_factory=dict)  # name -> set of supertype names

    @classmethod
    def from_edges(cls, bases: Sequence[str], edges: Sequence[tuple[str, str]]) -> "SubtypeLattice":
        closure = {b: {b} for b in bases}
        changed = True
        while changed:
            changed = False
            for sub, sup in edges:
                closure.setdefault(sub, {sub})
                closure.setdefault(sup, {sup})
                new = closure[sup] - closure[sub]
                if new:
                    closure[sub] |= new
                    changed = True
        return cls(closure)

    @classmethod
    def load(cls, path: Path | str) -> "SubtypeLattice":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_edges(raw.get("base_types", []),
                              [tuple(e) for e in raw.get("subtype_edges", [])])

    def is_subtype(self, a: TypeExpr, b: TypeExpr) -> bool:
        if a == b:
            return True
        if isinstance(a, Base) and isinstance(b, Base):
            return b.name in self.supertypes.get(a.name, {a.name})
        if isinstance(a, Fun) and isinstance(b, Fun):
            return (len(a.params) == len(b.params)
                    and self.is_subtype(a.result, b.result)
                    and all(self.is_subtype(q, p) for p, q in zip(a.params, b.params)))
        return False

    def strict_subtypes(self, t: TypeExpr) -> list[Base]:
        if not isinstance(t, Base):
            return []
        return sorted((Base(n) for n, sups in self.supertypes.items()
                       if t.name in sups and n != t.name),
                      key=lambda b: b.name)


# --- term language -----------------------------------------------------------


@dataclass(frozen=True)
class Sym:
    module: str
    name: str


@dataclass(frozen=True)
class Var:
    name: str
    type: Optional[TypeExpr] = None


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class Apply:
    head: "Term"
    args: tuple


Term = Union[Apply, Sym, Var, IntLit]


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Apply):
        yield from subterms(t.head)
        for arg in t.args:
            yield from subterms(arg)


def free_vars(t: Term) -> list[Var]:
    """Free variables in order of first occurrence."""
    seen: dict[str, Var] = {}
    for sub in subterms(t):
        if isinstance(sub, Var) and sub.name not in seen:
            seen[sub.name] = sub
    return list(seen.values())


def contains_symbol(t: Term, module: str, name: str) -> bool:
    return any(isinstance(s, Sym) and s.module == module and s.name == name
               for s in subterms(t))


def strip_var_types(t: Term) -> Term:
    if isinstance(t, Apply):
        return Apply(strip_var_types(t.head), tuple(strip_var_types(a) for a in t.args))
    if isinstance(t, Var):
        return Var(t.name)
    return t
