"""Random generation of well-typed terms and their verbalization as
sTeX sentences, for training-data augmentation.

Starting from a chosen symbol, arguments are filled with variables,
recursive function applications or constants (probabilities decaying
with depth), and the finished term is optionally wrapped into enclosing
applications; free variables are then introduced by natural-language
templates matched to their types.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .corpus import CorpusEntry, extract_entry
from .semantics import SymbolContext, term_to_stex
from .terms import Apply, Base, Fun, IntLit, Sym, Term, TypedSymbol, Var

DEFAULT_VARIABLE_POOL = (
    "a", "b", "n", "m", "x", "y", "k", "\\ell", "\\varepsilon",
    "a'", "b'", "n'", "x'", "y'",
    "\\mathcal{F}", "\\mathcal{C}", "\\mathcal{G}", "\\mathcal{D}",
)


class GenerationFailure(Exception):
    pass


class MissingVerbalization(Exception):
    pass


@dataclass(frozen=True)
class SynthConfig:
    p_var: float = 0.4
    p_fun: float = 0.4
    p_up: float = 0.5
    fun_decay: float = 0.5
    up_decay: float = 0.5
    subtype_prob: float = 0.3
    reuse_prob: float = 0.3
    max_depth: int = 6
    variable_pool: tuple = DEFAULT_VARIABLE_POOL
    seed: int = 0

    def __post_init__(self):
        for name in ("p_var", "p_fun", "p_up", "subtype_prob", "reuse_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")
        if self.p_var + self.p_fun > 1.0:
            raise ValueError("p_var + p_fun must be <= 1 (the rest is p_const)")
        if not 0.0 < self.fun_decay < 1.0 or not 0.0 < self.up_decay < 1.0:
            raise ValueError("decay factors must lie in (0, 1)")


def task_rng(seed: int, symbol: str, index: int) -> random.Random:
    """Independent, platform-stable RNG stream per (seed, symbol, index)."""
    digest = hashlib.sha256(f"{seed}:{symbol}:{index}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _symbol_term(ts: TypedSymbol, ctx: SymbolContext) -> Term:
    if ts.literal is not None:
        return IntLit(int(ts.literal))
    decl = ctx.registry.index[ts.alignment.macro_name]
    return Sym(decl.module, decl.omdoc_name)


class _Generator:
    def __init__(self, ctx: SymbolContext, cfg: SynthConfig, rng: random.Random):
        self.ctx = ctx
        self.cfg = cfg
        self.rng = rng
        usable = [s for s in ctx.symbols if s.is_aligned]
        self.functions = sorted((s for s in usable if s.is_function), key=lambda s: s.name)
        self.constants = sorted((s for s in usable if not s.is_function), key=lambda s: s.name)
        self.unused = list(cfg.variable_pool)
        self.bound: dict[str, Base] = {}

    def generate(self, start: TypedSymbol) -> Term:
        cfg = self.cfg
        if start.is_function:
            term = Apply(_symbol_term(start, self.ctx),
                         tuple(self.fill(p, 0) for p in start.type.params))
            result = start.type.result
        else:
            term = _symbol_term(start, self.ctx)
            result = start.type
        k = 0
        while self.rng.random() < cfg.p_up * cfg.up_decay ** k:
            options = [(f, i) for f in self.functions
                       for i, p in enumerate(f.type.params)
                       if self.ctx.lattice.is_subtype(result, p)]
            if not options:
                break
            wrapper, slot = self.rng.choice(options)
            args = [self.fill(p, 1) if i != slot else term
                    for i, p in enumerate(wrapper.type.params)]
            term = Apply(_symbol_term(wrapper, self.ctx), tuple(args))
            result = wrapper.type.result
            k += 1
        return term

    def fill(self, want: Base, depth: int) -> Term:
        cfg, rng, lat = self.cfg, self.rng, self.ctx.lattice
        narrowed = want
        subs = lat.strict_subtypes(want)
        if subs and rng.random() < cfg.subtype_prob:
            narrowed = rng.choice(subs)

        reusable = sorted(name for name, ty in self.bound.items()
                          if lat.is_subtype(ty, narrowed))
        can_var = isinstance(narrowed, Base) and (bool(self.unused) or bool(reusable))
        funs = [f for f in self.functions if lat.is_subtype(f.type.result, narrowed)]
        cons = [c for c in self.constants if lat.is_subtype(c.type, narrowed)]

        w_var = cfg.p_var if can_var else 0.0
        w_fun = cfg.p_fun * cfg.fun_decay ** depth if funs and depth < cfg.max_depth else 0.0
        w_con = (1.0 - cfg.p_var - cfg.p_fun) if cons else 0.0
        total = w_var + w_fun + w_con
        if total <= 0.0:
            raise GenerationFailure(
                f"type {narrowed} has no inhabitants "
                "(no variable allowed, no constants, no functions)")
        roll = rng.random() * total
        if roll < w_var:
            return self.make_var(narrowed, reusable)
        if roll < w_var + w_fun:
            f = rng.choice(funs)
            return Apply(_symbol_term(f, self.ctx),
                         tuple(self.fill(p, depth + 1) for p in f.type.params))
        return _symbol_term(rng.choice(cons), self.ctx)

    def make_var(self, ty: Base, reusable: Sequence[str]) -> Var:
        if reusable and (not self.unused or self.rng.random() < self.cfg.reuse_prob):
            name = self.rng.choice(list(reusable))
            return Var(name, self.bound[name])
        name = self.rng.choice(self.unused)
        self.unused.remove(name)
        self.bound[name] = ty
        return Var(name, ty)


def gen_term(ctx: SymbolContext, start: TypedSymbol, cfg: SynthConfig,
             rng: random.Random) -> Term:
    """A random well-typed term guaranteed to contain ``start``."""
    if start not in list(ctx.symbols):
        raise ValueError(f"start symbol {start.name} not in the symbol set")
    return _Generator(ctx, cfg, rng).generate(start)


# --- verbalization ------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    intro: str
    conclusion: str
    form: str  # prefixed | suffixed


@dataclass(frozen=True)
class TypeTemplate:
    form: str    # prefixed | suffixed | any
    number: str  # singular | plural
    text: str    # with <var> (raw name) or <vars> (pre-wrapped list) holes


@dataclass
class VerbalizationSet:
    frames: list
    closed_frames: list
    types: dict  # type name -> list[TypeTemplate]

    @classmethod
    def load(cls, path: Path | str) -> "VerbalizationSet":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            frames=[Frame(**f) for f in raw["frames"]],
            closed_frames=list(raw["closed_frames"]),
            types={name: [TypeTemplate(**t) for t in entries]
                   for name, entries in raw["types"].items()},
        )


def _join_phrases(phrases: Sequence[str]) -> str:
    if len(phrases) == 1:
        return phrases[0]
    return ", ".join(phrases[:-1]) + " and " + phrases[-1]


def verbalize(t: Term, templates: VerbalizationSet, rng: random.Random,
              ctx: SymbolContext) -> str:
    """Wrap a term into a sentence that introduces its free variables."""
    from .terms import free_vars

    expr = term_to_stex(
        t, ctx,
        pick_variant=lambda decl, allowed: rng.choice(list(allowed)))
    variables = free_vars(t)
    if not variables:
        frame = rng.choice(templates.closed_frames)
        return frame.replace("<expr>", f"${expr}$")

    frame = rng.choice(templates.frames)
    groups: dict[str, list] = {}
    for v in variables:
        type_name = v.type.name if isinstance(v.type, Base) else str(v.type)
        groups.setdefault(type_name, []).append(v)

    phrases = []
    for type_name, group in groups.items():
        number = "singular" if len(group) == 1 else "plural"
        candidates = [tp for tp in templates.types.get(type_name, ())
                      if tp.number == number and tp.form in (frame.form, "any")]
        if not candidates:
            raise MissingVerbalization(
                f"no {frame.form}/{number} verbalization for type {type_name}")
        chosen = rng.choice(candidates)
        wrapped = _join_phrases([f"${v.name}$" for v in group])
        phrases.append(chosen.text
                       .replace("<vars>", wrapped)
                       .replace("<var>", group[0].name))
    sentence = frame.intro.replace("<vars>", _join_phrases(phrases))
    return sentence + frame.conclusion.replace("<expr>", f"${expr}$")


# --- corpus synthesis ----------------------------------------------------------


def _entries_for_symbol(task) -> tuple[list, list]:
    ctx, templates, symbol, per_symbol, cfg = task
    entries: list[CorpusEntry] = []
    skips: list[str] = []
    for index in range(per_symbol):
        rng = task_rng(cfg.seed, symbol.name, index)
        try:
            term = gen_term(ctx, symbol, cfg, rng)
            sentence = verbalize(term, templates, rng, ctx)
            entry = extract_entry(
                sentence, ctx.registry,
                source_id=f"synth:{symbol.name}:{index}", synthetic=True)
        except (GenerationFailure, MissingVerbalization) as exc:
            skips.append(f"skipping {symbol.name}: {exc}")
            break
        entries.append(entry)
    return entries, skips


def synth_corpus(ctx: SymbolContext, templates: VerbalizationSet,
                 per_symbol: int, cfg: SynthConfig,
                 log=None, jobs: int = 1) -> list:
    """``per_symbol`` sentences per aligned start symbol, validated through
    the regular entry extraction; deterministic for a fixed seed (each
    (symbol, index) task owns its own RNG stream, so the output is the
    same at any parallelism and comes out sorted by symbol then index)."""
    if per_symbol < 1:
        raise ValueError("per_symbol must be >= 1")
    starts = sorted((s for s in ctx.symbols if s.alignment is not None),
                    key=lambda s: s.name)
    tasks = [(ctx, templates, symbol, per_symbol, cfg) for symbol in starts]
    if jobs > 1 and len(tasks) > 1:
        import multiprocessing

        with multiprocessing.Pool(processes=min(jobs, len(tasks))) as pool:
            parts = pool.map(_entries_for_symbol, tasks)
    else:
        parts = [_entries_for_symbol(task) for task in tasks]
    entries: list[CorpusEntry] = []
    for sub, skips in parts:
        entries.extend(sub)
        if log is not None:
            for message in skips:
                log(message)
    return entries
