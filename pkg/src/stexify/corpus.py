"""Parallel corpus construction: fragmentation, entry extraction,
training-example serialization.

Each dataset entry pairs a fully annotated sentence with its plain-LaTeX
expansion, plus the aligned per-expression lists; training examples are
one line per symbolic expression:
``<sentence-latex> <s> $<expr-latex>$ <s> $<expr-stex>$ <s>``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .latex import (
    Command, Comment, Environment, Group, MathSegment, Text, Whitespace,
    find_math, parse, render,
)
from .normalize import DEFAULT_CONFIG, NormalizationConfig, normalize
from .registry import Registry, expand

SEPARATOR = "<s>"

# Target fragment sizing: prefer to cut just after a math segment that ends
# inside [FRAG_MIN, FRAG_MAX]; otherwise cut at the last top-level
# whitespace before FRAG_MAX.
FRAG_MIN = 350
FRAG_MAX = 650


class CorpusError(Exception):
    pass


@dataclass
class CorpusEntry:
    s_latex: str
    s_stex: str
    math_latex: list
    math_stex: list
    source_id: str = ""
    synthetic: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "CorpusEntry":
        return cls(**json.loads(line))

    def validate(self, reg: Registry, cfg: NormalizationConfig = DEFAULT_CONFIG) -> None:
        """Re-derive the plain side from the annotated side and check the
        alignment invariants; raises CorpusError on any mismatch."""
        if not (len(self.math_latex) == len(self.math_stex) >= 1):
            raise CorpusError(f"{self.source_id}: misaligned expression lists")
        rebuilt = extract_entry(self.s_stex, reg, cfg=cfg,
                                source_id=self.source_id, synthetic=self.synthetic)
        if rebuilt.s_latex != self.s_latex:
            raise CorpusError(f"{self.source_id}: s_latex is not the expansion of s_stex")
        if rebuilt.math_stex != self.math_stex or rebuilt.math_latex != self.math_latex:
            raise CorpusError(f"{self.source_id}: expression lists inconsistent")
        for text in (self.s_latex, self.s_stex, *self.math_latex, *self.math_stex):
            parse(text, reg)


# --- document flattening and fragmentation -----------------------------------

_SKIP_ENVS = frozenset({"modsig"})
_SKIP_COMMANDS = frozenset({
    "documentclass", "usepackage", "gimport", "importmhmodule", "usemhmodule",
    "title", "author", "label", "section", "subsection", "subsubsection",
    "paragraph", "item", "maketitle", "tableofcontents",
})


def text_flow(nodes) -> tuple:
    """Flatten environments into the plain text+math flow of a document."""
    out: list = []
    for node in nodes:
        if isinstance(node, Environment):
            if node.name in _SKIP_ENVS:
                continue
            out.extend(text_flow(node.body))
        elif isinstance(node, Command) and node.name in _SKIP_COMMANDS:
            continue
        elif isinstance(node, Comment):
            continue
        else:
            out.append(node)
    return tuple(out)


def fragment(document: str, reg: Optional[Registry] = None) -> list:
    """Split a document body into sentence fragments for the corpus.

    Cut points prefer the end of a math segment once a fragment is at
    least FRAG_MIN characters long; fragments without any symbolic
    expression are dropped.
    """
    flow = text_flow(parse(document, reg))
    source = render(flow)
    math_spans = [span for span, _ in find_math(flow)]
    ws_cuts = _top_level_ws(flow)

    fragments: list[str] = []
    pos = 0
    total = len(source)
    while pos < total:
        limit_lo, limit_hi = pos + FRAG_MIN, pos + FRAG_MAX
        if total <= limit_hi:
            cut = total  # the remainder fits in one fragment
            piece = source[pos:cut]
            if any(pos <= s and e <= cut for s, e in math_spans):
                fragments.append(piece.strip())
            break
        cut = next((end for _, end in math_spans if limit_lo <= end <= limit_hi), None)
        if cut is not None:
            while cut < total and source[cut] in ".,;:!?":
                cut += 1  # keep sentence punctuation attached to its math
        if cut is None:
            candidates = [w for w in ws_cuts if pos < w <= limit_hi]
            cut = candidates[-1] if candidates else None
        if cut is None:
            later = [end for _, end in math_spans if end > limit_hi]
            later += [w for w in ws_cuts if w > limit_hi]
            cut = min(later) if later else total
        if cut >= total:
            cut = total
        piece = source[pos:cut]
        if any(pos <= s and e <= cut for s, e in math_spans):
            fragments.append(piece.strip())
        pos = cut
        while pos < total and source[pos] in " \t\r\n":
            pos += 1
    return [f for f in fragments if f]


def _top_level_ws(flow) -> list:
    """Offsets of whitespace runs between top-level nodes (safe cut points)."""
    cuts = []
    offset = 0
    for node in flow:
        length = len(render((node,)))
        if isinstance(node, Whitespace):
            cuts.append(offset)
        offset += length
    return cuts


# --- entry extraction ---------------------------------------------------------


def extract_entry(sentence: str, reg: Registry,
                  cfg: NormalizationConfig = DEFAULT_CONFIG,
                  source_id: str = "", synthetic: bool = False) -> CorpusEntry:
    """Build the 4-tuple entry for one sentence: normalized annotated side,
    its macro expansion, and the aligned per-expression lists."""
    tree = parse(sentence, reg)
    norm = normalize(tree, cfg)
    expanded = normalize(expand(tree, reg), cfg)
    segs_stex = [seg for _, seg in find_math(norm)]
    segs_latex = [seg for _, seg in find_math(expanded)]
    if not segs_stex:
        raise CorpusError(f"{source_id or sentence[:40]!r}: no symbolic expression")
    if len(segs_stex) != len(segs_latex):
        raise CorpusError(
            f"{source_id}: expansion changed the number of math segments "
            f"({len(segs_stex)} -> {len(segs_latex)})")
    return CorpusEntry(
        s_latex=render(expanded),
        s_stex=render(norm),
        math_latex=[render(seg.body) for seg in segs_latex],
        math_stex=[render(seg.body) for seg in segs_stex],
        source_id=source_id,
        synthetic=synthetic,
    )


def to_training_examples(entry: CorpusEntry) -> list:
    """One line per symbolic expression in the §-style serialization."""
    return [
        f"{entry.s_latex} {SEPARATOR} ${m_latex}$ {SEPARATOR} ${m_stex}$ {SEPARATOR}"
        for m_latex, m_stex in zip(entry.math_latex, entry.math_stex)
    ]


# --- corpus pipeline ----------------------------------------------------------


@dataclass
class SourceReport:
    source_id: str
    fragments: int = 0
    entries: int = 0
    expressions: int = 0
    errors: list = field(default_factory=list)


def build_entries(documents: Iterable, reg: Registry,
                  cfg: NormalizationConfig = DEFAULT_CONFIG,
                  dedup: bool = True) -> tuple[list, list]:
    """Process (source_id, text) documents into deduplicated entries.

    Returns (entries, per-source reports).  Errors from individual
    fragments are recorded, not raised.
    """
    entries: list[CorpusEntry] = []
    reports: list[SourceReport] = []
    seen: set[tuple[str, str]] = set()
    for source_id, text in documents:
        report = SourceReport(source_id)
        try:
            pieces = fragment(text, reg)
        except Exception as exc:  # unparseable document
            report.errors.append(f"{source_id}: {exc}")
            reports.append(report)
            continue
        report.fragments = len(pieces)
        for i, piece in enumerate(pieces):
            frag_id = f"{source_id}#{i}"
            try:
                entry = extract_entry(piece, reg, cfg, source_id=frag_id)
            except Exception as exc:
                report.errors.append(f"{frag_id}: {exc}")
                continue
            key = (entry.s_latex, entry.s_stex)
            if dedup and key in seen:
                continue
            seen.add(key)
            entries.append(entry)
            report.entries += 1
            report.expressions += len(entry.math_stex)
        reports.append(report)
    return entries, reports


def collect_documents(root: Path | str, suffix: str = ".tex") -> list:
    root = Path(root)
    if root.is_file():
        return [(root.name, root.read_text(encoding="utf-8"))]
    return [(p.relative_to(root).as_posix(), p.read_text(encoding="utf-8"))
            for p in sorted(root.rglob(f"*{suffix}"))]


def write_jsonl(entries: Sequence[CorpusEntry], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(entry.to_json() + "\n")


def read_jsonl(path: Path | str) -> list:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(CorpusEntry.from_json(line))
    return out


def write_training_file(entries: Sequence[CorpusEntry], path: Path | str) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            for line in to_training_examples(entry):
                fh.write(line + "\n")
                n += 1
    return n


def render_report(reports: Sequence[SourceReport]) -> str:
    lines = [f"{'source':40}\tfragments\tentries\texpressions"]
    for r in reports:
        lines.append(f"{r.source_id:40}\t{r.fragments}\t{r.entries}\t{r.expressions}")
        for err in r.errors:
            lines.append(f"  ! {err}")
    total_e = sum(r.entries for r in reports)
    total_x = sum(r.expressions for r in reports)
    lines.append(f"{'TOTAL':40}\t\t{total_e}\t{total_x}")
    return "\n".join(lines) + "\n"


def split_by_source(entries: Sequence[CorpusEntry], eval_fraction: float,
                    seed: int = 0) -> tuple[list, list]:
    """Document-level train/eval split: fragments of one source never
    straddle the boundary."""
    import random

    sources = sorted({e.source_id.split("#")[0] for e in entries})
    rng = random.Random(seed)
    rng.shuffle(sources)
    n_eval = max(1, round(len(sources) * eval_fraction)) if eval_fraction > 0 else 0
    eval_set = set(sources[:n_eval])
    train = [e for e in entries if e.source_id.split("#")[0] not in eval_set]
    evals = [e for e in entries if e.source_id.split("#")[0] in eval_set]
    return train, evals
