#!/usr/bin/env python3
"""End-to-end corpus build: bundled documents + synthesized sentences.

Writes corpus.jsonl, train.txt and a per-source report into --out-dir.
"""

import argparse
from pathlib import Path

from stexify.cli import DATA_DIR
from stexify.corpus import (build_entries, collect_documents, render_report,
                            split_by_source, write_jsonl, write_training_file)
from stexify.registry import Registry
from stexify.semantics import SymbolContext
from stexify.synth import SynthConfig, VerbalizationSet, synth_corpus
from stexify.terms import SubtypeLattice, load_typed_symbols


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="corpus_out")
    ap.add_argument("--per-symbol", type=int, default=250)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--eval-fraction", type=float, default=0.2)
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    reg = Registry.load(DATA_DIR / "registry" / "MANIFEST")
    ctx = SymbolContext(reg, load_typed_symbols(DATA_DIR / "typed_symbols.jsonl"),
                        SubtypeLattice.load(DATA_DIR / "lattice.json"))
    templates = VerbalizationSet.load(DATA_DIR / "verbalizations.json")

    documents = collect_documents(DATA_DIR / "corpus_src")
    entries, reports = build_entries(documents, reg)
    print(f"documents: {len(documents)} -> {len(entries)} entries")

    synth = synth_corpus(ctx, templates, args.per_symbol,
                         SynthConfig(seed=args.seed), log=print)
    print(f"synthesized: {len(synth)} entries "
          f"({args.per_symbol} per aligned symbol)")

    everything = entries + synth
    train, evals = split_by_source(everything, args.eval_fraction, args.seed)

    write_jsonl(everything, out / "corpus.jsonl")
    write_jsonl(evals, out / "eval.jsonl")
    n = write_training_file(train, out / "train.txt")
    (out / "report.txt").write_text(render_report(reports), encoding="utf-8")
    print(f"train.txt: {n} lines from {len(train)} entries; "
          f"eval.jsonl: {len(evals)} entries")
    print(f"wrote {out}/corpus.jsonl, train.txt, eval.jsonl, report.txt")


if __name__ == "__main__":
    main()
