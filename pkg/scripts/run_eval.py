#!/usr/bin/env python3
"""Evaluate the built-in baselines on a synthesized evaluation set and
print one eight-row table per translator."""

import argparse

from stexify.cli import DATA_DIR
from stexify.evaluator import EvalConfig, aggregate, render_report, run_checks
from stexify.registry import Registry
from stexify.semantics import SymbolContext
from stexify.synth import SynthConfig, VerbalizationSet, synth_corpus
from stexify.terms import SubtypeLattice, load_typed_symbols
from stexify.translator import TranslationRequest, load_lexicon, make_translator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--per-symbol", type=int, default=16)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--translators", default="identity,rules")
    ap.add_argument("--recover", action="store_true")
    args = ap.parse_args()

    reg = Registry.load(DATA_DIR / "registry" / "MANIFEST")
    ctx = SymbolContext(reg, load_typed_symbols(DATA_DIR / "typed_symbols.jsonl"),
                        SubtypeLattice.load(DATA_DIR / "lattice.json"))
    templates = VerbalizationSet.load(DATA_DIR / "verbalizations.json")
    lexicon = load_lexicon(DATA_DIR / "lexicon.jsonl")

    entries = synth_corpus(ctx, templates, args.per_symbol, SynthConfig(seed=args.seed))
    pairs = [(entry, m_latex, m_stex)
             for entry in entries
             for m_latex, m_stex in zip(entry.math_latex, entry.math_stex)]
    print(f"evaluation set: {len(pairs)} symbolic expressions "
          f"from {len(entries)} sentences\n")

    cfg = EvalConfig(recover_infix=args.recover)
    for name in args.translators.split(","):
        translator = make_translator(name.strip(), reg, lexicon)
        results = []
        for entry, m_latex, m_stex in pairs:
            resp = translator.translate(
                TranslationRequest(entry.s_latex, f"${m_latex}$"))
            results.append(run_checks(m_latex, m_stex, resp.expression_stex,
                                      reg, ctx, cfg))
        print(f"--- translator: {name.strip()}")
        print(render_report(aggregate(results)))


if __name__ == "__main__":
    main()
