"""Command-line entry point wiring the toolchain's workflows.

Exit codes: 0 success, 1 usage error, 2 data error, 3 external-endpoint
error.  Every subcommand grows a ``--json`` twin for machine consumption.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import evaluator as eval_mod
from .latex import ParseError, find_math, parse, render, to_dict
from .normalize import DEFAULT_CONFIG, NormalizationConfig, normalize
from .registry import ExpandError, LoadError, Registry, expand, is_fully_disambiguated
from .semantics import (SemanticError, SymbolContext, infer_type,
                        is_trivially_typed, stex_to_term)
from .synth import SynthConfig, VerbalizationSet, synth_corpus
from .terms import SubtypeLattice, load_alignment_file, load_typed_symbols
from .translator import TranslatorError, TranslationRequest, load_lexicon, \
    make_translator, translate_sentence

DATA_DIR = Path(__file__).parent / "data"
REGISTRY_ENV = "STEXIFY_REGISTRY"

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ENDPOINT = 0, 1, 2, 3


class DataError(Exception):
    pass


def _pmap(fn, items, jobs: int):
    """Order-preserving map, fanned out over processes when jobs > 1."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    import multiprocessing

    with multiprocessing.Pool(processes=min(jobs, len(items))) as pool:
        return pool.map(fn, items)


def _extract_one(task):
    source_doc, registry, norm = task
    return corpus_mod.build_entries([source_doc], registry, norm, dedup=False)


def _check_one(task):
    triple, registry, ctx, cfg = task
    return eval_mod.run_checks(*triple, registry, ctx, cfg)


def _registry_path(args) -> Path:
    if args.registry:
        return Path(args.registry)
    env = os.environ.get(REGISTRY_ENV)
    if env:
        return Path(env)
    return DATA_DIR / "registry" / "MANIFEST"


def _load_registry(args) -> Registry:
    return Registry.load(_registry_path(args))


def _load_context(args, reg: Registry) -> SymbolContext:
    symbols_path = getattr(args, "symbols", None) or DATA_DIR / "typed_symbols.jsonl"
    lattice_path = getattr(args, "lattice", None) or DATA_DIR / "lattice.json"
    symbols = load_typed_symbols(symbols_path)
    if getattr(args, "alignment", None):
        symbols = load_alignment_file(args.alignment, symbols)
    return SymbolContext(reg, symbols, SubtypeLattice.load(lattice_path))


def _norm_config(args) -> NormalizationConfig:
    if getattr(args, "norm_config", None):
        return NormalizationConfig.from_file(args.norm_config)
    return DEFAULT_CONFIG


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        json.dump(payload, sys.stdout, ensure_ascii=False, indent=2)
        sys.stdout.write("\n")
    else:
        sys.stdout.write(human)


# --- subcommands ---------------------------------------------------------------


def cmd_parse(args) -> int:
    source = Path(args.file).read_text(encoding="utf-8")
    reg = _load_registry(args) if args.with_registry else None
    try:
        tree = parse(source, reg)
    except ParseError as exc:
        _emit(args, {"ok": False, "error": exc.message, "pos": exc.pos},
              f"ParseError: {exc}\n")
        return EXIT_DATA
    _emit(args, {"ok": True, "ast": [to_dict(n) for n in tree]},
          _format_tree(tree))
    return EXIT_OK


def _format_tree(tree, depth: int = 0) -> str:
    lines = []

    def walk(nodes, depth):
        pad = "  " * depth
        for node in nodes:
            d = to_dict(node)
            kind = d["kind"]
            if kind in ("text", "whitespace", "comment"):
                lines.append(f"{pad}{kind} {d['content']!r}")
            elif kind == "command":
                lines.append(f"{pad}command \\{d['name']}")
                for arg in node.args:
                    lines.append(f"{pad}  arg[{arg.kind.value}]")
                    walk(arg.nodes, depth + 2)
            elif kind == "group":
                lines.append(f"{pad}group")
                walk(node.children, depth + 1)
            elif kind == "math":
                lines.append(f"{pad}math[{d['delim']}]")
                walk(node.body, depth + 1)
            elif kind == "environment":
                lines.append(f"{pad}environment {d['name']}")
                walk(node.body, depth + 1)

    walk(tree, depth)
    return "\n".join(lines) + ("\n" if lines else "")


def cmd_expand(args) -> int:
    reg = _load_registry(args)
    source = Path(args.file).read_text(encoding="utf-8")
    tree = parse(source, reg)
    expanded = expand(tree, reg)
    if args.normalize:
        expanded = normalize(expanded, _norm_config(args))
    text = render(expanded)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        _emit(args, {"expanded": text}, text)
    return EXIT_OK


def cmd_extract(args) -> int:
    reg = _load_registry(args)
    documents = corpus_mod.collect_documents(args.directory)
    if not documents:
        raise DataError(f"no .tex documents under {args.directory}")
    norm = _norm_config(args)
    if args.jobs > 1:
        parts = _pmap(_extract_one, [(doc, reg, norm) for doc in documents],
                      args.jobs)
        entries, reports, seen = [], [], set()
        for doc_entries, doc_reports in parts:
            reports.extend(doc_reports)
            for entry in doc_entries:
                key = (entry.s_latex, entry.s_stex)
                if key not in seen:
                    seen.add(key)
                    entries.append(entry)
    else:
        entries, reports = corpus_mod.build_entries(documents, reg, norm)
    corpus_mod.write_jsonl(entries, args.output)
    report_path = args.report or str(args.output) + ".report.txt"
    Path(report_path).write_text(corpus_mod.render_report(reports), encoding="utf-8")
    payload = {
        "entries": len(entries),
        "expressions": sum(len(e.math_stex) for e in entries),
        "sources": len(reports),
        "errors": sum(len(r.errors) for r in reports),
        "output": str(args.output),
        "report": report_path,
    }
    _emit(args, payload,
          f"{payload['entries']} entries ({payload['expressions']} expressions) "
          f"from {payload['sources']} sources -> {args.output}\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    reg = _load_registry(args)
    ctx = _load_context(args, reg)
    templates = VerbalizationSet.load(args.templates or DATA_DIR / "verbalizations.json")
    cfg = SynthConfig(seed=args.seed, max_depth=args.max_depth)
    entries = synth_corpus(ctx, templates, args.per_symbol, cfg,
                           log=lambda msg: print(msg, file=sys.stderr),
                           jobs=args.jobs)
    corpus_mod.write_jsonl(entries, args.output)
    payload = {"entries": len(entries), "per_symbol": args.per_symbol,
               "seed": args.seed, "output": str(args.output)}
    _emit(args, payload, f"{len(entries)} synthetic entries -> {args.output}\n")
    return EXIT_OK


def cmd_traindata(args) -> int:
    entries = corpus_mod.read_jsonl(args.corpus)
    if not entries:
        raise DataError(f"{args.corpus} holds no entries")
    n = corpus_mod.write_training_file(entries, args.output)
    payload = {"lines": n, "entries": len(entries), "output": str(args.output)}
    _emit(args, payload, f"{n} training lines -> {args.output}\n")
    return EXIT_OK


def _load_triples(args, reg: Registry) -> list:
    rows = [json.loads(line) for line in
            Path(args.corpus).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not rows:
        raise DataError(f"{args.corpus} is empty")
    if "s_r" in rows[0]:
        return [(r["s_latex"], r["s_stex"], r["s_r"]) for r in rows]
    # corpus entries: run the selected translator per symbolic expression
    lexicon = load_lexicon(args.lexicon or DATA_DIR / "lexicon.jsonl")
    translator = make_translator(args.translator, reg, lexicon)
    triples = []
    for row in rows:
        entry = corpus_mod.CorpusEntry(**row)
        for m_latex, m_stex in zip(entry.math_latex, entry.math_stex):
            resp = translator.translate(
                TranslationRequest(entry.s_latex, f"${m_latex}$"))
            triples.append((m_latex, m_stex, resp.expression_stex))
    return triples


def cmd_eval(args) -> int:
    reg = _load_registry(args)
    ctx = _load_context(args, reg)
    cfg = eval_mod.EvalConfig(norm=_norm_config(args), recover_infix=args.recover)
    triples = _load_triples(args, reg)
    results = _pmap(_check_one, [(t, reg, ctx, cfg) for t in triples], args.jobs)
    report = eval_mod.aggregate(results)
    table = eval_mod.render_report(report)
    if args.output:
        Path(args.output).write_text(table, encoding="utf-8")
        eval_mod.write_log(triples, results, str(args.output) + ".jsonl")
    violations = [v for r in results for v in r.lattice_violations]
    payload = report.to_json()
    payload["lattice_violations"] = violations
    _emit(args, payload, table)
    return EXIT_OK


def cmd_check(args) -> int:
    reg = _load_registry(args)
    ctx = _load_context(args, reg)
    source = Path(args.file).read_text(encoding="utf-8")
    try:
        tree = parse(source, reg)
    except ParseError as exc:
        _emit(args, {"ok": False, "error": str(exc)}, f"ParseError: {exc}\n")
        return EXIT_DATA
    ok, spans = is_fully_disambiguated(tree, reg, _norm_config(args))
    segments = []
    for span, seg in find_math(tree):
        info = {"span": list(span), "source": render(seg)}
        try:
            term = stex_to_term(seg.body, reg)
            if is_trivially_typed(term):
                info["type"] = "(trivial: bare variable)"
            else:
                info["type"] = str(infer_type(term, ctx))
        except SemanticError as exc:
            info["type_error"] = str(exc)
        segments.append(info)
    payload = {"fully_disambiguated": ok,
               "offending_spans": [list(s) for s in spans],
               "segments": segments}
    lines = [f"fully disambiguated: {ok}"]
    for s in spans:
        lines.append(f"  offending span {s}: {source[s[0]:s[1]]!r}")
    for info in segments:
        what = info.get("type") or f"type error: {info.get('type_error')}"
        lines.append(f"  {info['source']}: {what}")
    _emit(args, payload, "\n".join(lines) + "\n")
    return EXIT_OK


# --- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stexify",
        description="Disambiguate symbolic expressions in LaTeX into sTeX: "
                    "parse, expand, build corpora, synthesize, evaluate.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, registry=True):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        if registry:
            p.add_argument("--registry", help=f"registry manifest (default: ${REGISTRY_ENV} "
                                              "or the bundled sample registry)")
        p.add_argument("--norm-config", help="JSON file overriding the non-semantic whitelist")

    p = sub.add_parser("parse", help="parse a file and dump its AST (islatex probe)")
    p.add_argument("file")
    p.add_argument("--with-registry", action="store_true",
                   help="use registry argument signatures while parsing")
    common(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("expand", help="expand sTeX macros into plain LaTeX")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.add_argument("--normalize", action="store_true", help="also canonicalize")
    common(p)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("extract", help="build the parallel corpus from .tex sources")
    p.add_argument("directory")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--report", help="per-source report path (default: <output>.report.txt)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("synth", help="synthesize well-typed training sentences")
    p.add_argument("--symbols", help="typed symbol JSONL (default: bundled set)")
    p.add_argument("--alignment", help="JSON Lines overriding symbol alignments")
    p.add_argument("--lattice", help="subtype lattice JSON")
    p.add_argument("--templates", help="verbalization templates JSON")
    p.add_argument("--per-symbol", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-depth", type=int, default=6)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output", required=True)
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("traindata", help="serialize a corpus into training lines")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True)
    common(p, registry=False)
    p.set_defaults(func=cmd_traindata)

    p = sub.add_parser("eval", help="run the eight-check harness")
    p.add_argument("--corpus", required=True,
                   help="JSONL of {s_latex,s_stex,s_r} triples or corpus entries")
    p.add_argument("--translator", default="identity",
                   help="identity | rules | external:<addr>")
    p.add_argument("--symbols")
    p.add_argument("--alignment")
    p.add_argument("--lattice")
    p.add_argument("--lexicon")
    p.add_argument("--recover", action="store_true",
                   help="heuristically recover bare infix operators in the omdoc stage")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="stexcheck + type inference diagnostics")
    p.add_argument("file")
    p.add_argument("--symbols")
    p.add_argument("--alignment")
    p.add_argument("--lattice")
    common(p)
    p.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ParseError, LoadError, ExpandError, SemanticError, DataError,
            corpus_mod.CorpusError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TranslatorError as exc:
        print(f"endpoint error: {exc}", file=sys.stderr)
        return EXIT_ENDPOINT


if __name__ == "__main__":
    sys.exit(main())
