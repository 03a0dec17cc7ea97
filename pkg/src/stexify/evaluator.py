"""The eight-strategy evaluation harness over (latex, label, output) triples.

Checks: islatex, stexcheck, eval_latex, omdoc, translated, inferred,
provided_stex, stex_as_omdoc.  Everything after islatex is skipped when
islatex fails; translated/inferred/stex_as_omdoc depend on earlier
semantic stages.  Percentages count skips as failures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .latex import ParseError, find_math, parse, render
from .normalize import DEFAULT_CONFIG, NormalizationConfig, normalize
from .registry import ExpandError, Registry, expand, is_fully_disambiguated
from .semantics import (
    SemanticError, SymbolContext, infer_type, is_trivially_typed,
    omdoc_equal, stex_to_term, term_to_omdoc, unaligned_symbols,
)

CHECK_ORDER = (
    "islatex", "stexcheck", "eval_latex",
    "omdoc", "translated", "inferred",
    "provided_stex", "stex_as_omdoc",
)

# pass implies pass of every listed predecessor
_IMPLICATIONS = {
    "stexcheck": ("islatex",),
    "eval_latex": ("islatex",),
    "omdoc": ("islatex",),
    "translated": ("omdoc",),
    "inferred": ("translated",),
    "provided_stex": ("eval_latex", "stexcheck", "islatex"),
    "stex_as_omdoc": ("omdoc",),
}


class Outcome(Enum):
    PASS = "pass"
    FAIL = "fail"
    SKIPPED = "skipped"


@dataclass
class CheckResult:
    outcomes: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    lattice_violations: list = field(default_factory=list)

    def passed(self, check: str) -> bool:
        return self.outcomes.get(check) is Outcome.PASS

    def to_json(self) -> dict:
        out = {"outcomes": {c: self.outcomes[c].value for c in CHECK_ORDER}}
        if self.diagnostics:
            out["diagnostics"] = dict(self.diagnostics)
        if self.lattice_violations:
            out["lattice_violations"] = list(self.lattice_violations)
        return out


@dataclass
class EvalReport:
    total: int
    percentages: dict

    def to_json(self) -> dict:
        return {"total": self.total, "percentages": dict(self.percentages)}


@dataclass
class EvalConfig:
    norm: NormalizationConfig = DEFAULT_CONFIG
    # LaTeXML-style recovery of bare infix characters in the omdoc stage
    recover_infix: bool = False


def _wrap_math(text: str) -> str:
    """Bare expressions are treated as the body of one inline segment."""
    try:
        tree = parse(text)
    except ParseError:
        return text
    if text.strip() and not find_math(tree):
        return f"${text}$"
    return text


def run_checks(s_latex: str, s_stex: str, s_r: str, reg: Registry,
               ctx: Optional[SymbolContext] = None,
               cfg: Optional[EvalConfig] = None) -> CheckResult:
    cfg = cfg or EvalConfig()
    ctx = ctx if ctx is not None else SymbolContext(reg)
    result = CheckResult()
    out, diag = result.outcomes, result.diagnostics

    def canon(text: str) -> str:
        return render(normalize(parse(text, reg), cfg.norm))

    # islatex: plain parse of the raw model output
    try:
        parse(s_r)
        out["islatex"] = Outcome.PASS
    except ParseError as exc:
        out["islatex"] = Outcome.FAIL
        diag["islatex"] = str(exc)
        for check in CHECK_ORDER[1:]:
            out[check] = Outcome.SKIPPED
        return result

    w_r, w_latex, w_stex = _wrap_math(s_r), _wrap_math(s_latex), _wrap_math(s_stex)

    # stexcheck
    try:
        tree_r = parse(w_r, reg)
        ok, spans = is_fully_disambiguated(tree_r, reg, cfg.norm)
        out["stexcheck"] = Outcome.PASS if ok else Outcome.FAIL
        if not ok:
            diag["stexcheck"] = f"offending spans: {spans}"
    except ParseError as exc:
        tree_r = None
        out["stexcheck"] = Outcome.FAIL
        diag["stexcheck"] = str(exc)

    # eval_latex: expand the output, compare to the plain-LaTeX side
    try:
        expanded = render(normalize(expand(parse(w_r, reg), reg), cfg.norm))
        expected = canon(w_latex)
        if expanded == expected:
            out["eval_latex"] = Outcome.PASS
        else:
            out["eval_latex"] = Outcome.FAIL
            diag["eval_latex"] = f"{expanded!r} != {expected!r}"
    except (ParseError, ExpandError) as exc:
        out["eval_latex"] = Outcome.FAIL
        diag["eval_latex"] = str(exc)

    # omdoc / translated / inferred
    terms_r = None
    if tree_r is None:
        out["omdoc"] = Outcome.FAIL
        diag["omdoc"] = "output not parseable with registry signatures"
    else:
        try:
            terms_r = [stex_to_term(seg.body, reg, cfg.recover_infix, cfg.norm)
                       for _, seg in find_math(tree_r)]
            if not terms_r:
                raise SemanticError("no symbolic expression in output")
            out["omdoc"] = Outcome.PASS
        except SemanticError as exc:
            terms_r = None
            out["omdoc"] = Outcome.FAIL
            diag["omdoc"] = str(exc)

    if terms_r is None:
        out["translated"] = Outcome.SKIPPED
        out["inferred"] = Outcome.SKIPPED
    else:
        missing = [s for t in terms_r for s in unaligned_symbols(t, ctx)]
        if missing:
            out["translated"] = Outcome.FAIL
            diag["translated"] = "unaligned: " + ", ".join(
                f"{s.module}?{s.name}" for s in missing)
            out["inferred"] = Outcome.SKIPPED
        else:
            out["translated"] = Outcome.PASS
            try:
                for t in terms_r:
                    if not is_trivially_typed(t):
                        infer_type(t, ctx)
                out["inferred"] = Outcome.PASS
            except SemanticError as exc:
                out["inferred"] = Outcome.FAIL
                diag["inferred"] = str(exc)

    # provided_stex: normalized string comparison against the label
    try:
        if canon(w_stex) == canon(w_r):
            out["provided_stex"] = Outcome.PASS
        else:
            out["provided_stex"] = Outcome.FAIL
    except ParseError as exc:
        out["provided_stex"] = Outcome.FAIL
        diag["provided_stex"] = str(exc)

    # stex_as_omdoc: structural OMDoc comparison against the label
    if terms_r is None:
        out["stex_as_omdoc"] = Outcome.SKIPPED
    else:
        try:
            tree_stex = parse(w_stex, reg)
            terms_stex = [stex_to_term(seg.body, reg, cfg.recover_infix, cfg.norm)
                          for _, seg in find_math(tree_stex)]
            same = (len(terms_stex) == len(terms_r)
                    and all(omdoc_equal(term_to_omdoc(a), term_to_omdoc(b))
                            for a, b in zip(terms_stex, terms_r)))
            out["stex_as_omdoc"] = Outcome.PASS if same else Outcome.FAIL
        except (ParseError, SemanticError) as exc:
            out["stex_as_omdoc"] = Outcome.FAIL
            diag["stex_as_omdoc"] = f"label not convertible: {exc}"

    result.lattice_violations = check_lattice(result)
    return result


def check_lattice(result: CheckResult) -> list:
    """Implication-lattice violations (e.g. a label that expands worse
    than the output it equals); logged, never suppressed."""
    violations = []
    for check, requires in _IMPLICATIONS.items():
        if result.passed(check):
            for req in requires:
                if not result.passed(req):
                    violations.append(f"{check} passed but {req} did not")
    return violations


def aggregate(results: Sequence[CheckResult]) -> EvalReport:
    if not results:
        raise ValueError("cannot aggregate an empty result list")
    total = len(results)
    percentages = {
        check: 100.0 * sum(r.passed(check) for r in results) / total
        for check in CHECK_ORDER
    }
    return EvalReport(total=total, percentages=percentages)


def render_report(report: EvalReport) -> str:
    width = max(len(c) for c in CHECK_ORDER) + 2
    lines = [f"{'Total inputs':{width}} {report.total}"]
    for check in CHECK_ORDER:
        lines.append(f"{check:{width}} {report.percentages[check]:.1f}%")
    return "\n".join(lines) + "\n"


def write_log(triples: Sequence, results: Sequence[CheckResult], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (s_latex, s_stex, s_r), result in zip(triples, results):
            record = {"s_latex": s_latex, "s_stex": s_stex, "s_r": s_r}
            record.update(result.to_json())
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
