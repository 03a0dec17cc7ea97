"""Translators realizing the disambiguation function: baselines plus a
client for an external neural model speaking a small wire protocol.

Protocol: one JSON object per request/response.  Request
``{"sentence_latex": ..., "expression_latex": ...}``; response
``{"expression_stex": ..., "terminated": true}``.  Transports: HTTP POST
to a single endpoint, or newline-delimited JSON on a child process's
standard streams; one in-flight request per connection either way.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .latex import Command, Group, MathDelim, MathSegment, ParseError, Text, \
    Whitespace, find_math, parse, render
from .normalize import normalize
from .registry import Registry

SEPARATOR = "<s>"


class TranslatorError(Exception):
    pass


class ProtocolError(TranslatorError):
    pass


class TranslatorTimeout(TranslatorError):
    pass


@dataclass(frozen=True)
class TranslationRequest:
    sentence_latex: str
    expression_latex: str


@dataclass(frozen=True)
class TranslationResponse:
    expression_stex: str
    terminated: bool = True

    def __post_init__(self):
        if SEPARATOR in self.expression_stex:
            raise ProtocolError(f"response contains the {SEPARATOR!r} token")


def _split_delims(expr: str) -> tuple[str, str, str]:
    """Split a possibly math-delimited expression into (open, body, close)."""
    for delim in (MathDelim.DISPLAY, MathDelim.INLINE, MathDelim.BRACKET, MathDelim.PAREN):
        if (expr.startswith(delim.open) and expr.endswith(delim.close)
                and len(expr) >= len(delim.open) + len(delim.close)):
            return delim.open, expr[len(delim.open):len(expr) - len(delim.close)], delim.close
    return "", expr, ""


class IdentityTranslator:
    """Lower-bound baseline: every expression maps to itself."""

    name = "identity"

    def translate(self, request: TranslationRequest) -> TranslationResponse:
        return TranslationResponse(request.expression_latex)


@dataclass(frozen=True)
class LexiconEntry:
    token: str             # rendered notation: '\\cdot', '+', '\\mathbb{N}', ...
    macro: str
    variant: Optional[str] = None
    kind: str = "infix"    # infix | prefix | atom | function


def load_lexicon(path: Path | str) -> list:
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        raw = json.loads(line)
        entries.append(LexiconEntry(
            token=raw["token"], macro=raw["macro"],
            variant=raw.get("variant"), kind=raw.get("kind", "infix")))
    return entries


@dataclass
class _Op:
    entry: LexiconEntry
    precedence: int


class _Unsupported(Exception):
    """Internal: fall back to identity for inputs the rule table can't shape."""


@dataclass
class _Call:
    macro: str
    variant: Optional[str]
    flexary: bool
    args: list

    def render(self) -> str:
        head = "\\" + self.macro + (f"[{self.variant}]" if self.variant else "")
        if self.flexary:
            return head + "{" + ",".join(a.render() for a in self.args) + "}"
        return head + "".join("{" + a.render() + "}" for a in self.args)


@dataclass
class _Leaf:
    text: str

    def render(self) -> str:
        return self.text


class RulesTranslator:
    """Notation-matching baseline: a precedence-driven parse of the
    expression over a one-notation-one-symbol lexicon.  Context-blind by
    construction; anything it cannot shape passes through unchanged."""

    name = "rules"

    def __init__(self, reg: Registry, lexicon: Sequence[LexiconEntry]):
        self.reg = reg
        self.by_token = {e.token: e for e in lexicon}

    def translate(self, request: TranslationRequest) -> TranslationResponse:
        open_d, body, close_d = _split_delims(request.expression_latex)
        try:
            translated = self._translate_body(body)
        except (_Unsupported, ParseError):
            translated = body
        return TranslationResponse(open_d + translated + close_d)

    # -- precedence parsing ----------------------------------------------

    def _precedence(self, entry: LexiconEntry) -> int:
        decl = self.reg.index.get(entry.macro)
        if decl is not None and decl.precedence is not None:
            return decl.precedence
        return 550  # between addition and multiplication, for the unregistered

    def _translate_body(self, body: str) -> str:
        if not body.strip():
            return body
        math = normalize(parse(f"${body}$"))[0]
        self._tokens = self._tokenize(math.body)
        self._pos = 0
        node = self._parse_expr(-10**9)
        if self._pos != len(self._tokens):
            raise _Unsupported("trailing tokens")
        return node.render()

    def _tokenize(self, nodes) -> list:
        tokens: list = []
        for node in nodes:
            if isinstance(node, Whitespace):
                continue
            if isinstance(node, Text):
                buff = ""
                for ch in node.content:
                    if ch.isalnum() or ch == "'":
                        buff += ch
                    else:
                        if buff:
                            tokens.extend(self._split_word(buff))
                            buff = ""
                        tokens.append(ch)
                if buff:
                    tokens.extend(self._split_word(buff))
            else:
                tokens.append(node)
        return tokens

    @staticmethod
    def _split_word(word: str) -> list:
        # keep digit runs whole; letters become individual variables
        out, num = [], ""
        for ch in word:
            if ch.isdigit():
                num += ch
            else:
                if num:
                    out.append(num)
                    num = ""
                if out and isinstance(out[-1], str) and out[-1][-1:].isalpha() and ch == "'":
                    out[-1] += ch
                else:
                    out.append(ch)
        if num:
            out.append(num)
        return out

    def _entry_for(self, token) -> Optional[LexiconEntry]:
        if isinstance(token, str):
            return self.by_token.get(token)
        if isinstance(token, Command):
            return (self.by_token.get(render(token).strip())
                    or self.by_token.get("\\" + token.name))
        return None

    def _peek(self):
        return self._tokens[self._pos] if self._pos < len(self._tokens) else None

    def _parse_expr(self, min_prec: int):
        left = self._parse_operand()
        while True:
            token = self._peek()
            if token is None or (isinstance(token, str) and token == ")"):
                return left
            entry = self._entry_for(token)
            if entry is None or entry.kind != "infix":
                raise _Unsupported(f"unexpected token {token!r}")
            prec = self._precedence(entry)
            if prec < min_prec:
                return left
            self._pos += 1
            right = self._parse_expr(prec + 1)
            decl = self.reg.index.get(entry.macro)
            flexary = bool(decl and decl.flexary)
            if (flexary and isinstance(left, _Call) and left.macro == entry.macro
                    and left.variant == entry.variant):
                left.args.append(right)
            else:
                left = _Call(entry.macro, entry.variant, flexary, [left, right])

    def _parse_operand(self):
        token = self._peek()
        if token is None:
            raise _Unsupported("missing operand")
        entry = self._entry_for(token)
        if entry is not None and entry.kind == "prefix":
            self._pos += 1
            decl = self.reg.index.get(entry.macro)
            prec = self._precedence(entry)
            arg = self._parse_expr(prec)
            return _Call(entry.macro, entry.variant, bool(decl and decl.flexary), [arg])
        if entry is not None and entry.kind == "atom":
            self._pos += 1
            return _Leaf("\\" + entry.macro + (f"[{entry.variant}]" if entry.variant else ""))
        if entry is not None and entry.kind == "function" and isinstance(token, Command):
            self._pos += 1
            decl = self.reg.index.get(entry.macro)
            args = [_Leaf(self._translate_body(render(a))) for a in token.braced_args]
            return _Call(entry.macro, entry.variant, bool(decl and decl.flexary), args)
        if isinstance(token, str):
            if token == "(":
                self._pos += 1
                inner = self._parse_expr(-10**9)
                if self._peek() != ")":
                    raise _Unsupported("unbalanced parenthesis")
                self._pos += 1
                return inner
            if token.isdigit() or (token[0].isalpha() and len(token.rstrip("'")) == 1):
                self._pos += 1
                return _Leaf(token)
            raise _Unsupported(f"token {token!r}")
        if isinstance(token, (Command, Group)):
            self._pos += 1
            return _Leaf(render(token))
        raise _Unsupported(f"token {token!r}")


class ExternalTranslator:
    """Client for a model served over the wire protocol.

    ``endpoint`` is an http(s) URL or a command line to spawn (newline-
    delimited JSON on stdin/stdout).  Responses are truncated at the first
    separator token; a missing separator surfaces as terminated=false.
    """

    name = "external"

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self._proc: Optional[subprocess.Popen] = None

    def translate(self, request: TranslationRequest) -> TranslationResponse:
        payload = {"sentence_latex": request.sentence_latex,
                   "expression_latex": request.expression_latex}
        if self.endpoint.startswith(("http://", "https://")):
            raw = self._http(payload)
        else:
            raw = self._stdio(payload)
        if not isinstance(raw, dict) or "expression_stex" not in raw:
            raise ProtocolError(f"malformed response: {raw!r}")
        text = raw["expression_stex"]
        terminated = bool(raw.get("terminated", True))
        if SEPARATOR in text:
            text = text.split(SEPARATOR, 1)[0].strip()
        return TranslationResponse(text, terminated)

    def _http(self, payload: dict) -> dict:
        data = json.dumps(payload).encode("utf-8")
        req = urllib.request.Request(
            self.endpoint, data=data, headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.URLError as exc:
            if isinstance(getattr(exc, "reason", None), TimeoutError):
                raise TranslatorTimeout(str(exc)) from exc
            raise ProtocolError(f"endpoint error: {exc}") from exc
        except TimeoutError as exc:
            raise TranslatorTimeout(str(exc)) from exc
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"invalid JSON from endpoint: {exc}") from exc

    def _stdio(self, payload: dict) -> dict:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                shlex.split(self.endpoint), stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, text=True, bufsize=1)
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"subprocess died: {exc}") from exc
        if not line:
            raise ProtocolError("subprocess closed its stdout")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"invalid JSON line: {line!r}") from exc

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)
        self._proc = None


def make_translator(spec: str, reg: Registry,
                    lexicon: Optional[Sequence[LexiconEntry]] = None):
    """Build a translator from a CLI-style id:
    ``identity`` | ``rules`` | ``external:<addr>``."""
    if spec == "identity":
        return IdentityTranslator()
    if spec == "rules":
        if lexicon is None:
            raise TranslatorError("the rules translator needs a lexicon")
        return RulesTranslator(reg, lexicon)
    if spec.startswith("external:"):
        return ExternalTranslator(spec.split(":", 1)[1])
    raise TranslatorError(f"unknown translator {spec!r}")


def translate_sentence(sentence_latex: str, translator) -> str:
    """The full-sentence disambiguation function: translate every symbolic
    expression and splice the results back at their source spans."""
    tree = parse(sentence_latex)
    segments = find_math(tree)
    out = sentence_latex
    for (start, end), segment in reversed(segments):
        expr = render(segment)
        resp = translator.translate(TranslationRequest(sentence_latex, expr))
        replacement = resp.expression_stex
        if not _split_delims(replacement)[0] and _split_delims(expr)[0]:
            replacement = segment.delim.open + replacement + segment.delim.close
        out = out[:start] + replacement + out[end:]
    return out
