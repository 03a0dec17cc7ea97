"""Training-line handling and the byte-level tokenizer.

Lines follow ``<sentence> <s> $<expr-latex>$ <s> $<expr-stex>$ <s>`` with
``<s>`` kept as one special token so prompts and targets never merge
across the separator.
"""

from __future__ import annotations

from pathlib import Path

from tokenizers import ByteLevelBPETokenizer, Tokenizer

SEPARATOR = "<s>"
PAD = "<pad>"


class MalformedLine(ValueError):
    pass


def read_training_lines(path: Path | str) -> list:
    """Load and validate training lines; abort with the offending number."""
    lines = []
    for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.rstrip()
        if not line:
            continue
        if line.count(SEPARATOR) != 3 or not line.endswith(SEPARATOR):
            raise MalformedLine(
                f"line {number}: expected three '{SEPARATOR}' separators "
                f"with one trailing")
        lines.append(line)
    if not lines:
        raise MalformedLine(f"{path}: no training lines")
    return lines


def split_line(line: str) -> tuple[str, str, str]:
    sentence, expr_latex, expr_stex, _ = [p.strip() for p in line.split(SEPARATOR)]
    return sentence, expr_latex, expr_stex


def prompt_of(sentence_latex: str, expression_latex: str) -> str:
    """The generation prompt: everything up to the second separator."""
    return f"{sentence_latex} {SEPARATOR} {expression_latex} {SEPARATOR}"


def train_tokenizer(lines, vocab_target: int) -> Tokenizer:
    """Byte-level BPE over the corpus; '<s>' and '<pad>' are single tokens.

    The byte alphabet bounds the vocabulary from below; small corpora
    saturate far under large targets, which is fine.
    """
    tokenizer = ByteLevelBPETokenizer()
    tokenizer.train_from_iterator(
        lines, vocab_size=vocab_target, min_frequency=1,
        special_tokens=[PAD, SEPARATOR])
    return tokenizer._tokenizer


def load_tokenizer(path: Path | str) -> Tokenizer:
    return Tokenizer.from_file(str(path))


def separator_id(tokenizer: Tokenizer) -> int:
    sep = tokenizer.token_to_id(SEPARATOR)
    if sep is None:
        raise ValueError(f"tokenizer lacks the {SEPARATOR!r} token")
    return sep


def encode_line(tokenizer: Tokenizer, line: str) -> list:
    return tokenizer.encode(line).ids
