"""Greedy generation from a checkpoint and the wire-protocol endpoint.

Protocol: request ``{"sentence_latex", "expression_latex"}``, response
``{"expression_stex", "terminated"}``; newline-delimited JSON on stdio or
HTTP POST.  Generation stops at the first separator token; hitting the
length cap instead sets ``terminated: false``.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import torch
from transformers import GPT2LMHeadModel

from .data import SEPARATOR, load_tokenizer, prompt_of, separator_id


@dataclass
class GenerationResult:
    expression_stex: str
    terminated: bool


class Generator:
    def __init__(self, checkpoint: Path | str, max_new_tokens: int = 128):
        checkpoint = Path(checkpoint)
        self.tokenizer = load_tokenizer(checkpoint / "tokenizer.json")
        self.model = GPT2LMHeadModel.from_pretrained(checkpoint)
        self.model.eval()
        self.sep_id = separator_id(self.tokenizer)
        self.max_new_tokens = max_new_tokens
        self.context = self.model.config.n_positions

    @torch.no_grad()
    def generate(self, sentence_latex: str, expression_latex: str) -> GenerationResult:
        prompt = prompt_of(sentence_latex, expression_latex)
        ids = self.tokenizer.encode(prompt).ids
        ids = ids[-(self.context - self.max_new_tokens):]
        input_ids = torch.tensor([ids], dtype=torch.long)
        generated: list[int] = []
        terminated = False
        past = None
        for _ in range(self.max_new_tokens):
            out = self.model(input_ids=input_ids, past_key_values=past,
                             use_cache=True)
            past = out.past_key_values
            next_id = int(out.logits[0, -1].argmax())  # greedy decoding
            if next_id == self.sep_id:
                terminated = True
                break
            generated.append(next_id)
            input_ids = torch.tensor([[next_id]], dtype=torch.long)
        text = self.tokenizer.decode(generated).strip()
        if SEPARATOR in text:  # defensive: never ship the separator
            text = text.split(SEPARATOR, 1)[0].strip()
        return GenerationResult(text, terminated)


def handle_request(generator: Generator, line: str) -> dict:
    """One protocol exchange; malformed input yields an error response and
    the server stays alive."""
    try:
        request = json.loads(line)
        sentence = request["sentence_latex"]
        expression = request["expression_latex"]
    except (json.JSONDecodeError, TypeError, KeyError) as exc:
        return {"error": f"bad request: {exc}"}
    result = generator.generate(sentence, expression)
    return {"expression_stex": result.expression_stex,
            "terminated": result.terminated}


def serve_stdio(generator: Generator, stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        response = handle_request(generator, line)
        stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        stdout.flush()


def serve_http(generator: Generator, host: str, port: int) -> HTTPServer:
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            body = self.rfile.read(length).decode("utf-8")
            response = handle_request(generator, body)
            payload = json.dumps(response, ensure_ascii=False).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, *args):
            pass

    # one request at a time per connection, by construction of HTTPServer
    return HTTPServer((host, port), Handler)
