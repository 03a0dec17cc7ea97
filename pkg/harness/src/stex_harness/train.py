"""Fine-tuning of a decoder-only transformer on training lines."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import torch
from transformers import GPT2Config, GPT2LMHeadModel

from .data import (PAD, encode_line, read_training_lines, separator_id,
                   train_tokenizer)


@dataclass
class TrainingConfig:
    base_model: Optional[str] = None   # pretrained checkpoint id, or None for scratch
    vocab_target: int = 32_000
    context_length: int = 1_024
    epochs: int = 5
    seed: int = 0
    # desk-scale model shape and optimization
    n_layer: int = 2
    n_head: int = 4
    n_embd: int = 128
    learning_rate: float = 3e-3
    batch_size: int = 32
    max_steps: Optional[int] = None    # cap on total optimizer steps

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def tiny(cls, **overrides) -> "TrainingConfig":
        base = dict(vocab_target=2_000, context_length=256)
        base.update(overrides)
        return cls(**base)


def _batches(encoded, batch_size, rng):
    order = list(range(len(encoded)))
    rng.shuffle(order)
    for i in range(0, len(order), batch_size):
        yield [encoded[j] for j in order[i:i + batch_size]]


def _collate(batch, pad_id, context_length, device):
    width = min(max(len(ids) for ids in batch), context_length)
    input_ids = torch.full((len(batch), width), pad_id, dtype=torch.long)
    for row, ids in enumerate(batch):
        ids = ids[:context_length]
        input_ids[row, :len(ids)] = torch.tensor(ids, dtype=torch.long)
    attention = (input_ids != pad_id).long()
    labels = input_ids.masked_fill(input_ids == pad_id, -100)
    return (input_ids.to(device), attention.to(device), labels.to(device))


def finetune(train_path: Path | str, cfg: TrainingConfig,
             out_dir: Path | str, log=print) -> list:
    """Train on the given lines, save a checkpoint, return per-epoch losses.

    The checkpoint directory holds tokenizer.json, the model weights and
    config, training_config.json and loss_log.jsonl.
    """
    torch.manual_seed(cfg.seed)
    random.seed(cfg.seed)
    lines = read_training_lines(train_path)

    tokenizer = train_tokenizer(lines, cfg.vocab_target)
    pad_id = tokenizer.token_to_id(PAD)
    separator_id(tokenizer)  # fail early if '<s>' went missing

    if cfg.base_model:
        model = GPT2LMHeadModel.from_pretrained(cfg.base_model)
    else:
        config = GPT2Config(
            vocab_size=tokenizer.get_vocab_size(),
            n_positions=cfg.context_length,
            n_layer=cfg.n_layer, n_head=cfg.n_head, n_embd=cfg.n_embd,
            bos_token_id=pad_id, eos_token_id=pad_id,
        )
        model = GPT2LMHeadModel(config)
    device = torch.device("cpu")
    model.to(device)
    model.train()

    encoded = [encode_line(tokenizer, line) for line in lines]
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)
    rng = random.Random(cfg.seed)

    losses = []
    steps = 0
    capped = False
    for epoch in range(cfg.epochs):
        total, seen = 0.0, 0
        for batch in _batches(encoded, cfg.batch_size, rng):
            input_ids, attention, labels = _collate(
                batch, pad_id, cfg.context_length, device)
            out = model(input_ids=input_ids, attention_mask=attention,
                        labels=labels)
            optimizer.zero_grad()
            out.loss.backward()
            optimizer.step()
            total += out.loss.item() * len(batch)
            seen += len(batch)
            steps += 1
            if cfg.max_steps is not None and steps >= cfg.max_steps:
                capped = True
                break
        losses.append(total / max(seen, 1))
        log(f"epoch {epoch + 1}/{cfg.epochs}: loss {losses[-1]:.4f}")
        if capped:
            break

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tokenizer.save(str(out_dir / "tokenizer.json"))
    model.save_pretrained(out_dir)
    (out_dir / "training_config.json").write_text(
        json.dumps(cfg.to_json(), indent=2), encoding="utf-8")
    with open(out_dir / "loss_log.jsonl", "w", encoding="utf-8") as fh:
        for epoch, loss in enumerate(losses, 1):
            fh.write(json.dumps({"epoch": epoch, "loss": loss}) + "\n")
    return losses
