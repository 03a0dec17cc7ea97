"""stex-harness: train on training lines, serve the wire protocol."""

from __future__ import annotations

import argparse
import json
import sys


def cmd_train(args) -> int:
    from .train import TrainingConfig, finetune

    cfg = TrainingConfig(
        base_model=args.base_model,
        vocab_target=args.vocab_target,
        context_length=args.context,
        epochs=args.epochs,
        seed=args.seed,
        n_layer=args.n_layer,
        n_head=args.n_head,
        n_embd=args.n_embd,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        max_steps=args.max_steps,
    )
    losses = finetune(args.data, cfg, args.out,
                      log=lambda m: print(m, file=sys.stderr))
    print(json.dumps({"epochs": len(losses), "final_loss": losses[-1],
                      "checkpoint": args.out}))
    return 0


def cmd_serve(args) -> int:
    from .serve import Generator, serve_http, serve_stdio

    generator = Generator(args.checkpoint, max_new_tokens=args.max_new_tokens)
    if args.http:
        host, _, port = args.http.rpartition(":")
        server = serve_http(generator, host or "127.0.0.1", int(port))
        print(f"serving on http://{server.server_address[0]}:{server.server_address[1]}",
              file=sys.stderr)
        server.serve_forever()
    else:
        serve_stdio(generator)
    return 0


def cmd_generate(args) -> int:
    from .serve import Generator

    generator = Generator(args.checkpoint, max_new_tokens=args.max_new_tokens)
    result = generator.generate(args.sentence, args.expression)
    print(json.dumps({"expression_stex": result.expression_stex,
                      "terminated": result.terminated}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stex-harness", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune on a train.txt file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--base-model", default=None,
                   help="pretrained checkpoint id (default: train from scratch)")
    p.add_argument("--vocab-target", type=int, default=32_000)
    p.add_argument("--context", type=int, default=1_024)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-layer", type=int, default=2)
    p.add_argument("--n-head", type=int, default=4)
    p.add_argument("--n-embd", type=int, default=128)
    p.add_argument("--learning-rate", type=float, default=3e-3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-steps", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="serve a checkpoint over the wire protocol")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--http", help="host:port (default: stdio)")
    p.add_argument("--max-new-tokens", type=int, default=128)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("generate", help="one-shot generation for debugging")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--sentence", required=True)
    p.add_argument("--expression", required=True)
    p.add_argument("--max-new-tokens", type=int, default=128)
    p.set_defaults(func=cmd_generate)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
