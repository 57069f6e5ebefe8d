"""Command line entry points: train a bundle, serve a bundle."""

import argparse
import sys

from .errors import FinetuneServiceError
from .training import DEFAULT_CHECKPOINT, FinetuneConfig, finetune


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="finetune-service")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="fine-tune a bundle from transcript CSVs")
    train.add_argument("--train-csv", required=True)
    train.add_argument("--dev-csv", required=True)
    train.add_argument("--output-dir", required=True)
    train.add_argument("--base-checkpoint", default=DEFAULT_CHECKPOINT)
    train.add_argument("--learning-rate", type=float, default=2e-5)
    train.add_argument("--epochs", type=int, default=5)
    train.add_argument("--batch-size", type=int, default=16)
    train.add_argument("--max-sequence-tokens", type=int, default=128)
    train.add_argument("--seed", type=int, default=42)

    serve = sub.add_parser("serve", help="serve a trained bundle over HTTP")
    serve.add_argument("--bundle", required=True)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8430)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "train":
        config = FinetuneConfig(
            train_csv=args.train_csv,
            dev_csv=args.dev_csv,
            output_dir=args.output_dir,
            base_checkpoint=args.base_checkpoint,
            learning_rate=args.learning_rate,
            epochs=args.epochs,
            batch_size=args.batch_size,
            max_sequence_tokens=args.max_sequence_tokens,
            seed=args.seed,
        )
        finetune(config)
        return 0
    if args.command == "serve":
        import uvicorn

        from .service import create_app

        app = create_app(args.bundle)
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        return 0
    raise AssertionError(f"unhandled command {args.command!r}")


def entrypoint() -> None:
    try:
        sys.exit(main())
    except FinetuneServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(2)


if __name__ == "__main__":
    entrypoint()
