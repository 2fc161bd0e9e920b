"""Command-line entry point wrapping the pipeline stages.

Exit codes: 0 success, 1 usage, 2 config/dependency validation, 3 runtime.
Errors are emitted as one-line JSON on stderr so wrappers can parse them.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Callable, Sequence

from . import pipeline
from .pipeline import PipelineConfig, PipelineError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); we map usage to 1
        raise UsageError(message)


_COMMANDS: dict[str, Callable[[PipelineConfig], object]] = {
    "ingest": pipeline.stage_ingest,
    "label": pipeline.stage_label,
    "featurize": pipeline.stage_featurize,
    "train": pipeline.stage_train,
    "tune": pipeline.stage_tune,
    "evaluate": pipeline.stage_evaluate,
    "explain": pipeline.stage_explain,
    "schedule-labels": pipeline.stage_schedule,
    "report": pipeline.stage_report,
}


def build_parser() -> _Parser:
    parser = _Parser(prog="botsift",
                     description="Batch bot-detection pipeline over a stored corpus.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        cmd = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0]
                             if fn.__doc__ else None)
        cmd.add_argument("--config", required=True, help="pipeline config JSON")
        cmd.add_argument("--seed", type=int, default=None, help="root seed override")
        cmd.add_argument("--out", default=None, help="output directory override")
        cmd.add_argument("--threads", type=int, default=None,
                         help="worker threads (stages are sequential; recorded only)")
        cmd.add_argument("--window-boundary", default=None,
                         help="ISO timestamp splitting train/test windows")
    return parser


def _error(command: str, kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"command": command, "error": kind,
                                 "message": message}) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    command = args.command
    try:
        cfg = PipelineConfig.from_file(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
        if args.threads is not None:
            if args.threads < 1:
                raise PipelineError("--threads must be >= 1")
            cfg.threads = args.threads
        if args.window_boundary is not None:
            cfg.window_boundary = args.window_boundary
        result = _COMMANDS[command](cfg)
    except PipelineError as exc:
        _error(command, "validation", str(exc))
        return EXIT_VALIDATION
    except Exception as exc:  # data or numeric failures inside a stage
        _error(command, type(exc).__name__, str(exc))
        return EXIT_RUNTIME
    if result is not None:
        sys.stdout.write(f"{command}: wrote {result}\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
