"""Terminal shell: REPL, HTTP server, scenario runner, and export."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .backends import CompletionBackend, EchoBackend, HttpBackend, load_script
from .commands import ExportFormat
from .engine import export_session, handle_utterance, start_session
from .errors import StepchainError
from .scenario import run_scenario
from .session import SessionConfig
from .store import SessionStore

AUTH_TOKEN_ENV = "STEPCHAIN_AUTH_TOKEN"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stepchain",
        description="Interactive, editable chain-of-thought sessions.",
    )
    parser.add_argument("--endpoint", help="chat-completion endpoint URL")
    parser.add_argument("--script", help="scripted-backend fixture path")
    parser.add_argument("--session-dir", default="./sessions", help="session storage directory")
    parser.add_argument("--candidates", type=int, default=1, help="completions per model call")
    parser.add_argument("--alpha", type=float, default=0.3, help="adaptation learning rate")
    parser.add_argument("--seed", type=int, default=None, help="decoding seed passed to the model")
    parser.add_argument(
        "--auth-env",
        default=AUTH_TOKEN_ENV,
        help="environment variable holding the endpoint auth token",
    )
    parser.add_argument(
        "--profile",
        default=None,
        help=(
            "opt-in persistent preference profile: an edit-log JSONL file "
            "replayed into the session after drafting and extended on exit"
        ),
    )

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("repl", help="interactive terminal session")
    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--ui", default=None, help="directory of built web-client assets to host")
    scenario = sub.add_parser("run-scenario", help="replay a scripted scenario fixture")
    scenario.add_argument("path")
    export = sub.add_parser("export", help="export a stored session")
    export.add_argument("session_id")
    export.add_argument("--format", choices=["markdown", "json"], default="markdown")
    return parser


def make_backend(args: argparse.Namespace) -> CompletionBackend:
    if args.script:
        document = json.loads(Path(args.script).read_text(encoding="utf-8"))
        # accept a scenario fixture too: its backend script is nested
        if "entries" not in document and isinstance(document.get("script"), dict):
            document = document["script"]
        return load_script(document)
    if args.endpoint:
        return HttpBackend(args.endpoint, auth_token=os.environ.get(args.auth_env))
    return EchoBackend()


def make_config(args: argparse.Namespace) -> SessionConfig:
    return SessionConfig(
        candidates=args.candidates,
        alpha=args.alpha,
        seed=args.seed,
        endpoint=args.endpoint,
    )


def _load_profile(session, path: str) -> None:
    """Replay a persisted edit log into the session's preference vector."""
    from .adaptation import load_edit_log, record_edit

    try:
        records = load_edit_log(path)
    except FileNotFoundError:
        return
    for record in records:
        session.preferences = record_edit(session.edit_log, session.preferences, record)


def _save_profile(session, path: str) -> None:
    from .adaptation import save_edit_log

    save_edit_log(session.edit_log, path)


def run_repl(args: argparse.Namespace) -> int:
    backend = make_backend(args)
    store = SessionStore(args.session_dir)
    try:
        query = input("Query: ").strip()
    except EOFError:
        return 0
    if not query:
        print("A non-empty query is required.")
        return 1
    try:
        outcome = start_session(query, make_config(args), backend)
    except StepchainError as exc:
        print(f"error: {exc}")
        return 1
    if args.profile:
        _load_profile(outcome.session, args.profile)
    store.save(outcome.session)
    for message in outcome.messages:
        print(message)
        print()
    while not outcome.finished:
        try:
            utterance = input("> ").strip()
        except EOFError:
            break
        if not utterance:
            continue
        if utterance.lower() in ("quit", "exit"):
            break
        try:
            outcome = handle_utterance(outcome.session, utterance, backend)
        except StepchainError as exc:
            print(f"error: {exc}")
            continue
        store.save(outcome.session)
        for message in outcome.messages:
            print(message)
            print()
    # After finalization the engine offers an export; honor it here.
    if outcome.finished:
        while True:
            try:
                utterance = input("> ").strip()
            except EOFError:
                break
            lowered = utterance.lower().rstrip(".!")
            if lowered in ("export", "export as markdown"):
                print(export_session(outcome.session, ExportFormat.MARKDOWN))
            elif lowered == "export as json":
                print(export_session(outcome.session, ExportFormat.JSON))
            else:
                break
    if args.profile:
        _save_profile(outcome.session, args.profile)
    print(f"Session {outcome.session.id} saved under {args.session_dir}")
    return 0


def run_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(make_backend(args), SessionStore(args.session_dir), ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def run_scenario_command(args: argparse.Namespace) -> int:
    try:
        result = run_scenario(args.path)
    except StepchainError as exc:
        print(f"fixture error: {exc}", file=sys.stderr)
        return 2
    for message in result.messages:
        print(message)
        print()
    if result.status != 0:
        print(f"TRANSCRIPT MISMATCH: {result.failure}", file=sys.stderr)
    return result.status


def run_export(args: argparse.Namespace) -> int:
    store = SessionStore(args.session_dir)
    try:
        session = store.load(args.session_id)
    except FileNotFoundError:
        print(f"no stored session {args.session_id}", file=sys.stderr)
        return 1
    fmt = ExportFormat.JSON if args.format == "json" else ExportFormat.MARKDOWN
    print(export_session(session, fmt))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "repl":
        return run_repl(args)
    if args.command == "serve":
        return run_serve(args)
    if args.command == "run-scenario":
        return run_scenario_command(args)
    if args.command == "export":
        return run_export(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
