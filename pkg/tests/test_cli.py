"""CLI shell: argument wiring, REPL flow, profile persistence, export."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from stepchain.cli import build_parser, main, make_backend
from stepchain.backends import EchoBackend, HttpBackend, ScriptedBackend

FIXTURE = (
    Path(__file__).resolve().parents[1]
    / "src"
    / "stepchain"
    / "fixtures"
    / "dialect_fairness.json"
)


class TestParserWiring:
    def test_defaults(self):
        args = build_parser().parse_args(["repl"])
        assert args.candidates == 1
        assert args.alpha == 0.3
        assert args.session_dir == "./sessions"
        assert args.auth_env == "STEPCHAIN_AUTH_TOKEN"
        assert args.profile is None

    def test_backend_selection(self, tmp_path):
        echo = make_backend(build_parser().parse_args(["repl"]))
        assert isinstance(echo, EchoBackend)

        http = make_backend(
            build_parser().parse_args(["--endpoint", "http://h/v1", "repl"])
        )
        assert isinstance(http, HttpBackend)

        scripted = make_backend(
            build_parser().parse_args(["--script", str(FIXTURE), "repl"])
        )
        assert isinstance(scripted, ScriptedBackend)

    def test_auth_env_flag(self, monkeypatch):
        monkeypatch.setenv("MY_TOKEN", "sekrit")
        backend = make_backend(
            build_parser().parse_args(
                ["--endpoint", "http://h/v1", "--auth-env", "MY_TOKEN", "repl"]
            )
        )
        assert backend.auth_token == "sekrit"


class TestReplFlow:
    def _run(self, monkeypatch, capsys, lines, extra_args=()):
        feed = iter(lines)
        monkeypatch.setattr("builtins.input", lambda prompt="": next(feed))
        code = main(["--session-dir", "/tmp/cli-test-sessions", *extra_args, "repl"])
        return code, capsys.readouterr().out

    def test_full_session(self, monkeypatch, capsys):
        code, out = self._run(
            monkeypatch,
            capsys,
            [
                "How does this work?",
                "Replace Step 2 with: Check inputs first.",
                "Continue",
                "export as markdown",
                "quit",
            ],
        )
        assert code == 0
        assert "Updated Step 2 acknowledged." in out
        assert "Recalculating Steps 3 and 4..." in out
        assert "# Reasoning session" in out

    def test_empty_query(self, monkeypatch, capsys):
        code, _ = self._run(monkeypatch, capsys, [""])
        assert code == 1

    def test_profile_round_trip(self, monkeypatch, capsys, tmp_path):
        profile = tmp_path / "profile.jsonl"
        code, _ = self._run(
            monkeypatch,
            capsys,
            [
                "First session?",
                "Replace Step 1 with: however a counterexample appears instead",
                "Continue",
                "quit",
            ],
            extra_args=["--profile", str(profile)],
        )
        assert code == 0
        records = [json.loads(line) for line in profile.read_text().splitlines()]
        assert len(records) == 1
        assert records[0]["v"] == 1

        # a second run extends the same profile
        code, _ = self._run(
            monkeypatch,
            capsys,
            [
                "Second session?",
                "Replace Step 1 with: but suppose the data disagrees unless rechecked",
                "Continue",
                "quit",
            ],
            extra_args=["--profile", str(profile)],
        )
        assert code == 0
        assert len(profile.read_text().splitlines()) == 2


class TestExportCommand:
    def test_export_missing_session(self, capsys):
        code = main(["--session-dir", "/tmp/definitely-missing-dir", "export", "nope"])
        assert code == 1

    def test_export_stored_session(self, monkeypatch, capsys, tmp_path):
        feed = iter(["Exportable?", "Continue", "quit"])
        monkeypatch.setattr("builtins.input", lambda prompt="": next(feed))
        assert main(["--session-dir", str(tmp_path), "repl"]) == 0
        session_id = next(tmp_path.glob("*.json")).stem
        capsys.readouterr()
        assert main(["--session-dir", str(tmp_path), "export", session_id]) == 0
        out = capsys.readouterr().out
        assert out.startswith("# Reasoning session")
