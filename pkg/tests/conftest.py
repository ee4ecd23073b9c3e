"""Shared test helpers: fixture loading and the acceptance summary block."""

import pathlib

FIXTURE_DIR = pathlib.Path(__file__).parent / "fixtures"
FIXTURE_NAMES = ["pingpong", "async2", "mismatch", "conflict", "chain3"]

_acceptance_lines = []


def load_fixture_text(name: str) -> str:
    return (FIXTURE_DIR / f"{name}.cfsm").read_text()


def fixture_path(name: str) -> str:
    return str(FIXTURE_DIR / f"{name}.cfsm")


def record_acceptance(line: str):
    """Collect a per-criterion pass/fail line for the terminal summary."""
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
