from pathlib import Path

import pytest

from tamecert import load_map

CORPUS = Path(__file__).resolve().parents[1] / "src" / "tamecert" / "corpus"
CORPUS_NAMES = sorted(p.stem for p in CORPUS.glob("*.tmap"))


def corpus_map(name):
    return load_map(CORPUS / f"{name}.tmap")


@pytest.fixture
def corpus():
    return corpus_map


ACCEPTANCE = []  # (number, passed, detail) lines from test_acceptance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
