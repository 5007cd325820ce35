import pathlib

import pytest

from inetkit import analyze_rules, parse_program

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "src" / "inetkit" / "corpus"


@pytest.fixture
def corpus_dir() -> pathlib.Path:
    return CORPUS


def corpus_text(name: str) -> str:
    return (CORPUS / f"{name}.inet").read_text(encoding="utf-8")


def compile_text(text: str):
    """Parse and fully analyze a program; fails the test on any error."""
    program = parse_program(text)
    assert not program.has_errors, [str(d) for d in program.diagnostics]
    analysis = analyze_rules(program.rules, program.symbols.values())
    assert analysis.ok, [str(d) for d in analysis.diagnostics]
    return program, analysis


def compile_corpus(name: str):
    return compile_text(corpus_text(name))
