from __future__ import annotations

from dataclasses import replace

import pytest

from omegakit.body_parser import body_context
from omegakit.checker import check_slot_body
from omegakit.loader import CORPUS_DIR, load_roots
from omegakit.sketch import sketch_tokens
from omegakit.header import read_prototype
from omegakit.environment import build_environment


@pytest.fixture(scope="session")
def corpus():
    loaded = load_roots([CORPUS_DIR])
    assert loaded.env is not None
    return loaded


@pytest.fixture(scope="session")
def env(corpus):
    return corpus.env


def slot_of(env, proto, pattern_text):
    matches = [s for s in env.prototypes[proto].slots if s.signature.pattern_text == pattern_text]
    assert len(matches) == 1, (proto, pattern_text)
    return matches[0]


def check_body(env, proto, pattern_text, body):
    """Diagnostics of ``body`` placed in an existing slot."""
    slot = replace(slot_of(env, proto, pattern_text), raw_body=body)
    return check_slot_body(slot, env, proto)


def codes(diags):
    return [d.code for d in diags]


def header(source: str):
    return read_prototype(sketch_tokens(source))


def env_from(*sources: str, glyphs=None):
    return build_environment([header(s) for s in sources], glyphs)


def scope(env, proto, **locals_):
    from omegakit.header import parse_type_text
    ctx = body_context(env, proto, None)
    for name, t in locals_.items():
        ctx.declare(name.replace("_", " "), parse_type_text(t))
    return ctx


# -- acceptance summary -----------------------------------------------------------------

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rpartition("::")[2]
    if "test_acceptance" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    number = int(name.split("_")[2])
    label = name.split("_", 3)[3].replace("_", " ")
    if report.when == "call" or report.failed:
        state = "PASS" if report.passed else "FAIL"
        if _CRITERIA.get(number, ("", "PASS"))[1] == "PASS":
            _CRITERIA[number] = (label, state)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        label, state = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {state}  {label}")
