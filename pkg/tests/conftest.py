from __future__ import annotations

import functools

import pytest
from hypothesis import settings

from baconshor.code import build_code
from baconshor.fastsim import CompiledExRec
from baconshor.gadgets import build_exrec

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# lines reported by the acceptance suite, printed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def exrec_for(n: int, method: str):
    return build_exrec(build_code(n), method)


@functools.lru_cache(maxsize=None)
def compiled_for(n: int, method: str) -> CompiledExRec:
    return CompiledExRec(exrec_for(n, method))


@pytest.fixture(params=[2, 3, 5])
def code(request):
    return build_code(request.param)


@pytest.fixture
def code3():
    return build_code(3)


@pytest.fixture(params=["gauge", "steane", "knill"])
def method(request):
    return request.param


@pytest.fixture
def exrec3(method):
    return exrec_for(3, method)


@pytest.fixture
def compiled3(method):
    return compiled_for(3, method)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
