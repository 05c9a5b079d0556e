import pytest

from jetsym import corpus_path
from jetsym.fileformats import parse_generators, parse_system


def load(name):
    sys = parse_system(corpus_path(f"{name}.sys"))
    return sys, parse_generators(corpus_path(f"{name}.gen"), sys)


@pytest.fixture(scope="session")
def kdv():
    return load("kdv")


@pytest.fixture(scope="session")
def vorticity():
    return load("vorticity")


@pytest.fixture(scope="session")
def maxwell():
    return load("maxwell")


@pytest.fixture(scope="session")
def toy():
    return load("toy")


@pytest.fixture(scope="session")
def corpus(kdv, vorticity, maxwell, toy):
    return {"kdv": kdv, "vorticity": vorticity, "maxwell": maxwell, "toy": toy}


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
