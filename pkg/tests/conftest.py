import copy
import json
from contextlib import contextmanager
from fractions import Fraction
from importlib import resources

import pytest

from convrec import compile_model, load_catalog

_ACCEPTANCE_LINES: list[str] = []


@contextmanager
def criterion(name: str):
    """Record one acceptance criterion outcome for the summary block."""
    try:
        yield
    except BaseException:
        _ACCEPTANCE_LINES.append(f"FAIL  {name}")
        raise
    _ACCEPTANCE_LINES.append(f"PASS  {name}")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


def toy_document() -> dict:
    data = resources.files("convrec") / "data" / "toy_entertainers.json"
    return json.loads(data.read_text(encoding="utf-8"))


def property_free(doc: dict, strategy=None) -> dict:
    """The toy catalogue stripped down to items + questions."""
    doc = copy.deepcopy(doc)
    questions = []
    for q in doc["questions"]:
        q = {k: v for k, v in q.items() if k not in ("properties", "strategy")}
        if strategy:
            q["strategy"] = strategy
        questions.append(q)
    return {"items": doc["items"], "questions": questions}


@pytest.fixture(scope="session")
def toy_doc():
    return toy_document()


@pytest.fixture(scope="session")
def toy_catalog(toy_doc):
    return load_catalog(toy_doc)


@pytest.fixture(scope="session")
def expert_model(toy_catalog):
    return compile_model(toy_catalog)


@pytest.fixture(scope="session")
def ujs_catalog(toy_doc):
    return load_catalog(property_free(toy_doc, strategy="ujs"))


@pytest.fixture(scope="session")
def ujs_model(ujs_catalog):
    return compile_model(ujs_catalog)


@pytest.fixture(scope="session")
def ups_catalog(toy_doc):
    return load_catalog(property_free(toy_doc, strategy="ups"))


@pytest.fixture(scope="session")
def ups_model(ups_catalog):
    return compile_model(ups_catalog)


def F(x) -> Fraction:
    return Fraction(x)
