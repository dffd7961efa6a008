import numpy as np
import pytest

from uniform_extremes import CovarianceModel, DiscretizedField, build_lattice

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def make_field(kind="iid", m=5, bounds=(0.0, 1.0), scale=1.0):
    model = {
        "iid": CovarianceModel.iid(),
        "exponential": CovarianceModel.exponential(scale),
        "cosine": CovarianceModel.cosine(),
    }[kind]
    return DiscretizedField.from_model(model, build_lattice(bounds, m))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance():
    """Record one acceptance line; shown in the terminal summary."""

    def record(name: str, ok: bool, detail: str = ""):
        _ACCEPTANCE.append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
