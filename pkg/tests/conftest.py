import pytest

from scramble_bound import kernels

BACKENDS = ["python"] + (["cython"] if kernels.compiled is not None else [])
ACCEPTANCE_LINES = []


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel implementation."""
    impl = kernels.compiled if request.param == "cython" else kernels.fallback
    monkeypatch.setattr(kernels, "_impl", impl)
    return request.param


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
