import numpy as np
import pytest

_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for the acceptance summary."""
    entry = {"name": request.node.name, "label": None, "detail": "", "ok": False}

    def report(label, detail=""):
        entry["label"] = label
        entry["detail"] = detail

    yield report
    rep = getattr(request.node, "rep_call", None)
    entry["ok"] = bool(rep and rep.passed)
    if entry["label"]:
        _ACCEPTANCE.append(entry)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for e in sorted(_ACCEPTANCE, key=lambda e: e["label"]):
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"[{status}] {e['label']}  {e['detail']}")


@pytest.fixture
def rng():
    return np.random.default_rng(20070814)


def random_unitary(rng, n):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
