import numpy as np
import pytest

import kplsqsar.kpls as kpls_mod
import kplsqsar.selection as selection_mod

ORTHO_TOL = 1e-8
_ortho = {"max": 0.0, "fits": 0, "violations": 0}
_criteria = {}


def ortho_stats():
    return dict(_ortho)


@pytest.fixture(autouse=True)
def _check_score_orthogonality(monkeypatch):
    """Every score extraction in the suite must return orthonormal T."""
    real = kpls_mod.extract_components

    def checked(K, y, nu, *args, **kwargs):
        T, U, achieved = real(K, y, nu, *args, **kwargs)
        flatT = T.reshape((-1,) + T.shape[-2:])
        for Tb, k in zip(flatT, np.ravel(achieved)):
            Tk = Tb[:, :k]
            dev = float(np.max(np.abs(Tk.T @ Tk - np.eye(k)))) if k else 0.0
            _ortho["max"] = max(_ortho["max"], dev)
            _ortho["fits"] += 1
            _ortho["violations"] += dev >= ORTHO_TOL
            assert dev < ORTHO_TOL, f"score orthogonality violated: {dev:.3g}"
        return T, U, achieved

    monkeypatch.setattr(kpls_mod, "extract_components", checked)
    monkeypatch.setattr(selection_mod, "extract_components", checked)
    yield


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config.addinivalue_line("markers", "session_final: run after all other tests")


def pytest_collection_modifyitems(items):
    # session-wide checks run after every other test has fitted its models
    last = [it for it in items if it.get_closest_marker("session_final")]
    items[:] = [it for it in items if it not in last] + last


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        num, title = marker.args
        prev = _criteria.get(num, (title, "PASS"))
        status = "PASS" if rep.outcome == "passed" and prev[1] == "PASS" else "FAIL"
        _criteria[num] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, status = _criteria[num]
        terminalreporter.write_line(f"criterion {num}: {status}  {title}")
    terminalreporter.write_line(
        f"score orthogonality over {_ortho['fits']} fits in this session: "
        f"max |T'T - I| = {_ortho['max']:.3g}, violations = {_ortho['violations']}"
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_csv(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
