import numpy as np
import pytest

from rt4ucp.data_model import Dataset
from rt4ucp.synthdata import QuadrantGenConfig, generate, split


def blobs(n_per_class=50, num_classes=2, dim=2, spread=0.3, seed=0, gap=4.0):
    """Well separated Gaussian blobs, one study per instance."""
    rng = np.random.default_rng(seed)
    centers = gap * np.eye(num_classes, dim)
    feats, labels = [], []
    for k in range(num_classes):
        feats.append(centers[k] + spread * rng.standard_normal((n_per_class, dim)))
        labels += [k] * n_per_class
    ids = [f"b{i}" for i in range(len(labels))]
    return Dataset.from_arrays(ids, np.vstack(feats), labels, ids, num_classes)


@pytest.fixture
def blob_data():
    return blobs()


@pytest.fixture(scope="session")
def small_splits():
    cfg = QuadrantGenConfig(n_studies=120, slices_per_study=4, num_classes=3, num_features=8,
                            informative_fraction=0.5, class_separation=4.0, noise_sigma=1.0, seed=3)
    return split(generate(cfg), (0.5, 0.1, 0.2, 0.2), 3)


# -- acceptance reporting ------------------------------------------------------
# Tests marked ``criterion(n, title)`` get one PASS/FAIL line in the terminal
# summary; details recorded through the ``record`` fixture are appended.

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def record(request):
    mark = request.node.get_closest_marker("criterion")
    entry = _CRITERIA.setdefault(mark.args[0], {"title": mark.args[1], "details": [], "passed": None})

    def add(text):
        entry["details"].append(text)

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    entry = _CRITERIA.setdefault(mark.args[0], {"title": mark.args[1], "details": [], "passed": None})
    ok = rep.passed if rep.when == "call" else False
    entry["passed"] = ok if entry["passed"] is None else entry["passed"] and ok


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["passed"] else "FAIL"
        detail = "; ".join(e["details"])
        terminalreporter.write_line(f"criterion {n:>2} {status}  {e['title']}" + (f"  [{detail}]" if detail else ""))
