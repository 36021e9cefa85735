import numpy as np
import pytest

from gmsdg import assemble_dg_system, build_partition, constant, synth_channels_inclusions
from gmsdg.config import ExperimentConfig
from gmsdg.experiments import build_experiment

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion this test gates")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    key = mark.args[0]
    ok = rep.passed if rep.when == "call" else not rep.failed
    prev = _CRITERIA.get(key, (True, mark.args[1]))
    _CRITERIA[key] = (prev[0] and ok and not rep.skipped, mark.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        ok, text = _CRITERIA[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {text}")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


def small_system(M=2, m=3, eta=None, delta=4.0, seed=0, f=None):
    mesh = build_partition(M, m)
    fld = constant(mesh) if eta is None else synth_channels_inclusions(mesh, eta, seed=seed)
    return assemble_dg_system(mesh, fld, delta, f=f)


@pytest.fixture(scope="session")
def unit_system():
    return small_system(2, 3)


@pytest.fixture(scope="session")
def contrast_system():
    return small_system(4, 6, eta=1e4)


@pytest.fixture(scope="session")
def full_config():
    return ExperimentConfig(M=10, m=10, eta=(1e4, 1e6), method="I")


@pytest.fixture(scope="session")
def full_exp(full_config):
    """Default synthetic medium at full scale (M=10, m=10), contrast 1e4."""
    return build_experiment(full_config, 1e4)


@pytest.fixture(scope="session")
def full_exp_1e6(full_config):
    return build_experiment(full_config, 1e6)
