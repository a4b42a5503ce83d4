import sys

import pytest

from coadapt import data
from coadapt.coordination import load_spec
from coadapt.dcop import load_instance


@pytest.fixture
def videoservice():
    return load_instance(data.path("videoservice.json"))


@pytest.fixture
def videoservice_spec():
    return load_spec(data.path("videoservice_spec.json"))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[number])
