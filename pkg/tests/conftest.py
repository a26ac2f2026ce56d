import pytest

from pdnet_ltl.benchmarks import bundled_source
from pdnet_ltl.frontend import build_pdnet, parse_program


@pytest.fixture
def motivating_source():
    return bundled_source("motivating")


@pytest.fixture
def motivating_program(motivating_source):
    return parse_program(motivating_source)


@pytest.fixture
def motivating_net(motivating_program):
    return build_pdnet(motivating_program)
