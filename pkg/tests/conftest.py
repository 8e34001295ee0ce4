import time

import pytest
import yaml

from ramanlink import parse_link_config, run_pipeline, validate_link
from ramanlink.fixtures import paper_fixture


def make_link(**kwargs):
    """Validated link built from the bundled fixture generator."""
    return validate_link(parse_link_config(yaml.safe_dump(paper_fixture(**kwargs))))


@pytest.fixture(scope="session")
def paper_link():
    """The full 9 x 60 km, 90-channel reference link."""
    return make_link(num_channels=90)


@pytest.fixture(scope="session")
def paper_report(paper_link):
    """Full pipeline on the reference link, with its wall-clock time."""
    t0 = time.perf_counter()
    report = run_pipeline(paper_link)
    elapsed = time.perf_counter() - t0
    return report, elapsed


@pytest.fixture(scope="session")
def small_link():
    """Cheap 10-channel, 2-span variant for solver-level tests."""
    return make_link(num_channels=10, num_spans=2)
