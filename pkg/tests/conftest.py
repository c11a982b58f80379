import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from geoaug.scene import build_scene, save_bundle  # noqa: E402

# lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def sphere_ring_bundle():
    return build_scene("sphere_ring")


@pytest.fixture(scope="session")
def occluder_bundle():
    return build_scene("occluder_pair")


@pytest.fixture(scope="session")
def street_bundle():
    return build_scene("street")


@pytest.fixture(scope="session")
def sphere_ring_dir(sphere_ring_bundle, tmp_path_factory):
    d = tmp_path_factory.mktemp("sphere_ring")
    save_bundle(sphere_ring_bundle, d)
    return d


@pytest.fixture(scope="session")
def occluder_dir(occluder_bundle, tmp_path_factory):
    d = tmp_path_factory.mktemp("occluder_pair")
    save_bundle(occluder_bundle, d)
    return d


@pytest.fixture(scope="session")
def street_dir(street_bundle, tmp_path_factory):
    d = tmp_path_factory.mktemp("street")
    save_bundle(street_bundle, d)
    return d


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
