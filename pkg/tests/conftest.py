import numpy as np
import pytest

from iconforge import toy


@pytest.fixture(scope="session")
def toy_corpus():
    return toy.toy_corpus(np.random.default_rng(1), 20)


@pytest.fixture(scope="session")
def toy_icons():
    return toy.toy_icons(np.random.default_rng(2))


def solid(w, h, color=(255, 255, 255)):
    img = np.empty((h, w, 3), np.uint8)
    img[:] = color
    return img


def checkerboard(w, h, square=8):
    yy, xx = np.indices((h, w))
    v = (((yy // square) + (xx // square)) % 2 * 255).astype(np.uint8)
    return np.stack([v] * 3, axis=-1)


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
