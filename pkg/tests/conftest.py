import numpy as np
import pytest

from ckks_fi.ckks import Backend, make_params
from ckks_fi.rns import PrimeChain


class ZeroRng:
    """Stands in for a Generator when a test needs u = e0 = e1 = 0."""

    def integers(self, low, high=None, size=None):
        return np.zeros(size, dtype=np.int64)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return np.zeros(size)


def digit_image(size: int = 28) -> np.ndarray:
    """A hand-drawn-looking '7' on black, anti-aliased like an MNIST digit."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    strokes = [((6.0, 7.0), (6.5, 20.0)), ((6.5, 20.0), (22.0, 11.0)), ((14.0, 11.5), (14.0, 18.0))]
    dist = np.full((size, size), np.inf)
    for (y0, x0), (y1, x1) in strokes:
        dy, dx = y1 - y0, x1 - x0
        t = np.clip(((yy - y0) * dy + (xx - x0) * dx) / (dy * dy + dx * dx), 0.0, 1.0)
        dist = np.minimum(dist, np.hypot(yy - (y0 + t * dy), xx - (x0 + t * dx)))
    intensity = np.clip(1.6 - dist / 1.1, 0.0, 1.0)
    return np.rint(intensity * 255).astype(np.uint8)


@pytest.fixture
def zero_rng():
    return ZeroRng()


@pytest.fixture(scope="session")
def small_chain():
    return PrimeChain((5, 7))


@pytest.fixture(scope="session")
def params4():
    return make_params(4)


@pytest.fixture(scope="session")
def params4_rns():
    return make_params(4, backend=Backend.RNS_NTT)


@pytest.fixture(scope="session")
def digit():
    return digit_image()


# acceptance report: one line per criterion at the end of the run

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    criterion = props.get("criterion")
    if criterion is None:
        return
    status = "PASS" if report.outcome == "passed" else "FAIL"
    _ACCEPTANCE[criterion] = (status, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion in sorted(_ACCEPTANCE, key=lambda c: int(c[1:])):
        status, detail = _ACCEPTANCE[criterion]
        terminalreporter.write_line(f"{criterion} {status} {detail}".rstrip())
