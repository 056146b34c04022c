import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def central_difference(f, x, eps=1e-6):
    """Gradient of a real function of a real vector by central differences."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = eps
        out[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return out


def complex_fd(f, z, eps=1e-6):
    """df/dRe z + 1j df/dIm z for a real function of a complex array."""
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()

    def re_part(x):
        return f((x + 1j * flat.imag).reshape(z.shape))

    def im_part(y):
        return f((flat.real + 1j * y).reshape(z.shape))

    return (central_difference(re_part, flat.real, eps)
            + 1j * central_difference(im_part, flat.imag, eps)).reshape(z.shape)


def rel_err(a, b, floor=1e-8):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), floor))
