import numpy as np
import pytest

from svdtangle.synth import SynthParams, generate_path
from svdtangle.untangle import UntangleConfig, untangle_path


def random_complex(rng, m, n):
    return (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2)


def random_unitary(rng, n):
    q, r = np.linalg.qr(random_complex(rng, n, n))
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def short_path():
    """3x3 Rayleigh path at default sampling parameters, K = 1000."""
    return generate_path(SynthParams(num_samples=1000, seed=11))


@pytest.fixture(scope="session")
def short_untangled(short_path):
    return untangle_path(short_path, UntangleConfig(oracle_check=True), keep_strict=True)


# acceptance criteria register here; their verdicts print in the terminal summary
ACCEPTANCE: dict = {}


def record(number: int, name: str, ok: bool, detail: str = ""):
    ACCEPTANCE[number] = (name, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
