import numpy as np
import pytest

from mfbo.gp import GpPrior, SquaredExpKernel
from mfbo.model import FidelityModel

# pass/fail lines recorded by test_acceptance, echoed after the pytest summary
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def two_fid_model() -> FidelityModel:
    """Small 2-fidelity 1-d model with round numbers, handy for oracles."""
    target = GpPrior(
        SquaredExpKernel(signal_variance=1.0, lengthscales=np.array([0.4])),
        noise_variance=0.05,
        mean=0.0,
    )
    err = GpPrior(
        SquaredExpKernel(signal_variance=0.25, lengthscales=np.array([0.6])),
        noise_variance=0.02,
    )
    return FidelityModel(target_prior=target, error_priors=(err,), costs=np.array([1.0, 3.0]))


@pytest.fixture
def three_fid_model() -> FidelityModel:
    target = GpPrior(
        SquaredExpKernel(signal_variance=2.0, lengthscales=np.array([0.5, 0.8])),
        noise_variance=0.1,
        mean=1.0,
    )
    errs = (
        GpPrior(SquaredExpKernel(signal_variance=0.5, lengthscales=np.array([0.7, 0.7])),
                noise_variance=0.04),
        GpPrior(SquaredExpKernel(signal_variance=0.2, lengthscales=np.array([1.0, 1.0])),
                noise_variance=0.03),
    )
    return FidelityModel(target_prior=target, error_priors=errs, costs=np.array([1.0, 2.0, 4.0]))
