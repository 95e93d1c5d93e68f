import pytest

from ouwait import ProcessParams, SystemConfig


@pytest.fixture
def two_process_cfg():
    """Reference two-process instance used throughout the numerical studies."""
    return SystemConfig(
        k=2,
        f_max=1.5,
        mu=1.0,
        eps=0.3,
        processes=(ProcessParams(theta=0.1, sigma_sq=1.0), ProcessParams(theta=0.5, sigma_sq=2.0)),
    )


@pytest.fixture
def single_process_cfg():
    """Erasure-free single process with unit stationary variance."""
    return SystemConfig(
        k=1,
        f_max=2.0,
        mu=1.0,
        eps=0.0,
        processes=(ProcessParams(theta=0.5, sigma_sq=1.0),),
    )
