import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "numeric",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("numeric")

from reebflow import GridSpec  # noqa: E402


@pytest.fixture(scope="session")
def grid():
    """The default production grid: K=512, 40 octaves."""
    return GridSpec()


@pytest.fixture(scope="session")
def small_grid():
    """Coarser grid for property tests that run many examples."""
    return GridSpec(samples_per_octave=64, octave_max=24, tail_octaves=10)
