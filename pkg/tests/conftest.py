import pytest

from svtune.grid import build_benchmark, build_system


@pytest.fixture(scope="session")
def two_area():
    """Built two-area benchmark: (model, system, steady, variants)."""
    model, variants = build_benchmark("two-area-4")
    sys_, steady = build_system(model)
    return model, sys_, steady, variants


@pytest.fixture(scope="session")
def ring10():
    model, variants = build_benchmark("ring-10")
    sys_, steady = build_system(model)
    return model, sys_, steady, variants
