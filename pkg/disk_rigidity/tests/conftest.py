import numpy as np
import pytest

from disk_rigidity.geometry.families import conformal_bump, hyperbolic_metric, twist_pullback
from disk_rigidity.geometry.fields import MetricField, SymTensorField

SUPPORT = 0.5


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def g0():
    return hyperbolic_metric()


@pytest.fixture
def flat_perturbation():
    """g0 with a zero perturbation: exactly hyperbolic, but every geodesic goes through the numeric path."""
    return MetricField(SymTensorField.zero(SUPPORT), name="zero")


@pytest.fixture
def conformal():
    return MetricField(conformal_bump(0.05, SUPPORT))


@pytest.fixture
def twisted():
    return MetricField(twist_pullback(0.6, SUPPORT), name="twist")
