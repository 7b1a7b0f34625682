"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from carleman import NonlinearSystem


@pytest.fixture
def logistic():
    """Scalar quadratic system u' = -u + u^2 with u(0) = 0.5."""
    return NonlinearSystem(1, ([[-1.0]], [[1.0]]), [0.5])


@pytest.fixture
def rng():
    return np.random.default_rng(20260825)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_nsd(rng, d, margin=0.1):
    """Random Hermitian negative definite d x d matrix (margin below zero)."""
    g = random_complex(rng, d, d)
    return -(g @ g.conj().T) - margin * np.eye(d)
