from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    max_examples=50,
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger numba JIT once so timed tests measure compute, not compilation."""
    import scipy.sparse as sp

    from nearlang import TrainConfig, levenshtein, solve_binary_csr

    levenshtein("ab", "ba")
    X = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
    solve_binary_csr(X, np.array([1.0, -1.0]), 1.0, TrainConfig())
