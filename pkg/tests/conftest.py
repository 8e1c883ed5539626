import importlib.resources

import numpy as np
import pytest

from cpdeflate.tensors import load_tensor


@pytest.fixture(scope="session")
def appendix_tensor() -> np.ndarray:
    """The 2x2x2x2 complex worked-example tensor shipped with the package."""
    ref = importlib.resources.files("cpdeflate") / "data" / "appendix_a.tensor"
    with importlib.resources.as_file(ref) as path:
        return load_tensor(path)


def phase_aligned_error(got: np.ndarray, want: np.ndarray) -> float:
    """Max abs difference after removing one global unit-modulus factor."""
    got = np.asarray(got).reshape(-1)
    want = np.asarray(want).reshape(-1)
    ph = np.vdot(got, want)
    if abs(ph) == 0:
        return float(np.max(np.abs(got - want)))
    ph /= abs(ph)
    return float(np.max(np.abs(got * ph - want)))
