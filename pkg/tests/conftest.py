import numpy as np
import pytest

from shadowtree.model import ModelParams
from shadowtree.solver import calibrate_integer_k

# (p, d) grid from the acceptance sheet; the d=0.95 column is admissible
# only at p=0.5 (drift window (d/(1+d), 1/(1+d)) = (0.487, 0.513)).
GRID_P = (0.45, 0.5, 0.55)
GRID_D = (0.5, 0.8, 0.95)


def admissible(p: float, d: float) -> bool:
    return d / (1 + d) < p < 1 / (1 + d)


def admissible_grid():
    return [(p, d) for p in GRID_P for d in GRID_D if admissible(p, d)]


@pytest.fixture(scope="session")
def k1_model():
    """p=1/2, d=1/2, k=1: c = 1/2 + sqrt(3)/2, lam = 1 - c^2/2."""
    return calibrate_integer_k(0.5, 0.5, 1)


@pytest.fixture(scope="session")
def desk_models():
    """Calibrated models over the admissible (p, d) grid, k in 1..3."""
    out = []
    for p, d in admissible_grid():
        for k in (1, 2, 3):
            out.append(calibrate_integer_k(p, d, k))
    return out


@pytest.fixture(scope="session")
def full_desk_models():
    """Same grid with k in 1..6 (the acceptance-2 model set)."""
    out = []
    for p, d in admissible_grid():
        for k in range(1, 7):
            out.append(calibrate_integer_k(p, d, k))
    return out


def all_paths(horizon: int) -> np.ndarray:
    """(2^T, T) matrix of +-1 moves; row index bit j is the move at step j."""
    idx = np.arange(1 << horizon, dtype=np.uint64)[:, None]
    bits = (idx >> np.arange(horizon, dtype=np.uint64)[None, :]) & np.uint64(1)
    return np.where(bits == 1, 1, -1).astype(np.int64)


def make_params(p: float, d: float, lam: float) -> ModelParams:
    return ModelParams(d=d, p=p, lam=lam)
