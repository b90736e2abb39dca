import numpy as np
import pytest


def central_fd(fn, x, h=1e-5):
    """Central finite-difference gradient of a scalar function of an array."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = g.ravel()
    for i in range(x.size):
        xp = x.ravel().copy()
        xm = x.ravel().copy()
        xp[i] += h
        xm[i] -= h
        flat[i] = (fn(xp.reshape(x.shape)) - fn(xm.reshape(x.shape))) / (2 * h)
    return g


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-12)
    return np.abs(a - b).max() / denom


@pytest.fixture(scope="session")
def wall_spec():
    from wmplanlab.envs import wall2d_spec

    return wall2d_spec()


@pytest.fixture(scope="session")
def pm_spec():
    from wmplanlab.envs import pointmass_spec

    return pointmass_spec()
