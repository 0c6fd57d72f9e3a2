import numpy as np
import pytest

from matcomplete import FactoredMatrix, ObservedMatrix


def random_factored(rng, m, n, k, sigma_max=10.0):
    """A valid random FactoredMatrix with orthonormal factors."""
    u, _ = np.linalg.qr(rng.standard_normal((m, max(k, 1))))
    v, _ = np.linalg.qr(rng.standard_normal((n, max(k, 1))))
    sigma = np.sort(rng.uniform(0.1, sigma_max, size=k))[::-1]
    return FactoredMatrix(u[:, :k], sigma, v[:, :k])


def random_observed(rng, m, n, frac, values=None):
    """Uniformly sampled omega with random (or supplied) values."""
    nnz = max(1, int(frac * m * n))
    flat = np.sort(rng.choice(m * n, size=nnz, replace=False))
    rows, cols = np.divmod(flat, n)
    if values is None:
        values = rng.standard_normal(nnz)
    return ObservedMatrix(m, n, rows, cols, values)


def full_observed(dense):
    """Every entry of a dense matrix as an ObservedMatrix."""
    m, n = dense.shape
    rows, cols = np.divmod(np.arange(m * n), n)
    return ObservedMatrix(m, n, rows, cols, dense.ravel())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
