"""Compact SVD-form representation of low-rank matrices and its algebra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .observed import ObservedMatrix

# Entries per chunk when projecting a factorization onto a large omega; keeps
# the (chunk x k) temporaries below ~160 MB at k in the hundreds.
_PROJECT_CHUNK = 2_000_000


@dataclass(frozen=True, eq=False)
class FactoredMatrix:
    """A matrix held as ``u @ diag(sigma) @ v.T`` with orthonormal factors.

    ``u`` is m-by-k, ``v`` is n-by-k and ``sigma`` holds k nonnegative values
    in nonincreasing order.  All solver iterates use this form; dense
    reconstruction is reserved for small matrices and tests.  Orthonormality
    is an invariant of correct construction and is checked on demand with
    :meth:`validate` rather than on every instantiation.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if u.ndim != 2 or v.ndim != 2 or sigma.ndim != 1:
            raise ValueError("u and v must be 2-d, sigma 1-d")
        if u.shape[1] != sigma.size or v.shape[1] != sigma.size:
            raise ValueError(
                f"factor count mismatch: u has {u.shape[1]} columns, "
                f"v has {v.shape[1]}, sigma has {sigma.size}"
            )
        for a in (u, sigma, v):
            a.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "v", v)

    @classmethod
    def zero(cls, m: int, n: int) -> "FactoredMatrix":
        return cls(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.u.shape[0], self.v.shape[0])

    @property
    def k(self) -> int:
        """Number of stored factor columns (may exceed the numerical rank)."""
        return int(self.sigma.size)

    @property
    def rank(self) -> int:
        """Number of strictly positive singular values."""
        return int(np.count_nonzero(self.sigma > 0.0))

    def norm(self) -> float:
        """Frobenius norm, sqrt(sum sigma_i^2)."""
        return float(np.linalg.norm(self.sigma))

    def nuclear_norm(self) -> float:
        return float(self.sigma.sum())

    def validate(self, tol: float = 1e-10) -> "FactoredMatrix":
        """Check orthonormality and singular-value ordering; raise on failure."""
        k = self.k
        if k:
            gu = self.u.T @ self.u - np.eye(k)
            gv = self.v.T @ self.v - np.eye(k)
            if np.abs(gu).max() > tol:
                raise ValueError(f"left factor not orthonormal (max dev {np.abs(gu).max():.3e})")
            if np.abs(gv).max() > tol:
                raise ValueError(f"right factor not orthonormal (max dev {np.abs(gv).max():.3e})")
            if (self.sigma < 0).any():
                raise ValueError("negative singular value")
            if (np.diff(self.sigma) > 0).any():
                raise ValueError("singular values not in nonincreasing order")
        return self

    def dense(self) -> np.ndarray:
        """Reconstruct the represented matrix (small sizes only)."""
        m, n = self.shape
        if max(m, n) > 4096:
            raise ValueError("refusing to densify a matrix larger than 4096 on a side")
        if self.k == 0:
            return np.zeros((m, n))
        return (self.u * self.sigma) @ self.v.T


def project_entries(f: FactoredMatrix, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Entries ``f[rows[t], cols[t]]`` without forming the dense matrix."""
    if f.k == 0:
        return np.zeros(len(rows))
    out = np.empty(len(rows))
    step = max(1, _PROJECT_CHUNK // max(f.k, 1))
    scaled_v = f.v * f.sigma
    for lo in range(0, len(rows), step):
        hi = min(lo + step, len(rows))
        out[lo:hi] = np.einsum("ij,ij->i", f.u[rows[lo:hi]], scaled_v[cols[lo:hi]])
    return out


def project_omega(f: FactoredMatrix, obs: ObservedMatrix) -> np.ndarray:
    """Values of the represented matrix on the sampling set of ``obs``."""
    if f.shape != obs.shape:
        raise ValueError(f"shape mismatch: factored {f.shape} vs observed {obs.shape}")
    return project_entries(f, obs.rows, obs.cols)


def scale(alpha: float, f: FactoredMatrix) -> FactoredMatrix:
    """The matrix ``alpha * f`` in factored form."""
    if alpha == 0.0 or f.k == 0:
        return FactoredMatrix.zero(*f.shape)
    if alpha > 0:
        return FactoredMatrix(f.u, alpha * f.sigma, f.v)
    return FactoredMatrix(-f.u, -alpha * f.sigma, f.v)


def combine(alpha: float, f: FactoredMatrix, beta: float, g: FactoredMatrix) -> FactoredMatrix:
    """Refactor ``alpha * f + beta * g`` into a single orthonormal factorization.

    Works through QR of the stacked factors plus a small dense SVD, so the
    cost is O((m + n) K^2 + K^3) with K = f.k + g.k.  Singular values below
    1e-14 times the largest are discarded as roundoff.
    """
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch: {f.shape} vs {g.shape}")
    if alpha == 0.0 or f.k == 0:
        return scale(beta, g)
    if beta == 0.0 or g.k == 0:
        return scale(alpha, f)
    qu, ru = np.linalg.qr(np.hstack((f.u, g.u)))
    qv, rv = np.linalg.qr(np.hstack((f.v, g.v)))
    mid = (ru * np.concatenate((alpha * f.sigma, beta * g.sigma))) @ rv.T
    p, s, wt = np.linalg.svd(mid)
    keep = s > s[0] * 1e-14 if s.size and s[0] > 0 else slice(0)
    return FactoredMatrix(qu @ p[:, keep], s[keep], qv @ wt.T[:, keep])


def inner(f: FactoredMatrix, g: FactoredMatrix) -> float:
    """Frobenius inner product of two factored matrices."""
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch: {f.shape} vs {g.shape}")
    if f.k == 0 or g.k == 0:
        return 0.0
    cu = f.u.T @ g.u
    cv = f.v.T @ g.v
    return float(np.einsum("ab,ab,a,b->", cu, cv, f.sigma, g.sigma))


def frobenius_distance(f: FactoredMatrix, g: FactoredMatrix) -> float:
    """Frobenius distance between two factored matrices.

    Uses dense subtraction up to 1000 on a side, where cancellation in the
    Gram identity would dominate tiny distances; falls back to the Gram form
    above that size.
    """
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch: {f.shape} vs {g.shape}")
    if (
        f.sigma.shape == g.sigma.shape
        and np.array_equal(f.sigma, g.sigma)
        and np.array_equal(f.u, g.u)
        and np.array_equal(f.v, g.v)
    ):
        return 0.0
    if max(f.shape) <= 1000:
        return float(np.linalg.norm(f.dense() - g.dense()))
    d2 = f.norm() ** 2 + g.norm() ** 2 - 2.0 * inner(f, g)
    return float(np.sqrt(max(d2, 0.0)))
