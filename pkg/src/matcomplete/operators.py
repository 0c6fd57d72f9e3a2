"""Implicit sparse-plus-low-rank linear operator used by the truncated SVD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .factored import FactoredMatrix, project_omega
from .observed import ObservedMatrix


@dataclass(frozen=True, eq=False)
class SpLrOperator:
    """The filled-in iterate ``z + P_omega(a - z)`` as a matrix-free operator.

    Applying the operator costs one sparse product on the residual plus two
    skinny dense products on the factors, so large iterates never have to be
    densified.  ``residual`` holds ``obs.values - z[omega]`` aligned with the
    canonical entry order of ``obs``.
    """

    obs: ObservedMatrix
    z: FactoredMatrix
    residual: np.ndarray

    dtype = np.float64

    def __post_init__(self):
        if self.z.shape != self.obs.shape:
            raise ValueError(f"shape mismatch: iterate {self.z.shape} vs observed {self.obs.shape}")
        residual = np.asarray(self.residual, dtype=np.float64)
        if residual.shape != self.obs.values.shape:
            raise ValueError("residual must be aligned with the observed entries")
        residual = residual.copy()
        residual.setflags(write=False)
        object.__setattr__(self, "residual", residual)
        object.__setattr__(self, "_sparse", self.obs.sparse_with(residual))

    @property
    def shape(self) -> tuple[int, int]:
        return self.obs.shape

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.shape[1],):
            raise ValueError(f"expected a vector of length {self.shape[1]}, got {x.shape}")
        out = self._sparse @ x
        if self.z.k:
            out = out + self.z.u @ (self.z.sigma * (self.z.v.T @ x))
        return out

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.shape[0],):
            raise ValueError(f"expected a vector of length {self.shape[0]}, got {y.shape}")
        out = self._sparse.T @ y
        if self.z.k:
            out = out + self.z.v @ (self.z.sigma * (self.z.u.T @ y))
        return out

    def check_residual(self, tol: float = 1e-12) -> None:
        """Verify the stored residual against a recomputation from obs and z."""
        fresh = self.obs.values - project_omega(self.z, self.obs)
        scale = max(np.abs(self.obs.values).max(initial=0.0), 1.0)
        dev = np.abs(fresh - self.residual).max(initial=0.0)
        if dev > tol * scale:
            raise ValueError(f"stale residual: max deviation {dev:.3e} at scale {scale:.3e}")

    def dense(self) -> np.ndarray:
        """Dense assembly ``z + P_omega(a - z)`` (small sizes only)."""
        out = self.z.dense()
        out[self.obs.rows, self.obs.cols] += self.residual
        return out


def assemble_iterate_operator(obs: ObservedMatrix, z: FactoredMatrix) -> SpLrOperator:
    """Build the operator for ``P_omega(a) + P_omega_perp(z)`` at iterate z."""
    if z.shape != obs.shape:
        raise ValueError(f"shape mismatch: iterate {z.shape} vs observed {obs.shape}")
    return SpLrOperator(obs, z, obs.values - project_omega(z, obs))
