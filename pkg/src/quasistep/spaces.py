"""Discrete periodic Hilbert spaces X (grid L2) and Y (grid H^s) plus dense linear algebra.

Grid functions are plain 1-D float arrays. A :class:`SpaceConfig` fixes their
length, the grid spacing and the Sobolev exponent of the isometry
``S = (I - d^2/dx^2)^(s/2)``, applied as an exact Fourier multiplier. Vector
valued problems store their components interleaved (``u0, v0, u1, v1, ...``)
and ``S`` acts componentwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

from . import kernels


class DimensionError(ValueError):
    """Grid function or operator does not match its space."""


class ContractViolation(ValueError):
    """Input violates a documented precondition."""


class SingularMatrixError(ArithmeticError):
    """LU pivot fell below working precision."""

    def __init__(self, pivot, column, message=None):
        self.pivot = float(pivot)
        self.column = int(column)
        super().__init__(message or f"singular matrix: pivot {self.pivot:.3e} in column {self.column}")


@dataclass(frozen=True)
class SpaceConfig:
    n_points: int
    domain_length: float = 2.0 * math.pi
    sobolev_s: float = 1.0
    components: int = 1

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 4:
            raise ContractViolation(f"n_points must be an integer >= 4, got {self.n_points}")
        if not (self.domain_length > 0 and math.isfinite(self.domain_length)):
            raise ContractViolation(f"domain_length must be positive, got {self.domain_length}")
        if not (self.sobolev_s >= 0 and math.isfinite(self.sobolev_s)):
            raise ContractViolation(f"sobolev_s must be non-negative, got {self.sobolev_s}")
        if self.components < 1:
            raise ContractViolation("components must be >= 1")

    @property
    def h(self) -> float:
        return self.domain_length / self.n_points

    @property
    def dof(self) -> int:
        return self.n_points * self.components

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.n_points) * self.h

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wave numbers 2*pi*k/L for the rfft layout (k = 0..N/2)."""
        k = np.arange(self.n_points // 2 + 1)
        return 2.0 * math.pi * k / self.domain_length

    @cached_property
    def _s_multiplier(self) -> np.ndarray:
        return (1.0 + self.wavenumbers**2) ** (0.5 * self.sobolev_s)

    def with_(self, **changes) -> SpaceConfig:
        fields = dict(n_points=self.n_points, domain_length=self.domain_length,
                      sobolev_s=self.sobolev_s, components=self.components)
        fields.update(changes)
        return SpaceConfig(**fields)

    # -- grid functions ------------------------------------------------------

    def check(self, u, name="u") -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if u.ndim != 1 or u.shape[0] != self.dof:
            raise DimensionError(f"{name} has shape {u.shape}, expected ({self.dof},)")
        if not np.all(np.isfinite(u)):
            raise ContractViolation(f"{name} has non-finite entries")
        return u

    def sample(self, func, t=None) -> np.ndarray:
        """Sample ``func(x)`` or ``func(x, t)`` on the grid (components interleaved)."""
        vals = func(self.x) if t is None else func(self.x, t)
        vals = np.asarray(vals, dtype=np.float64)
        if self.components == 1:
            return np.broadcast_to(vals, (self.n_points,)).copy()
        vals = np.broadcast_to(vals, (self.components, self.n_points))
        return np.ascontiguousarray(vals.T).reshape(-1)

    def split(self, u) -> np.ndarray:
        """View as ``(components, n_points)``."""
        return np.asarray(u).reshape(self.n_points, self.components).T

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dof)

    def constant(self, c) -> np.ndarray:
        return np.full(self.dof, float(c))

    # -- inner products, norms, isometry ------------------------------------

    def inner_x(self, u, v) -> float:
        u = self.check(u, "u")
        v = self.check(v, "v")
        return self.h * float(np.dot(u, v))

    def norm_x(self, u) -> float:
        u = self.check(u)
        return math.sqrt(self.h) * float(np.linalg.norm(u))

    def norm_y(self, u) -> float:
        return self.norm_x(self.apply_S(u))

    def _multiply(self, u, mult):
        u = self.check(u)
        cols = u.reshape(self.n_points, self.components)
        spec = np.fft.rfft(cols, axis=0) * mult[:, None]
        return np.fft.irfft(spec, n=self.n_points, axis=0).reshape(-1)

    def apply_S(self, u) -> np.ndarray:
        if self.sobolev_s == 0:
            return self.check(u).copy()
        return self._multiply(u, self._s_multiplier)

    def apply_S_inv(self, u) -> np.ndarray:
        if self.sobolev_s == 0:
            return self.check(u).copy()
        return self._multiply(u, 1.0 / self._s_multiplier)

    def band_limited(self, rng: np.random.Generator, max_mode: int | None = None) -> np.ndarray:
        """Pseudorandom grid function with Fourier modes 1..max_mode (default N/8), unit X-norm."""
        if max_mode is None:
            max_mode = max(1, self.n_points // 8)
        spec = np.zeros((self.n_points // 2 + 1, self.components), dtype=complex)
        shape = (max_mode, self.components)
        spec[1:max_mode + 1] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        vals = np.fft.irfft(spec, n=self.n_points, axis=0).reshape(-1)
        return vals / self.norm_x(vals)


# -- dense linear algebra ----------------------------------------------------


class LUFactorization:
    """Partial-pivoting LU of a dense square matrix.

    Raises :class:`SingularMatrixError` when a pivot is at or below
    ``n * eps * max|M|``.
    """

    def __init__(self, matrix):
        self.original = np.asarray(matrix, dtype=np.float64)
        a = np.array(self.original, order="C")
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"matrix must be square, got shape {a.shape}")
        n = a.shape[0]
        scale = float(np.max(np.abs(a))) if n else 0.0
        pivot_tol = n * np.finfo(float).eps * scale
        perm, min_pivot, failed = kernels.lu_factor(a, pivot_tol)
        if failed >= 0:
            raise SingularMatrixError(min_pivot, failed)
        self.lu = a
        self.perm = perm
        self.min_pivot = float(min_pivot)

    @property
    def n(self):
        return self.lu.shape[0]

    def solve(self, r, refine_tol=1e-13) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if r.shape != (self.n,):
            raise DimensionError(f"right-hand side has shape {r.shape}, expected ({self.n},)")
        w = kernels.lu_substitute(self.lu, self.perm, r)
        rnorm = np.linalg.norm(r)
        res = r - self.original @ w
        if np.linalg.norm(res) > refine_tol * rnorm:
            w = w + kernels.lu_substitute(self.lu, self.perm, res)
        return w


def lu_solve(matrix, r) -> np.ndarray:
    """Solve ``matrix @ w = r`` by LU with partial pivoting."""
    return LUFactorization(matrix).solve(r)


def inverse(matrix) -> np.ndarray:
    lu = LUFactorization(matrix)
    eye = np.eye(lu.n)
    return np.column_stack([lu.solve(eye[:, j]) for j in range(lu.n)])


def sym_eigenvalues(matrix, sym_tol=1e-12) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix must be square, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if np.max(np.abs(m - m.T), initial=0.0) > sym_tol * scale:
        raise ContractViolation("sym_eigenvalues requires a symmetric matrix")
    return np.linalg.eigvalsh(0.5 * (m + m.T))
