"""Static 2D difference calculus for manufactured-field identity checks.

The tensor structure exercised here (outer products, transposed gradients,
curls) degenerates in 1D, so the identity checks run on a square patch with
analytic fields and no time integration. All operators are built by applying
one second-order 1D derivative matrix along each axis; compositions therefore
commute across axes exactly, which is what makes the constant-density cases
of the identity checks hold to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError


@dataclass(frozen=True)
class Patch2D:
    """Cell-centered square patch [0, length]^2 with n cells per side."""

    n: int
    length: float = 2.0 * np.pi
    h: float = field(init=False)
    x: np.ndarray = field(init=False)  # (n, n) meshgrid, first axis is x
    y: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n < 8:
            raise InvalidConfigError(f"patch needs at least 8 cells per side, got {self.n}")
        h = self.length / self.n
        c = (np.arange(self.n) + 0.5) * h
        xg, yg = np.meshgrid(c, c, indexing="ij")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "x", xg)
        object.__setattr__(self, "y", yg)

    def interior(self, margin: int = 2) -> np.ndarray:
        """Mask of cells at least `margin` cells away from every edge."""
        m = np.zeros((self.n, self.n), dtype=bool)
        m[margin:-margin, margin:-margin] = True
        return m

    def _d(self, f: np.ndarray, axis: int) -> np.ndarray:
        h = self.h
        out = np.empty_like(f)
        sl = [slice(None)] * f.ndim

        def at(idx):
            s = list(sl)
            s[axis] = idx
            return tuple(s)

        out[at(slice(1, -1))] = (f[at(slice(2, None))] - f[at(slice(0, -2))]) / (2 * h)
        out[at(0)] = (-3 * f[at(0)] + 4 * f[at(1)] - f[at(2)]) / (2 * h)
        out[at(-1)] = (3 * f[at(-1)] - 4 * f[at(-2)] + f[at(-3)]) / (2 * h)
        return out

    def dx(self, f: np.ndarray) -> np.ndarray:
        return self._d(f, 0)

    def dy(self, f: np.ndarray) -> np.ndarray:
        return self._d(f, 1)

    def grad(self, f: np.ndarray) -> np.ndarray:
        """Gradient of a scalar: (n, n, 2)."""
        return np.stack([self.dx(f), self.dy(f)], axis=-1)

    def grad_vector(self, u: np.ndarray) -> np.ndarray:
        """Jacobian G_ij = d_j u_i of a vector field (n, n, 2) -> (n, n, 2, 2)."""
        g = np.empty(u.shape[:2] + (2, 2))
        for i in range(2):
            g[..., i, 0] = self.dx(u[..., i])
            g[..., i, 1] = self.dy(u[..., i])
        return g

    def div_vector(self, u: np.ndarray) -> np.ndarray:
        return self.dx(u[..., 0]) + self.dy(u[..., 1])

    def div_tensor(self, t: np.ndarray) -> np.ndarray:
        """Row divergence (div T)_i = d_j T_ij of (n, n, 2, 2) -> (n, n, 2)."""
        out = np.empty(t.shape[:2] + (2,))
        for i in range(2):
            out[..., i] = self.dx(t[..., i, 0]) + self.dy(t[..., i, 1])
        return out

    def laplacian_vector(self, u: np.ndarray) -> np.ndarray:
        """Componentwise composition d_x(d_x .) + d_y(d_y .), kept as a
        composition of the same first-derivative operator on purpose."""
        out = np.empty_like(u)
        for i in range(2):
            f = u[..., i]
            out[..., i] = self.dx(self.dx(f)) + self.dy(self.dy(f))
        return out

    def curl(self, f: np.ndarray) -> np.ndarray:
        """Scalar curl d_x F_y - d_y F_x of a plane vector field."""
        return self.dx(f[..., 1]) - self.dy(f[..., 0])


def outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise outer product (a (x) b)_ij = a_i b_j on (n, n, 2) fields."""
    return a[..., :, None] * b[..., None, :]


def sym_part(g: np.ndarray) -> np.ndarray:
    return 0.5 * (g + np.swapaxes(g, -1, -2))


def antisym_part(g: np.ndarray) -> np.ndarray:
    return 0.5 * (g - np.swapaxes(g, -1, -2))
