"""Grids, fields and the lifted coefficient-atom tensor.

Shape conventions (float64 everywhere):

- image:                  (N, M); axis 0 = row index i, axis 1 = column j
- vector field:           (N, M, 2); channels (d/di, d/dj)
- symmetric tensor field: (N, M, 3); channels (xx, yy, xy). The xy channel
  carries weight 2 in inner products and pointwise norms so that the
  3-channel storage reproduces the Frobenius pairing of the 2x2 tensor.
- lifted tensor:          (Nc, Mc, n, n); first two axes enumerate atom
  positions on the (possibly strided) coefficient grid, last two the atom.
- moment field:           (Nc, Mc, 3); 0th, first-row and first-column
  moments of the atom slice at each position.

Coefficient position a on an axis of extent N corresponds to the atom
top-left offset ``a*eta - (n-1)``, so atoms may overlap the image boundary
on every side.  ``eta`` must divide ``n`` so that adjacent atoms can tile
seamlessly (``eta == n`` gives exactly non-overlapping tilings).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CoeffGrid",
    "coeff_grid",
    "image",
    "vec_field",
    "sym_field",
    "moment_field",
    "lifted_tensor",
    "reshape_to_matrix",
    "reshape_from_matrix",
    "inner",
]


def _checked(values, ndim, name):
    out = np.array(values, dtype=np.float64)
    if out.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimensions, got {out.ndim}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite values")
    out.flags.writeable = False
    return out


def image(values):
    """Checked image constructor: finite float64, read-only, shape (N, M)."""
    return _checked(values, 2, "image")


def vec_field(values):
    out = _checked(values, 3, "vector field")
    if out.shape[2] != 2:
        raise ValueError("vector field needs 2 channels")
    return out


def sym_field(values):
    out = _checked(values, 3, "symmetric tensor field")
    if out.shape[2] != 3:
        raise ValueError("symmetric tensor field needs 3 channels (xx, yy, xy)")
    return out


def moment_field(values):
    out = _checked(values, 3, "moment field")
    if out.shape[2] != 3:
        raise ValueError("moment field needs 3 channels")
    return out


@dataclass(frozen=True)
class CoeffGrid:
    """Geometry of the strided coefficient grid attached to an N x M image."""

    Nc: int
    Mc: int
    n: int
    eta: int
    N: int
    M: int

    def offset(self, a):
        """Atom top-left pixel offset of coefficient index ``a`` (may be < 0)."""
        return a * self.eta - (self.n - 1)

    @property
    def tensor_shape(self):
        return (self.Nc, self.Mc, self.n, self.n)

    @property
    def matrix_shape(self):
        return (self.Nc * self.Mc, self.n * self.n)


def coeff_grid(N, M, n, eta):
    """Build the coefficient grid for an N x M image with n x n atoms, stride eta.

    Counts every position a with -(n-1) <= a*eta - (n-1) <= N-1, i.e. every
    stride-eta atom placement that still touches the image.
    """
    N, M, n, eta = int(N), int(M), int(n), int(eta)
    if eta < 1:
        raise ValueError(f"stride must be >= 1, got {eta}")
    if n % eta != 0:
        raise ValueError(f"stride {eta} does not divide atom size {n}")
    if n >= min(N, M):
        raise ValueError(f"atom size {n} too large for {N} x {M} image")
    Nc = (N + n - 2) // eta + 1
    Mc = (M + n - 2) // eta + 1
    return CoeffGrid(Nc=Nc, Mc=Mc, n=n, eta=eta, N=N, M=M)


def lifted_tensor(values, grid):
    """Checked lifted-tensor constructor tied to a CoeffGrid."""
    out = _checked(values, 4, "lifted tensor")
    if out.shape != grid.tensor_shape:
        raise ValueError(
            f"lifted tensor shape {out.shape} does not match grid {grid.tensor_shape}"
        )
    return out


def reshape_to_matrix(C):
    """Flatten a lifted tensor to its (Nc*Mc) x (n*n) matrix, row-major both ways."""
    Nc, Mc, n, n2 = C.shape
    return np.reshape(C, (Nc * Mc, n * n2))


def reshape_from_matrix(B, grid):
    """Inverse of :func:`reshape_to_matrix`."""
    return np.reshape(B, grid.tensor_shape)


def inner(a, b):
    """Euclidean pairing: sum of elementwise products of two like-shaped arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))
