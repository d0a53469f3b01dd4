"""Linear operators of the saddle-point problem.

Lifting K and its adjoint, atom-moment operators, the forward-difference
gradient / backward-difference symmetrized Jacobian pair used by the
second-order total-variation prior, Gaussian blur with an exact adjoint,
and operator-norm estimation by power iteration.

All forward/adjoint pairs are exact adjoints of each other; for the
symmetrized Jacobian the pairing is the weighted one of :mod:`.grid`
(weight 2 on the xy channel).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .grid import CoeffGrid

__all__ = [
    "SYM_WEIGHTS",
    "lift_forward",
    "lift_adjoint",
    "moments",
    "moments_adjoint",
    "gradient",
    "divergence",
    "sym_jacobian",
    "sym_jacobian_adjoint",
    "sym_divergence",
    "GaussKernel",
    "gauss_kernel",
    "blur",
    "blur_adjoint",
    "op_norm_estimate",
]

# channel weights of the (xx, yy, xy) storage of a symmetric 2x2 tensor
SYM_WEIGHTS = np.array([1.0, 1.0, 2.0])


# ---------------------------------------------------------------------------
# lifting


def _canvas_shape(grid):
    # extended domain touched by any stamp; image pixel i sits at row i + n - 1
    return ((grid.Nc - 1) * grid.eta + grid.n, (grid.Mc - 1) * grid.eta + grid.n)


def lift_forward(C, grid, N=None, M=None):
    """Sum all atom stamps into an image: (KC)(p+r, q+s) += C[a, b, r, s].

    Position (a, b) stamps its atom with top-left corner at pixel
    (offset(a), offset(b)); contributions outside the image are dropped.
    """
    N = grid.N if N is None else int(N)
    M = grid.M if M is None else int(M)
    if C.shape != grid.tensor_shape:
        raise ValueError(f"tensor shape {C.shape} does not match grid {grid.tensor_shape}")
    n, eta = grid.n, grid.eta
    canvas = np.zeros(_canvas_shape(grid))
    hi_r = (grid.Nc - 1) * eta + 1
    hi_c = (grid.Mc - 1) * eta + 1
    for r in range(n):
        for s in range(n):
            canvas[r:r + hi_r:eta, s:s + hi_c:eta] += C[:, :, r, s]
    return canvas[n - 1:n - 1 + N, n - 1:n - 1 + M].copy()


def lift_adjoint(u, grid):
    """Patch selection: (K*u)[a, b, r, s] = u(offset(a)+r, offset(b)+s), 0 outside."""
    N, M = u.shape
    n, eta = grid.n, grid.eta
    pad = np.zeros(_canvas_shape(grid))
    pad[n - 1:n - 1 + N, n - 1:n - 1 + M] = u
    win = sliding_window_view(pad, (n, n))[::eta, ::eta]
    return np.ascontiguousarray(win)


# ---------------------------------------------------------------------------
# atom moments


def _moment_patterns(n):
    """Raw 0th/1st moment patterns (3, n, n): all-ones, row ramp, column ramp."""
    idx = np.arange(n, dtype=np.float64)
    ones = np.ones((n, n))
    return np.stack([ones, np.tile(idx[:, None], (1, n)), np.tile(idx[None, :], (n, 1))])


def _orthonormal_moment_patterns(n):
    """Orthonormal basis of span{1, r, s}; same kernel, unit operator norm.

    Centering makes the three patterns mutually orthogonal, so normalizing
    them yields an exactly orthonormal row set.  Constraining against these
    patterns is equivalent to the raw moment constraint but keeps the
    moment block of the saddle operator at norm 1, which would otherwise
    dominate the step sizes.
    """
    idx = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    ones = np.ones((n, n)) / n
    ramp_r = np.tile(idx[:, None], (1, n))
    ramp_s = np.tile(idx[None, :], (n, 1))
    return np.stack([ones, ramp_r / np.linalg.norm(ramp_r), ramp_s / np.linalg.norm(ramp_s)])


def pattern_moments(C, patterns):
    return np.einsum("abrs,krs->abk", C, patterns)


def pattern_moments_adjoint(m, patterns):
    return np.einsum("abk,krs->abrs", m, patterns)


def moments(C):
    """Per-position 0th and uncentered first moments of the atom slices."""
    return pattern_moments(C, _moment_patterns(C.shape[2]))


def moments_adjoint(m, n):
    """Exact adjoint of :func:`moments` for atom size n."""
    return pattern_moments_adjoint(m, _moment_patterns(n))


# ---------------------------------------------------------------------------
# derivative operators for the cartoon prior


def gradient(u):
    """Forward differences, replicate boundary (zero derivative at last row/col)."""
    g = np.zeros(u.shape + (2,))
    g[:-1, :, 0] = u[1:, :] - u[:-1, :]
    g[:, :-1, 1] = u[:, 1:] - u[:, :-1]
    return g


def divergence(p):
    """Exact negative adjoint of :func:`gradient`: <grad u, p> = -<u, div p>."""
    d = np.zeros(p.shape[:2])
    d[:-1, :] += p[:-1, :, 0]
    d[1:, :] -= p[:-1, :, 0]
    d[:, :-1] += p[:, :-1, 1]
    d[:, 1:] -= p[:, :-1, 1]
    return d


def _dminus(w, axis):
    # backward difference, zero at the first index (replicate boundary)
    out = np.zeros_like(w)
    sl_hi = [slice(None)] * w.ndim
    sl_lo = [slice(None)] * w.ndim
    sl_hi[axis] = slice(1, None)
    sl_lo[axis] = slice(None, -1)
    out[tuple(sl_hi)] = w[tuple(sl_hi)] - w[tuple(sl_lo)]
    return out


def _dminus_t(z, axis):
    # transpose of _dminus
    out = np.zeros_like(z)
    sl_hi = [slice(None)] * z.ndim
    sl_lo = [slice(None)] * z.ndim
    sl_hi[axis] = slice(1, None)
    sl_lo[axis] = slice(None, -1)
    out[tuple(sl_hi)] += z[tuple(sl_hi)]
    out[tuple(sl_lo)] -= z[tuple(sl_hi)]
    return out


def sym_jacobian(v):
    """Symmetrized Jacobian of a vector field, backward differences.

    Channels (xx, yy, xy) with xy = (d2 v1 + d1 v2) / 2; the xy channel is
    stored once and weighted by 2 in pairings.
    """
    e = np.zeros(v.shape[:2] + (3,))
    e[:, :, 0] = _dminus(v[:, :, 0], 0)
    e[:, :, 1] = _dminus(v[:, :, 1], 1)
    e[:, :, 2] = 0.5 * (_dminus(v[:, :, 0], 1) + _dminus(v[:, :, 1], 0))
    return e


def sym_jacobian_adjoint(q):
    """Adjoint of sym_jacobian under the weighted pairing (weight 2 on xy)."""
    out = np.zeros(q.shape[:2] + (2,))
    out[:, :, 0] = _dminus_t(q[:, :, 0], 0) + _dminus_t(q[:, :, 2], 1)
    out[:, :, 1] = _dminus_t(q[:, :, 1], 1) + _dminus_t(q[:, :, 2], 0)
    return out


def sym_divergence(q):
    """Negative weighted adjoint: <E v, q>_w = -<v, sym_divergence(q)>."""
    return -sym_jacobian_adjoint(q)


# ---------------------------------------------------------------------------
# Gaussian blur


@dataclass(frozen=True)
class GaussKernel:
    size: int
    sigma: float
    weights: np.ndarray


def gauss_kernel(size, sigma):
    """Normalized isotropic Gaussian stencil on an odd size x size grid."""
    size = int(size)
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and positive, got {size}")
    if size == 1:
        w = np.ones((1, 1))
    else:
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        idx = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
        g = np.exp(-(idx ** 2) / (2.0 * sigma ** 2))
        w = np.outer(g, g)
        w /= w.sum()
    w.flags.writeable = False
    return GaussKernel(size=size, sigma=float(sigma), weights=w)


def _fold_symmetric(big, h, axis):
    # adjoint of np.pad(mode="symmetric") along one axis
    big = np.moveaxis(big, axis, 0)
    core = big[h:-h].copy()
    core[:h] += big[:h][::-1]
    core[-h:] += big[-h:][::-1]
    return np.moveaxis(core, 0, axis)


def blur(u, kernel):
    """Correlation with the kernel, symmetric (reflect) boundary handling."""
    w = kernel.weights
    h = kernel.size // 2
    if kernel.size >= min(u.shape):
        raise ValueError("kernel must be smaller than the image")
    if h == 0:
        return w[0, 0] * u
    padded = np.pad(u, h, mode="symmetric")
    win = sliding_window_view(padded, w.shape)
    return np.einsum("ijkl,kl->ij", win, w)


def blur_adjoint(y, kernel):
    """Exact transpose of :func:`blur` (scatter then fold the reflect padding)."""
    w = kernel.weights
    h = kernel.size // 2
    if h == 0:
        return w[0, 0] * y
    N, M = y.shape
    big = np.zeros((N + 2 * h, M + 2 * h))
    for di in range(kernel.size):
        for dj in range(kernel.size):
            big[di:di + N, dj:dj + M] += w[di, dj] * y
    return _fold_symmetric(_fold_symmetric(big, h, 0), h, 1)


# ---------------------------------------------------------------------------
# operator norm


def _aslist(x):
    return [x] if isinstance(x, np.ndarray) else list(x)


def _inner_list(a, b):
    return sum(float(np.dot(x.ravel(), y.ravel())) for x, y in zip(a, b))


def op_norm_estimate(forward, adjoint, template, iters=50, seed=0):
    """Estimate ||B|| by power iteration on B*B from a seeded random start.

    ``template`` fixes the domain shapes (one array or a list of arrays);
    ``forward``/``adjoint`` must accept and return the same structure as
    the templates they map between.  The returned Rayleigh estimate is
    non-decreasing in ``iters`` and converges to the operator norm from
    below.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    single = isinstance(template, np.ndarray)
    rng = np.random.default_rng(seed)
    x = [rng.standard_normal(t.shape) for t in _aslist(template)]
    nrm = np.sqrt(_inner_list(x, x))
    x = [xi / nrm for xi in x]
    lam = 0.0
    for _ in range(iters):
        y = forward(x[0] if single else x)
        w = _aslist(adjoint(y))
        lam = _inner_list(x, w)
        wnrm = np.sqrt(_inner_list(w, w))
        if wnrm == 0.0:
            return 0.0
        x = [wi / wnrm for wi in w]
    return float(np.sqrt(max(lam, 0.0)))
