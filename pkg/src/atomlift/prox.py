"""Proximal mappings and projections used by the primal-dual solver.

Pointwise ball projections for the dual variables, data-term proxes for
the four tasks, the scalar singular-value potential (linear or semiconvex)
with its closed-form prox, and the nuclear prox acting on the singular
values of the matrix-reshaped lifted tensor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import reshape_to_matrix

__all__ = [
    "StepSizeTooLarge",
    "Potential",
    "project_linf_l2",
    "prox_l2_data",
    "prox_conj_l2_data",
    "project_inpaint",
    "prox_scalar_phi",
    "prox_nuclear_matrix",
    "prox_nuclear",
]

# singular values below this fraction of the largest are treated as zero
RANK_TOL = 1e-12


class StepSizeTooLarge(ValueError):
    """Step * weight violates the convexity bound of the semiconvex prox."""


@dataclass(frozen=True)
class Potential:
    """Singular-value potential: identity, or the semiconvex flattening.

    The semiconvex potential grows like x - epsilon*delta*x^2 up to
    x = 1/(2*epsilon) and continues affinely with slope 1 - delta; it is
    semiconvex in the sense that phi + rho*|.|^2 is convex for
    rho > epsilon*delta.
    """

    kind: str = "linear"
    epsilon: float = 0.0
    delta: float = 0.99

    def __post_init__(self):
        if self.kind not in ("linear", "semiconvex"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "semiconvex":
            if self.epsilon <= 0:
                raise ValueError("semiconvex potential needs epsilon > 0")
            if not 0.0 < self.delta < 1.0:
                raise ValueError("semiconvex potential needs delta in (0, 1)")

    def value(self, x):
        """Evaluate the potential elementwise on x >= 0."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "linear":
            return x.copy()
        eps, dlt = self.epsilon, self.delta
        knee = 1.0 / (2.0 * eps)
        return np.where(x <= knee, x - eps * dlt * x ** 2, (1.0 - dlt) * x + dlt / (4.0 * eps))

    def max_tau_rho(self):
        """Largest step * weight for which the prox stays convex."""
        if self.kind == "linear":
            return np.inf
        return 1.0 / (2.0 * self.epsilon * self.delta)


def project_linf_l2(z, radius, weights=None):
    """Pointwise projection onto the l2 ball of the trailing channel axes.

    Every grid point's channel vector is scaled by 1/max(1, |vec|/radius);
    optional per-channel weights define the norm |vec|^2 = sum w_c vec_c^2
    (used for the symmetric-tensor dual, weight 2 on xy).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    z = np.asarray(z, dtype=np.float64)
    flat = z.reshape(z.shape[0], z.shape[1], -1)
    sq = flat ** 2
    if weights is not None:
        sq = sq * np.asarray(weights, dtype=np.float64)
    norm = np.sqrt(sq.sum(axis=-1))
    factor = 1.0 / np.maximum(1.0, norm / radius)
    return (flat * factor[:, :, None]).reshape(z.shape)


def prox_l2_data(u0, f0, tau_lambda):
    """Prox of tau_lambda/2 * |u - f0|^2: convex combination pulled toward f0."""
    if tau_lambda < 0:
        raise ValueError("tau_lambda must be >= 0")
    return (u0 + tau_lambda * f0) / (1.0 + tau_lambda)

def prox_conj_l2_data(d0, f0, sigma, lam):
    """Prox of the conjugate of lam/2 * |. - f0|^2 with dual step sigma."""
    if sigma <= 0 or lam <= 0:
        raise ValueError("sigma and lambda must be positive")
    return (d0 - sigma * f0) / (1.0 + sigma / lam)


def project_inpaint(u0, f0, mask):
    """Replace the masked (known) pixels by f0, keep u0 elsewhere."""
    if u0.shape != f0.shape or u0.shape != mask.shape:
        raise ValueError("image/mask shapes do not match")
    return np.where(mask, f0, u0)


def prox_scalar_phi(x0, tau_rho, phi):
    """Closed-form prox of tau_rho * phi on the half line x >= 0.

    Linear potential: soft threshold.  Semiconvex: zero up to tau_rho, a
    stretched affine middle branch, then a reduced shift; requires
    tau_rho <= 1/(2*epsilon*delta) so the objective stays convex.
    Accepts scalars or arrays.
    """
    scalar = np.isscalar(x0) or np.ndim(x0) == 0
    x0 = np.asarray(x0, dtype=np.float64)
    if tau_rho < 0:
        raise ValueError("tau_rho must be >= 0")
    if phi.kind == "linear":
        out = np.maximum(x0 - tau_rho, 0.0)
    else:
        eps, dlt = phi.epsilon, phi.delta
        shrink = 2.0 * eps * dlt * tau_rho
        if shrink >= 1.0 - 1e-12:
            raise StepSizeTooLarge(
                f"tau*rho = {tau_rho:.6g} violates the convexity bound "
                f"1/(2*eps*delta) = {phi.max_tau_rho():.6g}"
            )
        hi = 1.0 / (2.0 * eps) + tau_rho * (1.0 - dlt)
        out = np.where(
            x0 <= tau_rho,
            0.0,
            np.where(x0 <= hi, (x0 - tau_rho) / (1.0 - shrink), x0 - tau_rho * (1.0 - dlt)),
        )
    return float(out) if scalar else out


def _svd_prox(B, tau_rho, phi):
    """Thin SVD of B, prox on the singular values; returns (U, s_in, s_out, Vt)."""
    U, s, Vt = np.linalg.svd(B, full_matrices=False)
    if s.size and s[0] > 0:
        s = np.where(s < RANK_TOL * s[0], 0.0, s)
    return U, s, prox_scalar_phi(s, tau_rho, phi), Vt


def prox_nuclear_matrix(B, tau_rho, phi):
    """Prox of tau_rho * sum phi(sigma_i) on a matrix."""
    U, _, s_new, Vt = _svd_prox(B, tau_rho, phi)
    keep = s_new > 0
    if not np.any(keep):
        return np.zeros_like(B)
    return (U[:, keep] * s_new[keep]) @ Vt[keep]


def _gram_spectral_prox(B, tau_rho, phi):
    """Singular-value prox via the eigendecomposition of B^T B.

    Much cheaper than a full SVD for tall matrices; the reduced accuracy
    on tiny singular values does not matter because the prox zeroes
    everything up to tau_rho anyway.  Returns (B_new, s_new).
    """
    w, V = np.linalg.eigh(B.T @ B)
    s = np.sqrt(np.maximum(w[::-1], 0.0))
    V = V[:, ::-1]
    if s.size and s[0] > 0:
        s = np.where(s < RANK_TOL * s[0], 0.0, s)
    s_new = prox_scalar_phi(s, tau_rho, phi)
    keep = s_new > 0
    if not np.any(keep):
        return np.zeros_like(B), s_new
    Vk = V[:, keep]
    return (B @ (Vk * (s_new[keep] / s[keep]))) @ Vk.T, s_new


def prox_nuclear(C, tau_rho, phi):
    """Singular-value prox of the matrix-reshaped lifted tensor."""
    B = reshape_to_matrix(C)
    return prox_nuclear_matrix(B, tau_rho, phi).reshape(C.shape)
