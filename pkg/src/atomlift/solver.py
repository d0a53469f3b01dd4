"""Primal-dual solver for the lifted cartoon-texture model.

Minimizes, over an image u, an auxiliary vector field v and a lifted
coefficient-atom tensor C,

    lam * D(A u, f0)
    + s1(mu) * ( alpha1 * |grad(u - KC) - v|_1 + alpha0 * |E v|_1 )
    + s2(mu) * ( nu * |C|_{1,2} + (1 - nu) * sum phi(sigma_i(C)) )

subject to the optional atom-moment constraint, by primal-dual hybrid
gradient iterations: pointwise ball projections for the cartoon duals,
a pointwise ball projection for the sparsity dual, an unconstrained
moment dual, closed-form data proxes, the singular-value prox for C,
and extrapolation with factor 2.

Variants: ``tgv`` freezes C at zero (pure cartoon prior), ``txt`` drops
the cartoon part and couples the data term directly to KC, ``ct_cvx``
and ``ct_scvx`` run the full model with the linear or the semiconvex
singular-value potential.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .grid import reshape_to_matrix
from .operators import (
    SYM_WEIGHTS,
    _orthonormal_moment_patterns,
    blur,
    blur_adjoint,
    divergence,
    gradient,
    lift_adjoint,
    lift_forward,
    moments,
    pattern_moments,
    pattern_moments_adjoint,
    op_norm_estimate,
    sym_jacobian,
    sym_jacobian_adjoint,
)
from .prox import (
    Potential,
    _gram_spectral_prox,
    project_inpaint,
    project_linf_l2,
    prox_conj_l2_data,
    prox_l2_data,
)

__all__ = [
    "ALPHA0",
    "ALPHA1",
    "DivergedError",
    "SolverParams",
    "SolverState",
    "History",
    "balance",
    "pdhg_solve",
    "objective",
    "atoms_from_tensor",
]

ALPHA0 = np.sqrt(2.0)
ALPHA1 = 1.0


class DivergedError(RuntimeError):
    """Iterates left the finite range (step sizes too aggressive)."""


def balance(mu):
    """Cartoon/texture balancing weights (s1, s2) for the tradeoff parameter."""
    return 1.0 - min(mu, 0.0), 1.0 + max(mu, 0.0)


@dataclass(frozen=True)
class SolverParams:
    lam: float = 10.0
    mu: float = 0.0
    nu: float = 0.975
    phi: Potential = field(default_factory=Potential)
    iters: int = 3000
    step_safety: float = 0.98
    power_iters: int = 50
    seed: int = 0
    record_every: int = 1

    def __post_init__(self):
        if not 0.0 < self.nu < 1.0:
            raise ValueError("nu must lie in (0, 1)")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if not 0.0 < self.step_safety < 1.0:
            raise ValueError("step_safety must lie in (0, 1)")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class SolverState:
    u: np.ndarray
    v: np.ndarray
    C: np.ndarray
    p: np.ndarray
    q: np.ndarray
    d: np.ndarray
    r: np.ndarray
    m: np.ndarray
    u_bar: np.ndarray
    v_bar: np.ndarray
    C_bar: np.ndarray


@dataclass
class History:
    """Per-recorded-iteration energies plus terminal diagnostics."""

    iterations: np.ndarray
    energy: np.ndarray
    residual: np.ndarray
    wall: np.ndarray
    data_gap: np.ndarray
    op_norm: float = 0.0
    tau: float = 0.0
    sigma: float = 0.0
    p_excess: float = 0.0
    q_excess: float = 0.0
    r_excess: float = 0.0
    moment_sup: float = 0.0
    moment_rel: float = 0.0
    data_residual: float = 0.0


def _pointwise_norm(z, weights=None):
    flat = z.reshape(z.shape[0], z.shape[1], -1)
    sq = flat ** 2
    if weights is not None:
        sq = sq * np.asarray(weights)
    return np.sqrt(sq.sum(axis=-1))


def _l12(C):
    return float(np.sqrt((C ** 2).sum(axis=(2, 3))).sum())


def _sq(x):
    return float(np.dot(x.ravel(), x.ravel()))


def _build_saddle_op(problem, has_cart, has_tex, has_blur_dual):
    """Forward/adjoint closures of the composite saddle operator, plus templates."""
    grid = problem.grid
    N, M = problem.f0.shape
    kernel = problem.kernel

    def forward(x):
        ys = []
        if has_cart:
            u, v = x[0], x[1]
            C = x[2] if has_tex else None
            w = u - lift_forward(C, grid) if has_tex else u
            ys.append(gradient(w) - v)
            ys.append(sym_jacobian(v))
            if has_blur_dual:
                ys.append(blur(u, kernel))
        else:
            C = x[0]
            ys.append(lift_forward(C, grid))
        if has_tex:
            ys.append(C)
        return ys

    def adjoint(y):
        it = iter(y)
        xs = []
        if has_cart:
            p = next(it)
            q = next(it)
            divp = divergence(p)
            ustar = -divp
            if has_blur_dual:
                ustar = ustar + blur_adjoint(next(it), kernel)
            xs.append(ustar)
            xs.append(-p + sym_jacobian_adjoint(q))
            if has_tex:
                cstar = lift_adjoint(divp, grid)
        else:
            cstar = lift_adjoint(next(it), grid)
        if has_tex:
            cstar = cstar + next(it)
            xs.append(cstar)
        return xs

    template = []
    if has_cart:
        template.append(np.zeros((N, M)))
        template.append(np.zeros((N, M, 2)))
    if has_tex:
        template.append(np.zeros(grid.tensor_shape))
    return forward, adjoint, template


def _adjoint_self_check(forward, adjoint, template, seed):
    rng = np.random.default_rng(seed + 12345)
    x = [rng.standard_normal(t.shape) for t in template]
    y = forward(x)
    yr = [rng.standard_normal(yi.shape) for yi in y]
    # weighted pairing on 3-channel image fields (the symmetric-tensor dual)
    lhs = 0.0
    for yi, yri in zip(y, yr):
        if yi.ndim == 3 and yi.shape[2] == 3 and yi.shape == (template[0].shape + (3,)):
            lhs += float((yi * yri * SYM_WEIGHTS).sum())
        else:
            lhs += float(np.dot(yi.ravel(), yri.ravel()))
    xs = adjoint(yr)
    rhs = sum(float(np.dot(a.ravel(), b.ravel())) for a, b in zip(x, xs))
    scale = max(1.0, abs(lhs), abs(rhs))
    if abs(lhs - rhs) > 1e-8 * scale:
        raise ValueError(f"saddle operator failed the adjoint self-check: {lhs} vs {rhs}")


def _data_prox_primal(task, f0, mask, lam):
    if task == "decompose":
        return lambda g, tau: f0.copy()
    if task == "inpaint":
        return lambda g, tau: project_inpaint(g, f0, mask)
    if task == "denoise":
        return lambda g, tau: prox_l2_data(g, f0, tau * lam)
    return lambda g, tau: g  # deconv: data handled by the dual on A u


def _data_prox_dual_on_K(task, f0, mask, lam):
    # conjugate prox of the data term, applied to the dual paired with KC
    if task == "decompose":
        return lambda t0, sigma: t0 - sigma * f0
    if task == "inpaint":
        return lambda t0, sigma: np.where(mask, t0 - sigma * f0, 0.0)
    if task == "denoise":
        return lambda t0, sigma: prox_conj_l2_data(t0, f0, sigma, lam)
    raise ValueError(f"task {task!r} is not supported in the texture-only variant")


def pdhg_solve(problem, params=None):
    """Run the primal-dual iteration; returns (u, texture, C, history).

    ``texture`` is the lifted part KC of the reconstruction; the cartoon
    part is u - KC.  History carries per-recorded-iteration energy,
    fixed-point residual and wall time, plus terminal feasibility
    diagnostics for the dual balls and the moment constraint.
    """
    if params is None:
        params = problem.params
    grid = problem.grid
    f0 = np.asarray(problem.f0, dtype=np.float64)
    N, M = f0.shape
    task, variant = problem.task, problem.variant
    has_cart = variant != "txt"
    has_tex = variant != "tgv"
    has_blur_dual = task == "deconv"
    has_mom = bool(problem.moment_constraint) and has_tex
    kernel = problem.kernel
    mask = problem.mask
    lam, mu, nu, phi = params.lam, params.mu, params.nu, params.phi
    s1, s2 = balance(mu)
    rho_c = s2 * (1.0 - nu)
    patterns = MOMENT_SCALE * _orthonormal_moment_patterns(grid.n) if has_mom else None

    forward, adjoint, template = _build_saddle_op(
        problem, has_cart, has_tex, has_blur_dual, has_mom, patterns
    )
    _adjoint_self_check(forward, adjoint, template, params.seed)
    L = op_norm_estimate(forward, adjoint, template, iters=params.power_iters, seed=params.seed)
    if L <= 0:
        raise ValueError("operator norm estimate is zero; nothing to solve")
    tau = sigma = params.step_safety / L
    if has_tex and phi.kind == "semiconvex":
        # keep tau * rho_c inside the convexity bound, preserve sigma * tau
        bound = 0.999 * phi.max_tau_rho() / rho_c
        if tau > bound:
            prod = sigma * tau
            tau = bound
            sigma = prod / tau

    prox_data = _data_prox_primal(task, f0, mask, lam)
    prox_data_dual = _data_prox_dual_on_K(task, f0, mask, lam) if not has_cart else None

    # primal state
    u = np.zeros((N, M))
    v = np.zeros((N, M, 2))
    C = np.zeros(grid.tensor_shape)
    # dual state (t reuses the d slot in the texture-only variant)
    p = np.zeros((N, M, 2))
    q = np.zeros((N, M, 3))
    d = np.zeros((N, M))
    r = np.zeros(grid.tensor_shape)
    m = np.zeros((grid.Nc, grid.Mc, 3))
    # cached linear images of the current iterate and of the extrapolated point
    KC = np.zeros((N, M))
    G = np.zeros((N, M, 2))       # grad(u - KC)
    E = np.zeros((N, M, 3))       # sym_jacobian(v)
    Au = np.zeros((N, M))
    MC = np.zeros((grid.Nc, grid.Mc, 3))
    v_bar = v.copy()
    C_bar = C.copy()
    KC_bar = KC.copy()
    G_bar = G.copy()
    E_bar = E.copy()
    Au_bar = Au.copy()
    MC_bar = MC.copy()

    rad_p = ALPHA1 * s1
    rad_q = ALPHA0 * s1
    rad_r = s2 * nu

    rec_iters, rec_energy, rec_residual, rec_wall, rec_gap = [], [], [], [], []
    f0_nrm = np.sqrt(_sq(f0))
    t0 = time.perf_counter()

    for k in range(params.iters):
        # dual updates at the extrapolated point (all produce fresh arrays)
        p_old, q_old, d_old, r_old, m_old = p, q, d, r, m
        if has_cart:
            p = project_linf_l2(p + sigma * (G_bar - v_bar), rad_p)
            q = project_linf_l2(q + sigma * E_bar, rad_q, weights=SYM_WEIGHTS)
            if has_blur_dual:
                d = prox_conj_l2_data(d + sigma * Au_bar, f0, sigma, lam)
        else:
            d = prox_data_dual(d + sigma * KC_bar, sigma)
        if has_tex:
            r = project_linf_l2(r + sigma * C_bar, rad_r)
            if has_mom:
                m = m + sigma * MC_bar

        # primal updates
        s_new = None
        if has_cart:
            divp = divergence(p)
            gu = u + tau * divp
            if has_blur_dual:
                gu = gu - tau * blur_adjoint(d, kernel)
            u_new = prox_data(gu, tau)
            v_new = v - tau * (-p + sym_jacobian_adjoint(q))
        if has_tex:
            if has_cart:
                gC = C - tau * (lift_adjoint(divp, grid) + r)
            else:
                gC = C - tau * (lift_adjoint(d, grid) + r)
            if has_mom:
                gC = gC - tau * pattern_moments_adjoint(m, patterns)
            try:
                B_new, s_new = _gram_spectral_prox(reshape_to_matrix(gC), tau * rho_c, phi)
            except np.linalg.LinAlgError as exc:
                raise DivergedError(f"spectral prox failed at iteration {k}: {exc}") from exc
            C_new = B_new.reshape(grid.tensor_shape)
            KC_new = lift_forward(C_new, grid)
        else:
            C_new, KC_new = C, KC
        if not has_cart:
            u_new, v_new = KC_new, v

        # refresh caches and extrapolate (factor 2) through the linear maps
        if has_cart:
            G_new = gradient(u_new - KC_new) if has_tex else gradient(u_new)
            E_new = sym_jacobian(v_new)
            G_bar = 2.0 * G_new - G
            E_bar = 2.0 * E_new - E
            v_bar = 2.0 * v_new - v
            if has_blur_dual:
                Au_new = blur(u_new, kernel)
                Au_bar = 2.0 * Au_new - Au
        if has_tex:
            C_bar = 2.0 * C_new - C
            KC_bar = 2.0 * KC_new - KC
            if has_mom:
                MC_new = pattern_moments(C_new, patterns)
                MC_bar = 2.0 * MC_new - MC

        record = (k % params.record_every == 0) or (k == params.iters - 1)
        if record:
            energy = 0.0
            if task == "denoise":
                energy += lam * 0.5 * _sq(u_new - f0)
            elif task == "deconv":
                energy += lam * 0.5 * _sq(Au_new - f0)
            if has_cart:
                energy += s1 * ALPHA1 * float(_pointwise_norm(G_new - v_new).sum())
                energy += s1 * ALPHA0 * float(_pointwise_norm(E_new, SYM_WEIGHTS).sum())
            if has_tex:
                energy += s2 * (nu * _l12(C_new) + (1.0 - nu) * float(phi.value(s_new).sum()))
            if not np.isfinite(energy):
                raise DivergedError(f"non-finite energy at iteration {k}")

            # fixed-point residual |x+ - x|/tau + |y+ - y|/sigma
            xsq = 0.0
            ysq = 0.0
            if has_cart:
                xsq += _sq(u_new - u) + _sq(v_new - v)
                ysq += _sq(p - p_old) + _sq(q - q_old)
            if has_blur_dual or not has_cart:
                ysq += _sq(d - d_old)
            if has_tex:
                xsq += _sq(C_new - C)
                ysq += _sq(r - r_old)
                if has_mom:
                    ysq += _sq(m - m_old)
            residual = np.sqrt(xsq) / tau + np.sqrt(ysq) / sigma
            rec_iters.append(k)
            rec_energy.append(energy)
            rec_wall.append(time.perf_counter() - t0)
            if task == "decompose":
                target = KC_new if not has_cart else u_new
                rec_gap.append(np.sqrt(_sq(target - f0)) / max(f0_nrm, 1e-30))
            elif task == "inpaint":
                target = KC_new if not has_cart else u_new
                rec_gap.append(float(np.abs((target - f0)[mask]).max()) if mask.any() else 0.0)
            else:
                rec_gap.append(0.0)
            rec_residual.append(residual)

        u, v, C, KC = u_new, v_new, C_new, KC_new
        if has_cart:
            G, E = G_new, E_new
            if has_blur_dual:
                Au = Au_new
        if has_tex and has_mom:
            MC = MC_new

    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(C))):
        raise DivergedError("non-finite iterate at termination")

    hist = History(
        iterations=np.asarray(rec_iters),
        energy=np.asarray(rec_energy),
        residual=np.asarray(rec_residual),
        wall=np.asarray(rec_wall),
        data_gap=np.asarray(rec_gap),
        op_norm=L,
        tau=tau,
        sigma=sigma,
    )
    if has_cart:
        hist.p_excess = max(0.0, float(_pointwise_norm(p).max()) - rad_p)
        hist.q_excess = max(0.0, float(_pointwise_norm(q, SYM_WEIGHTS).max()) - rad_q)
    if has_tex:
        hist.r_excess = max(0.0, float(np.sqrt((r ** 2).sum(axis=(2, 3))).max()) - rad_r)
        mom = moments(C)
        hist.moment_sup = float(np.abs(mom).max())
        cmax = float(np.abs(C).max())
        hist.moment_rel = hist.moment_sup / cmax if cmax > 0 else 0.0
    hist.data_residual = rec_gap[-1]
    return u, KC, C, hist


def objective(problem, u, v, C):
    """Full model objective at (u, v, C); independent of solver caches.

    Indicator-type data terms (exact equality, inpainting mask) contribute
    zero here; their violation is reported separately by the solver.
    """
    params = problem.params
    s1, s2 = balance(params.mu)
    lam, nu, phi = params.lam, params.nu, params.phi
    grid = problem.grid
    val = 0.0
    if problem.task == "denoise":
        val += lam * 0.5 * _sq(u - problem.f0)
    elif problem.task == "deconv":
        val += lam * 0.5 * _sq(blur(u, problem.kernel) - problem.f0)
    if problem.variant != "txt":
        w = gradient(u - lift_forward(C, grid)) - v
        val += s1 * ALPHA1 * float(_pointwise_norm(w).sum())
        val += s1 * ALPHA0 * float(_pointwise_norm(sym_jacobian(v), SYM_WEIGHTS).sum())
    if problem.variant != "tgv":
        s = np.linalg.svd(reshape_to_matrix(C), compute_uv=False)
        val += s2 * (nu * _l12(C) + (1.0 - nu) * float(phi.value(s).sum()))
    return val


def atoms_from_tensor(C, k):
    """Top-k learned atoms: right singular vectors of the reshaped tensor.

    Returns a list of (atom, singular_value) pairs in descending order;
    each atom is sign-normalized so its entry of largest magnitude is
    positive.
    """
    n = C.shape[2]
    if k > n * n:
        raise ValueError(f"cannot extract {k} atoms of size {n}x{n}")
    B = reshape_to_matrix(C)
    _, s, Vt = np.linalg.svd(B, full_matrices=False)
    out = []
    for i in range(k):
        atom = Vt[i].reshape(n, n).copy()
        j = np.unravel_index(np.argmax(np.abs(atom)), atom.shape)
        if atom[j] < 0:
            atom = -atom
        out.append((atom, float(s[i])))
    return out
