"""Task/variant wiring: assemble solvable problem specifications.

Tasks: ``decompose`` (exact-equality data term), ``inpaint`` (known-pixel
mask indicator), ``denoise`` (quadratic), ``deconv`` (quadratic on the
blurred image, handled through the dual data slot).  Variants: ``tgv``,
``txt``, ``ct_cvx``, ``ct_scvx``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import CoeffGrid, coeff_grid
from .operators import GaussKernel
from .prox import Potential
from .solver import SolverParams

__all__ = ["TASKS", "VARIANTS", "ProblemSpec", "build_problem", "default_nu", "default_epsilon"]

TASKS = ("decompose", "inpaint", "denoise", "deconv")
VARIANTS = ("tgv", "txt", "ct_cvx", "ct_scvx")

# default sparsity/rank tradeoff per task (texture-only decomposition differs)
_NU = {"decompose": 0.95, "inpaint": 0.975, "denoise": 0.975, "deconv": 0.975}
# default semiconvexity scale per task
_EPS = {"inpaint": 0.1, "denoise": 2.0, "decompose": 0.1, "deconv": 2.0}


def default_nu(task, variant):
    if task == "decompose" and variant == "txt":
        return 0.75
    return _NU[task]


def default_epsilon(task):
    return _EPS[task]


@dataclass(frozen=True)
class ProblemSpec:
    task: str
    variant: str
    f0: np.ndarray
    mask: Optional[np.ndarray]
    kernel: Optional[GaussKernel]
    grid: CoeffGrid
    params: SolverParams
    moment_constraint: bool


def build_problem(
    task,
    variant,
    f0,
    mask=None,
    kernel=None,
    lam=10.0,
    mu=0.0,
    nu=None,
    epsilon=None,
    delta=0.99,
    n=15,
    eta=3,
    iters=3000,
    step_safety=0.98,
    power_iters=50,
    seed=0,
    record_every=1,
    moment_constraint=None,
    force=False,
):
    """Validate a task/variant combination and assemble a ProblemSpec.

    ``nu`` and ``epsilon`` default to the per-task values; ``lam`` is only
    meaningful for the quadratic data terms (denoising, deconvolution) and
    ``mu`` balances cartoon against texture.  ``moment_constraint`` keeps
    the learned atoms orthogonal to constants and linear ramps; it
    defaults to on for the cartoon-texture variants and off for the
    texture-only variant.  Pass ``force=True`` to run task/variant pairs
    outside the supported matrix.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    f0 = np.asarray(f0, dtype=np.float64)
    if f0.ndim != 2:
        raise ValueError("f0 must be a 2-D image")
    if not np.all(np.isfinite(f0)):
        raise ValueError("f0 contains non-finite values")

    if task == "inpaint":
        if mask is None:
            raise ValueError("inpainting requires a mask of known pixels")
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != f0.shape:
            raise ValueError("mask shape does not match the image")
    if task == "deconv":
        if kernel is None:
            raise ValueError("deconvolution requires a blur kernel")
        if variant not in ("tgv", "ct_cvx") and not force:
            raise ValueError(f"deconvolution is not supported for variant {variant!r}")
    if task == "denoise" and lam <= 0:
        raise ValueError("denoising requires lam > 0")
    if task == "deconv" and lam <= 0:
        raise ValueError("deconvolution requires lam > 0")

    grid = coeff_grid(f0.shape[0], f0.shape[1], n, eta)

    if nu is None:
        nu = default_nu(task, variant)
    if variant == "ct_scvx":
        phi = Potential("semiconvex", epsilon=default_epsilon(task) if epsilon is None else epsilon, delta=delta)
    else:
        if epsilon is not None and not force:
            raise ValueError("epsilon only applies to the semiconvex variant")
        phi = Potential("linear")

    if moment_constraint is None:
        moment_constraint = variant in ("ct_cvx", "ct_scvx")

    params = SolverParams(
        lam=float(lam),
        mu=float(mu),
        nu=float(nu),
        phi=phi,
        iters=int(iters),
        step_safety=float(step_safety),
        power_iters=int(power_iters),
        seed=int(seed),
        record_every=int(record_every),
    )
    return ProblemSpec(
        task=task,
        variant=variant,
        f0=f0,
        mask=mask,
        kernel=kernel,
        grid=grid,
        params=params,
        moment_constraint=bool(moment_constraint),
    )
