"""atomlift: joint cartoon-texture decomposition and convolutional atom learning.

A convex (optionally semiconvex) variational model over a lifted
coefficient-atom tensor, solved by a primal-dual hybrid gradient scheme,
with tasks for decomposition, inpainting, denoising and deconvolution.
"""

from .grid import (
    CoeffGrid,
    coeff_grid,
    image,
    inner,
    lifted_tensor,
    moment_field,
    reshape_from_matrix,
    reshape_to_matrix,
    sym_field,
    vec_field,
)
from .operators import (
    SYM_WEIGHTS,
    GaussKernel,
    blur,
    blur_adjoint,
    divergence,
    gauss_kernel,
    gradient,
    lift_adjoint,
    lift_forward,
    moments,
    moments_adjoint,
    op_norm_estimate,
    sym_divergence,
    sym_jacobian,
    sym_jacobian_adjoint,
)
from .prox import (
    Potential,
    StepSizeTooLarge,
    project_inpaint,
    project_linf_l2,
    prox_conj_l2_data,
    prox_l2_data,
    prox_nuclear,
    prox_nuclear_matrix,
    prox_scalar_phi,
)
from .solver import (
    ALPHA0,
    ALPHA1,
    DivergedError,
    History,
    SolverParams,
    SolverState,
    atoms_from_tensor,
    balance,
    objective,
    pdhg_solve,
)
from .problems import ProblemSpec, build_problem, default_epsilon, default_nu
from .harness import (
    SyntheticScene,
    add_noise,
    atom_bank,
    atom_recovery,
    export_scene,
    gen_mask,
    gen_patches_scene,
    gen_texture_scene,
    psnr,
    tile_atom,
)

__version__ = "0.1.0"
