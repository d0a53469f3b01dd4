"""Command-line front end.

Subcommands: decompose | denoise | inpaint | deconv | gen | selftest.
Runs write recon.png (u), cartoon.png (u - KC), texture.png (KC, rescaled
for display), atoms.png (sheet of top atoms) and report.json into --out.

Exit codes: 0 success, 2 bad flags, 3 solver divergence.

Set ATOMLIFT_THREADS to cap the linear-algebra thread pool; it must be
set before numpy is first imported, which holds when the ``atomlift``
executable is the entry point.
"""

from __future__ import annotations

import os

_threads = os.environ.get("ATOMLIFT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import json
import sys
import time

import numpy as np

from . import harness
from .io_png import atom_sheet, read_png, rescale_unit, write_png
from .operators import gauss_kernel
from .problems import build_problem, default_nu
from .solver import DivergedError, atoms_from_tensor, objective, pdhg_solve

REPORT_SCHEMA_VERSION = 1
RUN_TASKS = ("decompose", "denoise", "inpaint", "deconv")


def _add_run_flags(sp, task):
    sp.add_argument("--input", required=True, help="grayscale PNG with the data image")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--variant", default="ct_cvx", choices=("tgv", "txt", "ct_cvx", "ct_scvx"))
    sp.add_argument("--n", type=int, default=15, help="atom size in pixels")
    sp.add_argument("--eta", type=int, default=3, help="stride of atom positions")
    sp.add_argument("--nu", type=float, default=None,
                    help="sparsity/rank tradeoff (default per task and variant)")
    sp.add_argument("--mu", type=float, default=0.0, help="cartoon/texture tradeoff")
    sp.add_argument("--lambda", dest="lam", type=float, default=None,
                    help="data weight (quadratic data terms only)")
    sp.add_argument("--lambda-free", action="store_true",
                    help="use the hard-constraint data term (no data weight)")
    sp.add_argument("--phi", default=None, choices=("linear", "semiconvex"),
                    help="singular-value potential (semiconvex selects ct_scvx)")
    sp.add_argument("--epsilon", type=float, default=None,
                    help="semiconvexity scale (default per task)")
    sp.add_argument("--delta", type=float, default=0.99)
    sp.add_argument("--iters", type=int, default=3000)
    sp.add_argument("--step-safety", type=float, default=0.98)
    sp.add_argument("--power-iters", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--record-every", type=int, default=10)
    sp.add_argument("--atoms-k", type=int, default=9, help="atoms on the output sheet")
    sp.add_argument("--moment-constraint", default="auto", choices=("auto", "on", "off"))
    sp.add_argument("--input-offset", type=float, default=0.0,
                    help="subtract this value from the input after loading")
    sp.add_argument("--add-noise", type=float, default=0.0,
                    help="add Gaussian noise of this relative std to the input")
    sp.add_argument("--noise-seed", type=int, default=0)
    sp.add_argument("--truth", default=None, help="clean reference PNG for PSNR")
    sp.add_argument("--scene-json", default=None,
                    help="scene sidecar with ground-truth atoms for recovery scores")
    if task == "inpaint":
        sp.add_argument("--mask", default=None, help="PNG mask of known pixels (white)")
        sp.add_argument("--keep", type=float, default=None,
                        help="generate a random mask keeping this fraction")
        sp.add_argument("--mask-seed", type=int, default=0)
    if task == "deconv":
        sp.add_argument("--kernel-size", type=int, default=9)
        sp.add_argument("--kernel-sigma", type=float, default=1.8,
                        help="blur std in pixels (0.2 x kernel size by default)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="atomlift",
        description="Cartoon-texture decomposition and convolutional atom learning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for task in RUN_TASKS:
        sp = sub.add_parser(task, help=f"run the {task} task")
        _add_run_flags(sp, task)
    gp = sub.add_parser("gen", help="generate a synthetic ground-truth scene")
    gp.add_argument("--kind", default="texture", choices=("texture", "patches"))
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--out", required=True)
    sub.add_parser("selftest", help="run adjoint and prox oracle checks")
    return parser


def _resolve_variant(parser, args, task):
    variant = args.variant
    if args.phi == "semiconvex":
        if variant in ("ct_cvx", "ct_scvx"):
            variant = "ct_scvx"
        else:
            parser.error(f"--phi semiconvex is incompatible with --variant {variant}")
    if args.phi == "linear" and variant == "ct_scvx":
        parser.error("--phi linear is incompatible with --variant ct_scvx")
    if args.lambda_free:
        if task in ("denoise", "deconv"):
            parser.error(f"--lambda-free: the {task} task needs a quadratic data weight")
        if args.lam is not None:
            parser.error("--lambda-free conflicts with --lambda")
    if args.lam is not None and task in ("decompose", "inpaint"):
        parser.error(f"--lambda has no effect for the {task} task (hard data constraint)")
    return variant


def _run_task(parser, args, task):
    variant = _resolve_variant(parser, args, task)
    f0 = read_png(args.input)
    if args.input_offset:
        f0 = f0 - args.input_offset
    if args.add_noise:
        f0 = harness.add_noise(f0, args.add_noise, seed=args.noise_seed)

    mask = None
    kernel = None
    keep = None
    if task == "inpaint":
        if args.mask is not None:
            mask = read_png(args.mask) > 0.5
        elif args.keep is not None:
            keep = args.keep
            if not 0.0 <= keep <= 1.0:
                parser.error("--keep must lie in [0, 1]")
            mask = harness.gen_mask(f0.shape, keep, seed=args.mask_seed)
        else:
            parser.error("inpaint needs --mask or --keep")
    if task == "deconv":
        if args.kernel_size < 1 or args.kernel_size % 2 == 0:
            parser.error("--kernel-size must be odd and positive")
        kernel = gauss_kernel(args.kernel_size, args.kernel_sigma)

    lam = args.lam if args.lam is not None else 15.0
    moment = None if args.moment_constraint == "auto" else (args.moment_constraint == "on")
    try:
        problem = build_problem(
            task,
            variant,
            f0,
            mask=mask,
            kernel=kernel,
            lam=lam,
            mu=args.mu,
            nu=args.nu,
            epsilon=args.epsilon if variant == "ct_scvx" else None,
            delta=args.delta,
            n=args.n,
            eta=args.eta,
            iters=args.iters,
            step_safety=args.step_safety,
            power_iters=args.power_iters,
            seed=args.seed,
            record_every=args.record_every,
            moment_constraint=moment,
        )
    except ValueError as exc:
        parser.error(str(exc))

    t0 = time.perf_counter()
    u, texture, C, hist = pdhg_solve(problem)
    wall = time.perf_counter() - t0

    os.makedirs(args.out, exist_ok=True)
    pairs = atoms_from_tensor(C, args.atoms_k)
    atoms = [a for a, _ in pairs]
    outputs = {
        "recon": "recon.png",
        "cartoon": "cartoon.png",
        "texture": "texture.png",
        "atoms": "atoms.png",
        "report": "report.json",
    }
    write_png(os.path.join(args.out, outputs["recon"]), u)
    write_png(os.path.join(args.out, outputs["cartoon"]), u - texture)
    write_png(os.path.join(args.out, outputs["texture"]), rescale_unit(texture))
    write_png(os.path.join(args.out, outputs["atoms"]), atom_sheet(atoms))

    psnr_val = None
    if args.truth is not None:
        psnr_val = harness.psnr(read_png(args.truth), u)
    recovery = None
    if args.scene_json is not None:
        with open(args.scene_json) as fh:
            sidecar = json.load(fh)
        true_atoms = [np.asarray(a) for a in sidecar["true_atoms"]]
        recovery = [harness.atom_recovery(ta, atoms) for ta in true_atoms]

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "task": task,
        "variant": variant,
        "parameters": {
            "lam": None if task in ("decompose", "inpaint") else lam,
            "mu": args.mu,
            "nu": problem.params.nu,
            "phi": problem.params.phi.kind,
            "epsilon": problem.params.phi.epsilon,
            "delta": problem.params.phi.delta,
            "n": args.n,
            "eta": args.eta,
            "alpha0": float(np.sqrt(2.0)),
            "alpha1": 1.0,
            "iters": args.iters,
            "step_safety": args.step_safety,
            "power_iters": args.power_iters,
            "seed": args.seed,
            "moment_constraint": problem.moment_constraint,
            "keep": keep,
            "kernel_size": getattr(args, "kernel_size", None),
            "kernel_sigma": getattr(args, "kernel_sigma", None),
            "add_noise": args.add_noise,
            "noise_seed": args.noise_seed,
            "input_offset": args.input_offset,
            "atoms_k": args.atoms_k,
        },
        "iterations": args.iters,
        "final_objective": hist.energy[-1] if hist.energy.size else None,
        "fixed_point_residual": hist.residual[-1] if hist.residual.size else None,
        "op_norm": hist.op_norm,
        "feasibility": {
            "p_excess": hist.p_excess,
            "q_excess": hist.q_excess,
            "r_excess": hist.r_excess,
            "moment_rel": hist.moment_rel,
            "data_residual": hist.data_residual,
        },
        "psnr": psnr_val,
        "atom_recovery": recovery,
        "singular_values": [s for _, s in pairs],
        "wall_time_s": wall,
        "outputs": outputs,
    }
    with open(os.path.join(args.out, outputs["report"]), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{task}/{variant}: objective={report['final_objective']:.6g}"
          + (f" psnr={psnr_val:.2f}" if psnr_val is not None else ""))
    return 0


def _run_gen(args):
    scene = (harness.gen_texture_scene if args.kind == "texture" else harness.gen_patches_scene)(
        seed=args.seed
    )
    paths = harness.export_scene(scene, args.out)
    print("wrote " + ", ".join(sorted(paths.values())))
    return 0


def _selftest():
    from .grid import coeff_grid, inner
    from .operators import (
        SYM_WEIGHTS,
        blur,
        blur_adjoint,
        divergence,
        gradient,
        lift_adjoint,
        lift_forward,
        moments,
        moments_adjoint,
        sym_jacobian,
        sym_jacobian_adjoint,
    )
    from .prox import (
        Potential,
        project_inpaint,
        project_linf_l2,
        prox_conj_l2_data,
        prox_l2_data,
        prox_nuclear_matrix,
        prox_scalar_phi,
    )

    rng = np.random.default_rng(2024)
    failures = []

    def check(name, ok):
        print(("ok" if ok else "FAIL") + f": {name}")
        if not ok:
            failures.append(name)

    grid = coeff_grid(30, 33, 6, 3)
    kern = gauss_kernel(9, 1.8)
    pairs = {
        "lifting K/K*": (
            lambda x: lift_forward(x, grid), lambda y: lift_adjoint(y, grid),
            grid.tensor_shape, (30, 33), None),
        "gradient/adjoint": (
            gradient, lambda y: -divergence(y), (30, 33), (30, 33, 2), None),
        "sym jacobian/adjoint": (
            sym_jacobian, sym_jacobian_adjoint, (30, 33, 2), (30, 33, 3), SYM_WEIGHTS),
        "moments M/M*": (
            moments, lambda y: moments_adjoint(y, 6), grid.tensor_shape,
            (grid.Nc, grid.Mc, 3), None),
        "blur A/A*": (
            lambda x: blur(x, kern), lambda y: blur_adjoint(y, kern), (30, 33), (30, 33), None),
    }
    for name, (fwd, adj, xshape, yshape, w) in pairs.items():
        worst = 0.0
        for _ in range(20):
            x = rng.standard_normal(xshape)
            y = rng.standard_normal(yshape)
            fx = fwd(x)
            lhs = float((fx * y * w).sum()) if w is not None else inner(fx, y)
            rhs = inner(x, adj(y))
            worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-12))
        check(f"{name} adjoint identity (rel err {worst:.1e})", worst <= 1e-10)

    # scalar prox against a dense grid-search oracle
    worst = 0.0
    for _ in range(40):
        x0 = rng.uniform(0, 2.5)
        if rng.uniform() < 0.5:
            phi = Potential("linear")
            tr = rng.uniform(0.01, 1.5)
        else:
            phi = Potential("semiconvex", epsilon=rng.uniform(0.1, 2.5), delta=0.99)
            tr = rng.uniform(0.05, 0.95) * phi.max_tau_rho()
        xs = np.linspace(0.0, x0 + 1.0, 200001)
        vals = (xs - x0) ** 2 / (2.0 * tr) + phi.value(xs)
        worst = max(worst, abs(prox_scalar_phi(x0, tr, phi) - xs[np.argmin(vals)]))
    check(f"scalar prox vs grid search (err {worst:.1e})", worst <= 1e-4)

    # soft-thresholding identity of the nuclear prox
    B = rng.standard_normal((8, 5))
    s_in = np.linalg.svd(B, compute_uv=False)
    s_out = np.linalg.svd(prox_nuclear_matrix(B, 0.3, Potential("linear")), compute_uv=False)
    err = np.abs(s_out - np.maximum(s_in - 0.3, 0.0)).max()
    check(f"nuclear prox soft-thresholds singular values (err {err:.1e})", err <= 1e-10)

    # Moreau identity of the conjugate data prox
    f0 = rng.standard_normal((9, 9))
    d0 = rng.standard_normal((9, 9))
    sig, lam = 0.7, 2.3
    delta = np.abs(
        prox_conj_l2_data(d0, f0, sig, lam) - (d0 - sig * prox_l2_data(d0 / sig, f0, lam / sig))
    ).max()
    check(f"conjugate data prox satisfies Moreau identity (err {delta:.1e})", delta <= 1e-12)

    # projections idempotent
    z = rng.standard_normal((12, 12, 2)) * 3
    pz = project_linf_l2(z, 0.8)
    check("ball projection idempotent",
          np.abs(project_linf_l2(pz, 0.8) - pz).max() <= 1e-14)
    m = rng.uniform(size=(12, 12)) > 0.5
    pi = project_inpaint(z[:, :, 0], f0[:3, :3].repeat(4, 0).repeat(4, 1), m)
    check("inpaint projection idempotent",
          np.abs(project_inpaint(pi, f0[:3, :3].repeat(4, 0).repeat(4, 1), m) - pi).max() == 0.0)

    return 1 if failures else 0


def run(argv=None):
    """Parse argv and execute; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        if args.command == "gen":
            return _run_gen(args)
        if args.command == "selftest":
            return _selftest()
        return _run_task(parser, args, args.command)
    except SystemExit as exc:  # parser.error inside handlers
        return exc.code if exc.code is not None else 2
    except DivergedError as exc:
        print(f"error: solver diverged: {exc}", file=sys.stderr)
        return 3


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
