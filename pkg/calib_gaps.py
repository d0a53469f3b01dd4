"""Calibration: PSNR gaps between variants on the patches scene."""
import numpy as np, time
import atomlift as al

scene = al.gen_patches_scene(seed=0)
truth = scene.image

def run(task, variant, f0, iters, **kw):
    t0 = time.time()
    prob = al.build_problem(task, variant, f0, record_every=200, iters=iters, **kw)
    u, tex, C, h = al.pdhg_solve(prob)
    return u, al.psnr(truth, u), time.time() - t0, h

# ---- inpainting, 30% kept
mask = al.gen_mask(truth.shape, 0.3, seed=11)
f0 = truth.copy()
print("== inpaint 30% ==", flush=True)
u, ps, dt, h = run("inpaint", "tgv", f0, 2000, mask=mask)
print(f"tgv: psnr={ps:.2f} ({dt:.0f}s)", flush=True)
best_cvx = -1
for mu in (-0.5, 0.0, 0.5, 1.0):
    u, ps, dt, h = run("inpaint", "ct_cvx", f0, 2000, mask=mask, mu=mu)
    best_cvx = max(best_cvx, ps)
    print(f"ct_cvx mu={mu}: psnr={ps:.2f} ({dt:.0f}s) mom_rel={h.moment_rel:.2e}", flush=True)
best_scvx = -1
for mu in (-0.5, 0.0, 0.5, 1.0):
    u, ps, dt, h = run("inpaint", "ct_scvx", f0, 2000, mask=mask, mu=mu, epsilon=0.1)
    best_scvx = max(best_scvx, ps)
    print(f"ct_scvx mu={mu}: psnr={ps:.2f} ({dt:.0f}s)", flush=True)
print(f"GAPS: cvx-tgv={best_cvx - ps:.2f} (vs tgv) scvx-cvx={best_scvx - best_cvx:.2f}", flush=True)

# ---- denoising, sigma 0.1
print("== denoise 0.1 ==", flush=True)
noisy = al.add_noise(truth, 0.1, seed=21)
best_tgv = -1
for lam in (8.0, 15.0, 25.0):
    u, ps, dt, h = run("denoise", "tgv", noisy, 1500, lam=lam)
    best_tgv = max(best_tgv, ps)
    print(f"tgv lam={lam}: psnr={ps:.2f} ({dt:.0f}s)", flush=True)
best_cvx = -1
for lam in (8.0, 15.0, 25.0):
    for mu in (0.0, 0.5):
        u, ps, dt, h = run("denoise", "ct_cvx", noisy, 1500, lam=lam, mu=mu)
        best_cvx = max(best_cvx, ps)
        print(f"ct_cvx lam={lam} mu={mu}: psnr={ps:.2f} ({dt:.0f}s)", flush=True)
print(f"GAP denoise cvx-tgv = {best_cvx - best_tgv:.2f}", flush=True)

# ---- deconvolution: 9x9 gaussian + noise 0.05
print("== deconv ==", flush=True)
k = al.gauss_kernel(9, 1.8)
blurred = al.add_noise(al.blur(truth, k), 0.05, seed=31)
best_tgv = -1
for lam in (10.0, 20.0, 40.0):
    u, ps, dt, h = run("deconv", "tgv", blurred, 1500, lam=lam, kernel=k)
    best_tgv = max(best_tgv, ps)
    print(f"tgv lam={lam}: psnr={ps:.2f} ({dt:.0f}s)", flush=True)
best_cvx = -1
for lam in (10.0, 20.0, 40.0):
    for mu in (0.0, 0.5):
        u, ps, dt, h = run("deconv", "ct_cvx", blurred, 1500, lam=lam, mu=mu, kernel=k)
        best_cvx = max(best_cvx, ps)
        print(f"ct_cvx lam={lam} mu={mu}: psnr={ps:.2f} ({dt:.0f}s)", flush=True)
print(f"GAP deconv cvx-tgv = {best_cvx - best_tgv:.2f}", flush=True)
