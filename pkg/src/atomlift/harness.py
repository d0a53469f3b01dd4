"""Synthetic ground-truth scenes, corruption models and quality metrics.

Scenes are 120x120 images in four 60x60 quadrants.  Each textured
quadrant carries a 45x45 island of 3x3 whole atom tiles placed on the
stride lattice (admissible offsets are a*3 - 14, so island starts are
congruent to 1 mod 3).  Islands of different quadrants sit more than
one atom extent apart, so no single 15x15 stamp can touch two islands:
the texture is exactly representable with the recorded zero-mean atoms
and the sparsity norm cannot profit from stamps that blend neighboring
atoms.  This keeps the decomposition tests true oracles.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .io_png import write_png

__all__ = [
    "SCENE_SIZE",
    "ATOM_SIZE",
    "REGION_EDGE",
    "BACKGROUND",
    "SyntheticScene",
    "atom_bank",
    "tile_atom",
    "gen_texture_scene",
    "gen_patches_scene",
    "add_noise",
    "gen_mask",
    "psnr",
    "atom_recovery",
    "export_scene",
]

SCENE_SIZE = 120
ATOM_SIZE = 15
REGION_EDGE = 60          # first row/col of the second quadrant
ISLAND_STARTS = (1, 64)   # island origins per axis, on the stride lattice
ISLAND_TILES = 3          # 3x3 whole atoms per island
BACKGROUND = 0.5
PSNR_CAP = 300.0


@dataclass(frozen=True)
class SyntheticScene:
    kind: str
    seed: int
    image: np.ndarray
    cartoon: np.ndarray
    texture: np.ndarray
    true_atoms: tuple


def _lock(arr):
    arr = np.asarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


def atom_bank():
    """Four deterministic zero-mean 15x15 atoms with distinct amplitudes.

    Vertical stripes, horizontal stripes, a fine checker (period 3) and a
    coarse dot grid (period 5).  The family is mutually orthogonal under
    every cyclic 2-D shift, so the recovered singular directions separate
    cleanly; each atom sums to zero exactly.
    """
    n = ATOM_SIZE
    t3 = np.array([1.0, 0.0, -1.0])[np.arange(n) % 3]
    t5 = np.array([2.0, 2.0, -3.0, 2.0, -3.0])[np.arange(n) % 5]
    vert = 0.40 * np.tile(t3[None, :], (n, 1))
    horz = 0.34 * np.tile(t3[:, None], (1, n))
    check = 0.30 * np.outer(t3, t3)
    dots = (0.40 / 9.0) * np.outer(t5, t5)
    return [_lock(a) for a in (vert, horz, check, dots)]


def tile_atom(atom, rows, cols=None):
    """Cyclic tiling of an atom in phase with the stride grid (offset 1)."""
    if cols is None:
        cols = rows
    n = atom.shape[0]
    ri = (np.arange(rows) - 1) % n
    ci = (np.arange(cols) - 1) % n
    return atom[np.ix_(ri, ci)]


def _blocks():
    e = REGION_EDGE
    s = SCENE_SIZE
    return [
        (slice(0, e), slice(0, e)),
        (slice(0, e), slice(e, s)),
        (slice(e, s), slice(0, e)),
        (slice(e, s), slice(e, s)),
    ]


def _islands():
    ext = ISLAND_TILES * ATOM_SIZE
    spans = [slice(start, start + ext) for start in ISLAND_STARTS]
    return [
        (spans[0], spans[0]),
        (spans[0], spans[1]),
        (spans[1], spans[0]),
        (spans[1], spans[1]),
    ]


def _stamp_island(texture, island, atom):
    rows = np.arange(island[0].start, island[0].stop)
    cols = np.arange(island[1].start, island[1].stop)
    n = atom.shape[0]
    texture[np.ix_(rows, cols)] = atom[np.ix_((rows - rows[0]) % n, (cols - cols[0]) % n)]


def gen_texture_scene(seed=0):
    """Pure-texture scene: one periodically tiled island per quadrant.

    The recorded ground-truth atoms are zero-mean, so every 15x15 tile of
    an island equals its quadrant's atom plus the tile mean (the flat
    background).  The cartoon part carries no structure.
    """
    rng = np.random.default_rng(seed)
    atoms = atom_bank()
    order = rng.permutation(len(atoms))
    texture = np.zeros((SCENE_SIZE, SCENE_SIZE))
    for island, k in zip(_islands(), order):
        _stamp_island(texture, island, atoms[k])
    cartoon = np.full((SCENE_SIZE, SCENE_SIZE), BACKGROUND)
    image = np.clip(cartoon + texture, 0.0, 1.0)
    return SyntheticScene(
        kind="texture",
        seed=int(seed),
        image=_lock(image),
        cartoon=_lock(cartoon),
        texture=_lock(texture),
        true_atoms=tuple(atoms[k] for k in order),
    )


def _disk(block, center, radius):
    rows = np.arange(block[0].start, block[0].stop)
    cols = np.arange(block[1].start, block[1].stop)
    ii, jj = np.meshgrid(rows, cols, indexing="ij")
    return (ii - center[0]) ** 2 + (jj - center[1]) ** 2 <= radius ** 2


def gen_patches_scene(seed=0):
    """Mixed scene: two textured quadrants, two cartoon quadrants.

    Cartoon quadrants are linear ramps with one hard-edged constant disk
    each (no blending, so disk pixels take exactly one value on top of
    the ramp).  Texture quadrants follow :func:`gen_texture_scene`.
    """
    rng = np.random.default_rng(seed)
    atoms = atom_bank()
    pick = rng.permutation(len(atoms))[:2]
    blocks = _blocks()
    islands = _islands()
    cart_blocks = [blocks[1], blocks[2]]

    texture = np.zeros((SCENE_SIZE, SCENE_SIZE))
    for island, k in zip([islands[0], islands[3]], pick):
        _stamp_island(texture, island, atoms[k])

    cartoon = np.full((SCENE_SIZE, SCENE_SIZE), BACKGROUND)
    b = cart_blocks[0]
    w = b[1].stop - b[1].start
    ramp = 0.25 + 0.5 * (np.arange(w) / max(w - 1, 1))
    cartoon[b] = np.tile(ramp[None, :], (b[0].stop - b[0].start, 1))
    disk = _disk(b, ((b[0].start + b[0].stop) // 2, (b[1].start + b[1].stop) // 2), 18)
    cartoon[b] = np.where(disk, 0.85, cartoon[b])

    b = cart_blocks[1]
    h = b[0].stop - b[0].start
    ramp = 0.7 - 0.45 * (np.arange(h) / max(h - 1, 1))
    cartoon[b] = np.tile(ramp[:, None], (1, b[1].stop - b[1].start))
    disk = _disk(b, ((b[0].start + b[0].stop) // 2, (b[1].start + b[1].stop) // 2), 12)
    cartoon[b] = np.where(disk, 0.15, cartoon[b])

    image = np.clip(cartoon + texture, 0.0, 1.0)
    return SyntheticScene(
        kind="patches",
        seed=int(seed),
        image=_lock(image),
        cartoon=_lock(cartoon),
        texture=_lock(texture),
        true_atoms=tuple(atoms[k] for k in pick),
    )


def add_noise(img, sigma_rel, seed):
    """Add i.i.d. zero-mean Gaussian noise, std sigma_rel x unit range.

    Uses numpy's PCG64 generator seeded with ``seed``; the output is not
    clamped (the data terms handle the range).
    """
    if sigma_rel < 0:
        raise ValueError("sigma_rel must be >= 0")
    img = np.asarray(img, dtype=np.float64)
    if sigma_rel == 0:
        return img.copy()
    rng = np.random.default_rng(seed)
    return img + sigma_rel * rng.standard_normal(img.shape)


def gen_mask(shape, keep_fraction, seed):
    """Uniform random boolean mask with exactly round(frac * size) True cells."""
    if not 0.0 <= keep_fraction <= 1.0:
        raise ValueError("keep_fraction must lie in [0, 1]")
    total = int(np.prod(shape))
    k = int(round(keep_fraction * total))
    flat = np.zeros(total, dtype=bool)
    if k > 0:
        rng = np.random.default_rng(seed)
        flat[rng.choice(total, size=k, replace=False)] = True
    return flat.reshape(shape)


def psnr(ref, test):
    """Peak signal-to-noise ratio in dB against peak 1.0, capped at 300 dB."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    mse = float(np.mean((ref - test) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP)


def atom_recovery(true_atom, learned):
    """Best normalized cross-correlation against a list of learned atoms.

    Maximizes |<a, shift(b)>| / (|a| |b|) over learned atoms b, all cyclic
    2-D shifts and both signs; 1 means recovery up to shift/sign/scale.
    """
    a = np.asarray(true_atom, dtype=np.float64)
    na = np.linalg.norm(a)
    if na == 0:
        return 0.0
    fa = np.fft.fft2(a)
    best = 0.0
    for b in learned:
        b = np.asarray(b, dtype=np.float64)
        if b.shape != a.shape:
            raise ValueError("learned atom size differs from the true atom")
        nb = np.linalg.norm(b)
        if nb == 0:
            continue
        corr = np.fft.ifft2(fa * np.conj(np.fft.fft2(b))).real
        best = max(best, float(np.abs(corr).max()) / (na * nb))
    return min(best, 1.0)


def export_scene(scene, outdir):
    """Write scene PNGs plus a JSON sidecar with the ground-truth atoms.

    The texture part is zero-mean, so its PNG is stored shifted by the
    scene background; the sidecar records the shift.
    """
    os.makedirs(outdir, exist_ok=True)
    paths = {
        "image": os.path.join(outdir, "scene.png"),
        "cartoon": os.path.join(outdir, "scene_cartoon.png"),
        "texture": os.path.join(outdir, "scene_texture.png"),
        "json": os.path.join(outdir, "scene.json"),
    }
    write_png(paths["image"], scene.image)
    write_png(paths["cartoon"], scene.cartoon)
    write_png(paths["texture"], scene.texture + BACKGROUND)
    sidecar = {
        "schema_version": 1,
        "kind": scene.kind,
        "seed": scene.seed,
        "parameters": {
            "size": SCENE_SIZE,
            "atom_size": ATOM_SIZE,
            "region_edge": REGION_EDGE,
            "island_starts": list(ISLAND_STARTS),
            "island_tiles": ISLAND_TILES,
            "background": BACKGROUND,
            "texture_png_offset": BACKGROUND,
        },
        "true_atoms": [a.tolist() for a in scene.true_atoms],
    }
    with open(paths["json"], "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
    return paths
