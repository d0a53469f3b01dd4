"""Grayscale 8-bit PNG input/output mapped to [0, 1] float images."""

from __future__ import annotations

import numpy as np
from PIL import Image as PILImage

__all__ = ["read_png", "write_png", "rescale_unit", "atom_sheet"]


def read_png(path):
    """Load a PNG as a float64 grayscale image with values in [0, 1]."""
    with PILImage.open(path) as img:
        arr = np.asarray(img.convert("L"), dtype=np.float64)
    return arr / 255.0


def write_png(path, arr):
    """Quantize a float image to 8-bit grayscale (values clipped to [0, 1])."""
    arr = np.clip(np.asarray(arr, dtype=np.float64), 0.0, 1.0)
    data = np.round(arr * 255.0).astype(np.uint8)
    PILImage.fromarray(data, mode="L").save(path)


def rescale_unit(arr):
    """Affine map of an array onto [0, 1]; flat arrays map to constant 0.5."""
    lo, hi = float(arr.min()), float(arr.max())
    if hi - lo < 1e-15:
        return np.full_like(arr, 0.5)
    return (arr - lo) / (hi - lo)


def atom_sheet(atoms, cols=3, sep=1):
    """Tile atoms row-major into one image, 1-pixel separators.

    Each atom is rescaled to [0, 1] independently so sign and scale do not
    hide structure; separators are rendered black.
    """
    if not atoms:
        raise ValueError("no atoms to render")
    n = atoms[0].shape[0]
    rows = (len(atoms) + cols - 1) // cols
    H = rows * n + (rows - 1) * sep
    W = cols * n + (cols - 1) * sep
    sheet = np.zeros((H, W))
    for idx, atom in enumerate(atoms):
        i, j = divmod(idx, cols)
        top, left = i * (n + sep), j * (n + sep)
        sheet[top:top + n, left:left + n] = rescale_unit(atom)
    return sheet
