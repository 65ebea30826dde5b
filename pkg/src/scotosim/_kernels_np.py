"""Pure-numpy fallback for the hot raster kernels.

Mirrors ``_kernels.pyx`` operation for operation: same clamping, same
expression order, no fused multiply-adds, so results are bit-identical to
the compiled extension.
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def gather_bilinear(src: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear gather from src (H, W, C) at continuous pixel coords.

    Coordinates are in pixel-index space (0 .. W-1 horizontally); points
    outside clamp to the border pixel. Returns xs.shape + (C,).
    """
    H, W, C = src.shape
    x = np.minimum(np.maximum(xs, 0.0), float(W - 1))
    y = np.minimum(np.maximum(ys, 0.0), float(H - 1))
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    x0i = x0.astype(np.intp)
    y0i = y0.astype(np.intp)
    x1i = np.minimum(x0i + 1, W - 1)
    y1i = np.minimum(y0i + 1, H - 1)
    out = np.empty(x.shape + (C,))
    for c in range(C):
        ch = src[:, :, c]
        v00 = ch[y0i, x0i]
        v01 = ch[y0i, x1i]
        v10 = ch[y1i, x0i]
        v11 = ch[y1i, x1i]
        top = v00 * (1.0 - fx) + v01 * fx
        bot = v10 * (1.0 - fx) + v11 * fx
        out[..., c] = top * (1.0 - fy) + bot * fy
    return out


def invert_fixed_point(du: np.ndarray, dv: np.ndarray, tol: float, max_iter: int):
    """Invert a displacement field by Jacobi fixed-point iteration.

    du/dv hold the forward displacement (normalized units) on an H x W
    cell-center lattice. Iterates E <- -D(q + E) with bilinear
    interpolation of D until the largest update norm drops below tol.

    Returns (eu, ev, iterations, converged, history) where history lists
    the per-iteration max update norms.
    """
    H, W = du.shape
    wf = float(W)
    hf = float(H)
    X = np.broadcast_to(np.arange(W, dtype=np.float64)[None, :], (H, W))
    Y = np.broadcast_to(np.arange(H, dtype=np.float64)[:, None], (H, W))
    field = None  # stacked lazily; iteration 1 never interpolates
    eu = np.zeros((H, W))
    ev = np.zeros((H, W))
    history: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if iterations == 1:
            # E0 = 0 lands on exact lattice points where the bilinear
            # gather returns the field values themselves
            new_eu = -du
            new_ev = -dv
        else:
            if field is None:
                field = np.stack([du, dv], axis=-1)
            xs = X + eu * wf
            ys = Y + ev * hf
            s = gather_bilinear(field, xs, ys)
            new_eu = -s[:, :, 0]
            new_ev = -s[:, :, 1]
        ddu = new_eu - eu
        ddv = new_ev - ev
        step_sq = ddu * ddu + ddv * ddv
        residual = float(np.sqrt(step_sq.max()))
        eu = new_eu
        ev = new_ev
        history.append(residual)
        if residual < tol:
            converged = True
            break
    return eu, ev, iterations, converged, history
