"""Inverse transform: displacement-field inversion, compensation, metrics.

The compensation display image is the input pre-warped with the inverse
geometric map and pre-amplified against the luminance loss, so that
viewing it through the deficit reproduces the original scene wherever the
loss is below the gain cap and the geometry inverted cleanly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import backend
from .model import (
    DeficitModel,
    DisplacementGrid,
    atomic_write_bytes,
    displacement_field,
    lipschitz_estimate,
    loss_field,
)
from .raster import Image, ParameterError, pixel_centers, simulate

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 50
REPORT_MASK_MAX_LOSS = 0.5


@dataclass
class InversionResult:
    """Inverse displacement grid plus convergence diagnostics.

    ``converged`` is False when max_iter ran out with updates still at or
    above tol; the grid then holds the last iterate and ``residual`` the
    achieved update size (never a silent success).
    """

    grid: DisplacementGrid
    converged: bool
    iterations: int
    residual: float
    history: list[float]


@dataclass
class CompensateResult:
    image: Image
    converged: bool
    iterations: int
    residual: float
    max_geom_residual: float


@dataclass
class RoundtripReport:
    """Recovery metrics; masked values restrict to pixels with loss <= mask_gamma_max."""

    psnr_full: float
    psnr_masked: float
    psnr_uncompensated: float
    max_geom_residual: float
    iterations_used: int
    lipschitz: float
    converged: bool
    mask_gamma_max: float = REPORT_MASK_MAX_LOSS

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def save_report(report: RoundtripReport, path) -> None:
    atomic_write_bytes(path, report.to_json().encode("utf-8"))


def invert_field(
    fwd: DisplacementGrid, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> InversionResult:
    """Invert a forward displacement grid by fixed-point iteration.

    Solves E(q) = -D(q + E(q)) (bilinear interpolation of D off-lattice),
    starting from E = 0, so that q + E(q) approximates S^-1(q) for
    S(p) = p + D(p). Converges geometrically whenever the displacement
    Jacobian norm stays below 1.
    """
    if tol <= 0.0:
        raise ParameterError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ParameterError(f"max_iter must be >= 1, got {max_iter}")
    eu, ev, iterations, converged, history = backend.invert_fixed_point(
        fwd.du, fwd.dv, tol, max_iter
    )
    return InversionResult(
        grid=DisplacementGrid(grid=fwd.grid, du=eu, dv=ev),
        converged=converged,
        iterations=iterations,
        residual=history[-1],
        history=history,
    )


def composition_residual(fwd: DisplacementGrid, inv: DisplacementGrid) -> float:
    """sup over lattice points of |S(S^-1(q)) - q|, composing the sampled fields."""
    return _composition_residual_arrays(fwd.du, fwd.dv, inv.du, inv.dv)


def _composition_residual_arrays(du, dv, eu, ev) -> float:
    if not (du.any() or dv.any() or eu.any() or ev.any()):
        return 0.0
    H, W = du.shape
    xs = np.broadcast_to(np.arange(W, dtype=np.float64)[None, :], (H, W)) + eu * float(W)
    ys = np.broadcast_to(np.arange(H, dtype=np.float64)[:, None], (H, W)) + ev * float(H)
    fwd_at = backend.gather_bilinear(np.stack([du, dv], axis=-1), xs, ys)
    ru = eu + fwd_at[:, :, 0]
    rv = ev + fwd_at[:, :, 1]
    return float(np.sqrt((ru * ru + rv * rv).max()))


def compensate(
    m: DeficitModel,
    img: Image,
    gamma_cap: float = 0.9,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int = 1,
) -> CompensateResult:
    """Pre-distorted display image that cancels the modeled deficit.

    comp(q) = sample(img, q + E(q)) / (1 - min(loss(q + E(q)), gamma_cap))
    clamped to [0, 1], with E the inverse displacement computed on the
    image's own pixel lattice. Non-convergent inversion is flagged on the
    result, and the image is still produced from the last iterate.
    """
    if not 0.0 < gamma_cap < 1.0:
        raise ParameterError(f"gamma_cap must be in (0, 1), got {gamma_cap}")
    H, W = img.height, img.width
    U, V = pixel_centers(W, H)
    du, dv = displacement_field(m, U, V)
    eu, ev, iterations, converged, history = backend.invert_fixed_point(du, dv, tol, max_iter)
    xs = np.broadcast_to(np.arange(W, dtype=np.float64)[None, :], (H, W)) + eu * float(W)
    ys = np.broadcast_to(np.arange(H, dtype=np.float64)[:, None], (H, W)) + ev * float(H)
    src_loss = loss_field(m, U + eu, V + ev)
    atten = 1.0 - np.minimum(src_loss, gamma_cap)
    samp = backend.gather_bilinear(img.data, xs, ys, threads=threads)
    out = samp / atten[:, :, None]
    np.clip(out, 0.0, 1.0, out=out)
    geom = _composition_residual_arrays(du, dv, eu, ev)
    return CompensateResult(
        image=Image(out),
        converged=converged,
        iterations=iterations,
        residual=history[-1],
        max_geom_residual=geom,
    )


def psnr(a: Image, b: Image, mask: Image | np.ndarray | None = None) -> float:
    """10 log10(1 / MSE) over unmasked pixels, capped at 99.0 dB.

    Values are in [0, 1]; identical inputs return the cap. A mask (binary,
    single channel) restricts the mean to its nonzero pixels across all
    channels.
    """
    if a.data.shape != b.data.shape:
        raise ParameterError(f"image shapes differ: {a.data.shape} vs {b.data.shape}")
    diff = a.data - b.data
    if mask is not None:
        sel = mask.data[:, :, 0] if isinstance(mask, Image) else np.asarray(mask)
        if sel.shape != a.data.shape[:2]:
            raise ParameterError("mask shape must match the images")
        sel = sel != 0
        if not sel.any():
            raise ParameterError("mask selects no pixels")
        diff = diff[sel]
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return 99.0
    return min(99.0, 10.0 * np.log10(1.0 / mse))


def roundtrip_report(
    m: DeficitModel,
    img: Image,
    gamma_cap: float = 0.9,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int = 1,
) -> RoundtripReport:
    """Quantify compensation quality: simulate(compensate(img)) vs img.

    The masked PSNRs exclude pixels losing more than half their luminance
    (recovery there is limited by display range, not by the transform).
    """
    sim = simulate(m, img, threads=threads)
    comp = compensate(m, img, gamma_cap=gamma_cap, tol=tol, max_iter=max_iter, threads=threads)
    rec = simulate(m, comp.image, threads=threads)
    U, V = pixel_centers(img.width, img.height)
    mask = loss_field(m, U, V) <= REPORT_MASK_MAX_LOSS
    return RoundtripReport(
        psnr_full=psnr(rec, img),
        psnr_masked=psnr(rec, img, mask),
        psnr_uncompensated=psnr(sim, img, mask),
        max_geom_residual=comp.max_geom_residual,
        iterations_used=comp.iterations,
        lipschitz=lipschitz_estimate(m),
        converged=comp.converged,
    )
