"""Raster layer: image type, Amsler chart synthesis, forward simulation.

Images are float64 arrays of shape (H, W, C), values in [0, 1], C = 1 or
3. Pixel (x, y) corresponds to the visual-field point
((x + 0.5)/W, (y + 0.5)/H); that cell-center convention makes empty-model
warps sample exactly at pixel centers, so the identity model reproduces
the input bit for bit.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

from . import backend
from .model import (
    DeficitModel,
    DisplacementGrid,
    Point2,
    atomic_write_bytes,
    displacement_field,
    loss_field,
    sample_displacement,
)


class ParameterError(ValueError):
    """Invalid raster/operation parameters (dimensions, ranges, masks)."""


@dataclass(frozen=True)
class Image:
    """Float raster over the visual field; immutable by convention."""

    data: np.ndarray  # (H, W, C) float64 in [0, 1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @staticmethod
    def from_array(arr: np.ndarray) -> "Image":
        a = np.asarray(arr, dtype=np.float64)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.ndim != 3 or a.shape[2] not in (1, 3):
            raise ParameterError(f"expected (H, W) or (H, W, 1|3) array, got {arr.shape}")
        if not np.isfinite(a).all() or a.min() < 0.0 or a.max() > 1.0:
            raise ParameterError("image samples must be finite and in [0, 1]")
        return Image(np.ascontiguousarray(a))


def pixel_centers(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Visual-field coordinates of every pixel center: (U, V), each (H, W)."""
    u = (np.arange(width, dtype=np.float64) + 0.5) / float(width)
    v = (np.arange(height, dtype=np.float64) + 0.5) / float(height)
    U, V = np.meshgrid(u, v)
    return U, V


def pixel_to_field(x: int, y: int, width: int, height: int) -> Point2:
    return Point2((x + 0.5) / width, (y + 0.5) / height)


# ---------------------------------------------------------------------------
# Amsler chart


def amsler_grid(size_px: int, spacing_px: int, line_px: int) -> Image:
    """White chart with black grid lines and a central fixation dot.

    Lines are centered on every multiple of ``spacing_px`` (including the
    image edges) and widened to ``line_px``; the fixation dot has diameter
    2 * line_px.
    """
    if spacing_px < 2 or size_px < 2 * spacing_px:
        raise ParameterError("size_px must be at least 2 * spacing_px")
    if not 1 <= line_px < spacing_px:
        raise ParameterError("line_px must satisfy 1 <= line_px < spacing_px")
    r = np.arange(size_px) % spacing_px
    on = (r < (line_px + 1) // 2) | (spacing_px - r <= line_px // 2)
    data = np.ones((size_px, size_px, 1))
    data[on, :, 0] = 0.0
    data[:, on, 0] = 0.0
    c = (size_px - 1) / 2.0
    yy, xx = np.ogrid[:size_px, :size_px]
    dot = (xx - c) ** 2 + (yy - c) ** 2 <= float(line_px) ** 2
    data[dot, 0] = 0.0
    return Image(data)


# ---------------------------------------------------------------------------
# sampling and simulation


def sample_bilinear(img: Image, p: Point2):
    """Bilinear sample at a visual-field point, border-clamped.

    Returns a float for single-channel images, a tuple per channel
    otherwise.
    """
    xs = np.array([[p[0] * img.width - 0.5]])
    ys = np.array([[p[1] * img.height - 0.5]])
    vals = backend.gather_bilinear(img.data, xs, ys)[0, 0]
    if img.channels == 1:
        return float(vals[0])
    return tuple(float(v) for v in vals)


def simulate(m: DeficitModel, img: Image, threads: int = 1) -> Image:
    """Render the simulated percept of ``img`` under the deficit model.

    Each output pixel p backward-samples the scene at S(p) = p + D(p) and
    is attenuated by the local luminance loss:
    out(p) = sample(img, S(p)) * (1 - loss(p)). The empty model returns
    the input bit-exactly.
    """
    H, W = img.height, img.width
    U, V = pixel_centers(W, H)
    du, dv = displacement_field(m, U, V)
    loss = loss_field(m, U, V)
    # displacement applied in pixel units keeps zero-displacement exact
    xs = np.broadcast_to(np.arange(W, dtype=np.float64)[None, :], (H, W)) + du * float(W)
    ys = np.broadcast_to(np.arange(H, dtype=np.float64)[:, None], (H, W)) + dv * float(H)
    warped = backend.gather_bilinear(img.data, xs, ys, threads=threads)
    out = warped * (1.0 - loss)[:, :, None]
    np.clip(out, 0.0, 1.0, out=out)
    return Image(out)


def region_mask(m: DeficitModel, cutoff: float, width: int, height: int) -> Image:
    """Binary mask of pixels whose luminance loss reaches the cutoff."""
    if not 0.0 < cutoff < 1.0:
        raise ParameterError(f"cutoff must be in (0, 1), got {cutoff}")
    U, V = pixel_centers(width, height)
    loss = loss_field(m, U, V)
    return Image((loss >= cutoff).astype(np.float64)[:, :, None])


def field_export(m: DeficitModel, grid: int) -> DisplacementGrid:
    """Sample the total displacement on a grid x grid cell-center lattice."""
    return sample_displacement(m, grid)


# ---------------------------------------------------------------------------
# PNG / CSV encoding


def to_png_bytes(img: Image) -> bytes:
    """8-bit PNG encoding; round(v * 255), no ancillary chunks (deterministic)."""
    q = np.rint(img.data * 255.0)
    q = np.clip(q, 0.0, 255.0).astype(np.uint8)
    if img.channels == 1:
        pil = PILImage.fromarray(q[:, :, 0], mode="L")
    else:
        pil = PILImage.fromarray(q, mode="RGB")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def from_png_bytes(data: bytes) -> Image:
    pil = PILImage.open(io.BytesIO(data))
    if pil.mode != "L":
        pil = pil.convert("RGB")
    arr = np.asarray(pil, dtype=np.float64) / 255.0
    return Image.from_array(arr)


def save_png(img: Image, path) -> None:
    atomic_write_bytes(path, to_png_bytes(img))


def load_png(path) -> Image:
    with open(path, "rb") as f:
        return from_png_bytes(f.read())


def field_to_csv(grid: DisplacementGrid) -> str:
    """CSV export (header u,v,du,dv), row-major lattice order."""
    lines = ["u,v,du,dv"]
    g = grid.grid
    for j in range(g):
        v = (j + 0.5) / g
        for i in range(g):
            u = (i + 0.5) / g
            lines.append(f"{u!r},{v!r},{float(grid.du[j, i])!r},{float(grid.dv[j, i])!r}")
    return "\n".join(lines) + "\n"


def save_field_csv(grid: DisplacementGrid, path) -> None:
    atomic_write_bytes(path, field_to_csv(grid).encode("utf-8"))
