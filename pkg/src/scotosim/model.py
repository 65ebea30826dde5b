"""Parametric model of central vision loss over the normalized visual field.

A deficit model is a mixture of isotropic Gaussian kernels on the unit
square. Each kernel is one damage locus with center ``mu``, spread
``sigma``, luminance weight ``omega``, rotation angle ``theta_rad`` and a
radial-push amplitude ``psi_gain``. Writing ``w(p) = exp(-|p-mu|^2 /
(2 sigma^2))`` (unnormalized, peak 1 at the center), a kernel contributes

* luminance loss        ``omega * w(p)``                      (summed, clamped to [0,1])
* rotation displacement ``omega * w(p) * (R(theta) - I) (p - mu)``
* radial displacement   ``psi_gain * w(p) * (p - mu)``

The total geometric map ``S(p) = p + D(p)`` (D = rotation + radial
displacement) is a *backward* sampling map: the simulated percept at p
shows scene content from S(p). Far from every kernel center all
contributions vanish and S degrades to the identity.

Numerical note: scalar and array evaluations share one arithmetic
(operation order, and exp through numpy) so that rasterized pipelines,
the compiled kernels and per-pixel reference loops agree bit for bit.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class ModelFormatError(ValueError):
    """Raised for malformed model JSON (unknown/missing fields, bad types)."""


class Point2(NamedTuple):
    """Point on the normalized visual field (unit square, u right, v down)."""

    u: float
    v: float


class Vec2(NamedTuple):
    """Displacement in normalized visual-field units."""

    du: float
    dv: float


@dataclass(frozen=True)
class GaussianKernel:
    """One deficit locus.

    ``sigma`` is the standard deviation in visual-field units; ``omega``
    in [0,1] weights both the luminance loss and the rotational term;
    ``psi_gain`` >= 0 scales the radial push (values >= 1 break the
    contraction condition needed for guaranteed invertibility).
    """

    mu: Point2
    sigma: float
    omega: float
    theta_rad: float = 0.0
    psi_gain: float = 0.0


@dataclass(frozen=True)
class DeficitModel:
    """A set of Gaussian deficit kernels plus the default region cutoff.

    An empty kernel list is the healthy/identity model. ``lambda_`` is the
    default luminance-loss cutoff used by region queries (JSON key
    ``"lambda"``).
    """

    kernels: tuple[GaussianKernel, ...] = ()
    lambda_: float = 0.5
    version: int = 1


@dataclass(frozen=True)
class DisplacementGrid:
    """Displacement field sampled on a square lattice of cell centers.

    Lattice point (i, j) sits at ((i + 0.5)/grid, (j + 0.5)/grid); ``du``
    and ``dv`` hold the displacement components, shape (grid, grid) with
    axis 0 = v/rows.
    """

    grid: int
    du: np.ndarray
    dv: np.ndarray

    def __post_init__(self):
        if self.du.shape != (self.grid, self.grid) or self.dv.shape != (self.grid, self.grid):
            raise ValueError("displacement arrays must be (grid, grid)")


@dataclass
class ValidationResult:
    ok: bool
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    lipschitz: float | None = None


# ---------------------------------------------------------------------------
# point evaluation


def kernel_value(k: GaussianKernel, p: Point2) -> float:
    """Unnormalized Gaussian falloff e^{-|p-mu|^2/(2 sigma^2)}, 1 at the center."""
    dx = p[0] - k.mu[0]
    dy = p[1] - k.mu[1]
    return float(np.exp(-(dx * dx + dy * dy) / (2.0 * k.sigma * k.sigma)))


def luminance_loss(m: DeficitModel, p: Point2) -> float:
    """Fraction of luminance lost at p: clamp(sum_i omega_i w_i(p), 0, 1)."""
    acc = 0.0
    for k in m.kernels:
        acc += k.omega * kernel_value(k, p)
    return min(max(acc, 0.0), 1.0)


def in_region(m: DeficitModel, p: Point2, cutoff: float | None = None) -> bool:
    """True iff the luminance loss at p reaches the cutoff (loss >= cutoff)."""
    lam = m.lambda_ if cutoff is None else cutoff
    if not 0.0 < lam < 1.0:
        raise ValueError(f"cutoff must be in (0, 1), got {lam}")
    return luminance_loss(m, p) >= lam


def rotation_displacement(m: DeficitModel, p: Point2) -> Vec2:
    """Swirl displacement sum_i omega_i w_i(p) (R(theta_i) - I)(p - mu_i).

    Vanishes at each kernel center (zero offset) and far away (zero
    weight), so the induced map is a localized swirl around each locus.
    """
    du = 0.0
    dv = 0.0
    for k in m.kernels:
        if k.theta_rad == 0.0:
            continue
        dx = p[0] - k.mu[0]
        dy = p[1] - k.mu[1]
        w = float(np.exp(-(dx * dx + dy * dy) / (2.0 * k.sigma * k.sigma)))
        cw = k.omega * w
        a = math.cos(k.theta_rad) - 1.0
        s = math.sin(k.theta_rad)
        du += cw * (a * dx - s * dy)
        dv += cw * (s * dx + a * dy)
    return Vec2(du, dv)


def radial_displacement(m: DeficitModel, p: Point2) -> Vec2:
    """Radial push sum_i psi_gain_i w_i(p) (p - mu_i) away from each center."""
    du = 0.0
    dv = 0.0
    for k in m.kernels:
        if k.psi_gain == 0.0:
            continue
        dx = p[0] - k.mu[0]
        dy = p[1] - k.mu[1]
        w = float(np.exp(-(dx * dx + dy * dy) / (2.0 * k.sigma * k.sigma)))
        pw = k.psi_gain * w
        du += pw * dx
        dv += pw * dy
    return Vec2(du, dv)


def total_map(m: DeficitModel, p: Point2) -> Point2:
    """Backward sampling map S(p) = p + rotation + radial displacement."""
    r = rotation_displacement(m, p)
    q = radial_displacement(m, p)
    return Point2(p[0] + (r.du + q.du), p[1] + (r.dv + q.dv))


# ---------------------------------------------------------------------------
# array evaluation (one arithmetic with the scalar forms above)


def displacement_field(m: DeficitModel, U: np.ndarray, V: np.ndarray):
    """Total displacement D at the given coordinate arrays.

    Returns (DU, DV) float64 arrays of U's shape. Rotation and radial sums
    are accumulated separately (in kernel order) and added at the end,
    mirroring ``total_map``.
    """
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    rot_du = np.zeros(U.shape)
    rot_dv = np.zeros(U.shape)
    psi_du = np.zeros(U.shape)
    psi_dv = np.zeros(U.shape)
    for k in m.kernels:
        if k.theta_rad == 0.0 and k.psi_gain == 0.0:
            continue
        dx = U - k.mu[0]
        dy = V - k.mu[1]
        w = np.exp(-(dx * dx + dy * dy) / (2.0 * k.sigma * k.sigma))
        if k.theta_rad != 0.0:
            cw = k.omega * w
            a = math.cos(k.theta_rad) - 1.0
            s = math.sin(k.theta_rad)
            rot_du += cw * (a * dx - s * dy)
            rot_dv += cw * (s * dx + a * dy)
        if k.psi_gain != 0.0:
            pw = k.psi_gain * w
            psi_du += pw * dx
            psi_dv += pw * dy
    return rot_du + psi_du, rot_dv + psi_dv


def loss_field(m: DeficitModel, U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Luminance loss at the given coordinate arrays, clamped to [0,1]."""
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    acc = np.zeros(U.shape)
    for k in m.kernels:
        dx = U - k.mu[0]
        dy = V - k.mu[1]
        w = np.exp(-(dx * dx + dy * dy) / (2.0 * k.sigma * k.sigma))
        acc += k.omega * w
    return np.minimum(np.maximum(acc, 0.0), 1.0)


def lattice_coords(grid: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell-center lattice over the unit square: (U, V), each (grid, grid)."""
    c = (np.arange(grid, dtype=np.float64) + 0.5) / float(grid)
    return np.broadcast_to(c[None, :], (grid, grid)).copy(), np.broadcast_to(
        c[:, None], (grid, grid)
    ).copy()


def sample_displacement(m: DeficitModel, grid: int) -> DisplacementGrid:
    """Sample D on a grid x grid cell-center lattice of the unit square."""
    if grid < 2:
        raise ValueError(f"grid must be >= 2, got {grid}")
    U, V = lattice_coords(grid)
    du, dv = displacement_field(m, U, V)
    return DisplacementGrid(grid=grid, du=du, dv=dv)


def lipschitz_estimate(m: DeficitModel, grid: int = 128) -> float:
    """Estimate sup of the spectral norm of the displacement Jacobian.

    Samples D on a grid x grid lattice and differentiates with central
    differences (one-sided at the borders). A value < 1 certifies that the
    fixed-point inversion contracts; >= 1 flags a possibly folding map.
    """
    if grid < 16:
        raise ValueError(f"grid must be >= 16, got {grid}")
    if not m.kernels:
        return 0.0
    U, V = lattice_coords(grid)
    du, dv = displacement_field(m, U, V)
    h = 1.0 / grid
    a = np.gradient(du, h, axis=1)  # d du / d u
    b = np.gradient(du, h, axis=0)  # d du / d v
    c = np.gradient(dv, h, axis=1)
    d = np.gradient(dv, h, axis=0)
    # largest singular value of [[a, b], [c, d]] in closed form
    t = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = np.maximum(t * t - 4.0 * det * det, 0.0)
    smax_sq = 0.5 * (t + np.sqrt(disc))
    return float(np.sqrt(smax_sq.max()))


def _lipschitz_grid(m: DeficitModel) -> int:
    # finer lattice for narrow kernels so the peak is not missed
    sig = min((k.sigma for k in m.kernels if k.sigma > 0), default=0.1)
    return int(min(512, max(128, math.ceil(6.0 / sig))))


def validate_model(m: DeficitModel) -> ValidationResult:
    """Check type invariants; returns violations instead of raising.

    A Lipschitz estimate >= 1 is reported as a warning, not a violation:
    such models still simulate, they just cannot be inverted reliably.
    """
    violations: list[str] = []
    for i, k in enumerate(m.kernels):
        tag = f"kernels[{i}]"
        if not (math.isfinite(k.mu[0]) and math.isfinite(k.mu[1])):
            violations.append(f"{tag}: mu must be finite")
        if not math.isfinite(k.sigma) or k.sigma <= 0.0:
            violations.append(f"{tag}: sigma must be positive")
        if not math.isfinite(k.omega) or not 0.0 <= k.omega <= 1.0:
            violations.append(f"{tag}: omega must be in [0, 1]")
        if not math.isfinite(k.theta_rad) or abs(k.theta_rad) > math.pi:
            violations.append(f"{tag}: theta_rad must be in [-pi, pi]")
        if not math.isfinite(k.psi_gain) or k.psi_gain < 0.0:
            violations.append(f"{tag}: psi_gain must be >= 0")
    if not (math.isfinite(m.lambda_) and 0.0 < m.lambda_ < 1.0):
        violations.append("lambda must be in (0, 1)")

    result = ValidationResult(ok=not violations, violations=violations)
    if result.ok and m.kernels:
        result.lipschitz = lipschitz_estimate(m, _lipschitz_grid(m))
        if result.lipschitz >= 1.0:
            result.warnings.append(
                "displacement field may not be invertible: "
                f"Lipschitz estimate {result.lipschitz:.3f} >= 1"
            )
    elif result.ok:
        result.lipschitz = 0.0
    return result


# ---------------------------------------------------------------------------
# JSON format


_MODEL_KEYS = {"version", "lambda", "kernels"}
_KERNEL_KEYS = {"mu", "sigma", "omega", "theta_rad", "psi_gain"}
_KERNEL_REQUIRED = {"mu", "sigma", "omega"}


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelFormatError(f"{where}: expected a number, got {value!r}")
    return float(value)


def model_from_dict(d: dict) -> DeficitModel:
    """Parse the model JSON object. Unknown fields are rejected."""
    if not isinstance(d, dict):
        raise ModelFormatError("model must be a JSON object")
    unknown = set(d) - _MODEL_KEYS
    if unknown:
        raise ModelFormatError(f"unknown model fields: {sorted(unknown)}")
    missing = _MODEL_KEYS - set(d)
    if missing:
        raise ModelFormatError(f"missing model fields: {sorted(missing)}")
    if d["version"] != 1:
        raise ModelFormatError(f"unsupported model version: {d['version']!r}")
    lam = _as_number(d["lambda"], "lambda")
    if not isinstance(d["kernels"], list):
        raise ModelFormatError("kernels must be a list")
    kernels = []
    for i, kd in enumerate(d["kernels"]):
        where = f"kernels[{i}]"
        if not isinstance(kd, dict):
            raise ModelFormatError(f"{where}: expected an object")
        unknown = set(kd) - _KERNEL_KEYS
        if unknown:
            raise ModelFormatError(f"{where}: unknown fields: {sorted(unknown)}")
        missing = _KERNEL_REQUIRED - set(kd)
        if missing:
            raise ModelFormatError(f"{where}: missing fields: {sorted(missing)}")
        mu = kd["mu"]
        if not isinstance(mu, list) or len(mu) != 2:
            raise ModelFormatError(f"{where}: mu must be [u, v]")
        kernels.append(
            GaussianKernel(
                mu=Point2(_as_number(mu[0], f"{where}.mu"), _as_number(mu[1], f"{where}.mu")),
                sigma=_as_number(kd["sigma"], f"{where}.sigma"),
                omega=_as_number(kd["omega"], f"{where}.omega"),
                theta_rad=_as_number(kd["theta_rad"], f"{where}.theta_rad")
                if "theta_rad" in kd
                else 0.0,
                psi_gain=_as_number(kd["psi_gain"], f"{where}.psi_gain")
                if "psi_gain" in kd
                else 0.0,
            )
        )
    return DeficitModel(kernels=tuple(kernels), lambda_=lam, version=1)


def model_to_dict(m: DeficitModel) -> dict:
    return {
        "version": m.version,
        "lambda": m.lambda_,
        "kernels": [
            {
                "mu": [k.mu[0], k.mu[1]],
                "sigma": k.sigma,
                "omega": k.omega,
                "theta_rad": k.theta_rad,
                "psi_gain": k.psi_gain,
            }
            for k in m.kernels
        ],
    }


def model_to_json(m: DeficitModel) -> str:
    return json.dumps(model_to_dict(m), indent=2) + "\n"


def model_from_json(text: str) -> DeficitModel:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"invalid JSON: {e}") from e
    return model_from_dict(d)


def load_model(path) -> DeficitModel:
    with open(path, "r", encoding="utf-8") as f:
        return model_from_json(f.read())


def save_model(m: DeficitModel, path) -> None:
    atomic_write_bytes(path, model_to_json(m).encode("utf-8"))


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via temp file + rename so readers never see partial content."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
