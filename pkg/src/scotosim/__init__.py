"""Central vision loss: parametric deficit model, simulator, compensator."""

from .backend import BACKEND
from .invert import (
    CompensateResult,
    InversionResult,
    RoundtripReport,
    compensate,
    composition_residual,
    invert_field,
    psnr,
    roundtrip_report,
)
from .model import (
    DeficitModel,
    DisplacementGrid,
    GaussianKernel,
    ModelFormatError,
    Point2,
    ValidationResult,
    Vec2,
    in_region,
    kernel_value,
    lipschitz_estimate,
    load_model,
    luminance_loss,
    model_from_dict,
    model_from_json,
    model_to_dict,
    model_to_json,
    radial_displacement,
    rotation_displacement,
    save_model,
    total_map,
    validate_model,
)
from .raster import (
    Image,
    ParameterError,
    amsler_grid,
    field_export,
    load_png,
    region_mask,
    sample_bilinear,
    save_png,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CompensateResult",
    "DeficitModel",
    "DisplacementGrid",
    "GaussianKernel",
    "Image",
    "InversionResult",
    "ModelFormatError",
    "ParameterError",
    "Point2",
    "RoundtripReport",
    "ValidationResult",
    "Vec2",
    "amsler_grid",
    "compensate",
    "composition_residual",
    "field_export",
    "in_region",
    "invert_field",
    "kernel_value",
    "lipschitz_estimate",
    "load_model",
    "load_png",
    "luminance_loss",
    "model_from_dict",
    "model_from_json",
    "model_to_dict",
    "model_to_json",
    "psnr",
    "radial_displacement",
    "region_mask",
    "rotation_displacement",
    "roundtrip_report",
    "sample_bilinear",
    "save_model",
    "save_png",
    "simulate",
    "total_map",
    "validate_model",
]
