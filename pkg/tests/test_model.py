import json
import math

import numpy as np
import pytest

from scotosim.model import (
    DeficitModel,
    GaussianKernel,
    ModelFormatError,
    Point2,
    in_region,
    kernel_value,
    lipschitz_estimate,
    luminance_loss,
    model_from_dict,
    model_from_json,
    model_to_dict,
    model_to_json,
    radial_displacement,
    rotation_displacement,
    sample_displacement,
    total_map,
    validate_model,
)


def kernel(mu=(0.5, 0.5), sigma=0.1, omega=0.8, theta=0.0, gain=0.0):
    return GaussianKernel(mu=Point2(*mu), sigma=sigma, omega=omega, theta_rad=theta, psi_gain=gain)


def single(sigma=0.1, omega=0.8, theta=0.0, gain=0.0, mu=(0.5, 0.5)):
    return DeficitModel(kernels=(kernel(mu, sigma, omega, theta, gain),))


EMPTY = DeficitModel()


# ---------------------------------------------------------------------------
# kernel falloff


def test_kernel_value_peaks_at_center():
    assert kernel_value(kernel(), Point2(0.5, 0.5)) == 1.0


def test_kernel_value_one_sigma():
    # e^{-1/2}, direct evaluation of the closed form
    assert kernel_value(kernel(), Point2(0.6, 0.5)) == pytest.approx(math.exp(-0.5), abs=1e-12)


def test_kernel_value_three_sigma():
    assert kernel_value(kernel(), Point2(0.5 + 0.3, 0.5)) == pytest.approx(
        math.exp(-4.5), abs=1e-12
    )


# ---------------------------------------------------------------------------
# luminance loss


def test_loss_peak_equals_omega():
    assert luminance_loss(single(omega=0.8), Point2(0.5, 0.5)) == pytest.approx(0.8, abs=1e-15)


def test_loss_empty_model_is_zero():
    assert luminance_loss(EMPTY, Point2(0.3, 0.7)) == 0.0


def test_loss_clamps_to_one():
    m = DeficitModel(kernels=(kernel(omega=0.7), kernel(omega=0.7)))
    # unclamped sum oracle: 0.7 + 0.7 = 1.4
    raw = sum(k.omega * kernel_value(k, Point2(0.5, 0.5)) for k in m.kernels)
    assert raw == pytest.approx(1.4, abs=1e-15)
    assert luminance_loss(m, Point2(0.5, 0.5)) == 1.0


def test_loss_always_within_unit_interval():
    rng = np.random.default_rng(7)
    kernels = tuple(
        kernel(
            mu=rng.uniform(0, 1, 2),
            sigma=rng.uniform(0.02, 0.3),
            omega=rng.uniform(0, 1),
        )
        for _ in range(6)
    )
    m = DeficitModel(kernels=kernels)
    for u, v in rng.uniform(-0.2, 1.2, (500, 2)):
        assert 0.0 <= luminance_loss(m, Point2(u, v)) <= 1.0


# ---------------------------------------------------------------------------
# deficit region


def test_in_region_at_center():
    assert in_region(single(), Point2(0.5, 0.5), 0.5)


def test_in_region_analytic_boundary():
    # level-set radius r = sigma sqrt(2 ln(omega / cutoff))
    r = 0.1 * math.sqrt(2.0 * math.log(0.8 / 0.5))
    m = single()
    assert luminance_loss(m, Point2(0.5 + r, 0.5)) == pytest.approx(0.5, abs=1e-12)
    assert in_region(m, Point2(0.5 + r * (1 - 1e-9), 0.5), 0.5)
    assert not in_region(m, Point2(0.5 + r * (1 + 1e-9), 0.5), 0.5)


def test_in_region_cutoff_above_peak():
    m = single(omega=0.8)
    for p in [(0.5, 0.5), (0.1, 0.9), (0.52, 0.48)]:
        assert not in_region(m, Point2(*p), 0.9)


def test_region_nesting_monotone_in_cutoff():
    rng = np.random.default_rng(3)
    m = DeficitModel(
        kernels=(kernel(mu=(0.4, 0.5), omega=0.6), kernel(mu=(0.6, 0.55), omega=0.5))
    )
    pts = rng.uniform(0, 1, (2000, 2))
    for u, v in pts:
        if in_region(m, Point2(u, v), 0.18):
            assert in_region(m, Point2(u, v), 0.12)
        if in_region(m, Point2(u, v), 0.12):
            assert in_region(m, Point2(u, v), 0.05)


def test_in_region_rejects_bad_cutoff():
    with pytest.raises(ValueError):
        in_region(EMPTY, Point2(0.5, 0.5), 0.0)
    with pytest.raises(ValueError):
        in_region(EMPTY, Point2(0.5, 0.5), 1.0)


# ---------------------------------------------------------------------------
# displacements


def test_rotation_empty_and_at_center():
    assert rotation_displacement(EMPTY, Point2(0.2, 0.9)) == (0.0, 0.0)
    m = single(omega=1.0, theta=math.pi / 2)
    assert rotation_displacement(m, Point2(0.5, 0.5)) == (0.0, 0.0)


def test_rotation_quarter_turn_hand_value():
    # weight e^{-1/2}; (R - I) applied to the offset (0.1, 0) gives (-0.1, 0.1)
    m = single(omega=1.0, theta=math.pi / 2)
    d = rotation_displacement(m, Point2(0.6, 0.5))
    w = math.exp(-0.5)
    assert d.du == pytest.approx(-0.1 * w, abs=1e-12)
    assert d.dv == pytest.approx(0.1 * w, abs=1e-12)


def test_rotation_zero_angle_is_identically_zero():
    m = single(omega=0.9, theta=0.0, gain=0.4)
    rng = np.random.default_rng(11)
    for u, v in rng.uniform(-0.5, 1.5, (200, 2)):
        assert rotation_displacement(m, Point2(u, v)) == (0.0, 0.0)


def test_rotation_norm_depends_only_on_radius():
    m = single(omega=0.7, theta=1.1)
    rng = np.random.default_rng(13)
    for r in rng.uniform(0.01, 0.5, 50):
        angles = rng.uniform(0, 2 * math.pi, 4)
        norms = []
        for a in angles:
            p = Point2(0.5 + r * math.cos(a), 0.5 + r * math.sin(a))
            d = rotation_displacement(m, p)
            norms.append(math.hypot(d.du, d.dv))
        assert max(norms) - min(norms) < 1e-12


def test_rotation_equivariance_under_rotation_about_center():
    # rotating p about mu by alpha rotates the displacement by alpha
    m = single(omega=0.7, theta=0.9)
    alpha = 0.77
    ca, sa = math.cos(alpha), math.sin(alpha)
    p = Point2(0.5 + 0.08, 0.5 + 0.03)
    d = rotation_displacement(m, p)
    q = Point2(
        0.5 + ca * 0.08 - sa * 0.03,
        0.5 + sa * 0.08 + ca * 0.03,
    )
    dq = rotation_displacement(m, q)
    assert dq.du == pytest.approx(ca * d.du - sa * d.dv, abs=1e-12)
    assert dq.dv == pytest.approx(sa * d.du + ca * d.dv, abs=1e-12)


def test_radial_at_center_and_one_sigma():
    m = single(omega=0.5, gain=1.0)
    assert radial_displacement(m, Point2(0.5, 0.5)) == (0.0, 0.0)
    d = radial_displacement(m, Point2(0.6, 0.5))
    assert d.du == pytest.approx(math.exp(-0.5) * 0.1, abs=1e-12)
    assert d.dv == 0.0


def test_radial_far_field_negligible():
    m = single(omega=0.5, gain=1.0)
    d = radial_displacement(m, Point2(0.5 + 0.5, 0.5))
    assert d.du == pytest.approx(math.exp(-12.5) * 0.5, abs=1e-12)
    assert abs(d.du) < 2e-6


def test_displacements_vanish_far_from_all_kernels():
    m = DeficitModel(
        kernels=(
            kernel(mu=(0.3, 0.3), omega=0.9, theta=1.0, gain=0.8),
            kernel(mu=(0.7, 0.6), omega=0.5, theta=-2.0, gain=0.3),
        )
    )
    for p in [Point2(5.0, 5.0), Point2(-4.0, 0.5), Point2(0.5, 9.0)]:
        r = rotation_displacement(m, p)
        q = radial_displacement(m, p)
        assert math.hypot(r.du, r.dv) < 1e-12
        assert math.hypot(q.du, q.dv) < 1e-12


def test_total_map_is_sum_of_displacements():
    m = single(omega=1.0, theta=math.pi / 2, gain=1.0)
    s = total_map(m, Point2(0.6, 0.5))
    w = math.exp(-0.5)
    assert s.u == pytest.approx(0.6, abs=1e-12)  # rotation and push cancel in u
    assert s.v == pytest.approx(0.5 + 0.1 * w, abs=1e-12)


def test_total_map_identity_for_empty_model():
    for p in [Point2(0.0, 0.0), Point2(0.31, 0.77), Point2(1.2, -0.1)]:
        assert total_map(EMPTY, p) == p


def test_total_map_psi_only_composition():
    m = single(omega=0.4, theta=0.0, gain=0.6)
    p = Point2(0.62, 0.41)
    d = radial_displacement(m, p)
    s = total_map(m, p)
    assert s.u == pytest.approx(p.u + d.du, abs=1e-15)
    assert s.v == pytest.approx(p.v + d.dv, abs=1e-15)


# ---------------------------------------------------------------------------
# displacement sampling & Lipschitz estimate


def test_sample_displacement_matches_point_eval():
    m = single(omega=0.6, theta=0.8, gain=0.4)
    g = sample_displacement(m, 8)
    for j in (0, 3, 7):
        for i in (0, 4, 6):
            p = Point2((i + 0.5) / 8, (j + 0.5) / 8)
            s = total_map(m, p)
            assert g.du[j, i] == pytest.approx(s.u - p.u, abs=1e-15)
            assert g.dv[j, i] == pytest.approx(s.v - p.v, abs=1e-15)


def test_lipschitz_empty_model_is_zero():
    assert lipschitz_estimate(EMPTY, 64) == 0.0


@pytest.mark.parametrize("gain", [0.5, 1.2])
def test_lipschitz_radial_peak_equals_gain(gain):
    # the radial derivative g e^{-r^2/2s^2}(1 - r^2/s^2) peaks at r=0 with value g
    m = single(omega=0.0, gain=gain, sigma=0.15)
    est = lipschitz_estimate(m, 256)
    assert est == pytest.approx(gain, rel=0.02)


def test_lipschitz_doubles_with_gain():
    m1 = single(omega=0.0, gain=0.3, sigma=0.12)
    m2 = single(omega=0.0, gain=0.6, sigma=0.12)
    assert lipschitz_estimate(m2, 128) == pytest.approx(2 * lipschitz_estimate(m1, 128), rel=1e-9)


def test_lipschitz_rejects_small_grid():
    with pytest.raises(ValueError):
        lipschitz_estimate(EMPTY, 8)


# ---------------------------------------------------------------------------
# validation


def test_validate_empty_model_ok():
    r = validate_model(DeficitModel(lambda_=0.5))
    assert r.ok and not r.violations and not r.warnings


def test_validate_flags_bad_sigma():
    r = validate_model(single(sigma=0.0))
    assert not r.ok
    assert any("sigma" in v for v in r.violations)


def test_validate_flags_omega_and_lambda():
    m = DeficitModel(kernels=(kernel(omega=1.4),), lambda_=1.5)
    r = validate_model(m)
    assert not r.ok
    assert any("omega" in v for v in r.violations)
    assert any("lambda" in v for v in r.violations)


def test_validate_flags_nonfinite():
    r = validate_model(single(sigma=float("nan")))
    assert not r.ok


def test_validate_warns_on_noninvertible_gain():
    r = validate_model(single(omega=0.2, gain=1.5, sigma=0.1))
    assert r.ok
    assert r.warnings and "1" in r.warnings[0]
    assert r.lipschitz is not None and r.lipschitz > 1.0


def test_validate_no_warning_for_contractive_model():
    r = validate_model(single(omega=0.3, gain=0.4, sigma=0.1))
    assert r.ok and not r.warnings
    assert r.lipschitz is not None and r.lipschitz < 1.0


# ---------------------------------------------------------------------------
# JSON format


def canonical_dict():
    return {
        "version": 1,
        "lambda": 0.5,
        "kernels": [
            {
                "mu": [0.5, 0.5],
                "sigma": 0.1,
                "omega": 0.8,
                "theta_rad": 1.5707963,
                "psi_gain": 0.5,
            }
        ],
    }


def test_model_json_roundtrip():
    m = model_from_dict(canonical_dict())
    assert model_to_dict(m) == canonical_dict()
    again = model_from_json(model_to_json(m))
    assert again == m


def test_model_json_rejects_unknown_fields():
    d = canonical_dict()
    d["extra"] = 1
    with pytest.raises(ModelFormatError, match="unknown"):
        model_from_dict(d)
    d = canonical_dict()
    d["kernels"][0]["blur"] = 0.4
    with pytest.raises(ModelFormatError, match="unknown"):
        model_from_dict(d)


def test_model_json_rejects_missing_and_bad_types():
    with pytest.raises(ModelFormatError):
        model_from_dict({"version": 1, "lambda": 0.5})
    d = canonical_dict()
    d["kernels"][0]["sigma"] = "wide"
    with pytest.raises(ModelFormatError):
        model_from_dict(d)
    d = canonical_dict()
    d["kernels"][0]["mu"] = [0.5]
    with pytest.raises(ModelFormatError):
        model_from_dict(d)
    with pytest.raises(ModelFormatError):
        model_from_json("{not json")


def test_model_json_optional_kernel_fields_default_to_zero():
    d = canonical_dict()
    del d["kernels"][0]["theta_rad"]
    del d["kernels"][0]["psi_gain"]
    m = model_from_dict(d)
    assert m.kernels[0].theta_rad == 0.0
    assert m.kernels[0].psi_gain == 0.0


def test_model_json_rejects_bad_version():
    d = canonical_dict()
    d["version"] = 2
    with pytest.raises(ModelFormatError, match="version"):
        model_from_dict(d)
