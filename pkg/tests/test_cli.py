import json

import numpy as np
import pytest

from scotosim.cli import run
from scotosim.model import DeficitModel, GaussianKernel, Point2, save_model
from scotosim.raster import load_png


@pytest.fixture
def workdir(tmp_path):
    return tmp_path


def write_model(path, kernels=(), lam=0.5):
    m = DeficitModel(kernels=tuple(kernels), lambda_=lam)
    save_model(m, path)
    return path


def kernel(**kw):
    defaults = dict(mu=Point2(0.5, 0.5), sigma=0.1, omega=0.8, theta_rad=0.0, psi_gain=0.0)
    defaults.update(kw)
    return GaussianKernel(**defaults)


def test_grid_command_writes_png(workdir):
    out = workdir / "g.png"
    assert run(["grid", "--size", "256", "--spacing", "32", "--line", "2", "--out", str(out)]) == 0
    img = load_png(out)
    assert img.width == img.height == 256


def test_grid_command_rejects_bad_dimensions(workdir):
    out = workdir / "g.png"
    code = run(["grid", "--size", "16", "--spacing", "32", "--line", "2", "--out", str(out)])
    assert code == 1
    assert not out.exists()


def test_simulate_identity_preserves_content(workdir):
    grid_png = workdir / "in.png"
    out_png = workdir / "out.png"
    model = write_model(workdir / "m.json")
    run(["grid", "--size", "128", "--spacing", "16", "--line", "2", "--out", str(grid_png)])
    assert run(
        ["simulate", "--model", str(model), "--in", str(grid_png), "--out", str(out_png)]
    ) == 0
    assert np.array_equal(load_png(out_png).data, load_png(grid_png).data)


def test_simulate_missing_input_is_io_error(workdir):
    model = write_model(workdir / "m.json")
    code = run(
        ["simulate", "--model", str(model), "--in", str(workdir / "nope.png"), "--out", str(workdir / "o.png")]
    )
    assert code == 2


def test_malformed_model_leaves_no_output(workdir):
    bad = workdir / "bad.json"
    bad.write_text('{"version": 1, "lambda": 0.5, "kernels": [], "surprise": true}')
    out = workdir / "out.png"
    grid_png = workdir / "in.png"
    run(["grid", "--size", "64", "--spacing", "8", "--line", "1", "--out", str(grid_png)])
    code = run(["simulate", "--model", str(bad), "--in", str(grid_png), "--out", str(out)])
    assert code == 1
    assert not out.exists()


def test_invalid_model_parameters_exit_one(workdir):
    model = write_model(workdir / "m.json", kernels=[kernel(sigma=-1.0)])
    out = workdir / "out.png"
    code = run(["region", "--model", str(model), "--lambda", "0.5", "--size", "64", "--out", str(out)])
    assert code == 1
    assert not out.exists()


def test_region_and_field_commands(workdir):
    model = write_model(workdir / "m.json", kernels=[kernel()])
    mask_png = workdir / "mask.png"
    assert run(["region", "--model", str(model), "--lambda", "0.5", "--size", "128", "--out", str(mask_png)]) == 0
    mask = load_png(mask_png)
    assert set(np.unique(mask.data)) <= {0.0, 1.0}
    assert mask.data.sum() > 0

    csv_path = workdir / "f.csv"
    assert run(["field", "--model", str(model), "--grid", "16", "--out", str(csv_path)]) == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "u,v,du,dv"
    assert len(lines) == 1 + 16 * 16


def test_compensate_and_roundtrip_happy_path(workdir):
    model = write_model(workdir / "m.json", kernels=[kernel(omega=0.5, psi_gain=0.4)])
    grid_png = workdir / "in.png"
    run(["grid", "--size", "128", "--spacing", "16", "--line", "2", "--out", str(grid_png)])
    comp_png = workdir / "comp.png"
    assert run(
        ["compensate", "--model", str(model), "--in", str(grid_png), "--out", str(comp_png)]
    ) == 0
    assert comp_png.exists()

    report_path = workdir / "r.json"
    assert run(
        ["roundtrip", "--model", str(model), "--in", str(grid_png), "--report", str(report_path)]
    ) == 0
    report = json.loads(report_path.read_text())
    assert report["converged"] is True
    assert report["psnr_masked"] >= report["psnr_uncompensated"]


def test_roundtrip_nonconvergent_model_exits_three_with_report(workdir):
    model = write_model(workdir / "m.json", kernels=[kernel(omega=0.2, psi_gain=1.2, sigma=0.15)])
    grid_png = workdir / "in.png"
    run(["grid", "--size", "96", "--spacing", "16", "--line", "2", "--out", str(grid_png)])
    report_path = workdir / "r.json"
    code = run(
        ["roundtrip", "--model", str(model), "--in", str(grid_png), "--report", str(report_path)]
    )
    assert code == 3
    report = json.loads(report_path.read_text())
    assert report["converged"] is False


def test_outputs_are_deterministic(workdir):
    model = write_model(workdir / "m.json", kernels=[kernel(theta_rad=0.8, psi_gain=0.3)])
    grid_png = workdir / "in.png"
    run(["grid", "--size", "128", "--spacing", "16", "--line", "2", "--out", str(grid_png)])
    a = workdir / "a.png"
    b = workdir / "b.png"
    for out in (a, b):
        assert run(["simulate", "--model", str(model), "--in", str(grid_png), "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()

    ra = workdir / "ra.json"
    rb = workdir / "rb.json"
    for rp in (ra, rb):
        assert run(["roundtrip", "--model", str(model), "--in", str(grid_png), "--report", str(rp)]) == 0
    assert ra.read_bytes() == rb.read_bytes()
