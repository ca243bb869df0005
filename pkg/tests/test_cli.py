import subprocess
import sys

import numpy as np
import pytest

from schwarzmin import cli
from schwarzmin import meshkit as mk
from schwarzmin import surfaces as sf

BASE = """
[experiment]
m = 2.0
tau = 1
R = 3, 5, 8
n_per_arc = 6
level = 2
seed = 0
"""
CHECKS = ("residual containment monotonicity slices area_bound curvature stability topology symmetry seams "
          "total_curvature growth ends")


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.fixture(scope="module")
def pipeline_runs(tmp_path_factory):
    """Two identical pipeline runs with every check except the blow-up identity."""
    root = tmp_path_factory.mktemp("cli")
    cfg = write(root, BASE + f"\n[diagnostics]\nenabled = {CHECKS}\n")
    codes = [cli.main(["--config", str(cfg), "--out", str(root / f"out{k}")]) for k in (0, 1)]
    return root, codes


def test_pipeline_outputs(pipeline_runs):
    root, codes = pipeline_runs
    out = root / "out0"
    assert codes[0] == cli.EXIT_OK, (out / "diagnostics.txt").read_text()
    meshes = sorted(p.relative_to(out).as_posix() for p in out.rglob("*.obj"))
    assert meshes == ["assembly/sigma.obj", "export/sigma.obj", "sweep/R_3.obj", "sweep/R_5.obj", "sweep/R_8.obj"]
    for name in ("contour.csv", "diagnostics.csv", "diagnostics.txt", "manifest.txt", "config.ini",
                 "assembly/sigma.prov", "sweep/R_3_solve.csv"):
        assert (out / name).exists(), name
    lines = (out / "manifest.txt").read_text().splitlines()
    assert all(len(line.split("  ")) == 2 and len(line.split("  ")[1]) == 64 for line in lines)


def test_pipeline_is_deterministic(pipeline_runs):
    root, _ = pipeline_runs
    assert (root / "out0" / "manifest.txt").read_bytes() == (root / "out1" / "manifest.txt").read_bytes()


def test_default_exit_status_tracks_report(tmp_path):
    # default config on the quick schedule: the exit status is 0 iff every check passes
    cfg = write(tmp_path, BASE.replace("R = 3, 5, 8", "R = 3, 5").replace("level = 2", "level = 1"))
    code = cli.main(["--config", str(cfg), "--out", str(tmp_path / "o")])
    text = (tmp_path / "o" / "diagnostics.csv").read_text().splitlines()[1:]
    all_pass = all(row.split(",")[3] == "1" for row in text)
    assert code == (cli.EXIT_OK if all_pass else cli.EXIT_DIAG)


def test_malformed_config_exits_2_without_outputs(tmp_path):
    cfg = write(tmp_path, BASE.replace("R = 3, 5, 8", "R = 0.5, 3"))
    assert cli.main(["--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    assert not (tmp_path / "o").exists()


@pytest.mark.parametrize("edit", [
    ("tau = 1", "tau = 1\ntheta = 1.0"),
    ("tau = 1", "theta = 1.0"),
    ("R = 3, 5, 8", "R = 5, 3"),
    ("m = 2.0", "m = -1"),
    ("level = 2", "level = two"),
])
def test_config_validation(tmp_path, edit):
    cfg = write(tmp_path, BASE.replace(*edit))
    with pytest.raises(cli.ConfigError):
        cli.load_config(cfg)


def test_theta_override_disables_assembly(tmp_path):
    cfg = cli.load_config(write(tmp_path, BASE.replace("tau = 1", "theta = 1.0\nallow_arbitrary_theta = true")))
    assert not cfg.assembly_enabled and cfg.angle == 1.0
    cfg = cli.load_config(write(tmp_path, BASE.replace("tau = 1", f"theta = {np.pi / 3!r}"), "b.ini"))
    assert cfg.tau == 2


def test_assemble_without_sweep_exits_2(tmp_path):
    cfg = write(tmp_path, BASE)
    assert cli.main(["--config", str(cfg), "--out", str(tmp_path / "o"), "--stage", "assemble"]) == cli.EXIT_CONFIG


def test_stagewise_run_and_export(tmp_path):
    cfg = write(tmp_path, BASE.replace("R = 3, 5, 8", "R = 3, 5").replace("level = 2", "level = 1"))
    out = tmp_path / "o"
    for stage in ("solve", "sweep", "assemble", "export"):
        assert cli.main(["--config", str(cfg), "--out", str(out), "--stage", stage]) == cli.EXIT_OK, stage
    welded = mk.import_mesh(out / "assembly" / "sigma.obj")
    exported = mk.import_mesh(out / "export" / "sigma.obj")
    np.testing.assert_array_equal(exported.vertices, welded.vertices)
    np.testing.assert_array_equal(exported.triangles, welded.triangles)


def test_diagnose_arbitrary_mesh(tmp_path):
    mk.export_mesh(sf.icosphere(1.0, 2), tmp_path / "horizon.obj")
    code = cli.main(["--out", str(tmp_path / "d"), "--stage", "diagnose", "--mesh", str(tmp_path / "horizon.obj"),
                     "--mass", "2"])
    assert code == cli.EXIT_OK
    rows = (tmp_path / "d" / "diagnostics.csv").read_text().splitlines()
    assert rows[1].startswith("mean_curvature_residual,")


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "schwarzmin", "--out", str(tmp_path), "--stage", "diagnose",
                          "--mesh", str(tmp_path / "missing.obj")], capture_output=True, text=True)
    assert res.returncode == cli.EXIT_CONFIG
    assert "missing.obj" in res.stderr
