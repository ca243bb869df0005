"""Configuration-driven command line: contour -> solve -> sweep -> assemble -> diagnose -> export.

Usage::

    python3 -m schwarzmin --config run.ini --out results/ [--stage NAME] [--verbose]

Stages: ``all`` (default), ``solve``, ``sweep``, ``assemble``, ``diagnose``,
``export``.  Each stage reads what earlier stages wrote into ``--out``.
Exit codes: 0 success, 2 configuration or missing input, 3 solver failure,
4 welding failure, 5 a diagnostic check failed.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import logging
import shutil
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import assembly as asb
from . import contour as ct
from . import diagnostics as dg
from . import meshkit as mk
from . import plateau as pl
from .geometry import generate_group

log = logging.getLogger("schwarzmin")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_WELD, EXIT_DIAG = 0, 2, 3, 4, 5
STAGES = ("all", "solve", "sweep", "assemble", "diagnose", "export")
ALL_CHECKS = (
    "residual", "containment", "monotonicity", "slices", "area_bound", "curvature", "blowup",
    "stability", "topology", "symmetry", "seams", "total_curvature", "growth", "ends",
)


class ConfigError(ValueError):
    pass


class MissingArtifact(ConfigError):
    def __init__(self, path):
        super().__init__(f"missing input artifact: {path}")
        self.path = path


@dataclass
class ExperimentConfig:
    m: float = 2.0
    tau: int | None = 1
    theta: float | None = None
    allow_arbitrary_theta: bool = False
    R_list: list = field(default_factory=lambda: [3.0, 5.0, 8.0])
    n_per_arc: int = 6
    level: int = 2
    seed: int = 0
    solver: pl.SolverConfig = field(default_factory=pl.SolverConfig)
    checks: tuple = ALL_CHECKS
    thresholds: dict = field(default_factory=dict)
    out: Path | None = None
    source_text: str = ""

    @property
    def angle(self) -> float:
        return self.theta if self.theta is not None else np.pi / (self.tau + 1)

    @property
    def assembly_enabled(self) -> bool:
        return self.tau is not None

    def threshold(self, key: str) -> float:
        return float(self.thresholds.get(key, DEFAULT_THRESHOLDS[key]))


DEFAULT_THRESHOLDS = {
    "residual_sup": 1.0,
    "containment_tol": 1e-8,
    "curvature_ratio": 2.0,
    "blowup_H_slack": 0.05,
    "blowup_A_rtol": 0.10,
    "stability_tol": 1e-3,
    "total_curvature_rtol": 0.05,
    "growth_low": 1.8,
    "growth_high": 2.2,
    "angle_tol": 1e-3,
}


def _floats(text: str) -> list:
    return [float(t) for t in text.replace(",", " ").split()]


def load_config(path) -> ExperimentConfig:
    """Parse an INI file into an :class:`ExperimentConfig` and validate it."""
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(path)
    text = path.read_text()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    ex = cp["experiment"] if cp.has_section("experiment") else {}
    try:
        cfg = ExperimentConfig(
            m=float(ex.get("m", 2.0)),
            tau=int(ex["tau"]) if "tau" in ex and ex["tau"].strip() else None,
            theta=float(ex["theta"]) if "theta" in ex and ex["theta"].strip() else None,
            allow_arbitrary_theta=str(ex.get("allow_arbitrary_theta", "false")).lower() in ("1", "true", "yes"),
            R_list=_floats(ex.get("R", "3 5 8")),
            n_per_arc=int(ex.get("n_per_arc", 6)),
            level=int(ex.get("level", 2)),
            seed=int(ex.get("seed", 0)),
            source_text=text,
        )
        if cp.has_section("solver"):
            s = cp["solver"]
            cfg.solver = pl.SolverConfig(
                max_iterations=s.getint("max_iterations", 400),
                grad_tolerance=s.getfloat("grad_tolerance", 1e-7),
                backtrack=s.getfloat("backtrack", 0.5),
                armijo=s.getfloat("armijo", 1e-4),
                warm_full_steps=s.getint("warm_full_steps", 2),
                rule=s.get("rule", "edge3"),
                seed=cfg.seed,
            )
        if cp.has_section("diagnostics"):
            d = cp["diagnostics"]
            if "enabled" in d:
                names = tuple(t for t in d["enabled"].replace(",", " ").split() if t)
                unknown = set(names) - set(ALL_CHECKS)
                if unknown:
                    raise ConfigError(f"unknown checks: {sorted(unknown)}")
                cfg.checks = names
            cfg.thresholds = {k: float(v) for k, v in d.items() if k in DEFAULT_THRESHOLDS}
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value in {path}: {exc}") from None
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    if not cfg.m > 0:
        raise ConfigError("m must be positive")
    if (cfg.tau is None) == (cfg.theta is None):
        raise ConfigError("give exactly one of tau and theta")
    if cfg.tau is not None and cfg.tau < 1:
        raise ConfigError("tau must be at least 1")
    if cfg.theta is not None:
        if not 0.0 < cfg.theta <= 0.5 * np.pi + 1e-15:
            raise ConfigError("theta must lie in (0, pi/2]")
        N = np.pi / cfg.theta
        if abs(N - round(N)) > 1e-9 and not cfg.allow_arbitrary_theta:
            raise ConfigError("theta must be pi/N; set allow_arbitrary_theta = true to override")
        if abs(N - round(N)) <= 1e-9 and round(N) >= 2:
            cfg.tau, cfg.theta = int(round(N)) - 1, None
    if not cfg.R_list:
        raise ConfigError("R schedule is empty")
    if any(b <= a for a, b in zip(cfg.R_list, cfg.R_list[1:])):
        raise ConfigError("R schedule must be strictly increasing")
    if cfg.R_list[0] <= 0.5 * cfg.m:
        raise ConfigError("every R must exceed m/2")
    if cfg.n_per_arc < 2 or cfg.level < 0:
        raise ConfigError("n_per_arc must be >= 2 and level >= 0")


# ---------------------------------------------------------------------------
# artifact layout


def _rtag(R: float) -> str:
    return f"{R:.6g}".replace(".", "p")


def mesh_path(out: Path, R: float) -> Path:
    return out / "sweep" / f"R_{_rtag(R)}.obj"


def report_path(out: Path, R: float) -> Path:
    return out / "sweep" / f"R_{_rtag(R)}_solve.csv"


def welded_path(out: Path) -> Path:
    return out / "assembly" / "sigma.obj"


def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingArtifact(path)
    return path


def _load_sweep_mesh(cfg: ExperimentConfig, out: Path, R: float) -> mk.TriMesh:
    mesh = mk.import_mesh(_require(mesh_path(out, R)))
    return mesh


# ---------------------------------------------------------------------------
# stages


def stage_contour(cfg, out: Path) -> None:
    c = ct.build_contour(cfg.angle, cfg.R_list[-1], cfg.m, cfg.n_per_arc,
                         ray_radii=_nested_radii(cfg)[-1])
    ct.export_contour_csv(c, out / "contour.csv")


def _nested_radii(cfg) -> list:
    radii, out = None, []
    for R in cfg.R_list:
        radii = ct.graded_radii(cfg.m, cfg.n_per_arc, R, start=radii)
        out.append(radii)
    return out


def stage_solve(cfg, out: Path) -> None:
    """Plateau solve for the first R of the schedule."""
    (out / "sweep").mkdir(parents=True, exist_ok=True)
    R = cfg.R_list[0]
    c = ct.build_contour(cfg.angle, R, cfg.m, cfg.n_per_arc, ray_radii=_nested_radii(cfg)[0])
    from dataclasses import replace

    mesh, rep = pl.solve_plateau(mk.init_disk_mesh(c, 0), cfg.m, replace(cfg.solver, refinements=cfg.level))
    mk.export_mesh(mesh, mesh_path(out, R))
    rep.to_csv(report_path(out, R))
    log.info("solve R=%g: %s after %d iterations, area %.12g", R, rep.status, rep.iterations, rep.final_area)


def stage_sweep(cfg, out: Path) -> pl.SweepResult:
    (out / "sweep").mkdir(parents=True, exist_ok=True)
    res = pl.sweep_R(cfg.angle, cfg.m, cfg.R_list, cfg.solver, n_per_arc=cfg.n_per_arc, level=cfg.level)
    for R, mesh, rep in zip(res.R_list, res.meshes, res.reports):
        if mesh is None:
            continue
        mk.export_mesh(mesh, mesh_path(out, R))
        rep.to_csv(report_path(out, R))
        log.info("sweep R=%g: %s after %d iterations", R, rep.status, rep.iterations)
    with open(out / "sweep" / "distances.csv", "w") as fh:
        fh.write("R_from,R_to,hausdorff\n")
        for (a, b), d in zip(zip(res.R_list, res.R_list[1:]), res.distances):
            fh.write(f"{a:.17g},{b:.17g},{d:.17g}\n")
    if res.failures:
        raise pl.SolverError(-1, "; ".join(f"R={R}: {msg}" for R, msg in res.failures.items()))
    return res


def stage_assemble(cfg, out: Path) -> asb.WeldedSurface:
    if not cfg.assembly_enabled:
        raise ConfigError("assembly needs theta = pi/(tau+1)")
    piece = _load_sweep_mesh(cfg, out, cfg.R_list[-1])
    group = generate_group(cfg.tau, cfg.m)
    surf = asb.assemble(piece, group)
    (out / "assembly").mkdir(parents=True, exist_ok=True)
    mk.export_mesh(surf.mesh, welded_path(out), provenance=surf.provenance)
    chi, b, g = asb.euler_genus(surf)
    log.info("assembled %d copies: chi=%d, boundary=%d, genus=%d", len(group), chi, b, g)
    return surf


def stage_export(cfg, out: Path) -> Path:
    src = _require(welded_path(out))
    dst = out / "export" / "sigma.obj"
    dst.parent.mkdir(parents=True, exist_ok=True)
    mesh = mk.import_mesh(src)
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    dst.write_text("\n".join(lines) + "\n")
    return dst


def run_diagnostics(cfg, out: Path) -> dg.DiagnosticsReport:
    """Run the enabled checks on the artifacts in ``out``."""
    rep = dg.DiagnosticsReport()
    m, th = cfg.m, cfg.angle
    on = set(cfg.checks)
    sweep = [_load_sweep_mesh(cfg, out, R) for R in cfg.R_list]
    first = sweep[0]
    prov = f"theta={th:.17g} m={m:.17g} R={cfg.R_list[0]:.6g} level={cfg.level}"

    if "residual" in on:
        r = dg.mean_curvature_residual(first, m)
        rep.add("mean_curvature_residual", "the solved surface is minimal", r.sup, cfg.threshold("residual_sup"),
                r.sup <= cfg.threshold("residual_sup"), prov)
    if "containment" in on:
        v = max(dg.containment_check(s, th, m) for s in sweep)
        tol = cfg.threshold("containment_tol")
        rep.add("containment", "solutions stay in the region bounded by Q_0, Q_theta, P_0 and the horizon",
                v, tol, v <= tol, prov)
    if "monotonicity" in on and len(sweep) > 1:
        mo = dg.monotonicity_check(sweep, th, m)
        rep.add("monotonicity", "solutions grow monotonically with R without crossing",
                float(sum(mo.intersections)), 0.0, mo.passed, prov, series=mo.orderings)
    if "slices" in on:
        for phi in (np.pi / 8, np.pi / 6, np.pi / 4):
            s = dg.plane_slice_check(first, th, phi, m)
            rep.add(f"slice_phi_{phi:.4f}", "P_{theta,phi} cuts the solution in one simple arc",
                    s.components, 1, s.passed, prov)
    if "area_bound" in on:
        dom = ct.WedgeDomain(th, np.pi / 6, 0.1 * m, m, m)
        lhs, rhs = dg.area_bound_check(first, dom, m)
        rep.add("area_bound", "area inside a wedge domain is below the area of its boundary", lhs, rhs,
                lhs <= rhs, prov)
    samples0 = None
    if "curvature" in on:
        vals = []
        for s in sweep:
            samp, _ = dg.second_form_norm(s, m)
            vals.append(dg.curvature_sup_product(s, m, samp)[0])
        ratio = max(vals) / min(vals) if min(vals) > 0 else float("inf")
        rep.add("curvature_sup_ratio", "curvature times boundary distance stays bounded along the sweep",
                ratio, cfg.threshold("curvature_ratio"), ratio < cfg.threshold("curvature_ratio"), prov, series=vals)
    if "blowup" in on:
        samples0, _ = dg.second_form_norm(first, m)
        _, qv = dg.curvature_sup_product(first, m, samples0)
        b = dg.blowup_scaling_check(first, m, qv)
        slack = cfg.threshold("blowup_H_slack")
        bound = b.H_bound * (1 + slack)
        rep.add("blowup_H", "rescaled mean curvature is below 4/(m lambda)", b.H_sup, bound, b.H_sup <= bound, prov)
        rel = abs(b.A_origin / b.A_predicted - 1.0)
        tol = cfg.threshold("blowup_A_rtol")
        rep.add("blowup_A", "rescaled |A| at the origin equals (1+m/(2|q|))^2", rel, tol, rel <= tol, prov)
        rel_c = abs(b.A_origin / b.A_corrected - 1.0)
        rep.add("blowup_A_corrected", "rescaled |A| at the origin matches the conformal change of a minimal surface",
                rel_c, tol, rel_c <= tol, prov)
    if "stability" in on:
        s = sweep[min(1, len(sweep) - 1)]
        fs = dg.spread_bumps(s)
        st = dg.stability_check(s, m, fs)
        tol = cfg.threshold("stability_tol")
        rep.add("stability", "minimisers satisfy the stability inequality", st.min_normalized, -tol,
                st.min_normalized >= -tol, prov)

    wpath = welded_path(out)
    need_weld = on & {"topology", "symmetry", "seams", "total_curvature", "growth", "ends"}
    if need_weld and cfg.assembly_enabled:
        welded = mk.import_mesh(_require(wpath))
        group = generate_group(cfg.tau, m)
        surf = asb.WeldedSurface(welded, np.zeros((0, 2), dtype=np.int64), asb.default_weld_tolerance(m))
        wprov = f"tau={cfg.tau} m={m:.17g} R={cfg.R_list[-1]:.6g}"
        if "topology" in on:
            chi, b, g = asb.euler_genus(surf)
            ok = g == cfg.tau and asb.is_connected(welded) and asb.is_oriented(welded)
            rep.add("genus", "the assembled surface has genus tau", g, cfg.tau, ok, wprov)
        if "symmetry" in on:
            res = asb.symmetry_residual(surf, group)
            rep.add("symmetry_residual", "the surface is invariant under the group", res, 2 * surf.weld_tolerance,
                    res <= 2 * surf.weld_tolerance, wprov)
        if "seams" in on:
            fresh = asb.assemble(sweep[-1], group)
            sr = asb.seam_report(fresh, cfg.tau, m)
            err = max(sr.pole_angle_error, sr.ray_angle_error)
            rep.add("seams", "seams are 2tau+2 horizon meridians and 2tau+2 equatorial lines at equal angles",
                    err, cfg.threshold("angle_tol"), sr.passed, wprov)
        if "total_curvature" in on and len(sweep) > 1:
            prev = asb.assemble(sweep[-2], group)
            a1 = dg.total_curvature_g(prev.mesh, m).absolute
            a2 = dg.total_curvature_g(welded, m).absolute
            rel = abs(a2 - a1) / a2
            tol = cfg.threshold("total_curvature_rtol")
            rep.add("total_curvature", "total curvature is finite (stable under truncation)", rel, tol, rel < tol,
                    wprov, series=[a1, a2])
        radii = [4.0, 6.0, 9.0, 13.0]
        if "growth" in on:
            if radii[-1] <= cfg.R_list[-1]:
                e = dg.area_growth_fit(welded, m, radii)
                ok = cfg.threshold("growth_low") <= e <= cfg.threshold("growth_high")
                rep.add("area_growth", "area grows quadratically", e, cfg.threshold("growth_high"), ok, wprov)
            else:
                log.info("area growth skipped: radii exceed the truncation radius")
        if "ends" in on:
            rr = np.unique(np.r_[np.geomspace(0.5 * m, cfg.R_list[-1], 8)[1:-1], cfg.R_list[-1] * (1 + 1e-9)])
            ser = dg.end_asymptotics(welded, rr)
            ok = dg.tail_non_increasing(ser)
            rep.add("end_asymptotics", "the end is asymptotic to the plane P_0", float(np.nanmax(ser[len(ser) // 2:])),
                    0.0, ok, wprov, series=ser)
    return rep


def stage_diagnose(cfg, out: Path) -> dg.DiagnosticsReport:
    rep = run_diagnostics(cfg, out)
    rep.to_csv(out / "diagnostics.csv")
    (out / "diagnostics.txt").write_text(rep.summary() + "\n")
    return rep


def diagnose_mesh(path, m: float, out: Path) -> dg.DiagnosticsReport:
    """Stand-alone diagnostics for an arbitrary mesh file."""
    mesh = mk.import_mesh(_require(Path(path)))
    rep = dg.DiagnosticsReport()
    r = dg.mean_curvature_residual(mesh, m)
    rep.add("mean_curvature_residual", "sup of the metric mean curvature", r.sup, float("inf"), True, str(path))
    rep.add("mean_curvature_l2", "L2 norm of the metric mean curvature", r.l2, float("inf"), True, str(path))
    tc = dg.total_curvature_g(mesh, m)
    rep.add("total_curvature_signed", "signed angle-defect total", tc.signed, float("inf"), True, str(path))
    out.mkdir(parents=True, exist_ok=True)
    rep.to_csv(out / "diagnostics.csv")
    (out / "diagnostics.txt").write_text(rep.summary() + "\n")
    return rep


def write_manifest(out: Path) -> Path:
    """``path  sha256`` for every artifact, sorted by path."""
    lines = []
    for p in sorted(out.rglob("*")):
        if p.is_file() and p.name != "manifest.txt":
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            lines.append(f"{p.relative_to(out).as_posix()}  {digest}")
    path = out / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def run_pipeline(cfg: ExperimentConfig, out, stage: str = "all") -> int:
    """Run one stage or the whole pipeline; returns the exit status."""
    out = Path(out)
    try:
        if stage in ("all", "solve", "sweep"):
            out.mkdir(parents=True, exist_ok=True)
            (out / "config.ini").write_text(cfg.source_text)
        if stage == "all":
            stage_contour(cfg, out)
            stage_sweep(cfg, out)
            if cfg.assembly_enabled:
                stage_assemble(cfg, out)
                stage_export(cfg, out)
            rep = stage_diagnose(cfg, out)
            write_manifest(out)
            log.info("\n%s", rep.summary())
            return EXIT_OK if rep.all_passed else EXIT_DIAG
        if stage == "solve":
            stage_contour(cfg, out)
            stage_solve(cfg, out)
        elif stage == "sweep":
            stage_contour(cfg, out)
            stage_sweep(cfg, out)
        elif stage == "assemble":
            stage_assemble(cfg, out)
        elif stage == "diagnose":
            rep = stage_diagnose(cfg, out)
            write_manifest(out)
            return EXIT_OK if rep.all_passed else EXIT_DIAG
        elif stage == "export":
            stage_export(cfg, out)
        else:
            raise ConfigError(f"unknown stage {stage!r}")
        write_manifest(out)
        return EXIT_OK
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (pl.SolverError, pl.EmbeddednessError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except asb.WeldError as exc:
        log.error("welding failure: %s", exc)
        return EXIT_WELD


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="schwarzmin", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="INI experiment configuration")
    p.add_argument("--out", required=True, help="artifact directory")
    p.add_argument("--stage", default="all", choices=STAGES)
    p.add_argument("--mesh", help="with --stage diagnose: check this mesh file instead of the pipeline artifacts")
    p.add_argument("--mass", type=float, default=2.0, help="mass used with --mesh")
    p.add_argument("--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    out = Path(args.out)
    if args.mesh is not None:
        if args.stage != "diagnose":
            log.error("--mesh is only valid with --stage diagnose")
            return EXIT_CONFIG
        try:
            rep = diagnose_mesh(args.mesh, args.mass, out)
        except ConfigError as exc:
            log.error("%s", exc)
            return EXIT_CONFIG
        print(rep.summary())
        return EXIT_OK
    if args.config is None:
        log.error("--config is required")
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    return run_pipeline(cfg, out, args.stage)


if __name__ == "__main__":
    sys.exit(main())
