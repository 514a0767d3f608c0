"""Experiment runner: generation, reports, minimization, sweeps.

Subcommands: generate | energy | monotonicity | minimize | hausdorff |
diagnose | threshold | sweep | rerun.  Parameters come from a sectioned
config file (``[subcommand]`` headers, ``key = value`` lines, ``#``
comments) plus positional ``key=value`` overrides; unknown sections and
keys are rejected with line/column positions.

Every run writes its artifacts plus ``manifest.json`` holding the
effective config, seed, package versions, and sha256 of each output, so
``wbl rerun --manifest <file>`` reproduces the outputs byte for byte
(single-thread mode; wall-clock timings go to a separate file excluded
from the manifest).

Exit codes: 0 success, 2 config or parameter error, 3 numeric failure
(no catenoid, failed line search, invalid mesh), 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, analytic, errors, metrics, monotonicity, optimizer
from .curvature import gauss_bonnet_residual, willmore_energy
from .mesh import build_mesh, read_obj, write_obj

__all__ = ["main"]

_NUMERIC_ERRORS = (
    errors.NoCatenoid,
    errors.LineSearchFailed,
    errors.NonManifoldEdge,
    errors.InconsistentOrientation,
    errors.DegenerateFace,
    errors.ZeroMixedArea,
    errors.NoBoundary,
    errors.FieldLengthMismatch,
    errors.NonpositiveRadius,
    errors.BasePointOnBoundary,
    errors.BasePointOffSurface,
    errors.Disconnected,
    errors.EmptySample,
    errors.DegenerateSample,
    errors.BoundaryMismatch,
)


# --------------------------------------------------------------- config

def _floats(raw):
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    return tuple(float(p) for p in parts)


def _float3(raw):
    vals = _floats(raw)
    if len(vals) != 3:
        raise ValueError(f"need three comma-separated numbers, got {len(vals)}")
    return vals


def _bool(raw):
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


SCHEMAS = {
    "generate": {
        "surface": str,  # disk | icosphere | cylinder | catenoid | truncated_sphere
        "R": float,
        "h": float,
        "r": float,
        "radius": float,
        "center": _float3,
        "subdiv": int,
        "n_radial": int,
        "n_axial": int,
        "target_edge_length": float,
        "mesh_out": str,
    },
    "energy": {"mesh": str},
    "monotonicity": {
        "mesh": str,
        "base_point": _float3,
        "rho_min": float,
        "rho_max": float,
        "n_radii": int,
        "tau": float,
    },
    "minimize": {
        "mesh": str,
        "mode": str,  # navier | clamped (targets = the input mesh's conormals)
        "weight": float,
        "max_iters": int,
        "initial_step": float,
        "backtrack": float,
        "armijo": float,
        "grad_tol": float,
        "eps_flow": float,
        "preconditioner": str,
        "mesh_out": str,
    },
    "hausdorff": {"mesh_a": str, "mesh_b": str},
    "diagnose": {"mesh": str, "mode": str, "h": float},
    "threshold": {"R": float},
    "sweep": {
        "R_values": _floats,
        "h_values": _floats,
        "n_radial": int,
        "n_axial": int,
        "max_iters": int,
        "grad_tol": float,
        "initial_step": float,
        "preconditioner": str,
        "write_meshes": _bool,
    },
}


def parse_config(text):
    """Sectioned key = value document -> {section: {key: (raw, line, col)}}.

    Raises ConfigParse with 1-based line/column on structural errors,
    unknown sections, unknown keys, and duplicate keys.
    """
    sections: dict = {}
    current_name = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        stripped = line.strip()
        if not stripped:
            continue
        col = line.index(stripped[0]) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise errors.ConfigParse("unterminated section header", ln, col)
            name = stripped[1:-1].strip()
            if name not in SCHEMAS:
                raise errors.ConfigParse(f"unknown section {name!r}", ln, col)
            current_name = name
            sections.setdefault(name, {})
            continue
        if "=" not in stripped:
            raise errors.ConfigParse("expected 'key = value'", ln, col)
        if current_name is None:
            raise errors.ConfigParse("key outside any [section]", ln, col)
        key, val = stripped.split("=", 1)
        key = key.strip()
        val = val.strip()
        if not key:
            raise errors.ConfigParse("empty key", ln, col)
        kcol = line.index(key) + 1
        if key not in SCHEMAS[current_name]:
            raise errors.ConfigParse(
                f"unknown key {key!r} in section [{current_name}]", ln, kcol
            )
        if key in sections[current_name]:
            raise errors.ConfigParse(f"duplicate key {key!r}", ln, kcol)
        sections[current_name][key] = (val, ln, kcol)
    return sections


def _apply_overrides(section, overrides, subcommand):
    for item in overrides:
        if "=" not in item:
            raise errors.ConfigParse(f"override {item!r} is not key=value")
        key, val = item.split("=", 1)
        key = key.strip()
        if key not in SCHEMAS[subcommand]:
            raise errors.ConfigParse(
                f"unknown key {key!r} for subcommand {subcommand!r}"
            )
        section[key] = (val.strip(), None, None)


class Params:
    """Typed view of one subcommand's section."""

    def __init__(self, subcommand, section):
        self.subcommand = subcommand
        self.raw = {k: v[0] for k, v in section.items()}
        self.values = {}
        for key, (val, ln, col) in section.items():
            caster = SCHEMAS[subcommand][key]
            try:
                self.values[key] = caster(val)
            except ValueError as exc:
                raise errors.ConfigParse(f"bad value for {key!r}: {exc}", ln, col)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise errors.ConfigParse(
                f"missing required key {key!r} for subcommand {self.subcommand!r}"
            )
        return self.values[key]


# ------------------------------------------------------------- artifacts

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(out_dir, subcommand, params, seed, outputs):
    manifest = {
        "tool": "wbl",
        "version": __version__,
        "subcommand": subcommand,
        "seed": seed,
        "config": {subcommand: dict(sorted(params.raw.items()))},
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "outputs": {name: _sha256(out_dir / name) for name in sorted(outputs)},
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _load_mesh(path):
    # malformed OBJ content is an input problem, not a numeric one
    try:
        positions, faces = read_obj(path)
    except ValueError as exc:
        raise OSError(str(exc))
    return build_mesh(positions, faces)


# ----------------------------------------------------------- subcommands

def _resolution(params, default_r=48, default_a=None):
    n_r = params.get("n_radial")
    n_a = params.get("n_axial")
    tel = params.get("target_edge_length")
    if n_r is None and n_a is None and tel is None:
        return analytic.MeshRecipe(n_radial=default_r, n_axial=default_a)
    return analytic.MeshRecipe(n_radial=n_r, n_axial=n_a, target_edge_length=tel)


def _cmd_generate(params, out_dir, seed, jobs):
    surface = params.require("surface")
    name = params.get("mesh_out", "mesh.obj")
    if surface == "disk":
        mesh = analytic.flat_disk(params.get("r", 1.0), _resolution(params, 48, 12))
    elif surface == "icosphere":
        mesh = analytic.icosphere(
            params.get("center", (0.0, 0.0, 0.0)),
            params.get("radius", 1.0),
            params.get("subdiv", 3),
        )
    elif surface == "cylinder":
        mesh = analytic.cylinder_mesh(
            params.require("R"), params.require("h"), _resolution(params, 48, 16)
        )
    elif surface == "catenoid":
        mesh = analytic.catenoid_mesh(
            params.require("R"), params.require("h"), _resolution(params, 48, 16)
        )
    elif surface == "truncated_sphere":
        mesh = analytic.truncated_sphere_mesh(
            params.require("R"), params.require("h"), _resolution(params, 48, 32)
        )
    else:
        raise errors.ConfigParse(f"unknown surface {surface!r}")
    write_obj(mesh, out_dir / name)
    print(f"{surface}: {mesh.vertex_count} vertices, {mesh.face_count} faces -> {name}")
    return [name]


def _cmd_energy(params, out_dir, seed, jobs):
    mesh = _load_mesh(params.require("mesh"))
    w = willmore_energy(mesh)
    blen = 0.0 if mesh.is_closed else mesh.boundary_length
    _write_csv(
        out_dir / "energy.csv",
        [
            "willmore",
            "area",
            "boundary_length",
            "gauss_bonnet_residual",
            "euler_characteristic",
            "vertices",
            "faces",
        ],
        [
            [
                w,
                mesh.total_area,
                blen,
                gauss_bonnet_residual(mesh),
                mesh.euler_characteristic,
                mesh.vertex_count,
                mesh.face_count,
            ]
        ],
    )
    print(f"willmore = {w:.12g}")
    return ["energy.csv"]


def _cmd_monotonicity(params, out_dir, seed, jobs):
    mesh = _load_mesh(params.require("mesh"))
    base = np.asarray(params.require("base_point"))
    rho_min = params.require("rho_min")
    rho_max = params.require("rho_max")
    n = params.get("n_radii", 12)
    if not 0 < rho_min < rho_max:
        raise errors.ConfigParse("need 0 < rho_min < rho_max")
    if n < 2:
        raise errors.ConfigParse("n_radii must be >= 2")
    radii = np.geomspace(rho_min, rho_max, n)
    profile = monotonicity.monotone_profile(mesh, base, radii, tau=params.get("tau"))
    flags = np.zeros(len(radii), dtype=bool)
    for k, *_ in profile.violations:
        flags[k + 1] = True
    rows = [
        [
            profile.radii[i],
            profile.area_ratio[i],
            profile.energy_term[i],
            profile.curvature_remainder[i],
            profile.boundary_remainder[i],
            profile.totals[i],
            flags[i],
        ]
        for i in range(len(radii))
    ]
    _write_csv(
        out_dir / "monotonicity.csv",
        [
            "rho",
            "area_ratio",
            "energy_term",
            "curvature_remainder",
            "boundary_remainder",
            "A",
            "violation_flag",
        ],
        rows,
    )
    print(
        f"A(rho): {profile.totals[0]:.6g} -> {profile.totals[-1]:.6g}, "
        f"{len(profile.violations)} violations"
    )
    return ["monotonicity.csv"]


def _flow_config(params):
    kwargs = {}
    for key in (
        "max_iters",
        "initial_step",
        "backtrack",
        "armijo",
        "grad_tol",
        "eps_flow",
        "preconditioner",
    ):
        if params.get(key) is not None:
            kwargs[key] = params.get(key)
    return optimizer.FlowConfig(**kwargs)


def _cmd_minimize(params, out_dir, seed, jobs):
    mesh = _load_mesh(params.require("mesh"))
    mode = params.get("mode", "navier")
    if mode == "navier":
        bc = optimizer.BoundaryCondition.navier()
    elif mode == "clamped":
        bc = optimizer.BoundaryCondition.clamped_from_mesh(
            mesh, weight=params.get("weight", 1.0)
        )
    else:
        raise errors.ConfigParse(f"unknown mode {mode!r}")
    final, trace = optimizer.minimize(mesh, bc, _flow_config(params))
    name = params.get("mesh_out", "final.obj")
    write_obj(final, out_dir / name)
    rows = [
        [
            i,
            trace.objective[i],
            trace.willmore[i],
            trace.penalty[i],
            trace.grad_norm[i],
            trace.step[i],
        ]
        for i in range(len(trace))
    ]
    _write_csv(
        out_dir / "trace.csv",
        ["iter", "objective", "willmore", "penalty", "grad_norm", "step"],
        rows,
    )
    print(
        f"objective {trace.objective[0]:.6g} -> {trace.objective[-1]:.6g} "
        f"in {len(trace) - 1} steps ({trace.termination_reason})"
    )
    return [name, "trace.csv"]


def _cmd_hausdorff(params, out_dir, seed, jobs):
    sample_a = metrics.PointSample.from_mesh(_load_mesh(params.require("mesh_a")), "a")
    sample_b = metrics.PointSample.from_mesh(_load_mesh(params.require("mesh_b")), "b")
    d = metrics.hausdorff_distance(sample_a, sample_b)
    _write_csv(
        out_dir / "hausdorff.csv",
        ["hausdorff", "density_a", "density_b"],
        [[d, sample_a.density, sample_b.density]],
    )
    print(f"hausdorff = {d:.12g}")
    return ["hausdorff.csv"]


def _cmd_diagnose(params, out_dir, seed, jobs):
    mesh = _load_mesh(params.require("mesh"))
    mode = params.get("mode", "by_diameter")
    rep = metrics.rescale_diagnostics(mesh, mode=mode, h=params.get("h"))
    _write_csv(
        out_dir / "diagnose.csv",
        [
            "mode",
            "diameter",
            "willmore_gap",
            "boundary_ratio",
            "rms_residual",
            "max_residual",
            "fitted_diameter",
        ],
        [
            [
                rep.mode,
                rep.diameter,
                rep.willmore_gap,
                rep.boundary_ratio,
                rep.fit.rms_residual,
                rep.fit.max_residual,
                "" if rep.fitted_diameter is None else rep.fitted_diameter,
            ]
        ],
    )
    print(f"{mode}: rms {rep.fit.rms_residual:.6g}, diameter {rep.diameter:.6g}")
    return ["diagnose.csv"]


def _cmd_threshold(params, out_dir, seed, jobs):
    big_r = params.require("R")
    h0 = analytic.catenoid_critical_height(big_r)
    _write_csv(out_dir / "threshold.csv", ["R", "h0"], [[big_r, h0]])
    print(f"h0 = {h0:.12g}")
    return ["threshold.csv"]


def _sweep_row(big_r, h, recipe, cfg, row_dir, write_meshes):
    start = time.perf_counter()
    h0 = analytic.catenoid_critical_height(big_r)
    kind = "catenoid" if h <= h0 else "truncated_sphere"
    if kind == "catenoid":
        mesh = analytic.catenoid_mesh(big_r, h, recipe)
    else:
        mesh = analytic.truncated_sphere_mesh(big_r, h, recipe)
    w0 = willmore_energy(mesh)
    final, trace = optimizer.minimize(mesh, optimizer.BoundaryCondition.navier(), cfg)
    wf = float(trace.willmore[-1])
    rep = metrics.rescale_diagnostics(final)
    if write_meshes:
        row_dir.mkdir(parents=True, exist_ok=True)
        write_obj(final, row_dir / "final.obj")
    bound = analytic.truncated_sphere_energy(big_r, h)
    return {
        "R": big_r,
        "h": h,
        "initial_kind": kind,
        "initial_willmore": w0,
        "final_willmore": wf,
        "ts_bound": bound,
        "below_four_pi": wf < 4.0 * np.pi,
        "sphere_fit_rms": rep.fit.rms_residual,
        "status": "ok",
        "runtime": time.perf_counter() - start,
    }


def _cmd_sweep(params, out_dir, seed, jobs):
    r_values = params.require("R_values")
    h_values = params.require("h_values")
    recipe = _resolution(params, 40, 48)
    cfg = _flow_config(params)
    write_meshes = params.get("write_meshes", False)
    grid = sorted((r, h) for r in r_values for h in h_values)

    def run_row(pair):
        big_r, h = pair
        row_dir = out_dir / "rows" / f"R={_fmt(big_r)}_h={_fmt(h)}"
        try:
            return _sweep_row(big_r, h, recipe, cfg, row_dir, write_meshes)
        except (errors.WblError,) as exc:
            return {
                "R": big_r,
                "h": h,
                "initial_kind": "",
                "initial_willmore": "",
                "final_willmore": "",
                "ts_bound": "",
                "below_four_pi": "",
                "sphere_fit_rms": "",
                "status": type(exc).__name__,
                "runtime": 0.0,
            }

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_row, grid))
    else:
        results = [run_row(pair) for pair in grid]
    results.sort(key=lambda row: (row["R"], row["h"]))

    cols = [
        "R",
        "h",
        "initial_kind",
        "initial_willmore",
        "final_willmore",
        "ts_bound",
        "below_four_pi",
        "sphere_fit_rms",
        "status",
    ]
    _write_csv(out_dir / "sweep.csv", cols, [[row[c] for c in cols] for row in results])
    # wall-clock timings are inherently nondeterministic: separate file,
    # excluded from the manifest so reruns stay byte-comparable
    _write_csv(
        out_dir / "timings.csv",
        ["R", "h", "runtime_seconds"],
        [[row["R"], row["h"], row["runtime"]] for row in results],
    )
    n_ok = sum(1 for row in results if row["status"] == "ok")
    print(f"sweep: {n_ok}/{len(results)} rows ok -> sweep.csv")
    return ["sweep.csv"]


_COMMANDS = {
    "generate": _cmd_generate,
    "energy": _cmd_energy,
    "monotonicity": _cmd_monotonicity,
    "minimize": _cmd_minimize,
    "hausdorff": _cmd_hausdorff,
    "diagnose": _cmd_diagnose,
    "threshold": _cmd_threshold,
    "sweep": _cmd_sweep,
}


# ------------------------------------------------------------------ main

def _run(subcommand, section, out_dir, seed, jobs):
    params = Params(subcommand, section)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = _COMMANDS[subcommand](params, out_dir, seed, jobs)
    _write_manifest(out_dir, subcommand, params, seed, outputs)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wbl",
        description="Willmore-energy experiments on meshes with boundary",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None)
        p.add_argument("--out", type=Path, default=Path("."))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("overrides", nargs="*", metavar="key=value")
    rerun = sub.add_parser("rerun")
    rerun.add_argument("--manifest", type=Path, required=True)
    rerun.add_argument("--out", type=Path, default=None)
    rerun.add_argument("--jobs", type=int, default=1)

    args = parser.parse_args(argv)

    try:
        if args.subcommand == "rerun":
            manifest = json.loads(args.manifest.read_text())
            name = manifest["subcommand"]
            if name not in _COMMANDS:
                raise errors.ConfigParse(f"manifest names unknown subcommand {name!r}")
            section = {
                k: (v, None, None) for k, v in manifest["config"][name].items()
            }
            out_dir = args.out if args.out is not None else args.manifest.parent
            return _run(name, section, out_dir, manifest.get("seed", 0), args.jobs)

        sections = {}
        if args.config is not None:
            sections = parse_config(args.config.read_text())
        section = sections.get(args.subcommand, {})
        _apply_overrides(section, args.overrides, args.subcommand)
        return _run(args.subcommand, section, args.out, args.seed, args.jobs)
    except (errors.ConfigParse, errors.InvalidConfig) as exc:
        print(f"wbl: config error: {exc}", file=sys.stderr)
        return 2
    except _NUMERIC_ERRORS as exc:
        print(f"wbl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"wbl: i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
