"""Command-line front end driven by JSON scenario files.

Every physical quantity in a scenario carries its unit explicitly, e.g.
``{"value": 1.71, "unit": "angstrom"}``; bare numbers are rejected.  Output
files are written once, at the end of a successful run.

Exit codes: 0 success, 2 malformed input or usage, 3 material lookup,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .dielectric import (MaterialError, OscillatorModel, PolarizabilityModel, load_material,
                         material_to_dict, resolve_data_file)
from .forces import (BOUNDARY_MODELS, INNER_REL_TOL, REL_TOL, XI_SCALE, CasimirScenario, CurveTable,
                     VdwScenario, relative_curves)
from .greens import KAPPA_CUTOFF, QuadratureError
from .multilayer import ReflectionError
from .profiles import (ANGSTROM, CavityFit, DensityConvergenceError, DensityFitError, ProfileKind,
                       fit_density, load_density_samples)
from .riccati import (FIT_EPS_INNER, FIT_EPS_OUTER, FIT_GRID, REFERENCE_SURROGATES, SurrogateFitError,
                      cached_surrogate)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MATERIAL = 3
EXIT_NUMERIC = 4

MODES = ("vdw", "casimir", "riccati-fit", "density-fit")
DEFAULT_CACHE = "surrogate_cache.json"

_LENGTH = {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9, "angstrom": ANGSTROM,
           "a": ANGSTROM, "å": ANGSTROM, "pm": 1e-12}
_TRANSMISSION = {"closed": "closed", "series": "series", "eq17": "closed", "eq16": "series"}


class ScenarioError(ValueError):
    """The scenario file is malformed or inconsistent."""


class NumericFailure(RuntimeError):
    pass


# -- scenario parsing ---------------------------------------------------------------


def _unit_factor(unit: str, inverse: bool) -> float:
    u = str(unit).strip().lower().replace("Å", "å")
    if inverse:
        for prefix in ("1/", "per "):
            if u.startswith(prefix):
                u = u[len(prefix):].strip()
                break
        else:
            if u.endswith("^-1"):
                u = u[:-3]
            else:
                raise ScenarioError(f"expected an inverse length unit such as '1/angstrom', got {unit!r}")
    if u not in _LENGTH:
        raise ScenarioError(f"unknown length unit {unit!r}")
    f = _LENGTH[u]
    return 1.0 / f if inverse else f


def quantity(doc: dict, key: str, inverse: bool = False, required: bool = True) -> float | None:
    """SI value of ``doc[key]``, which must be ``{"value": x, "unit": u}``."""
    if key not in doc:
        if required:
            raise ScenarioError(f"missing quantity {key!r}")
        return None
    q = doc[key]
    if not isinstance(q, dict) or set(q) != {"value", "unit"}:
        raise ScenarioError(f"{key!r} must be an object with exactly 'value' and 'unit'")
    v = q["value"]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ScenarioError(f"{key!r}: value must be a finite number")
    return float(v) * _unit_factor(q["unit"], inverse)


def l_grid(doc: dict) -> np.ndarray:
    g = doc.get("l_grid")
    if not isinstance(g, dict):
        raise ScenarioError("missing 'l_grid' object")
    lo, hi = quantity(g, "min"), quantity(g, "max")
    n = g.get("points")
    spacing = g.get("spacing", "log")
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise ScenarioError("l_grid.points must be an integer >= 2")
    if not 0 < lo < hi:
        raise ScenarioError("l_grid needs 0 < min < max")
    if spacing == "log":
        return np.geomspace(lo, hi, n)
    if spacing == "linear":
        return np.linspace(lo, hi, n)
    raise ScenarioError("l_grid.spacing must be 'log' or 'linear'")


def _material(ref, base: Path, kind):
    if not isinstance(ref, str):
        raise ScenarioError("material references must be file names")
    model = load_material(ref, base)
    if not isinstance(model, kind):
        raise MaterialError(f"{ref!r} is not a {'polarizability' if kind is PolarizabilityModel else 'permittivity'} model")
    return model


def _cavity(geom: dict) -> CavityFit:
    R_C = quantity(geom, "R_C")
    slope = quantity(geom, "slope", inverse=True, required=False)
    a_lin = quantity(geom, "a_linear", required=False)
    if (slope is None) == (a_lin is None):
        raise ScenarioError("geometry needs exactly one of 'slope' or 'a_linear'")
    if slope is None:
        slope = 2.0 / a_lin
    try:
        return CavityFit(R_C=R_C, slope=slope)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def _models(doc: dict) -> list[str]:
    models = doc.get("profiles", list(BOUNDARY_MODELS))
    if not isinstance(models, list) or not models:
        raise ScenarioError("'profiles' must be a non-empty list")
    return models


def _surrogates(doc: dict, cache: Path) -> dict:
    source = doc.get("surrogate", "reference")
    if source == "reference":
        return dict(REFERENCE_SURROGATES)
    if source == "fit":
        return {k: cached_surrogate(k, cache)[0] for k in (ProfileKind.LINEAR, ProfileKind.THOMAS_FERMI)}
    raise ScenarioError("'surrogate' must be 'reference' or 'fit'")


def build_scenario(doc: dict, base: Path, cache: Path, transmission: str | None = None,
                   tol: float | None = None):
    """Resolve a vdw or casimir scenario document into (scenario, l grid, models)."""
    mode = doc["mode"]
    mats = doc.get("materials")
    if not isinstance(mats, dict):
        raise ScenarioError("missing 'materials' object")
    geom = doc.get("geometry")
    if not isinstance(geom, dict):
        raise ScenarioError("missing 'geometry' object")
    grid, models = l_grid(doc), _models(doc)
    cavity = _cavity(geom)
    medium = _material(mats.get("medium"), base, OscillatorModel)
    rel_tol = REL_TOL if tol is None else tol
    if not 0 < rel_tol < 1:
        raise ScenarioError("tolerance must lie in (0, 1)")
    try:
        if mode == "vdw":
            a = _material(mats.get("particle_a"), base, PolarizabilityModel)
            b = _material(mats.get("particle_b", mats.get("particle_a")), base, PolarizabilityModel)
            trans = _TRANSMISSION[transmission or doc.get("transmission", "closed")]
            scn = VdwScenario(a, b, medium, cavity, transmission=trans, axis=doc.get("axis", "layer"),
                              rel_tol=rel_tol)
        else:
            particle = _material(mats.get("particle"), base, PolarizabilityModel)
            spacing = quantity(geom, "spacing", required=False)
            scn = CasimirScenario(particle, medium, cavity, quantity(geom, "d_1"), quantity(geom, "d_2"),
                                  spacing=spacing, reflection=doc.get("reflection", "closed"),
                                  rel_tol=rel_tol)
        for m in models:
            replace(scn, boundary=m)
    except KeyError as exc:
        raise ScenarioError(f"unknown transmission form {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, MaterialError):
            raise
        raise ScenarioError(str(exc)) from None
    surrogates = _surrogates(doc, cache) if any(m in ("linear", "thomas-fermi", "tf") for m in models) \
        else dict(REFERENCE_SURROGATES)
    return replace(scn, surrogates=surrogates), grid, models


def read_scenario(path: Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: top level must be an object")
    if doc.get("mode") not in MODES:
        raise ScenarioError(f"{path}: 'mode' must be one of {MODES}")
    return doc


def find_scenario(name: str) -> Path:
    """A path as given, or a shipped scenario by name."""
    p = Path(name)
    if p.is_file():
        return p
    shipped = Path(__file__).resolve().parent / "data" / "scenarios"
    for cand in (shipped / name, shipped / f"{name}.json"):
        if cand.is_file():
            return cand
    try:
        return resolve_data_file(name)
    except MaterialError:
        raise ScenarioError(f"scenario not found: {name}") from None


# -- manifests and output -----------------------------------------------------------


def _json_default(obj):
    if isinstance(obj, ProfileKind):
        return obj.value
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default, allow_nan=True) + "\n"


def _surrogate_dict(fit) -> dict:
    return {"lambda1": fit.lambda1, "lambda2": fit.lambda2, "fit_rms": fit.fit_rms, "grid_hash": fit.grid_hash}


def manifest(scn, grid: np.ndarray, models: list[str], table: CurveTable, source: str) -> dict:
    """Every parameter that influences the table, in SI units."""
    common = {
        "medium": material_to_dict(scn.medium),
        "cavity": {"R_C_m": scn.cavity.R_C, "slope_per_m": scn.cavity.slope,
                   "a_linear_m": scn.cavity.a_linear, "a_tf_m": scn.cavity.a_tf},
        "surrogates": {k.value: _surrogate_dict(v) for k, v in sorted(scn.surrogates.items(),
                                                                        key=lambda kv: kv[0].value)},
        "quadrature": {"xi_scale_rad_s": scn.xi_scale, "rel_tol": scn.rel_tol,
                       "inner_rel_tol": INNER_REL_TOL, "kappa_cutoff": KAPPA_CUTOFF},
    }
    if isinstance(scn, VdwScenario):
        params = {"mode": "vdw", "particle_a": material_to_dict(scn.particle_a),
                  "particle_b": material_to_dict(scn.particle_b), "transmission": scn.transmission,
                  "axis": scn.axis, **common}
    else:
        params = {"mode": "casimir", "particle": material_to_dict(scn.particle), "d_1_m": scn.d_1,
                  "d_2_m": scn.d_2, "spacing_m": scn.spacing, "reflection": scn.reflection, **common}
    errs = {m: float(np.max(table.column(m, "quad_err"))) for m in table.models()}
    return {
        "tool": "cavityforce",
        "version": __version__,
        "scenario": source,
        "parameters": params,
        "l_grid_m": [float(x) for x in grid],
        "models": list(table.models()),
        "quantity": table.quantity,
        "quad_err_summary": {"max_relative": max(errs.values()), "per_model_max_relative": errs},
    }


def write_outputs(files: dict[Path, str]) -> None:
    """Write all files through temporaries, renaming only once every write succeeded."""
    staged = []
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            staged.append((tmp, path))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, path in staged:
        os.replace(tmp, path)


# -- commands -----------------------------------------------------------------------


def _run_curves(doc, path: Path, args) -> int:
    out = Path(args.out)
    scn, grid, models = build_scenario(doc, path.parent, out / DEFAULT_CACHE, args.cavity_transmission, args.tol)
    table = relative_curves(scn, grid, models, jobs=args.jobs)
    failed = table.failures()
    if failed:
        for row in failed:
            print(f"error: l={row.l:.6g} m, model {row.model}: {row.status}", file=sys.stderr)
        raise NumericFailure(f"{len(failed)} of {len(table.rows)} cells failed")
    stem = Path(doc.get("output", path.stem)).stem
    write_outputs({
        out / f"{stem}.csv": table.csv_text(),
        out / f"{stem}.manifest.json": _dumps(manifest(scn, grid, models, table, path.name)),
    })
    print(out / f"{stem}.csv")
    return EXIT_OK


def _run_riccati_fit(doc, path: Path, args) -> int:
    out = Path(args.out)
    kinds = [ProfileKind.parse(k) for k in doc.get("profiles", ["linear", "thomas-fermi"])]
    if ProfileKind.HARD in kinds:
        raise ScenarioError("the hard profile has no surrogate to fit")
    stem = Path(doc.get("output", path.stem)).stem
    fits = {k: cached_surrogate(k, out / DEFAULT_CACHE)[0] for k in kinds}
    report = {"tool": "cavityforce", "version": __version__, "scenario": path.name,
              "eps_inner": FIT_EPS_INNER, "eps_outer": FIT_EPS_OUTER,
              "ka_grid": {"min": FIT_GRID[0], "max": FIT_GRID[1], "points": FIT_GRID[2], "spacing": "log"},
              "fits": {k.value: _surrogate_dict(v) for k, v in fits.items()}}
    write_outputs({out / f"{stem}.json": _dumps(report)})
    for k, fit in fits.items():
        _print_surrogate(k, fit)
    return EXIT_OK


def _run_density_fit(doc, path: Path, args) -> int:
    samples = doc.get("samples")
    if not isinstance(samples, str):
        raise ScenarioError("density-fit scenarios need a 'samples' file name")
    fit = fit_density(load_density_samples(path.parent / samples))
    stem = Path(doc.get("output", path.stem)).stem
    report = {"tool": "cavityforce", "version": __version__, "scenario": path.name, **_density_dict(fit)}
    write_outputs({Path(args.out) / f"{stem}.json": _dumps(report)})
    _print_density(fit)
    return EXIT_OK


def cmd_run(args) -> int:
    path = find_scenario(args.scenario)
    doc = read_scenario(path)
    if doc["mode"] in ("vdw", "casimir"):
        return _run_curves(doc, path, args)
    if doc["mode"] == "riccati-fit":
        return _run_riccati_fit(doc, path, args)
    return _run_density_fit(doc, path, args)


def _print_surrogate(kind, fit) -> None:
    print(f"{ProfileKind.parse(kind).value}: lambda1={fit.lambda1:.6f} lambda2={fit.lambda2:.6f} "
          f"rms={fit.fit_rms:.6f}")


def cmd_fit_surrogate(args) -> int:
    kind = ProfileKind.parse(args.kind)
    if kind is ProfileKind.HARD:
        raise ScenarioError("the hard profile has no surrogate to fit")
    cache = Path(args.cache) if args.cache else Path(args.out) / DEFAULT_CACHE
    cache.parent.mkdir(parents=True, exist_ok=True)
    fit, hit = cached_surrogate(kind, cache)
    if hit:
        print(f"using cached fit from {cache}", file=sys.stderr)
    _print_surrogate(kind, fit)
    return EXIT_OK


def _density_dict(fit: CavityFit) -> dict:
    return {"R_C_angstrom": fit.R_C / ANGSTROM, "slope_per_angstrom": fit.slope * ANGSTROM,
            "a_linear_angstrom": fit.a_linear / ANGSTROM, "a_tf_angstrom": fit.a_tf / ANGSTROM,
            "residual": fit.residual, "slope_capped": fit.slope_capped}


def _print_density(fit: CavityFit) -> None:
    print(f"R_C = {fit.R_C / ANGSTROM:.4f} angstrom")
    print(f"slope = {fit.slope * ANGSTROM:.4f} 1/angstrom")
    print(f"a_linear = {fit.a_linear / ANGSTROM:.4f} angstrom")
    print(f"a_tf = {fit.a_tf / ANGSTROM:.4f} angstrom")
    if fit.slope_capped:
        print("warning: transition sharper than the sampling; slope pinned at the cap", file=sys.stderr)


def cmd_fit_density(args) -> int:
    fit = fit_density(load_density_samples(args.file))
    _print_density(fit)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cavityforce",
                                description="Dispersion forces in a solvent with graded cavity boundaries.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file (path or shipped name)")
    run.add_argument("scenario")
    run.add_argument("--out", default=".", help="output directory (default: current directory)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for the curve cells")
    run.add_argument("--cavity-transmission", choices=sorted(_TRANSMISSION), default=None,
                     help="cavity transmission: closed form (alias eq17) or summed bounce series (alias eq16)")
    run.add_argument("--tol", type=float, default=None, help=f"relative frequency-quadrature tolerance "
                                                             f"(default {REL_TOL:g})")
    run.set_defaults(func=cmd_run)

    fs = sub.add_parser("fit-surrogate", help="fit the tanh surrogate for a soft profile")
    fs.add_argument("kind", help="linear or thomas-fermi")
    fs.add_argument("--out", default=".", help="directory holding the fit cache")
    fs.add_argument("--cache", default=None, help=f"cache file (default: <out>/{DEFAULT_CACHE})")
    fs.set_defaults(func=cmd_fit_surrogate)

    fd = sub.add_parser("fit-density", help="fit a sigmoid to solvent density samples (z in angstrom)")
    fd.add_argument("file")
    fd.set_defaults(func=cmd_fit_density)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except MaterialError as exc:
        print(f"material error: {exc}", file=sys.stderr)
        return EXIT_MATERIAL
    except DensityConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ScenarioError, DensityFitError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericFailure, QuadratureError, ReflectionError, SurrogateFitError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
