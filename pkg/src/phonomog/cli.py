"""Command-line front end.

Subcommands ``moduli``, ``sweep``, ``convergence`` and ``bounds`` read an INI
run description (see ``configs/``) and write CSV. Displayed units: GPa for
stiffness, g/cm^3 for density, mm/us for speed (1 mm/us = 1000 m/s).

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace

import numpy as np

from . import homogenize as hz
from .cell import BAR, EPOXY, GPA, G_PER_CC, MM_PER_US, STEEL, TILDE, Material, UnitCell
from .errors import ConfigError, MaterialError, PhonomogError, PhonomogWarning
from .tensors import CANONICAL_DIRECTIONS, full_from_voigt

log = logging.getLogger("phonomog")

PRESETS = {"steel": STEEL, "epoxy": EPOXY}
SHAPES = ("homogeneous", "cube", "sphere", "spheroid", "laminate", "voxels")
VOIGT_NAMES = [f"c{i + 1}{j + 1}" for i in range(6) for j in range(i, 6)]


@dataclass
class RunConfig:
    matrix: Material
    inclusion: Material
    shape: str
    params: dict
    lattice: np.ndarray
    methods: tuple = (hz.MM,)
    n_list: tuple = (0, 1, 2)
    directions: np.ndarray = field(default_factory=lambda: CANONICAL_DIRECTIONS.copy())
    mm_opts: dict = field(default_factory=dict)
    formulation: str = BAR
    sweep_parameter: str | None = None
    sweep_grid: tuple = ()
    out: str | None = None
    strict: bool = False

    def cell(self, **override) -> UnitCell:
        p = {**self.params, **override}
        m, i, A = self.matrix, self.inclusion, self.lattice
        if self.shape == "homogeneous":
            return UnitCell.homogeneous(m, A)
        if self.shape == "cube":
            if "fraction" in p:
                return UnitCell.cube_fraction(m, i, p["fraction"], A)
            return UnitCell.cube(m, i, p["side"], A)
        if self.shape == "sphere":
            return UnitCell.sphere(m, i, p["diameter"], A)
        if self.shape == "spheroid":
            return UnitCell.spheroid(m, i, p["a"], A)
        if self.shape == "laminate":
            return UnitCell.laminate(m, i, p["fraction"], int(p.get("axis", 0)))
        if self.shape == "voxels":
            return UnitCell.voxels(m, i, np.load(p["voxel_file"]), A)
        raise ConfigError(f"cell.shape: unknown shape {self.shape!r}")


# -- parsing ----------------------------------------------------------------


def _floats(text: str, name: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(";", ",").replace(" ", ",").split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected numbers, got {text!r}") from None


def _positive(sec, key: str, name: str) -> float:
    try:
        v = sec.getfloat(key)
    except ValueError:
        raise ConfigError(f"{name}: not a number") from None
    if v is None:
        raise ConfigError(f"{name}: missing")
    if not np.isfinite(v) or v <= 0.0:
        raise ConfigError(f"{name}: must be positive, got {v}")
    return v


def _material(cp: configparser.ConfigParser, section: str) -> Material:
    if not cp.has_section(section):
        raise ConfigError(f"[{section}] section missing")
    sec = cp[section]
    preset = sec.get("preset")
    if preset:
        if preset.lower() not in PRESETS:
            raise ConfigError(f"{section}.preset: unknown preset {preset!r}")
        return PRESETS[preset.lower()]
    rho = _positive(sec, "rho", f"{section}.rho") * G_PER_CC
    try:
        if "voigt" in sec:
            v = np.array(_floats(sec["voigt"], f"{section}.voigt"))
            if v.size != 36:
                raise ConfigError(f"{section}.voigt: need 36 entries, got {v.size}")
            return Material(full_from_voigt(v.reshape(6, 6) * GPA), rho)
        c11 = _positive(sec, "c11", f"{section}.c11")
        c66 = _positive(sec, "c66", f"{section}.c66")
        return Material.from_display(c11, c66, rho / G_PER_CC)
    except PhonomogError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[{section}]: {exc}") from None


def _methods(text: str) -> tuple:
    text = text.strip().lower()
    if text == "both":
        return (hz.MM, hz.PWE)
    parts = tuple(x.strip() for x in text.split(",") if x.strip())
    for p in parts:
        if p not in hz.METHODS:
            raise ConfigError(f"solver.method: unknown method {p!r}")
    if not parts:
        raise ConfigError("solver.method: empty")
    return parts


def _n_list(text: str) -> tuple:
    try:
        ns = tuple(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        raise ConfigError(f"solver.n_list: expected integers, got {text!r}") from None
    if not ns or min(ns) < 0:
        raise ConfigError("solver.n_list: need one or more non-negative integers")
    return ns


def load_config(path: str) -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(cp)


def parse_config(cp: configparser.ConfigParser) -> RunConfig:
    matrix = _material(cp, "matrix")
    if not cp.has_section("cell"):
        raise ConfigError("[cell] section missing")
    cs = cp["cell"]
    shape = cs.get("shape", "homogeneous").strip().lower()
    if shape not in SHAPES:
        raise ConfigError(f"cell.shape: unknown shape {shape!r}")
    inclusion = matrix if shape == "homogeneous" else _material(cp, "inclusion")
    params = {}
    for key in ("side", "fraction", "diameter", "a", "axis"):
        if key in cs:
            vals = _floats(cs[key], f"cell.{key}")
            if len(vals) != 1 or vals[0] < 0.0:
                raise ConfigError(f"cell.{key}: expected one non-negative number")
            params[key] = vals[0]
    if "voxel_file" in cs:
        params["voxel_file"] = cs["voxel_file"]
    lattice = np.eye(3)
    if "lattice" in cs:
        v = _floats(cs["lattice"], "cell.lattice")
        if len(v) != 9:
            raise ConfigError("cell.lattice: need 9 entries (row-major)")
        lattice = np.array(v).reshape(3, 3)

    sv = cp["solver"] if cp.has_section("solver") else {}
    methods = _methods(sv.get("method", "mm"))
    n_list = _n_list(sv.get("n_list", "0,1,2"))
    mm_opts = {}
    try:
        if "alpha" in sv:
            mm_opts["alpha"] = complex(sv["alpha"].replace(" ", ""))
        if "steps" in sv:
            mm_opts["steps"] = int(sv["steps"])
        if "rtol" in sv:
            mm_opts["rtol"] = float(sv["rtol"])
        if "max_steps" in sv:
            mm_opts["max_steps"] = int(sv["max_steps"])
    except ValueError as exc:
        raise ConfigError(f"[solver]: {exc}") from None
    if mm_opts.get("steps", 1) < 1 or mm_opts.get("rtol", 1.0) <= 0.0:
        raise ConfigError("solver.steps/rtol: must be positive")
    formulation = sv.get("formulation", BAR)
    if formulation not in (BAR, TILDE):
        raise ConfigError(f"solver.formulation: unknown formulation {formulation!r}")

    directions = CANONICAL_DIRECTIONS.copy()
    if cp.has_section("directions") and "list" in cp["directions"]:
        rows = [r for r in cp["directions"]["list"].split(";") if r.strip()]
        dirs = [_floats(r, "directions.list") for r in rows]
        if not dirs or any(len(d) != 3 for d in dirs):
            raise ConfigError("directions.list: need 3-vectors separated by ';'")
        directions = np.array(dirs)
        if np.any(np.linalg.norm(directions, axis=1) == 0.0):
            raise ConfigError("directions.list: zero vector")

    sweep_parameter, grid = None, ()
    if cp.has_section("sweep"):
        sw = cp["sweep"]
        sweep_parameter = sw.get("parameter")
        grid = tuple(_floats(sw.get("grid", ""), "sweep.grid"))
    out = cp["output"].get("path") if cp.has_section("output") else None
    cfg = RunConfig(
        matrix, inclusion, shape, params, lattice, methods, n_list, directions,
        mm_opts, formulation, sweep_parameter, grid, out,
    )
    try:
        cfg.cell()
    except (ValueError, KeyError, PhonomogError) as exc:
        raise ConfigError(f"[cell]: {exc}") from None
    return cfg


# -- formatting ---------------------------------------------------------------


def _fmt(x) -> str:
    return f"{float(np.real(x)):.10g}"


def _write(rows: list[list], header: list[str], out: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([r_ if isinstance(r_, str) else _fmt(r_) for r_ in r])
    text = buf.getvalue()
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _voigt_entries(v: np.ndarray) -> list[float]:
    return [v[i, j] / GPA for i in range(6) for j in range(i, 6)]


# -- workers (module level so they pickle) -------------------------------------


@contextmanager
def _strictness(strict: bool):
    """Warning filter for one job; worker processes do not inherit the parent's."""
    with warnings.catch_warnings():
        if strict:
            warnings.simplefilter("error", PhonomogWarning)
        yield


def _moduli_job(args):
    cfg, method, N = args
    with _strictness(cfg.strict):
        res = hz.effective_moduli(cfg.cell(), method, N, cfg.formulation, cfg.strict, **cfg.mm_opts)
        sp = [_direction_speeds(res, d) / MM_PER_US for d in cfg.directions]
    return res.voigt, res.mean_rho, sp, res.diagnostics


def _direction_speeds(res, d: np.ndarray) -> np.ndarray:
    """Speeds along ``d``; NaN with a warning where the symmetrized tensor is indefinite."""
    try:
        return hz.speeds(res, d / np.linalg.norm(d))
    except MaterialError as exc:
        warnings.warn(f"no speeds along {d.tolist()}: {exc}", PhonomogWarning, stacklevel=2)
        return np.full(3, np.nan)


def _sweep_job(args):
    cfg, param, value = args
    with _strictness(cfg.strict):
        return _sweep_row(cfg, param, value)


def _sweep_row(cfg: RunConfig, param: str, value: float) -> list:
    key = {"fraction": "fraction", "aspect": "a"}[param]
    cell = cfg.cell(**{key: value})
    rho = cell.mean_density()
    row = [value]
    for method in cfg.methods:
        for N in cfg.n_list:
            g = hz.principal_gamma(cell, method, N, 0, **cfg.mm_opts)
            sp = hz.speeds_from_gamma(g, rho) / MM_PER_US
            row += [sp[-1], sp[0], g[0, 0].real / GPA, g[1, 1].real / GPA]
    b = hz.mm_zero_bound(cell)
    e1 = np.array([1.0, 0.0, 0.0])
    sb, sv = b.speeds_b(e1) / MM_PER_US, b.speeds_voigt(e1) / MM_PER_US
    row += [sb[-1], sb[0], sv[-1], sv[0]]
    hs = hz._hs_or_none(cell)
    row += [hs.cl[0] / MM_PER_US, hs.ct[0] / MM_PER_US] if hs else ["", ""]
    return row


def _pool_map(fn, jobs_args, jobs: int):
    if jobs <= 1 or len(jobs_args) <= 1:
        return [fn(a) for a in jobs_args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, jobs_args))


# -- subcommands ------------------------------------------------------------------


def cmd_moduli(cfg: RunConfig, jobs: int, out: str | None) -> int:
    combos = [(cfg, m, N) for m in cfg.methods for N in cfg.n_list]
    results = _pool_map(_moduli_job, combos, jobs)
    nd = len(cfg.directions)
    header = ["method", "N"] + VOIGT_NAMES + ["rho"]
    header += [f"d{k + 1}_c{a}" for k in range(nd) for a in (1, 2, 3)] + ["skew", "redraws"]
    rows = []
    for (_, m, N), (v, rho, sp, diag) in zip(combos, results):
        row = [m, str(N)] + _voigt_entries(v) + [rho / G_PER_CC]
        row += [x for s in sp for x in s] + [f"{diag['skew']:.3e}", str(diag.get("redraws", 0))]
        rows.append(row)
    _write(rows, header, out)
    return 0


def cmd_sweep(cfg: RunConfig, jobs: int, out: str | None) -> int:
    param = cfg.sweep_parameter
    if param not in ("fraction", "aspect"):
        raise ConfigError("sweep.parameter: must be 'fraction' or 'aspect'")
    if not cfg.sweep_grid:
        raise ConfigError("sweep.grid: empty grid")
    if param == "fraction" and cfg.shape not in ("cube", "laminate"):
        raise ConfigError("sweep.parameter: 'fraction' needs a cube or laminate cell")
    if param == "aspect" and cfg.shape != "spheroid":
        raise ConfigError("sweep.parameter: 'aspect' needs a spheroid cell")
    if any(not 0.0 <= g <= 1.0 for g in cfg.sweep_grid):
        raise ConfigError("sweep.grid: values must lie in [0, 1]")
    if not cfg.lattice.shape == (3, 3) or not np.allclose(cfg.lattice, np.eye(3)):
        raise ConfigError("sweep: only cubic lattices are supported")
    rows = _pool_map(_sweep_job, [(cfg, param, g) for g in cfg.sweep_grid], jobs)
    header = [param]
    for m in cfg.methods:
        for N in cfg.n_list:
            header += [f"{m}{N}_cl", f"{m}{N}_ct", f"{m}{N}_c11", f"{m}{N}_c66"]
    header += ["mm0bound_cl", "mm0bound_ct", "voigt_cl", "voigt_ct", "hs_lower_cl", "hs_lower_ct"]
    _write(rows, header, out)
    return 0


def cmd_convergence(cfg: RunConfig, jobs: int, out: str | None) -> int:
    cell = cfg.cell()
    kappa = cfg.directions[0]
    rows = []
    for r in hz.convergence_study(cell, cfg.methods, cfg.n_list, kappa, **cfg.mm_opts):
        sp = r["speeds"] / MM_PER_US
        rows.append(
            [r["method"], str(r["N"]), str(r["matrix_side"]), f"{r['seconds']:.3f}", r["residual"]]
            + list(sp)
            + list(r["bound_speeds"] / MM_PER_US)
            + list(r["voigt_speeds"] / MM_PER_US)
        )
    header = ["method", "N", "matrix_side", "seconds", "residual", "c1", "c2", "c3"]
    header += ["bound_c1", "bound_c2", "bound_c3", "voigt_c1", "voigt_c2", "voigt_c3"]
    _write(rows, header, out)
    return 0


def cmd_bounds(cfg: RunConfig, jobs: int, out: str | None) -> int:
    cell = cfg.cell()
    b = hz.mm_zero_bound(cell)
    hs = hz._hs_or_none(cell)
    rows = []
    for d in cfg.directions:
        k = d / np.linalg.norm(d)
        row = list(k) + list(b.speeds_b_or_nan(k) / MM_PER_US) + list(b.speeds_voigt(k) / MM_PER_US)
        if hs:
            row += [x / MM_PER_US for x in (*hs.cl, *hs.ct)]
        else:
            row += ["", "", "", ""]
        rows.append(row)
    header = ["k1", "k2", "k3", "bound_c1", "bound_c2", "bound_c3", "voigt_c1", "voigt_c2", "voigt_c3"]
    header += ["hs_lower_cl", "hs_upper_cl", "hs_lower_ct", "hs_upper_ct"]
    _write(rows, header, out)
    return 0


COMMANDS = {
    "moduli": cmd_moduli,
    "sweep": cmd_sweep,
    "convergence": cmd_convergence,
    "bounds": cmd_bounds,
}


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="phonomog", description="Quasistatic effective moduli of periodic elastic composites.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="INI run description")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    p.add_argument("--out", help="CSV path (default: config output.path, else stdout)")
    p.add_argument("--method", help="mm, pwe or both (overrides the config)")
    p.add_argument("--n-list", help="comma-separated truncations (overrides the config)")
    p.add_argument("--strict", action="store_true", help="treat numerical warnings as errors")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("PHONOMOG_LOG", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgError as exc:
        print(f"phonomog: error: {exc}", file=sys.stderr)
        return 2
    with warnings.catch_warnings():
        if args.strict:
            warnings.simplefilter("error", PhonomogWarning)
        try:
            cfg = load_config(args.config)
            if args.method:
                cfg = replace(cfg, methods=_methods(args.method))
            if args.n_list:
                cfg = replace(cfg, n_list=_n_list(args.n_list))
            if args.jobs < 1:
                raise ConfigError("--jobs: must be at least 1")
            cfg = replace(cfg, strict=args.strict)
            return COMMANDS[args.command](cfg, args.jobs, args.out or cfg.out)
        except ConfigError as exc:
            print(f"phonomog: config error: {exc}", file=sys.stderr)
            return 2
        except (PhonomogError, PhonomogWarning, np.linalg.LinAlgError) as exc:
            print(f"phonomog: numerical failure in {_origin(exc)}: {exc}", file=sys.stderr)
            return 3


def _origin(exc: BaseException) -> str:
    tb = exc.__traceback__
    mod = "phonomog"
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("phonomog."):
            mod = name
        tb = tb.tb_next
    return mod


if __name__ == "__main__":
    sys.exit(main())
