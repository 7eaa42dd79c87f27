"""Command-line front end.

    perlick potential --kappa -1 --l 0.5 -o veff.csv
    perlick bounds --kappa 1 --l 0.25 --E -3
    perlick simulate --kappa -1 --beta 2 --l 0.25 --lz 0.1 --E -6 -o traj.csv
    perlick orbit --kappa 1 --beta 1/3 --lz 0.25 --E -3 -o orbit.csv
    perlick verify --kappa 0 --beta 1 --seed 0 --points 200 -o report.json
    perlick frequencies --kappa -1 --beta 3 --E -6
    perlick sweep -o sweep_dir --jobs 4

Exit codes: 0 success, 1 verification failure, 2 numerical failure,
3 configuration error. ``PERLICK_LOG`` selects quiet, info or debug logging.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
import json
import logging
import math
import os
from pathlib import Path
import sys

import numpy as np

from . import dynamics as dy
from . import kappa_math as km
from . import orbits as ob
from . import poisson as pb
from .errors import ConfigError, IntegrationError, PerlickError
from .model import ModelParams, energy_bounds, effective_potential, turning_points

log = logging.getLogger("perlick")

EXIT_OK, EXIT_VERIFY, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2, 3

TRAJ_COLUMNS = ["t", "xi", "theta", "phi", "p_xi", "p_theta", "p_phi", "H", "L2", "pphi", "reX", "imX", "reY", "imY"]


@dataclass
class RunConfig:
    kappa: float = -1.0
    beta: str = "1"
    E: str = "-6"
    l: float = 0.25
    lz: float = 0.1
    phi_z: float = 0.0
    seed: int = 0
    tol: float = 1e-12
    t_end: float | None = None
    samples: int = 2000
    points: int = 200
    xi_max: float | None = None
    jobs: int = 1
    output: str | None = None
    format: str = "csv"

    @property
    def energies(self):
        return [float(e) for e in str(self.E).split(",") if e.strip()]

    @property
    def energy(self):
        es = self.energies
        if len(es) != 1:
            raise ConfigError("this command takes a single energy")
        return es[0]

    def params(self):
        return ModelParams.from_beta(self.kappa, parse_beta(self.beta))

    def validate(self):
        if not math.isfinite(self.kappa):
            raise ConfigError("kappa must be finite")
        parse_beta(self.beta)
        try:
            self.energies
        except ValueError as exc:
            raise ConfigError(f"bad energy list {self.E!r}") from exc
        if self.l is not None and not self.l > 0:
            raise ConfigError("l must be positive")
        if self.lz is not None and self.lz < 0:
            raise ConfigError("lz must be non-negative")
        if not (1e-14 <= self.tol <= 1e-6):
            raise ConfigError("tol must lie in [1e-14, 1e-6]")
        if self.samples < 2 or self.points < 1 or self.jobs < 1:
            raise ConfigError("samples >= 2, points >= 1 and jobs >= 1 are required")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.t_end is not None and not self.t_end > 0:
            raise ConfigError("t_end must be positive")


def parse_beta(text):
    """'m/n' -> Fraction in lowest terms; integers allowed."""
    try:
        frac = Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"β must look like 'm/n', got {text!r}") from exc
    if frac <= 0:
        raise ConfigError("β must be positive")
    return frac


def read_config_file(path):
    """key=value lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def build_config(args):
    names = {f.name: f for f in fields(RunConfig)}
    values = {}
    if args.config:
        try:
            file_vals = read_config_file(args.config)
        except OSError as exc:
            raise ConfigError(str(exc)) from exc
        for key, value in file_vals.items():
            if key not in names:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = value
    for key in names:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    cfg = RunConfig()
    for key, value in values.items():
        default = getattr(RunConfig, key, None)
        try:
            if key in ("beta", "E", "output", "format"):
                value = str(value)
            elif key in ("seed", "samples", "points", "jobs"):
                value = int(value)
            elif value is not None:
                value = float(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
        setattr(cfg, key, value if value is not None else default)
    cfg.validate()
    return cfg


# output helpers


def fmt(x):
    """17 significant digits, the form used in every output file."""
    return format(float(x), ".17g")


def _json_text(obj, indent=0):
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_json_text(v, indent + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_json_text(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _json_text(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, complex):
        return _json_text([obj.real, obj.imag], indent)
    return json.dumps(str(obj))


def write_json(path, obj):
    text = _json_text(obj) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _sidecar(path, suffix):
    if path is None or path == "-":
        return None
    p = Path(path)
    return str(p.with_name(p.stem + suffix))


def trajectory_rows(traj):
    d = traj.diagnostics
    n = len(traj.times)
    zeros = np.zeros(n, dtype=complex)
    x = d.get("X+", d.get("Z+", zeros))
    y = d.get("Y+", zeros)
    return np.column_stack(
        [traj.times, traj.states, d["H"], d["L2"], d["pphi"], x.real, x.imag, y.real, y.imag]
    )


# commands


def cmd_potential(cfg):
    params = cfg.params()
    b = energy_bounds(params, cfg.l)
    top = km.xi_max(params.kappa)
    if np.isfinite(top):
        edge = 1e-3 * top
        xs = np.linspace(edge, top - edge, cfg.samples)
    else:
        hi = cfg.xi_max or 5.0 * max(1.0, b.xi_circular or 1.0)
        xs = np.linspace(hi / cfg.samples, hi, cfg.samples)
    vs = effective_potential(params, cfg.l, xs)
    meta = {
        "kappa": params.kappa,
        "l": cfg.l,
        "E_min": b.e_min if b.attained else None,
        "E_escape": b.e_escape,
        "xi_circular": b.xi_circular,
        "asymptote": -math.sqrt(-params.kappa) if params.kappa <= 0 else None,
        "grid_min_V": float(np.min(vs)),
        "grid_argmin_xi": float(xs[np.argmin(vs)]),
    }
    if cfg.format == "json":
        write_json(cfg.output, dict(meta, xi=list(xs), V_eff=list(vs)))
    else:
        write_csv(cfg.output, ["xi", "V_eff"], np.column_stack([xs, vs]))
        side = _sidecar(cfg.output, ".meta.json")
        if side:
            write_json(side, meta)
    return EXIT_OK


def cmd_bounds(cfg):
    params = cfg.params()
    b = energy_bounds(params, cfg.l)
    out = {
        "kappa": params.kappa,
        "beta": [params.m, params.n],
        "l": cfg.l,
        "E_min": b.e_min,
        "E_escape": b.e_escape,
        "minimum_attained": b.attained,
        "xi_circular": b.xi_circular,
        "energies": [],
    }
    for E in cfg.energies:
        entry = {"E": E}
        try:
            entry["class"] = ob.classify_orbit(params, E, cfg.l)
            entry["turning_points"] = list(turning_points(params, cfg.l, E).roots)
        except PerlickError as exc:
            entry["error"] = str(exc)
        out["energies"].append(entry)
    write_json(cfg.output, out)
    return EXIT_OK


def _default_horizon(params, cfg, E):
    """Ten radial periods for bounded motion, else ten local orbital times."""
    try:
        return 10.0 * dy.radial_period(params, cfg.l, E)
    except PerlickError:
        xi_in = turning_points(params, cfg.l, E).roots[0]
        return 10.0 * 2 * math.pi * km.sk(params.kappa, xi_in) ** 2 / cfg.l


def simulate(cfg, E=None):
    """Integrate one case and build the JSON summary."""
    params = cfg.params()
    E = cfg.energy if E is None else E
    lz = cfg.l if cfg.lz is None else cfg.lz
    p0 = dy.initial_state(params, E, cfg.l, lz)
    t_end = cfg.t_end or _default_horizon(params, cfg, E)
    t_eval = np.linspace(0.0, t_end, cfg.samples)
    traj = dy.integrate(params, p0, t_end, tol=cfg.tol, t_eval=t_eval)
    summary = {
        "kappa": params.kappa,
        "beta": [params.m, params.n],
        "E": E,
        "l": cfg.l,
        "lz": lz,
        "tol": cfg.tol,
        "t_end": t_end,
        "steps": traj.steps,
        "class": ob.classify_orbit(params, E, cfg.l),
        "initial": list(p0.as_array()),
        "drift": dy.drift_report(traj),
    }
    try:
        summary["frequencies"] = dy.estimate_frequencies(traj).to_dict()
    except PerlickError as exc:
        summary["frequencies"] = {"error": str(exc)}
    summary["closure"] = dy.detect_closure(traj).to_dict()
    return traj, summary


def cmd_simulate(cfg):
    traj, summary = simulate(cfg)
    write_csv(cfg.output, TRAJ_COLUMNS, trajectory_rows(traj))
    side = _sidecar(cfg.output, ".summary.json")
    if side:
        write_json(side, summary)
    elif cfg.output in (None, "-"):
        sys.stderr.write(_json_text(summary) + "\n")
    return EXIT_OK


def cmd_frequencies(cfg):
    _, summary = simulate(cfg)
    out = {k: summary[k] for k in ("kappa", "beta", "E", "l", "lz", "t_end", "frequencies", "closure", "class")}
    write_json(cfg.output, out)
    return EXIT_OK


def cmd_orbit(cfg):
    params = cfg.params()
    lz = cfg.lz
    if lz is None or lz <= 0:
        raise ConfigError("orbit needs lz > 0")
    spatial = cfg.l is not None and cfg.l > lz * (1 + 1e-12)
    if spatial:
        traj, _ = simulate(cfg)
        xyz = ob.cartesian_points(params, traj.states)
        write_csv(cfg.output, ["t", "x", "y", "z"], np.column_stack([traj.times, xyz]))
        return EXIT_OK
    grid = np.linspace(0.0, ob.closure_angle(params), cfg.samples)
    energies = cfg.energies
    blocks = []
    for E in energies:
        pts = ob.orbit_points(params, E, lz, cfg.phi_z, grid)
        blocks.append(np.column_stack([np.full(len(grid), E), pts]) if len(energies) > 1 else pts)
    header = ["phi", "xi", "x", "y"] if len(energies) == 1 else ["E", "phi", "xi", "x", "y"]
    write_csv(cfg.output, header, np.vstack(blocks))
    return EXIT_OK


def cmd_verify(cfg):
    params = cfg.params()
    reports = pb.verify_full_algebra(params, count=cfg.points, seed=cfg.seed)
    write_json(cfg.output, [r.to_dict() for r in reports])
    failed = [r.relation for r in reports if not r.passed]
    for name in failed:
        log.warning("relation failed: %s", name)
    return EXIT_VERIFY if failed else EXIT_OK


SWEEP_KAPPAS = (-1.0, 0.0, 1.0)
SWEEP_BETAS = ("1", "2", "3")
SWEEP_ENERGY_OFFSETS = (0.25, 0.5, 0.75)


def _sweep_case(args):
    cfg_dict, kappa, beta, E, outdir = args
    cfg = RunConfig(**cfg_dict)
    cfg.kappa, cfg.beta, cfg.E = kappa, beta, str(E)
    name = f"k{kappa:+g}_b{beta.replace('/', 'o')}_E{E:+.6g}"
    entry = {"kappa": kappa, "beta": beta, "E": E, "name": name}
    params = cfg.params()
    try:
        entry["class"] = ob.classify_orbit(params, E, cfg.l)
        traj, summary = simulate(cfg)
        path = os.path.join(outdir, name + ".csv")
        write_csv(path, TRAJ_COLUMNS, trajectory_rows(traj))
        entry["file"] = name + ".csv"
        entry["closed"] = summary["closure"]["closed"]
        entry["observed_bounded"] = bool(np.all(np.isfinite(traj.states[:, 0])))
        entry["xi_range"] = [float(traj.states[:, 0].min()), float(traj.states[:, 0].max())]
        entry["max_drift_H"] = summary["drift"]["H"]
    except PerlickError as exc:
        entry["error"] = f"{type(exc).__name__}: {exc}"
    return entry


def sweep_energies(params, l):
    """Default energies: fractions of the bound band plus one above escape."""
    b = energy_bounds(params, l)
    if not b.attained:
        return [b.e_escape + 0.5]
    top = b.e_escape if b.e_escape is not None else b.e_min + 2.0 / l**2
    es = [b.e_min + f * (top - b.e_min) for f in SWEEP_ENERGY_OFFSETS]
    if b.e_escape is not None:
        es.append(b.e_escape + 0.5)
    return es


def cmd_sweep(cfg):
    outdir = cfg.output or "sweep"
    os.makedirs(outdir, exist_ok=True)
    base = asdict(cfg)
    base["samples"] = min(cfg.samples, 500)
    explicit = cfg.E != RunConfig.E
    jobs = []
    for kappa in SWEEP_KAPPAS:
        for beta in SWEEP_BETAS:
            params = ModelParams.from_beta(kappa, parse_beta(beta))
            energies = cfg.energies if explicit else sweep_energies(params, cfg.l)
            for E in energies:
                jobs.append((base, kappa, beta, float(E), outdir))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            entries = list(ex.map(_sweep_case, jobs))
    else:
        entries = [_sweep_case(j) for j in jobs]
    write_json(os.path.join(outdir, "index.json"), {"l": cfg.l, "lz": cfg.lz, "cases": entries})
    return EXIT_OK


COMMANDS = {
    "potential": cmd_potential,
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "orbit": cmd_orbit,
    "verify": cmd_verify,
    "frequencies": cmd_frequencies,
    "sweep": cmd_sweep,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="perlick", description="Perlick type-I system on κ-deformed manifolds")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        p = sub.add_parser(name, help=(func.__doc__ or "").strip().split("\n")[0] or None)
        p.add_argument("--config", help="key=value file; command-line flags take precedence")
        p.add_argument("--kappa", type=float)
        p.add_argument("--beta", help="rational β as m/n")
        p.add_argument("--E", dest="E", help="energy (comma-separated list for orbit/bounds/sweep)")
        p.add_argument("--l", dest="l", type=float, help="total angular momentum")
        p.add_argument("--lz", type=float, help="z-component of the angular momentum")
        p.add_argument("--phi-z", dest="phi_z", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--t-end", dest="t_end", type=float)
        p.add_argument("--samples", type=int)
        p.add_argument("--points", type=int)
        p.add_argument("--xi-max", dest="xi_max", type=float)
        p.add_argument("--jobs", type=int)
        p.add_argument("-o", "--output")
        p.add_argument("--format", choices=("csv", "json"))
    return parser


def _join_negative_values(argv):
    """Let value flags take negative numbers and lists ('--E -3,-1')."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok.startswith("--") and "=" not in tok and tok not in ("--help", "--config", "--format"):
            nxt = next(it, None)
            if nxt is not None and nxt[:1] == "-" and nxt[1:2] in set("0123456789."):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


def _setup_logging():
    level = os.environ.get("PERLICK_LOG", "quiet").lower()
    levels = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        argv = sys.argv[1:] if argv is None else list(argv)
        args = parser.parse_args(_join_negative_values(argv))
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except IntegrationError as exc:
        sys.stderr.write(f"integration failed: {exc}\n")
        return EXIT_NUMERIC
    except PerlickError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
