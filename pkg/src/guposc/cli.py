"""Batch command line: ``guposc <subcommand> [options]``.

Every run writes its artifacts plus ``manifest.json`` (config echo, library
version, SHA-256 of each output) into ``--out``.

Exit codes: 0 success, 1 internal error, 2 validation error, 3 DomainExceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import sympy

from . import __version__
from .dynamics import PhasePoint, integrate
from .errors import DomainExceeded
from .fock import (
    build_p_operator,
    build_qP,
    commutator,
    exact_ladder,
    exact_residual,
    ground_state_wavefunction,
    spectrum_table,
)
from .liouville import disc_ensemble, ensemble_volume, tangent_integrate
from .momentum_map import OscillatorParams, momentum_forward, momentum_inverse, series_P, series_P_squared
from .optics import CoherentSpec, ModeSpec, mode_energy, mode_energy_terms, photon_statistics

log = logging.getLogger("guposc")

EXIT_OK, EXIT_INTERNAL, EXIT_VALIDATION, EXIT_DOMAIN = 0, 1, 2, 3

SUBCOMMANDS = ("series", "commute", "spectrum", "evolve", "liouville", "coherent")

COMMON_DEFAULTS = {
    "hbar": 1.0,
    "mass": 1.0,
    "omega": 1.0,
    "beta": 0.0,
    "dim": 32,
    "dt": None,  # period / 1000
    "t_end": None,  # 10 periods (5 for liouville)
    "seed": 0,
    "out": ".",
    "format": "csv",
}

EXTRA_DEFAULTS = {
    "series": {"order": 10},
    "commute": {},
    "spectrum": {},
    "evolve": {"chart": "canonical", "method": "rk4", "q0": 1.0, "p0": 0.0},
    "liouville": {"q0": 1.0, "p0": 1.0, "radius": 0.05, "points": 128, "stride": 10},
    "coherent": {"alpha": "1,0", "modes": None},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: OscillatorParams
    dim: int
    dt: float
    t_end: float
    seed: int
    out_path: str
    format: str
    extras: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {
            "hbar": self.params.hbar,
            "mass": self.params.mass,
            "omega": self.params.omega,
            "beta": self.params.beta,
            "dim": self.dim,
            "dt": self.dt,
            "t_end": self.t_end,
            "seed": self.seed,
            "out": self.out_path,
            "format": self.format,
            **self.extras,
        }


# ---------------------------------------------------------------- formatting


def fmt(x) -> str:
    """17 significant digits in scientific notation; integers and blanks pass through."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".16e")


def write_table(path: Path, header, rows, fmt_name: str) -> Path:
    if fmt_name == "csv":
        path = path.with_suffix(".csv")
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
    else:
        path = path.with_suffix(".json")
        records = [dict(zip(header, (_json_value(v) for v in row))) for row in rows]
        path.write_text(json.dumps(records, indent=2) + "\n")
    return path


def _json_value(v):
    if v is None:
        return None
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return int(v)
    if isinstance(v, (bool, str)):
        return v
    return float(v)


def write_json(path: Path, payload) -> Path:
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------- subcommands


def run_series(cfg: RunConfig, out: Path):
    order = cfg.extras["order"]
    if order < 2 or order % 2:
        raise ConfigError(f"momentum_map: --order must be an even integer >= 2, got {order}")
    P = series_P(cfg.params, order - 1)
    P2 = series_P_squared(cfg.params, order)
    if cfg.format == "json":
        def terms(s):
            return [
                {"power": k, "coefficient": str(c), "numerator": c.numerator, "denominator": c.denominator}
                for k, c in s.nonzero().items()
            ]

        return [write_json(out / "series.json", {"beta": cfg.params.beta, "order": order,
                                                  "P": terms(P), "P_squared": terms(P2)})]
    rows = [("P", k, c.numerator, c.denominator, str(c)) for k, c in P.nonzero().items()]
    rows += [("P_squared", k, c.numerator, c.denominator, str(c)) for k, c in P2.nonzero().items()]
    path = out / "series.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "power", "numerator", "denominator", "coefficient"])
        w.writerows(rows)
    return [path]


def run_commute(cfg: RunConfig, out: Path):
    dim, params = cfg.dim, cfg.params
    q, P = build_qP(params, dim)
    eye = np.eye(dim)
    rows = []

    def add(name, residual, block, tol):
        err = float(np.max(np.abs(residual[:block, :block])))
        rows.append((name, block, err, tol, int(err <= tol)))

    # ladder identities in exact arithmetic
    a, a_dag = exact_ladder(dim)
    N = a_dag * a
    for name, residual, block in (
        ("[a,a_dag]-1", (a * a_dag - a_dag * a)[: dim - 1, : dim - 1] - sympy.eye(dim - 1), dim - 1),
        ("[N,a]+a", N * a - a * N + a, dim),
        ("[N,a_dag]-a_dag", N * a_dag - a_dag * N - a_dag, dim),
    ):
        err = exact_residual(residual)
        rows.append((name, block, err, 0.0, int(err == 0)))
    add("[q,P]-i*hbar", commutator(q, P).entries - 1j * params.hbar * eye, dim - 1, 1e-12)
    if params.beta > 0:
        p = build_p_operator(params, dim)
        target = 1j * params.hbar * (eye + params.beta * p.entries @ p.entries)
        k = dim - 4
        resid = commutator(q, p).entries - target
        rel = float(np.linalg.norm(resid[:k, :k]) / np.linalg.norm(target[:k, :k]))
        rows.append(("[q,p]-i*hbar(1+beta p^2) (rel. Frobenius)", k, rel, 5e-3, int(rel <= 5e-3)))
    return [write_table(out / "commute", ["identity", "block", "max_residual", "tolerance", "passed"], rows, cfg.format)]


def run_spectrum(cfg: RunConfig, out: Path):
    rows = spectrum_table(cfg.params, cfg.dim, "quadratic")
    files = [write_table(out / "spectrum", ["n", "E_numeric", "E_analytic", "abs_err"], rows, cfg.format)]
    width = 8 * math.sqrt(cfg.params.hbar / (cfg.params.mass * cfg.params.omega))
    grid = np.linspace(-width, width, 801)
    psi = ground_state_wavefunction(cfg.params, grid)
    files.append(write_table(out / "wavefunction", ["q", "psi0"], zip(grid, psi), cfg.format))
    return files


def _check_chart_flag(value):
    if value not in ("deformed", "canonical"):
        raise ConfigError(f"dynamics: --chart must be 'deformed' or 'canonical', got {value!r}")


def run_evolve(cfg: RunConfig, out: Path):
    ex = cfg.extras
    _check_chart_flag(ex["chart"])
    if ex["method"] not in ("rk4", "leapfrog"):
        raise ConfigError(f"dynamics: --method must be 'rk4' or 'leapfrog', got {ex['method']!r}")
    if ex["method"] == "leapfrog" and ex["chart"] != "canonical":
        raise ConfigError("dynamics: leapfrog requires --chart canonical")
    start = PhasePoint(ex["chart"], ex["q0"], ex["p0"])
    traj = integrate(start, cfg.params, cfg.t_end, cfg.dt, ex["method"])
    if traj.chart == "deformed":
        p_col = list(traj.momentum)
        P_col = momentum_forward(traj.momentum, cfg.params)
    else:
        P_col = traj.momentum
        p_col = []
        for P in traj.momentum:
            try:
                p_col.append(momentum_inverse(P, cfg.params))
            except DomainExceeded:
                p_col.append(None)
    rows = zip(traj.times, traj.q, p_col, P_col, traj.energies)
    return [write_table(out / "trajectory", ["t", "q", "p", "P", "energy"], rows, cfg.format)]


def run_liouville(cfg: RunConfig, out: Path):
    ex, params = cfg.extras, cfg.params
    start = PhasePoint("deformed", ex["q0"], ex["p0"])
    stride = ex["stride"]
    if stride < 1:
        raise ConfigError("liouville: --stride must be >= 1")
    deformed = tangent_integrate(start, params, cfg.t_end, cfg.dt)
    canonical = tangent_integrate(start.to_canonical(params), params, cfg.t_end, cfg.dt)
    ens = disc_ensemble(start, ex["radius"], ex["points"], cfg.seed)
    vol = ensemble_volume(ens, params, cfg.t_end, cfg.dt, stride)
    sl = slice(None, None, stride)
    rows = zip(
        deformed.base.times[sl],
        canonical.determinants[sl],
        deformed.determinants[sl],
        deformed.predicted_ratio()[sl],
        vol.area_canonical,
        vol.area_deformed,
    )
    header = ["t", "detJ_canonical", "detJ_deformed", "predicted_ratio", "hull_area_canonical", "hull_area_deformed"]
    return [write_table(out / "liouville", header, rows, cfg.format)]


def parse_alpha(text) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    parts = str(text).split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"optics: --alpha must be 're,im', got {text!r}")


def parse_modes(text):
    """``"k:pol:n;k:pol:n"`` -> list of ModeSpec."""
    modes = []
    for chunk in filter(None, str(text).split(";")):
        try:
            k, pol, n = chunk.split(":")
            modes.append(ModeSpec(float(k), int(pol), int(n)))
        except ValueError as exc:
            raise ConfigError(f"optics: bad mode {chunk!r} in --modes ({exc})") from exc
    return modes


def run_coherent(cfg: RunConfig, out: Path):
    spec = CoherentSpec(parse_alpha(cfg.extras["alpha"]), cfg.dim)
    files = [write_table(out / "coherent", ["n", "P_n_numeric", "P_n_analytic", "abs_err"], photon_statistics(spec), cfg.format)]
    if cfg.extras.get("modes"):
        modes = parse_modes(cfg.extras["modes"])
        terms = mode_energy_terms(modes, cfg.params.hbar)
        payload = {
            "modes": [
                {"k": m.k, "lambda": m.polarization, "n": m.occupancy, "energy_contribution": e}
                for m, e in zip(modes, terms)
            ],
            "total": mode_energy(modes, cfg.params.hbar),
        }
        files.append(write_json(out / "mode_energy.json", payload))
    return files


RUNNERS = {
    "series": run_series,
    "commute": run_commute,
    "spectrum": run_spectrum,
    "evolve": run_evolve,
    "liouville": run_liouville,
    "coherent": run_coherent,
}


# ---------------------------------------------------------------- argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # defaults are None so that only explicitly given flags override --config
    common.add_argument("--config", help="JSON file with configuration keys")
    common.add_argument("--hbar", type=float)
    common.add_argument("--mass", type=float)
    common.add_argument("--omega", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--dim", type=int)
    common.add_argument("--dt", type=float)
    common.add_argument("--t-end", dest="t_end", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"))

    parser = argparse.ArgumentParser(prog="guposc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"guposc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("series", parents=[common], help="exact series of P and P^2").add_argument("--order", type=int)
    sub.add_parser("commute", parents=[common], help="operator algebra residuals")
    sub.add_parser("spectrum", parents=[common], help="oscillator spectrum and ground state")
    ev = sub.add_parser("evolve", parents=[common], help="classical trajectory")
    ev.add_argument("--chart", choices=("deformed", "canonical"))
    ev.add_argument("--method", choices=("rk4", "leapfrog"))
    ev.add_argument("--q0", type=float)
    ev.add_argument("--p0", type=float, help="initial momentum in the chosen chart")
    lv = sub.add_parser("liouville", parents=[common], help="tangent-map and ensemble volumes")
    lv.add_argument("--chart", choices=("deformed",), help="chart of the start point (p0 is the deformed momentum)")
    lv.add_argument("--q0", type=float)
    lv.add_argument("--p0", type=float)
    lv.add_argument("--radius", type=float)
    lv.add_argument("--points", type=int)
    lv.add_argument("--stride", type=int)
    co = sub.add_parser("coherent", parents=[common], help="coherent-state photon statistics")
    co.add_argument("--alpha", help="complex amplitude as 're,im'")
    co.add_argument("--modes", help="optional mode list 'k:pol:n;k:pol:n' for mode_energy.json")
    return parser


def resolve_config(command: str, ns: argparse.Namespace) -> RunConfig:
    extras_defaults = dict(EXTRA_DEFAULTS[command])
    if command == "liouville":
        extras_defaults["chart"] = "deformed"
    allowed = set(COMMON_DEFAULTS) | set(extras_defaults)
    merged = {**COMMON_DEFAULTS, **extras_defaults}

    if ns.config:
        try:
            loaded = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cli: cannot read --config {ns.config!r}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("cli: --config must hold a JSON object")
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        unknown = sorted(set(loaded) - allowed)
        if unknown:
            raise ConfigError(f"cli: unknown config key(s) for '{command}': {', '.join(unknown)}")
        merged.update(loaded)
    for key in allowed:
        value = getattr(ns, key, None)
        if value is not None:
            merged[key] = value

    try:
        params = OscillatorParams(float(merged["hbar"]), float(merged["mass"]), float(merged["omega"]), float(merged["beta"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"momentum_map: {exc}") from exc
    if not isinstance(merged["dim"], int) or merged["dim"] < 2:
        raise ConfigError(f"fock: dim must be an integer >= 2, got {merged['dim']!r}")
    if merged["format"] not in ("csv", "json"):
        raise ConfigError(f"cli: format must be 'csv' or 'json', got {merged['format']!r}")
    periods = 5 if command == "liouville" else 10
    dt = params.period / 1000 if merged["dt"] is None else float(merged["dt"])
    t_end = periods * params.period if merged["t_end"] is None else float(merged["t_end"])
    if not (dt > 0 and math.isfinite(dt)):
        raise ConfigError(f"dynamics: dt must be positive, got {dt!r}")
    if not (t_end > 0 and math.isfinite(t_end)):
        raise ConfigError(f"dynamics: t_end must be positive, got {t_end!r}")
    if not isinstance(merged["seed"], int):
        raise ConfigError(f"cli: seed must be an integer, got {merged['seed']!r}")
    extras = {k: merged[k] for k in extras_defaults}
    if "chart" in extras:
        _check_chart_flag(extras["chart"])
    return RunConfig(params, merged["dim"], dt, t_end, merged["seed"], str(merged["out"]), merged["format"], extras)


def _raising_module(exc: BaseException) -> str:
    frames = traceback.extract_tb(exc.__traceback__)
    for frame in reversed(frames):
        path = Path(frame.filename)
        if path.parent.name == "guposc":
            return path.stem
    return "cli"


def _write_manifest(out: Path, command, config, files, status, error=None):
    manifest = {
        "subcommand": command,
        "library": "guposc",
        "version": __version__,
        "status": status,
        "config": config,
        "outputs": [{"file": f.name, "sha256": sha256(f)} for f in files],
    }
    if error:
        manifest["error"] = error
    write_json(out / "manifest.json", manifest)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    command = args.command
    out = Path(args.out or ".")
    config_echo = None
    files = []
    try:
        cfg = resolve_config(command, args)
        config_echo = cfg.echo()
        out = Path(cfg.out_path)
        out.mkdir(parents=True, exist_ok=True)
        files = RUNNERS[command](cfg, out)
    except DomainExceeded as exc:
        code, status, msg = EXIT_DOMAIN, "domain_exceeded", str(exc)
    except ValueError as exc:
        text = str(exc)
        module = _raising_module(exc)
        if not text.startswith(f"{module}:") and ":" not in text.split(" ")[0]:
            text = f"{module}: {text}"
        code, status, msg = EXIT_VALIDATION, "validation_error", text
    except Exception as exc:  # noqa: BLE001
        code, status, msg = EXIT_INTERNAL, "internal_error", f"{_raising_module(exc)}: {exc!r}"
    else:
        _write_manifest(out, command, config_echo, files, "ok")
        return EXIT_OK

    log.error(msg)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_manifest(out, command, config_echo, files, status, msg)
    except OSError:
        pass
    return code


if __name__ == "__main__":
    sys.exit(main())
