"""Command-line front end: single evaluations, sweeps and figure datasets.

Configuration is layered: built-in defaults, then a flat ``key = value``
file (``--config`` or ``$ATOMRAND_CONFIG``), then command-line flags.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .atom import A0_BASELINE, CHARGE_BASELINE, GAP_BASELINE, AtomParams, TransitionSpec
from .evolution import DEFAULT_QUAD, InitialState, PerturbativeValidityWarning, delta_rho_parts, evolve, truncated_purity
from .quadrature import NonConvergenceError
from .randomness import guessing_probability_from_purity, min_entropy_from_purity
from .switching import DiracDelta, Gaussian, SuddenTopHat, load_sampled_profile

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

SWEEP_AXES = ("model", "charge", "a0", "gap", "sigma", "cdelta", "a", "a2")
_FLOAT_KEYS = ("a0", "charge", "gap", "sigma", "cdelta", "a", "rel_tol")
_UNITS = {"model": "", "charge": "", "a0": "eV^-1", "gap": "eV", "sigma": "eV^-1", "cdelta": "eV^-1",
          "a": "", "a2": ""}
OUTPUT_COLUMNS = (
    ("drho_gg", ""), ("drho_ee", ""), ("drho_eg_re", ""), ("drho_eg_im", ""), ("max_abs_drho", ""),
    ("purity", ""), ("purity_truncated", ""), ("guessing_probability", ""),
    ("min_entropy", "bits"), ("min_entropy_truncated", "bits"), ("valid", ""),
)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    a0: float = A0_BASELINE
    charge: float = CHARGE_BASELINE
    gap: float = GAP_BASELINE
    switching: str = "gaussian"
    sigma: float = 2.5e-3
    cdelta: float = 2.5e-3
    a: float = 1.0
    model: str = "em"
    format: str = "csv"
    jobs: int = 1
    rel_tol: float = 1e-9
    sweeps: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if not self.a0 > 0:
            raise ConfigError("a0 must be positive")
        if not self.charge >= 0:
            raise ConfigError("charge must be non-negative")
        if not self.gap >= 0:
            raise ConfigError("gap must be non-negative")
        if not self.sigma > 0 or not self.cdelta > 0:
            raise ConfigError("sigma and cdelta must be positive")
        if not 0 <= self.a <= 1:
            raise ConfigError("a must lie in [0, 1]")
        if self.model not in ("em", "udw", "udwd"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if not 0 < self.rel_tol < 1:
            raise ConfigError("rel_tol must lie in (0, 1)")
        if not (self.switching in ("gaussian", "sudden", "delta") or self.switching.startswith("sampled:")):
            raise ConfigError(f"unknown switching {self.switching!r}")
        for axis, vals in self.sweeps.items():
            if axis not in SWEEP_AXES:
                raise ConfigError(f"unknown sweep axis {axis!r}")
            if len(vals) == 0:
                raise ConfigError(f"sweep grid for {axis!r} is empty")
        if "a" in self.sweeps and "a2" in self.sweeps:
            raise ConfigError("sweep either a or a2, not both")
        for pt in self.points():
            _check_point(pt)
        return self

    def base_point(self) -> dict:
        return {"model": self.model, "charge": self.charge, "a0": self.a0, "gap": self.gap,
                "sigma": self.sigma, "cdelta": self.cdelta, "a": self.a}

    def points(self) -> list[dict]:
        """Cartesian product of the sweep grids, in lexicographic order of the listed axes."""
        axes = list(self.sweeps)
        out = []
        for combo in itertools.product(*(self.sweeps[ax] for ax in axes)):
            pt = self.base_point()
            for ax, v in zip(axes, combo):
                if ax == "a2":
                    pt["a"] = math.sqrt(v)
                else:
                    pt[ax] = v
            out.append(pt)
        return out

    def metadata(self) -> dict:
        d = dataclasses.asdict(self)
        d["sweeps"] = {k: list(v) for k, v in self.sweeps.items()}
        return d


def _check_point(pt: dict):
    if pt["model"] not in ("em", "udw", "udwd"):
        raise ConfigError(f"unknown model {pt['model']!r}")
    if not (pt["a0"] > 0 and pt["sigma"] > 0 and pt["cdelta"] > 0):
        raise ConfigError("a0, sigma and cdelta must be positive")
    if not 0 <= pt["a"] <= 1:
        raise ConfigError("a must lie in [0, 1]")
    if pt["charge"] < 0 or pt["gap"] < 0:
        raise ConfigError("charge and gap must be non-negative")


# ---------------------------------------------------------------------------
# parsing

def parse_grid(spec: str) -> tuple:
    """'lin:lo:hi:n', 'log:lo:hi:n', or a comma-separated list."""
    spec = spec.strip()
    try:
        if spec.startswith(("lin:", "log:")):
            kind, lo, hi, n = spec.split(":")
            n = int(n)
            if n < 1:
                return ()
            fn = np.linspace if kind == "lin" else np.geomspace
            return tuple(float(x) for x in fn(float(lo), float(hi), n))
        items = [s for s in spec.split(",") if s.strip()]
        return tuple(s.strip() if s.strip() in ("em", "udw", "udwd") else float(s) for s in items)
    except ValueError as exc:
        raise ConfigError(f"bad grid {spec!r}: {exc}") from None


def read_config_file(path: str) -> dict:
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _apply(cfg: RunConfig, key: str, val) -> None:
    if key.startswith("sweep.") or key.startswith("sweep_"):
        cfg.sweeps[key[6:]] = parse_grid(val) if isinstance(val, str) else tuple(val)
        return
    if key == "switching" and isinstance(val, str) and ":" not in val:
        val = val.lower()
    if not hasattr(cfg, key) or key == "sweeps":
        raise ConfigError(f"unknown config key {key!r}")
    try:
        if key in _FLOAT_KEYS:
            val = float(val)
        elif key == "jobs":
            val = int(val)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {val!r}") from None
    setattr(cfg, key, val)


def build_config(args: argparse.Namespace, base: Optional[RunConfig] = None) -> RunConfig:
    cfg = base or RunConfig()
    path = getattr(args, "config", None) or os.environ.get("ATOMRAND_CONFIG")
    if path:
        for k, v in read_config_file(path).items():
            _apply(cfg, k, v)
    for key in ("a0", "charge", "gap", "switching", "sigma", "cdelta", "a", "model", "format", "jobs", "rel_tol"):
        v = getattr(args, key, None)
        if v is not None:
            _apply(cfg, key, v)
    for item in getattr(args, "sweep", None) or ():
        if "=" not in item:
            raise ConfigError(f"--sweep expects AXIS=GRID, got {item!r}")
        ax, grid = item.split("=", 1)
        cfg.sweeps[ax.strip()] = parse_grid(grid)
    return cfg.validate()


# ---------------------------------------------------------------------------
# evaluation

def _profile(switching: str, pt: dict):
    if switching == "gaussian":
        return Gaussian(pt["sigma"])
    if switching == "sudden":
        return SuddenTopHat(pt["sigma"])
    if switching == "delta":
        return DiracDelta(pt["cdelta"])
    try:
        return load_sampled_profile(switching.split(":", 1)[1])
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load sampled profile: {exc}") from None


def _parts_key(pt: dict) -> tuple:
    return tuple(pt[k] for k in ("model", "charge", "a0", "gap", "sigma", "cdelta"))


def _compute_parts(job):
    switching, rel_tol, key = job
    model, charge, a0, gap, sigma, cdelta = key
    pt = {"sigma": sigma, "cdelta": cdelta}
    params = AtomParams(TransitionSpec(a0=a0), charge, gap)
    return delta_rho_parts(params, _profile(switching, pt), model, DEFAULT_QUAD.with_(rel_tol=rel_tol))


def evaluate_point(parts, a: float) -> dict:
    if np.isnan(parts.excited).any() and a != 1.0:
        raise ConfigError("the scalar models are only defined for a = 1")
    st = InitialState(a)
    d = parts.ground.copy() if a == 1.0 else parts.at(a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PerturbativeValidityWarning)
        rho, rep = evolve(st, d)
    tp = truncated_purity(st, d)
    return {
        "drho_gg": d[0, 0].real, "drho_ee": d[1, 1].real, "drho_eg_re": d[1, 0].real, "drho_eg_im": d[1, 0].imag,
        "max_abs_drho": rep.max_abs_entry, "purity": rep.purity, "purity_truncated": tp,
        "guessing_probability": guessing_probability_from_purity(rep.purity),
        "min_entropy": min_entropy_from_purity(rep.purity), "min_entropy_truncated": min_entropy_from_purity(tp),
        "valid": int(not rep.exceeded),
    }


def run_points(cfg: RunConfig, points: Sequence[dict]) -> list[dict]:
    keys = list(dict.fromkeys(_parts_key(p) for p in points))
    jobs = [(cfg.switching, cfg.rel_tol, k) for k in keys]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            parts = list(ex.map(_compute_parts, jobs))
    else:
        parts = [_compute_parts(j) for j in jobs]
    table = dict(zip(keys, parts))
    rows = []
    for p in points:
        row = dict(p)
        row["a2"] = p["a"] ** 2
        row.update(evaluate_point(table[_parts_key(p)], p["a"]))
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# output

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % (v + 0.0)


def write_csv(rows: list[dict], meta: dict, out=None) -> None:
    out = out or sys.stdout
    for k, v in meta.items():
        out.write(f"# {k}={json.dumps(v) if not isinstance(v, str) else v}\n")
    cols = [(k, _UNITS[k]) for k in SWEEP_AXES] + list(OUTPUT_COLUMNS)
    out.write(",".join(f"{k}[{u}]" if u else k for k, u in cols) + "\n")
    for r in rows:
        out.write(",".join(_fmt(r[k]) for k, _ in cols) + "\n")


def read_csv(text: str) -> tuple[dict, list[dict]]:
    """Inverse of ``write_csv``: (metadata, rows) with units stripped from column names."""
    meta, rows, header = {}, [], None
    for line in text.splitlines():
        if line.startswith("#"):
            k, v = line[1:].strip().split("=", 1)
            meta[k] = v
        elif header is None:
            header = [h.split("[", 1)[0] for h in line.split(",")]
        elif line:
            vals = line.split(",")
            rows.append({h: (v if h == "model" else float(v)) for h, v in zip(header, vals)})
    return meta, rows


def write_json(obj, out=None) -> None:
    out = out or sys.stdout
    out.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# figures

def _lin(lo, hi, n):
    return tuple(float(x) for x in np.linspace(lo, hi, n))


def _log(lo, hi, n):
    return tuple(float(x) for x in np.geomspace(lo, hi, n))


A2_SET = (0.0, 0.25, 0.5, 0.75, 1.0)

FIGURES = {
    "fig1a": dict(switching="gaussian", charge=CHARGE_BASELINE,
                  sweeps={"sigma": _log(1e-5, 1.0, 41), "a2": _lin(0, 1, 21)}),
    "fig1b": dict(switching="gaussian", charge=5.0,
                  sweeps={"sigma": _log(1e-5, 1.0, 41), "a2": _lin(0, 1, 21)}),
    "fig2": dict(switching="gaussian", sweeps={"a": (1.0, 0.0, 1 / math.sqrt(2)), "sigma": _log(1e-2, 10.0, 61)}),
    "fig3a": dict(switching="gaussian", sweeps={"a2": A2_SET, "charge": _lin(0, 17, 35)}),
    "fig3b": dict(switching="gaussian", sweeps={"a2": A2_SET, "a0": _log(1e-5, 1e-1, 41)}),
    "fig3c": dict(switching="gaussian", sweeps={"a2": A2_SET, "gap": _lin(0, 18, 37)}),
    "fig4a": dict(switching="sudden", gap=0.0, sweeps={"sigma": _log(1e-5, 1.0, 41), "a2": _lin(0, 1, 21)}),
    "fig4b": dict(switching="sudden", gap=0.0, sweeps={"a2": A2_SET, "charge": _lin(0, 7, 29)}),
    "fig4c": dict(switching="sudden", gap=0.0, sweeps={"a2": A2_SET, "a0": _log(1e-5, 1e-1, 41)}),
    "fig5a": dict(switching="delta", sweeps={"charge": tuple(m * CHARGE_BASELINE for m in (1, 2, 3, 4)),
                                             "a2": _lin(0, 1, 21)}),
    "fig5b": dict(switching="delta", sweeps={"a2": A2_SET, "charge": _lin(0, 0.35, 36)}),
    "fig5c": dict(switching="delta", sweeps={"a2": A2_SET, "a0": _log(1e-5, 1e-1, 41)}),
    "fig7a": dict(switching="gaussian", charge=1e-3, a=1.0,
                  sweeps={"model": ("em", "udw", "udwd"), "sigma": _log(1e-4, 8e-3, 41)}),
    "fig7b": dict(switching="gaussian", charge=1e-3, a=1.0,
                  sweeps={"model": ("em", "udw", "udwd"), "sigma": _lin(2e-3, 8e-3, 31)}),
}


def figure_config(name: str) -> RunConfig:
    if name not in FIGURES:
        raise ConfigError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    spec = dict(FIGURES[name])
    sweeps = dict(spec.pop("sweeps"))
    return RunConfig(sweeps=sweeps, **spec)


# ---------------------------------------------------------------------------
# commands

def _single(cfg: RunConfig) -> dict:
    if cfg.sweeps:
        raise ConfigError("this command takes a single point; use 'sweep' for grids")
    return run_points(cfg, cfg.points())[0]


def cmd_minentropy(cfg: RunConfig, out=None) -> dict:
    row = _single(cfg)
    keys = ("drho_gg", "drho_ee", "drho_eg_re", "drho_eg_im", "purity", "purity_truncated",
            "guessing_probability", "min_entropy", "min_entropy_truncated")
    rep = {k: row[k] for k in keys}
    rep["valid"] = bool(row["valid"])
    write_json(rep, out)
    return rep


def cmd_deltarho(cfg: RunConfig, out=None) -> dict:
    row = _single(cfg)
    eg = complex(row["drho_eg_re"], row["drho_eg_im"])
    mat = [[[row["drho_gg"], 0.0], [eg.real, -eg.imag]], [[eg.real, eg.imag], [row["drho_ee"], 0.0]]]
    if cfg.format == "json":
        write_json({"basis": ["g", "e"], "delta_rho_re_im": mat, "valid": bool(row["valid"])}, out)
    else:
        write_csv([row], cfg.metadata(), out)
    return row


def cmd_sweep(cfg: RunConfig, out=None) -> list[dict]:
    if not cfg.sweeps:
        raise ConfigError("sweep needs at least one --sweep AXIS=GRID")
    rows = run_points(cfg, cfg.points())
    if cfg.format == "json":
        write_json({"config": cfg.metadata(), "rows": rows}, out)
    else:
        write_csv(rows, cfg.metadata(), out)
    return rows


def cmd_figure(name: str, cfg: RunConfig, out=None) -> list[dict]:
    rows = run_points(cfg, cfg.points())
    meta = {"figure": name, **cfg.metadata()}
    if cfg.format == "json":
        write_json({"config": meta, "rows": rows}, out)
    else:
        write_csv(rows, meta, out)
    return rows


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file (default: $ATOMRAND_CONFIG)")
    p.add_argument("--a0", type=float, help="Bohr radius [eV^-1]")
    p.add_argument("--charge", type=float, help="coupling strength e")
    p.add_argument("--gap", type=float, help="energy gap Omega [eV]")
    p.add_argument("--switching", help="gaussian | sudden | delta | sampled:<path>")
    p.add_argument("--sigma", type=float, help="interaction time [eV^-1]")
    p.add_argument("--cdelta", type=float, help="delta-switching strength C [eV^-1]")
    p.add_argument("--a", type=float, help="state parameter a in [0, 1]")
    p.add_argument("--model", choices=("em", "udw", "udwd"))
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--jobs", type=int)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="atomrand", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("minentropy", "deltarho", "validate-config"):
        _add_common(sub.add_parser(name))
    sp = sub.add_parser("sweep")
    _add_common(sp)
    sp.add_argument("--sweep", action="append", metavar="AXIS=GRID",
                    help=f"axis in {{{','.join(SWEEP_AXES)}}}; GRID is lin:lo:hi:n, log:lo:hi:n or a,b,c")
    fp = sub.add_parser("figure")
    fp.add_argument("name", help=", ".join(FIGURES))
    _add_common(fp)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "figure":
            cfg = build_config(args, figure_config(args.name))
            cmd_figure(args.name, cfg)
        else:
            cfg = build_config(args)
            if args.command == "validate-config":
                write_json(cfg.metadata())
            elif args.command == "minentropy":
                cmd_minentropy(cfg)
            elif args.command == "deltarho":
                cmd_deltarho(cfg)
            else:
                cmd_sweep(cfg)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"atomrand: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergenceError, FloatingPointError, ArithmeticError) as exc:
        print(f"atomrand: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
