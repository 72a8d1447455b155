"""Command-line front end: ``ssq {scatter,soliton,evolve,asymptote,compare}``.

Exit codes: 0 ok, 1 input/parse error, 2 partial scattering grid failure,
3 singular residue system, 4 evolution instability, 5 approximate delta
under --strict.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .asymptotics import Y_CUT, evaluate_point, fit_power_law
from .direct_scattering import compute_norming_constants, compute_transition, find_discrete_spectrum
from .errors import (ApproximateDelta, BlowUp, GridMismatch, Instability, NoConvergence, SSQError,
                     SystemSingular)
from .fields import ComplexField, ReflectionCoefficient, ScatteringData
from .io import fmt, read_field, read_scattering, write_csv, write_field, write_scattering
from .painleve2 import solve_painleve
from .pde_oracle import EvolutionConfig, run_evolution
from .soliton import ConeSpec, random_admissible, soliton_field

EXIT_OK, EXIT_INPUT, EXIT_PARTIAL, EXIT_SINGULAR, EXIT_UNSTABLE, EXIT_APPROX = 0, 1, 2, 3, 4, 5

DEFAULTS = {
    "scatter": {"kmin": -5.0, "kmax": 5.0, "nk": 501, "box": [-4.0, 4.0, 0.02, 4.0], "method": "matching",
                "interpolation": "cubic", "no_poles": False, "out": "scattering.json"},
    "soliton": {"xmin": -40.0, "xmax": 40.0, "n": 2048, "t": 0.0, "random_pairs": 0, "random_imag": 0,
                "out": "field.csv"},
    "evolve": {"t_end": 1.0, "dt": None, "linear_only": False, "dealias": 2.0 / 3.0, "checkpoint_every": None,
               "out": "final.csv"},
    "asymptote": {"points": None, "lattice": None, "cone": None, "y_cut": Y_CUT, "p": 8.0, "kappa": None,
                  "out": "asymptote.csv"},
    "compare": {"times": None, "out": "compare.json"},
}


class CLIError(Exception):
    def __init__(self, msg, code=EXIT_INPUT):
        super().__init__(msg)
        self.code = code


@dataclass
class RunManifest:
    command: str
    config: dict
    input_hashes: Dict[str, str]
    version: str
    wall_time: float = 0.0
    outputs: List[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def write(self, path: Path):
        path.write_text(json.dumps(asdict(self), indent=1, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _floats(s, n=None):
    try:
        v = [float(a) for a in str(s).replace(";", ",").split(",") if a.strip()]
    except ValueError:
        raise CLIError(f"cannot parse numbers from {s!r}")
    if n is not None and len(v) != n:
        raise CLIError(f"expected {n} numbers, got {s!r}")
    return v


def _resolve(args, command) -> dict:
    """flags > config file > defaults."""
    cfg = dict(DEFAULTS[command])
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise CLIError(f"cannot read config {args.config}: {exc}")
        if not isinstance(file_cfg, dict):
            raise CLIError("config file must hold a flat JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in file_cfg.items() if k.replace("-", "_") in cfg})
    for k in cfg:
        v = getattr(args, k, None)
        if v is not None and v is not False:
            cfg[k] = v
    return cfg


def _out_path(args, name) -> Path:
    p = Path(name)
    if not p.is_absolute():
        p = Path(args.out_dir) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _manifest_path(primary: Path) -> Path:
    return primary.with_name(primary.stem + ".manifest.json")


def _need_file(path):
    if path is None:
        raise CLIError("--input is required")
    if not Path(path).is_file():
        raise CLIError(f"input file not found: {path}")
    return path


# -- commands -----------------------------------------------------------------

def cmd_scatter(args, cfg, man):
    src = _need_file(args.input)
    try:
        fld = read_field(src)
    except (OSError, ValueError, KeyError) as exc:
        raise CLIError(f"cannot read profile {src}: {exc}")
    man.input_hashes[str(src)] = _sha256(src)
    ks = np.linspace(float(cfg["kmin"]), float(cfg["kmax"]), int(cfg["nk"]))
    td = compute_transition(fld, ks, interpolation=cfg["interpolation"])
    ok = ~td.failed
    gamma = td.gamma
    refl = ReflectionCoefficient(ks[ok], gamma[ok]) if ok.sum() >= 2 else ReflectionCoefficient.zero()
    box = cfg["box"] if not isinstance(cfg["box"], str) else _floats(cfg["box"], 4)
    if cfg["no_poles"]:
        poles = np.zeros(0, complex)
    else:
        poles = find_discrete_spectrum(fld, tuple(box), interpolation=cfg["interpolation"])
    c = compute_norming_constants(fld, poles, method=cfg["method"], interpolation=cfg["interpolation"])
    sd = ScatteringData(poles, c, refl)
    out = _out_path(args, cfg["out"])
    write_scattering(out, sd)
    man.outputs.append(str(out))
    man.extra.update({"failed_k": ks[td.failed].tolist(), "det_S_residual": td.det_S_residual() if ok.any() else None})
    if np.any(td.failed):
        print(f"warning: {int(td.failed.sum())} k-grid points failed", file=sys.stderr)
        return out, EXIT_PARTIAL
    return out, EXIT_OK


def cmd_soliton(args, cfg, man):
    if args.input:
        src = _need_file(args.input)
        try:
            sd = read_scattering(src)
        except (OSError, ValueError, KeyError) as exc:
            raise CLIError(f"cannot read scattering data {src}: {exc}")
        man.input_hashes[str(src)] = _sha256(src)
    elif cfg["random_pairs"] or cfg["random_imag"]:
        sd = random_admissible(np.random.default_rng(args.seed), int(cfg["random_pairs"]), int(cfg["random_imag"]))
    else:
        raise CLIError("need --input or --random-pairs/--random-imag")
    xs = np.linspace(float(cfg["xmin"]), float(cfg["xmax"]), int(cfg["n"]))
    fld = soliton_field(sd, xs, float(cfg["t"]))
    out = _out_path(args, cfg["out"])
    write_field(out, fld)
    man.outputs.append(str(out))
    man.extra.update({"poles": sd.poles, "norming": sd.norming.tolist(), "t": float(cfg["t"]),
                      "grid": {"xmin": float(xs[0]), "xmax": float(xs[-1]), "n": int(xs.size)}})
    return out, EXIT_OK


def _periodic_config(fld: ComplexField, cfg) -> EvolutionConfig:
    X = -float(fld.xs[0])
    n = fld.n
    if X <= 0 or abs(fld.xs[-1] - (X - 2 * X / n)) > 1e-9 * fld.dx:
        raise GridMismatch("evolve needs a periodic grid x_j = -X + j*2X/n, j < n")
    return EvolutionConfig(X=X, n=n, t_end=float(cfg["t_end"]), dt=None if cfg["dt"] is None else float(cfg["dt"]),
                           dealias_fraction=float(cfg["dealias"]), nonlinearity_on=not cfg["linear_only"])


def cmd_evolve(args, cfg, man):
    src = _need_file(args.input)
    try:
        fld = read_field(src)
    except (OSError, ValueError, KeyError) as exc:
        raise CLIError(f"cannot read field {src}: {exc}")
    man.input_hashes[str(src)] = _sha256(src)
    conf = _periodic_config(fld, cfg)
    every = cfg["checkpoint_every"]
    saves = []
    if every:
        saves = list(np.arange(1, int(np.floor(conf.t_end / float(every) + 1e-9)) + 1) * float(every))
    res = run_evolution(fld, conf, save_times=saves)
    out = _out_path(args, cfg["out"])
    for ts in saves:
        if ts < conf.t_end:
            p = out.with_name(f"{out.stem}_t{fmt(ts)}{out.suffix}")
            write_field(p, res.snapshots[float(ts)])
            man.outputs.append(str(p))
    write_field(out, res.final)
    man.outputs.append(str(out))
    man.extra.update({"dt": res.dt, "steps": res.steps, "retried": res.retried, "l2_log": res.l2_log,
                      "l2_drift": res.l2_drift()})
    return out, EXIT_OK


def _points(cfg):
    if cfg["points"]:
        pts = []
        for item in str(cfg["points"]).split(";"):
            if item.strip():
                pts.append(tuple(_floats(item, 2)))
        return pts
    if cfg["lattice"]:
        x0, x1, nx, t0, t1, nt = _floats(cfg["lattice"], 6)
        return [(x, t) for t in np.linspace(t0, t1, int(nt)) for x in np.linspace(x0, x1, int(nx))]
    raise CLIError("need --points or --lattice")


def cmd_asymptote(args, cfg, man):
    src = _need_file(args.input)
    try:
        sd = read_scattering(src)
    except (OSError, ValueError, KeyError) as exc:
        raise CLIError(f"cannot read scattering data {src}: {exc}")
    man.input_hashes[str(src)] = _sha256(src)
    pts = _points(cfg)
    cone = None
    if cfg["cone"]:
        v = _floats(cfg["cone"], 2)
        cone = ConeSpec(max(v), min(v))
    pain = None
    if cfg["kappa"] is not None:
        kr, ki = (_floats(cfg["kappa"]) + [0.0])[:2]
        pain = solve_painleve(complex(kr, ki))
    rows = {k: [] for k in ("x", "t", "region", "re_leading", "im_leading", "re_corr", "im_corr", "error_order")}
    approx = False
    for x, t in pts:
        ev = evaluate_point(x, t, sd, y_cut=float(cfg["y_cut"]), cone=cone, painleve_solution=pain, p=float(cfg["p"]))
        approx |= ev.approximate
        for k, v in zip(rows, (x, t, ev.region.region, ev.leading.real, ev.leading.imag, ev.correction.real,
                               ev.correction.imag, ev.claimed_error_order)):
            rows[k].append(v)
    if approx and args.strict:
        raise ApproximateDelta("conjugation factor is only approximate (non-commuting jump) and --strict is set")
    out = _out_path(args, cfg["out"])
    write_csv(out, list(rows), [np.array(rows[k]) if k == "region" else np.array(rows[k], float) for k in rows])
    man.outputs.append(str(out))
    man.extra["approximate_delta"] = approx
    return out, EXIT_OK


def cmd_compare(args, cfg, man):
    files = args.files
    if len(files) < 2:
        raise CLIError("compare needs at least two field files")
    flds = []
    for f in files:
        _need_file(f)
        try:
            flds.append(read_field(f))
        except (OSError, ValueError, KeyError) as exc:
            raise CLIError(f"cannot read field {f}: {exc}")
        man.input_hashes[str(f)] = _sha256(f)
    ref = flds[0]
    for f, fl in zip(files[1:], flds[1:]):
        if fl.n != ref.n or not np.allclose(fl.xs, ref.xs, rtol=0, atol=1e-9 * ref.dx):
            raise GridMismatch(f"{f} is not on the grid of {files[0]}")
    report = {"pairs": []}
    for f, fl in zip(files[1:], flds[1:]):
        d = fl.values - ref.values
        report["pairs"].append({"a": str(files[0]), "b": str(f), "linf": float(np.max(np.abs(d))),
                                "l2": float(np.sqrt(np.sum(np.abs(d) ** 2) * ref.dx))})
    if cfg["times"]:
        ts = _floats(cfg["times"]) if isinstance(cfg["times"], str) else [float(v) for v in cfg["times"]]
        if len(ts) != len(files):
            raise CLIError("--times needs one time per file")
        sup = [float(np.max(np.abs(fl.values))) for fl in flds]
        fit = fit_power_law(ts, sup)
        report["series"] = {"t": ts, "sup": sup, "slope": fit.slope, "stderr": fit.stderr,
                            "ci": [fit.ci_low, fit.ci_high]}
    out = _out_path(args, cfg["out"])
    out.write_text(json.dumps(report, indent=1) + "\n")
    man.outputs.append(str(out))
    return out, EXIT_OK


COMMANDS = {"scatter": cmd_scatter, "soliton": cmd_soliton, "evolve": cmd_evolve, "asymptote": cmd_asymptote,
            "compare": cmd_compare}


def build_parser() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--out-dir", default=".")
    g.add_argument("--config", default=None, help="flat JSON object of option defaults")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--strict", action="store_true")
    g.add_argument("--out", default=None)

    ap = argparse.ArgumentParser(prog="ssq", description="Sasa-Satsuma scattering, solitons and asymptotics")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scatter", parents=[g], help="direct scattering of a profile")
    s.add_argument("--input")
    s.add_argument("--kmin", type=float)
    s.add_argument("--kmax", type=float)
    s.add_argument("--nk", type=int)
    s.add_argument("--box", help="xmin,xmax,ymin,ymax of the pole search box")
    s.add_argument("--method", choices=["matching", "continuation"])
    s.add_argument("--interpolation", choices=["cubic", "previous"])
    s.add_argument("--no-poles", action="store_true", help="skip the discrete-spectrum search")

    s = sub.add_parser("soliton", parents=[g], help="reflectionless field from scattering data")
    s.add_argument("--input")
    s.add_argument("--xmin", type=float)
    s.add_argument("--xmax", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--t", type=float)
    s.add_argument("--random-pairs", type=int)
    s.add_argument("--random-imag", type=int)

    s = sub.add_parser("evolve", parents=[g], help="split-step evolution of a periodic profile")
    s.add_argument("--input")
    s.add_argument("--t-end", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--linear-only", action="store_true")
    s.add_argument("--dealias", type=float)
    s.add_argument("--checkpoint-every", type=float)

    s = sub.add_parser("asymptote", parents=[g], help="region formulas at (x, t) points")
    s.add_argument("--input")
    s.add_argument("--points", help="'x,t;x,t;...'")
    s.add_argument("--lattice", help="xmin,xmax,nx,tmin,tmax,nt")
    s.add_argument("--cone", help="v1,v2")
    s.add_argument("--y-cut", type=float)
    s.add_argument("--p", type=float)
    s.add_argument("--kappa", help="re[,im] of the Painleve tail amplitude")

    s = sub.add_parser("compare", parents=[g], help="norms between fields and decay fits")
    s.add_argument("files", nargs="+")
    s.add_argument("--times", help="comma-separated times, one per file")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = _resolve(args, args.command)
        man = RunManifest(args.command, dict(cfg, seed=args.seed, strict=args.strict, out_dir=args.out_dir), {},
                          __version__)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            out, code = COMMANDS[args.command](args, cfg, man)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except SystemSingular as exc:
        print(f"SystemSingular: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (Instability, BlowUp) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except ApproximateDelta as exc:
        print(f"ApproximateDelta: {exc}", file=sys.stderr)
        return EXIT_APPROX
    except (SSQError, NoConvergence, OSError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    man.wall_time = time.perf_counter() - t0
    man.write(_manifest_path(out))
    return code


if __name__ == "__main__":
    sys.exit(main())
