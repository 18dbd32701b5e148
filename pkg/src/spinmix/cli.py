"""Batch command line: reduced-model sweeps, full-model solves, Zeeman scans."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from dataclasses import fields
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .fock import MODE_NAMES, enumerate_sector, reduced_basis
from .model import (VARIANTS, FullHamiltonianBuilder, FullModelParams, ReducedModelParams,
                    build_reduced, ladder_parity)
from .observe import ClassifierThresholds, classify_profile, observe
from .solve import (SolverOptions, ground_state, ground_state_symmetrized, sweep,
                    tie_break_bias)
from .zeeman import load_atoms, load_constants, process_detunings, zeeman_terms

log = logging.getLogger("spinmix")

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2

REDUCED_LIVE_MODES = ("A0", "A-1", "B0", "B+1")
RESONANCE_FIELD_G = 0.97
FIELD_PRESETS = {"zero": 0.0, "resonance": RESONANCE_FIELD_G}
FULL_SIZE_GUARD = 24

# keys that only steer where results go; excluded from the config hash
OUTPUT_KEYS = {"out", "plot", "jobs"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config handling


def _num(v, key):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite")
    return float(v)


def _int(v, key):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    return v


def _bool(v, key):
    if not isinstance(v, bool):
        raise ConfigError(f"{key}: expected true/false, got {v!r}")
    return v


def _str(v, key):
    if not isinstance(v, str):
        raise ConfigError(f"{key}: expected a string, got {v!r}")
    return v


def _opt(check):
    return lambda v, key: None if v is None else check(v, key)


def _grid(v, key):
    """A list of numbers or {"start", "stop", "num"} (inclusive linspace)."""
    if isinstance(v, dict):
        extra = set(v) - {"start", "stop", "num"}
        if extra or len(v) != 3:
            raise ConfigError(f"{key}: range needs exactly start, stop, num")
        num = _int(v["num"], f"{key}.num")
        if num < 1:
            raise ConfigError(f"{key}: empty grid")
        return [float(x) for x in np.linspace(_num(v["start"], key), _num(v["stop"], key), num)]
    if not isinstance(v, list):
        raise ConfigError(f"{key}: expected a list of numbers or a range object")
    if not v:
        raise ConfigError(f"{key}: empty grid")
    return [_num(x, key) for x in v]


def _block(cls):
    names = {f.name for f in fields(cls)}

    def check(v, key):
        if not isinstance(v, dict):
            raise ConfigError(f"{key}: expected an object")
        extra = set(v) - set(names)
        if extra:
            raise ConfigError(f"{key}: unknown keys {sorted(extra)}; allowed {sorted(names)}")
        out = {}
        for k, x in v.items():
            default = getattr(cls(), k)
            if isinstance(default, bool):
                out[k] = _bool(x, f"{key}.{k}")
            elif isinstance(default, int):
                out[k] = _int(x, f"{key}.{k}")
            elif isinstance(default, float):
                out[k] = _num(x, f"{key}.{k}")
            else:
                out[k] = _str(x, f"{key}.{k}")
        return out
    return check


def _choice(options):
    def check(v, key):
        if v not in options:
            raise ConfigError(f"{key}: expected one of {list(options)}, got {v!r}")
        return v
    return check


def _pair(check):
    def pair(v, key):
        if not isinstance(v, list) or len(v) != 2:
            raise ConfigError(f"{key}: expected a two-element list")
        return [check(x, key) for x in v]
    return pair


def _profiles(v, key):
    if v == "all":
        return v
    return _grid(v, key) if v else []


def _field(v, key):
    if isinstance(v, str):
        if v not in FIELD_PRESETS:
            raise ConfigError(f"{key}: preset must be one of {list(FIELD_PRESETS)} or a field in gauss")
        return v
    x = _num(v, key)
    if x < 0:
        raise ConfigError(f"{key}: field must be >= 0")
    return x


SCHEMAS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "reduced-sweep": {
        "N": (_int, 100),
        "gamma1": (_num, 1.0),
        "gamma2": (_opt(_grid), None),
        "variant": (_choice(VARIANTS), "eq10_symmetric"),
        "symmetrize": (_bool, True),
        "tie_break_eps": (_opt(_num), None),
        "profiles": (_profiles, []),
        "solver": (_block(SolverOptions), {}),
        "thresholds": (_block(ClassifierThresholds), {}),
        "out": (_str, "reduced_sweep"),
        "plot": (_bool, False),
        "jobs": (_int, 1),
    },
    "full-solve": {
        "N1": (_int, 20),
        "N2": (_int, 20),
        "m_tot": (_int, 0),
        "c1b1": (_num, 1.0),
        "c2b2": (_num, -2.0),
        "c12b": (_grid, [0.0]),
        "c12g": (_num, 0.0),
        "field": (_field, "zero"),
        "energy_unit_hz": (_num, 10.0),
        "q_offset_hz": (_pair(_num), [0.0, 0.0]),
        "atoms": (_pair(_str), ["Na23", "Rb87"]),
        "constants": (_opt(_str), None),
        "allow_large": (_bool, False),
        "solver": (_block(SolverOptions), {}),
        "out": (_str, "full_solve"),
        "jobs": (_int, 1),
    },
    "zeeman": {
        "B_min": (_num, 0.0),
        "B_max": (_num, 3.0),
        "B_points": (_int, 3001),
        "atoms": (_pair(_str), ["Na23", "Rb87"]),
        "constants": (_opt(_str), None),
        "out": (_str, "zeeman"),
        "plot": (_bool, False),
    },
}


def resolve_config(command: str, file_cfg: dict, overrides: dict) -> dict:
    """Defaults, then the JSON file, then explicit flags. Unknown keys are rejected."""
    schema = SCHEMAS[command]
    if not isinstance(file_cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = set(file_cfg) - set(schema)
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    merged = {k: d for k, (_, d) in schema.items()}
    merged.update(file_cfg)
    for k, v in overrides.items():
        if v is None:
            continue
        if k in ("solver", "thresholds"):
            merged[k] = {**merged.get(k, {}), **v}
        else:
            merged[k] = v
    return {k: check(merged[k], k) for k, (check, _) in schema.items()}


def config_hash(cfg: dict) -> str:
    physics = {k: v for k, v in cfg.items() if k not in OUTPUT_KEYS}
    blob = json.dumps(physics, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def metadata_lines(command: str, cfg: dict) -> list[str]:
    physics = {k: v for k, v in cfg.items() if k not in OUTPUT_KEYS}
    return [
        f"spinmix {__version__}",
        f"command: {command}",
        f"config_sha256: {config_hash(cfg)}",
        "config: " + json.dumps(physics, sort_keys=True, separators=(",", ":")),
    ]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: list[str], columns: list[str], rows: list[dict]):
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])
    path.write_text(buf.getvalue())


def read_csv(path: Path) -> tuple[list[str], list[dict]]:
    """Metadata lines and rows of a file written by :func:`write_csv`."""
    meta, body = [], []
    for line in Path(path).read_text().splitlines():
        (meta.append(line[2:]) if line.startswith("#") else body.append(line))
    return meta, list(csv.DictReader(body))


# ---------------------------------------------------------------------------
# reduced-sweep

REDUCED_COLUMNS = (
    ["gamma2", "energy", "gap", "degenerate"]
    + [f"n_mean_{m}" for m in REDUCED_LIVE_MODES]
    + [f"n_fluct_{m}" for m in REDUCED_LIVE_MODES]
    + ["entropy_raw", "entropy_norm", "ghz_score", "classification", "error"]
)
PROFILE_COLUMNS = ["k", "weight", "amplitude"]


def run_reduced_sweep(cfg: dict) -> tuple[list[dict], dict]:
    N, g1 = cfg["N"], cfg["gamma1"]
    if cfg["gamma2"] is None:
        raise ConfigError("gamma2 grid is required")
    if N < 0 or N % 2:
        raise ConfigError(f"N must be a non-negative even integer, got {N}")
    basis = reduced_basis(N)
    parity = ladder_parity(N)
    opts = SolverOptions(**cfg["solver"])
    thresholds = ClassifierThresholds(**cfg["thresholds"])
    eps = cfg["tie_break_eps"]

    def solver(H, o):
        if eps is not None:
            return ground_state(H, o, bias=tie_break_bias(N + 1, eps))
        if cfg["symmetrize"]:
            return ground_state_symmetrized(H, parity, o)
        return ground_state(H, o)

    def observables(res, g2):
        rep = observe(res.amplitudes, basis, thresholds)
        row = rep.as_row()
        return {k: row[k] for k in row if any(k.endswith("_" + m) for m in REDUCED_LIVE_MODES)
                or not k.startswith("n_")}

    rows = sweep(cfg["gamma2"], lambda g2: build_reduced(ReducedModelParams(g1, g2, N, cfg["variant"])),
                 {"obs": observables}, solver=solver, opts=opts, jobs=cfg["jobs"])
    profiles = {}
    wanted = cfg["gamma2"] if cfg["profiles"] == "all" else cfg["profiles"]
    for g2 in wanted:
        match = [r for r in rows if r["point"] == g2 and not r["error"]]
        if not match and g2 not in cfg["gamma2"]:
            raise ConfigError(f"profile requested for gamma2={g2}, which is not on the grid")
        if match:
            amp = match[0]["result"].amplitudes
            profiles[g2] = [{"k": k, "weight": float(a * a), "amplitude": float(a)}
                            for k, a in enumerate(amp)]
    for r in rows:
        r["gamma2"] = r["point"]
    return rows, profiles


def cmd_reduced_sweep(cfg: dict) -> int:
    rows, profiles = run_reduced_sweep(cfg)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    meta = metadata_lines("reduced-sweep", cfg)
    write_csv(out / "sweep.csv", meta, REDUCED_COLUMNS, rows)
    for g2, prof in profiles.items():
        write_csv(out / f"profile_gamma2_{g2!r}.csv", meta + [f"gamma2: {g2!r}"],
                  PROFILE_COLUMNS, prof)
    if cfg["plot"]:
        ok = [r for r in rows if not r["error"]]
        _plot_lines(out / "sweep.svg", [r["gamma2"] for r in ok],
                    {"n_fluct_A0": [r["n_fluct_A0"] for r in ok],
                     "entropy_norm x N": [r["entropy_norm"] * cfg["N"] for r in ok]},
                    "gamma2 / gamma1")
    failed = sum(1 for r in rows if r["error"])
    print(f"wrote {out / 'sweep.csv'} ({len(rows)} rows, {failed} failed, "
          f"{len(profiles)} profiles)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# full-solve

FULL_COLUMNS = (
    ["c12b", "B_gauss", "p1", "q1", "p2", "q2", "energy", "gap", "degenerate"]
    + [f"n_mean_{m}" for m in MODE_NAMES] + [f"n_fluct_{m}" for m in MODE_NAMES]
    + ["entropy_raw", "entropy_norm", "error"]
)


def run_full_solve(cfg: dict) -> list[dict]:
    N1, N2 = cfg["N1"], cfg["N2"]
    if max(N1, N2) > FULL_SIZE_GUARD and not cfg["allow_large"]:
        raise ConfigError(f"N1={N1}, N2={N2} exceeds the desk-scale guard of {FULL_SIZE_GUARD}; "
                          "pass --allow-large to run anyway")
    atoms = load_atoms(cfg["constants"])
    try:
        atom_a, atom_b = (atoms[n] for n in cfg["atoms"])
    except KeyError as e:
        raise ConfigError(f"unknown atom {e.args[0]!r}; known {sorted(atoms)}") from None
    B = FIELD_PRESETS.get(cfg["field"], cfg["field"])
    z = zeeman_terms(atom_a, atom_b, float(B), cfg["energy_unit_hz"], *cfg["q_offset_hz"])
    basis = enumerate_sector(N1, N2, cfg["m_tot"])
    builder = FullHamiltonianBuilder(basis)
    opts = SolverOptions(**cfg["solver"])

    def build(c12b):
        return builder.matrix(FullModelParams(N1, N2, cfg["c1b1"], cfg["c2b2"], c12b, cfg["c12g"], **z))

    def observables(res, c12b):
        return observe(res.amplitudes, basis).as_row()

    rows = sweep(cfg["c12b"], build, {"obs": observables}, opts=opts, jobs=cfg["jobs"])
    for r in rows:
        r.update(c12b=r["point"], B_gauss=float(B), **z)
    return rows


def cmd_full_solve(cfg: dict) -> int:
    rows = run_full_solve(cfg)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "full.csv", metadata_lines("full-solve", cfg), FULL_COLUMNS, rows)
    print(f"wrote {out / 'full.csv'} ({len(rows)} rows)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# zeeman

ZEEMAN_COLUMNS = (["B_gauss"] + [f"dE{i}" for i in range(1, 6)]
                  + [f"abs_dE{i}" for i in range(1, 6)])
CROSSING_COLUMNS = ["process", "B_gauss"]


def run_zeeman(cfg: dict):
    lo, hi, n = cfg["B_min"], cfg["B_max"], cfg["B_points"]
    if not hi > lo or n < 2:
        raise ConfigError(f"field range must have B_max > B_min and >= 2 points, "
                          f"got [{lo}, {hi}] with {n}")
    if lo < 0:
        raise ConfigError("B_min must be >= 0")
    atoms = load_atoms(cfg["constants"])
    try:
        atom_a, atom_b = (atoms[k] for k in cfg["atoms"])
    except KeyError as e:
        raise ConfigError(f"unknown atom {e.args[0]!r}; known {sorted(atoms)}") from None
    grid = np.linspace(lo, hi, n)
    curves = process_detunings(atom_a, atom_b, grid)
    rows = []
    for j, B in enumerate(grid):
        row = {"B_gauss": float(B)}
        for c in curves:
            row[f"dE{c.process}"] = float(c.values[j])
            row[f"abs_dE{c.process}"] = abs(float(c.values[j]))
        rows.append(row)
    crossings = [{"process": c.process, "B_gauss": x} for c in curves for x in c.crossings]
    return rows, crossings


def cmd_zeeman(cfg: dict) -> int:
    rows, crossings = run_zeeman(cfg)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    meta = metadata_lines("zeeman", cfg)
    write_csv(out / "detunings.csv", meta, ZEEMAN_COLUMNS, rows)
    write_csv(out / "crossings.csv", meta, CROSSING_COLUMNS, crossings)
    if cfg["plot"]:
        _plot_lines(out / "detunings.svg", [r["B_gauss"] for r in rows],
                    {f"|dE{i}|": [r[f"abs_dE{i}"] for r in rows] for i in range(1, 6)},
                    "B (G)")
    for c in crossings:
        print(f"dE{c['process']} crosses zero at {c['B_gauss']:.6f} G")
    if not crossings:
        print("no zero crossings in range")
    return EXIT_OK


# ---------------------------------------------------------------------------
# classify / constants


def load_profile(path) -> np.ndarray:
    """Weights from a profile CSV (column ``weight``) or a bare list of numbers."""
    _, rows = read_csv(path)
    if rows and "weight" in rows[0]:
        return np.array([float(r["weight"]) for r in rows])
    values = [float(x) for line in Path(path).read_text().splitlines()
              if line.strip() and not line.startswith("#") for x in line.replace(",", " ").split()]
    return np.array(values)


def cmd_classify(args) -> int:
    w = load_profile(args.profile)
    if len(w) == 0 or np.any(w < 0) or abs(w.sum() - 1) > 1e-6:
        raise ConfigError(f"{args.profile}: not a probability vector (sum {w.sum():.6g})")
    th = _block(ClassifierThresholds)(_parse_kv(args.threshold), "thresholds")
    print(classify_profile(w / w.sum(), ClassifierThresholds(**th)))
    return EXIT_OK


def cmd_constants(args) -> int:
    doc = load_constants(args.constants)
    load_atoms(args.constants)  # validates the records
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------


def _plot_lines(path: Path, x, series: dict, xlabel: str):
    try:
        import matplotlib
        matplotlib.use("svg")
        import matplotlib.pyplot as plt
    except ImportError as e:
        raise RuntimeError("plotting needs matplotlib (pip install artifact[plot])") from e
    matplotlib.rcParams["svg.hashsalt"] = "spinmix"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in series.items():
        ax.plot(x, y, label=label)
    ax.set_xlabel(xlabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _parse_kv(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"expected KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _range(values):
    start, stop, num = values
    try:
        return {"start": float(start), "stop": float(stop), "num": int(num)}
    except ValueError:
        raise ConfigError(f"range needs START STOP NUM, got {values}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinmix", description=__doc__)
    p.add_argument("--version", action="version", version=f"spinmix {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, jobs=True, plot=True):
        sp.add_argument("--config", help="JSON config file; flags override its values")
        sp.add_argument("--out", help="output directory")
        if plot:
            sp.add_argument("--plot", action="store_true", default=None, help="also write an SVG")
        if jobs:
            sp.add_argument("--jobs", type=int, help="concurrent sweep workers")
            sp.add_argument("--solver", action="append", metavar="KEY=VALUE",
                            help="solver option, e.g. method=lanczos")

    r = sub.add_parser("reduced-sweep", help="ground states of the four-mode ladder over a gamma2 grid")
    common(r)
    r.add_argument("--N", type=int)
    r.add_argument("--gamma1", type=float)
    g = r.add_mutually_exclusive_group()
    g.add_argument("--gamma2", type=float, nargs="+")
    g.add_argument("--gamma2-range", nargs=3, metavar=("START", "STOP", "NUM"))
    r.add_argument("--variant", choices=VARIANTS)
    r.add_argument("--no-symmetrize", dest="symmetrize", action="store_false", default=None)
    r.add_argument("--tie-break-eps", type=float)
    r.add_argument("--profiles", nargs="*", help="gamma2 values to dump profiles for, or 'all'")
    r.add_argument("--threshold", action="append", metavar="KEY=VALUE",
                   help="classifier threshold, e.g. corner_max=0.95")

    f = sub.add_parser("full-solve", help="two-species ground state over a c12b grid")
    common(f, plot=False)
    f.add_argument("--N1", type=int)
    f.add_argument("--N2", type=int)
    f.add_argument("--m-tot", type=int)
    f.add_argument("--c1b1", type=float)
    f.add_argument("--c2b2", type=float)
    f.add_argument("--c12b", type=float, nargs="+")
    f.add_argument("--c12g", type=float)
    f.add_argument("--field", help="'zero', 'resonance' (0.97 G) or a field in gauss")
    f.add_argument("--energy-unit-hz", type=float,
                   help="value of one Hamiltonian energy unit in Hz")
    f.add_argument("--q-offset-hz", type=float, nargs=2, metavar=("Q1", "Q2"))
    f.add_argument("--atoms", nargs=2, metavar=("A", "B"))
    f.add_argument("--constants", help="atomic constants JSON")
    f.add_argument("--allow-large", action="store_true", default=None)

    z = sub.add_parser("zeeman", help="the five exchange detunings over a field range")
    common(z, jobs=False)
    z.add_argument("--B-min", type=float)
    z.add_argument("--B-max", type=float)
    z.add_argument("--B-points", type=int)
    z.add_argument("--atoms", nargs=2, metavar=("A", "B"))
    z.add_argument("--constants", help="atomic constants JSON")

    c = sub.add_parser("classify", help="classify a profile file")
    c.add_argument("profile")
    c.add_argument("--threshold", action="append", metavar="KEY=VALUE")

    k = sub.add_parser("constants", help="print the atomic constants")
    k.add_argument("--constants", help="alternative constants JSON")
    k.add_argument("--out", help="write to a file instead of stdout")
    return p


def _overrides(args) -> dict:
    skip = {"command", "config", "verbose", "gamma2_range", "solver", "threshold"}
    ov = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    if "field" in ov:
        try:
            ov["field"] = float(ov["field"])
        except ValueError:
            pass
    if getattr(args, "gamma2_range", None):
        ov["gamma2"] = _range(args.gamma2_range)
    if getattr(args, "profiles", None) == ["all"]:
        ov["profiles"] = "all"
    elif getattr(args, "profiles", None) is not None:
        ov["profiles"] = [float(x) for x in args.profiles]
    if getattr(args, "solver", None):
        ov["solver"] = _parse_kv(args.solver)
    if getattr(args, "threshold", None):
        ov["thresholds"] = _parse_kv(args.threshold)
    for key in ("q_offset_hz", "atoms"):
        if key in ov:
            ov[key] = list(ov[key])
    return ov


COMMANDS = {"reduced-sweep": cmd_reduced_sweep, "full-solve": cmd_full_solve,
            "zeeman": cmd_zeeman}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "classify":
            return cmd_classify(args)
        if args.command == "constants":
            return cmd_constants(args)
        file_cfg = {}
        if args.config:
            try:
                file_cfg = json.loads(Path(args.config).read_text())
            except json.JSONDecodeError as e:
                raise ConfigError(f"{args.config}: invalid JSON ({e})") from None
        cfg = resolve_config(args.command, file_cfg, _overrides(args))
        return COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"spinmix {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"spinmix {args.command}: I/O error: {e}", file=sys.stderr)
        return EXIT_COMPUTE
    except Exception as e:  # noqa: BLE001 - top-level reporter
        log.debug("failure", exc_info=True)
        print(f"spinmix {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
