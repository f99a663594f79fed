"""Command-line front end: ``solve``, ``sweep``, and ``check``.

Configuration comes from CLI flags, optionally merged over a JSON config
file (flags win).  Artifacts are plain files: profile/sweep CSVs with a
versioned ``#`` schema header, JSON summaries, and an optional gnuplot
script next to the CSV.

Config file schema (all sections optional)::

    {
      "nonlinearity": {"name": "double_power", "p": 4, "q": 2,
                       "search_box": [-100, 100]},
      "problem":      {"m": 2.0, "N": 3.0},
      "solve":        {"k": 1, "r_max": 50.0, "tol_alpha": 1e-12,
                       "tail_tol": 1e-4, "grid": 48,
                       "alpha_min": null, "alpha_max": null},
      "check":        {"theta": 0.5, "s_max": 1e10},
      "output":       {"out": ".", "emit": ["csv", "json", "gnuplot"]}
    }

A user-defined nonlinearity replaces the catalog entry with
``{"name": "piecewise", "breakpoints": [...], "pieces": [[term, ...], ...]}``
using the term schema of :func:`nodalshoot.nonlinearity.from_piecewise_config`.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .classifier import Margins
from .errors import (BracketNotFoundError, ConfigError, HypothesisError,
                     ShootingError)
from .hypotheses import CORE_CONDITIONS, CheckerConfig, check_hypotheses
from .integrator import write_profile_csv
from .landmarks import find_landmarks
from .nonlinearity import Nonlinearity, from_piecewise_config, make_nonlinearity
from .solver import SolveConfig, default_grid, solve_k, sweep

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_NOT_FOUND = 4
EXIT_VALIDATION = 5

_SWEEP_SCHEMA = "nodalshoot-sweep-v1"


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}")


def _merged(file_cfg: dict, section: str, key: str, cli_value, default):
    """CLI flag > config file > default."""
    if cli_value is not None:
        return cli_value
    sec = file_cfg.get(section, {})
    if key in sec and sec[key] is not None:
        return sec[key]
    return default


def _build_nonlinearity(args, file_cfg: dict) -> Nonlinearity:
    m = float(_merged(file_cfg, "problem", "m", args.m, 2.0))
    N = float(_merged(file_cfg, "problem", "N", args.N, 3.0))
    if not m > 1.0:
        raise ConfigError(f"m must exceed 1, got {m}")
    if not N >= m:
        raise ConfigError(f"N must be >= m, got N={N}, m={m}")
    sec = dict(file_cfg.get("nonlinearity", {}))
    name = args.f or sec.get("name")
    if name is None:
        raise ConfigError("no nonlinearity given (use --f or the config file)")
    if name == "piecewise" or "pieces" in sec and args.f is None:
        return from_piecewise_config(sec, m, N)
    box = sec.get("search_box")
    kw = {}
    p = args.p if args.p is not None else sec.get("p")
    q = args.q if args.q is not None else sec.get("q")
    lam = args.lam if args.lam is not None else sec.get("lambda")
    if p is not None:
        kw["p"] = float(p)
    if q is not None:
        kw["q"] = float(q)
    if lam is not None:
        kw["lam"] = float(lam)
    if box is not None:
        kw["search_box"] = (float(box[0]), float(box[1]))
    return make_nonlinearity(name, m, N, **kw)


def _solve_config(args, file_cfg: dict) -> SolveConfig:
    g = lambda key, cli, default: _merged(file_cfg, "solve", key, cli, default)
    return SolveConfig(
        r_max=float(g("r_max", args.r_max, 50.0)),
        rel_tol=float(g("rel_tol", getattr(args, "rel_tol", None), 1e-10)),
        tol_alpha=float(g("tol_alpha", getattr(args, "tol_alpha", None), 1e-12)),
        grid=int(g("grid", args.grid, 48)),
        alpha_min=g("alpha_min", args.alpha_min, None),
        alpha_max=g("alpha_max", args.alpha_max, None),
        tail_tol=float(g("tail_tol", None, 1e-4)),
        tail_I_tol=float(g("tail_I_tol", None, 1e-6)),
        workers=int(g("workers", args.workers, 1)),
    )


def _emit_flags(args, file_cfg: dict) -> set[str]:
    raw = _merged(file_cfg, "output", "emit", args.emit, "csv,json")
    if isinstance(raw, str):
        parts = [p.strip() for p in raw.split(",") if p.strip()]
    else:
        parts = list(raw)
    flags = set()
    for p in parts:
        if p in ("csv",):
            flags.add("csv")
        elif p in ("json", "json_summary"):
            flags.add("json")
        elif p in ("gnuplot", "gnuplot_script", "plot"):
            flags.add("gnuplot")
        else:
            raise ConfigError(f"unknown emit flag {p!r}")
    return flags


def _out_dir(args, file_cfg: dict) -> Path:
    out = Path(_merged(file_cfg, "output", "out", args.out, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


_GNUPLOT_TEMPLATE = """\
# gnuplot script for {csv_name}
set datafile separator ','
set datafile commentschars '#'
set key autotitle columnhead
set xlabel 'r'
set grid
plot '{csv_name}' using 1:2 with lines title 'u(r)', \\
     '{csv_name}' using 1:3 with lines title "u'(r)", \\
     '{csv_name}' using 1:5 with lines title 'I(r)'
"""


def _write_gnuplot(path: Path, csv_name: str) -> None:
    path.write_text(_GNUPLOT_TEMPLATE.format(csv_name=csv_name),
                    encoding="utf-8")


def cmd_solve(args) -> int:
    file_cfg = _load_config(args.config)
    nl = _build_nonlinearity(args, file_cfg)
    cfg = _solve_config(args, file_cfg)
    k = int(_merged(file_cfg, "solve", "k", args.k, 0))
    out = _out_dir(args, file_cfg)
    emit = _emit_flags(args, file_cfg)

    try:
        lm = find_landmarks(nl)
    except HypothesisError as exc:
        print(f"error: landmark extraction failed: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    print(f"nonlinearity {nl.label()}  m={nl.m:g} N={nl.N:g}")
    print(f"F zeros: ({lm.F_zero_neg:.12g}, {lm.F_zero_pos:.12g}); "
          f"f zeros: ({lm.f_zero_neg:.12g}, {lm.f_zero_pos:.12g}); "
          f"well depth {lm.well_depth:.12g}")

    report = check_hypotheses(nl, lm)
    for name, verdict in report.conditions.items():
        if verdict.failed:
            print(f"warning: condition {name} fails on samples "
                  f"(witness {verdict.witness})", file=sys.stderr)
    if not report.core_ok:
        bad = [c for c in CORE_CONDITIONS if not report.holds(c)]
        print(f"error: core structural conditions fail: {', '.join(bad)}",
              file=sys.stderr)
        return EXIT_HYPOTHESIS

    try:
        bs = solve_k(nl, lm, k, cfg)
    except BracketNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND

    stem = f"{nl.name}_m{nl.m:g}_N{nl.N:g}_k{k}"
    wrote = []
    if "csv" in emit:
        csv_path = out / f"{stem}_profile.csv"
        write_profile_csv(csv_path, nl, bs.trajectory)
        wrote.append(csv_path)
        if "gnuplot" in emit:
            gp = out / f"{stem}_profile.gp"
            _write_gnuplot(gp, csv_path.name)
            wrote.append(gp)
    if "json" in emit:
        sp = out / f"{stem}_summary.json"
        sp.write_text(json.dumps(bs.summary(nl), indent=2), encoding="utf-8")
        wrote.append(sp)

    status = "accepted" if bs.valid else "FLAGGED"
    print(f"k={k}: alpha* = {bs.alpha_star!r} ({status}); "
          f"bracket width {bs.bracket_width:.3e}; "
          f"tail |u| {bs.tail_norm:.3e}; tail energy {bs.end_energy:.3e}")
    for failure in bs.failures:
        print(f"validation: {failure}", file=sys.stderr)
    for path in wrote:
        print(f"wrote {path}")
    return EXIT_OK if bs.valid else EXIT_VALIDATION


def cmd_sweep(args) -> int:
    file_cfg = _load_config(args.config)
    nl = _build_nonlinearity(args, file_cfg)
    cfg = _solve_config(args, file_cfg)
    out = _out_dir(args, file_cfg)
    try:
        lm = find_landmarks(nl)
    except HypothesisError as exc:
        print(f"error: landmark extraction failed: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    if cfg.alpha_min is not None and cfg.alpha_max is not None \
            and not cfg.alpha_min < cfg.alpha_max:
        raise ConfigError(
            f"empty start-value range [{cfg.alpha_min}, {cfg.alpha_max}]")
    if cfg.alpha_min is not None and cfg.alpha_min <= lm.F_zero_pos:
        raise ConfigError(
            f"alpha-min {cfg.alpha_min} must exceed the primitive zero "
            f"{lm.F_zero_pos:.12g}")
    grid = default_grid(lm, cfg)
    points = sweep(nl, lm, cfg, grid)

    path = out / f"{nl.name}_m{nl.m:g}_N{nl.N:g}_sweep.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {_SWEEP_SCHEMA} f={nl.label()} m={nl.m!r} N={nl.N!r} "
                 f"r_max={cfg.r_max!r}\n")
        fh.write("alpha,zero_count,label,Z_list,T_list,I_min\n")
        for p in points:
            zs = ";".join(repr(z.radius) for z in p.trace.zeros)
            ts = ";".join(repr(t.radius) for t in p.trace.turnings)
            fh.write(f"{p.alpha!r},{p.zero_count},{p.label},"
                     f"{zs},{ts},{p.trace.end_energy!r}\n")
    print(f"swept {len(points)} start values; wrote {path}")
    return EXIT_OK


def cmd_check(args) -> int:
    file_cfg = _load_config(args.config)
    nl = _build_nonlinearity(args, file_cfg)
    out = _out_dir(args, file_cfg)
    ck = file_cfg.get("check", {})
    ccfg = CheckerConfig(
        theta=float(_merged(file_cfg, "check", "theta", args.theta, 0.5)),
        s_max=float(_merged(file_cfg, "check", "s_max", args.s_max, 1e10)))
    try:
        lm = find_landmarks(nl)
    except HypothesisError as exc:
        print(f"error: landmark extraction failed: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    report = check_hypotheses(nl, lm, ccfg)
    doc = report.to_dict()
    doc["landmarks"] = lm.to_dict()
    path = out / f"{nl.name}_m{nl.m:g}_N{nl.N:g}_check.json"
    path.write_text(json.dumps(doc, indent=2, default=repr), encoding="utf-8")
    for name, verdict in report.conditions.items():
        print(f"{name:22s} {verdict.status}")
    print(f"wrote {path}")
    return EXIT_OK if report.core_ok else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nodalshoot",
        description="Shooting-method solver for nodal bound states of the "
                    "radial m-Laplacian equation")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--f", help="catalog nonlinearity: double_power, g1, "
                       "g2, log_critical (parenthesized args allowed)")
        p.add_argument("--m", type=float, help="operator exponent m > 1")
        p.add_argument("--N", type=float, help="dimension N >= m")
        p.add_argument("--p", type=float, help="double_power exponent p")
        p.add_argument("--q", type=float, help="double_power exponent q")
        p.add_argument("--lambda", dest="lam", type=float,
                       help="log_critical exponent")
        p.add_argument("--config", help="JSON config file (flags override)")
        p.add_argument("--out", help="output directory (default .)")

    ps = sub.add_parser("solve", help="locate a k-nodal bound state")
    common(ps)
    ps.add_argument("--k", type=int, help="number of interior sign changes")
    ps.add_argument("--r-max", dest="r_max", type=float)
    ps.add_argument("--tol-alpha", dest="tol_alpha", type=float)
    ps.add_argument("--rel-tol", dest="rel_tol", type=float)
    ps.add_argument("--grid", type=int)
    ps.add_argument("--alpha-min", dest="alpha_min", type=float)
    ps.add_argument("--alpha-max", dest="alpha_max", type=float)
    ps.add_argument("--workers", type=int)
    ps.add_argument("--emit", help="comma list: csv,json,gnuplot")
    ps.set_defaults(func=cmd_solve)

    pw = sub.add_parser("sweep", help="classify a grid of start values")
    common(pw)
    pw.add_argument("--r-max", dest="r_max", type=float)
    pw.add_argument("--grid", type=int)
    pw.add_argument("--alpha-min", dest="alpha_min", type=float)
    pw.add_argument("--alpha-max", dest="alpha_max", type=float)
    pw.add_argument("--workers", type=int)
    pw.set_defaults(func=cmd_sweep, k=None, emit=None, r_max=None)

    pc = sub.add_parser("check", help="audit the structural conditions")
    common(pc)
    pc.add_argument("--theta", type=float, help="window factor in (0,1)")
    pc.add_argument("--s-max", dest="s_max", type=float)
    pc.set_defaults(func=cmd_check, grid=None, alpha_min=None,
                    alpha_max=None, workers=None, emit=None)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ShootingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
