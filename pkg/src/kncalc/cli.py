"""Command line driver: ``kncalc check | kernel | apply``.

Exit codes: 0 success, 1 a check failed, 2 usage, parse or input error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .expmap import make_cutoff
from .quantize import assemble_kernel, write_kernel_binary, write_kernel_csv
from .symbols import symbol_from_name

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kncalc", description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, help="YAML or JSON run configuration")
    p.add_argument("--out", dest="out_dir", type=Path, help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, help="random seed (overrides seed)")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="run the property suite and write reports")
    c.add_argument("--no-plots", action="store_true", help="skip SVG plots")

    k = sub.add_parser("kernel", help="assemble a kernel and write CSV and binary snapshots")
    k.add_argument("--symbol", help="registry name (defaults to symbol.name)")
    k.add_argument("--out", dest="out_file", type=Path,
                   help="CSV path; the binary snapshot goes next to it with suffix .bin")

    a = sub.add_parser("apply", help="apply a quantized symbol to grid values")
    a.add_argument("--symbol", help="registry name (defaults to symbol.name)")
    a.add_argument("--input", required=True, type=Path,
                   help="CSV with one value per line, 're' or 're,im'")
    a.add_argument("--out", dest="out_file", type=Path, help="output CSV (default: <out>/applied.csv)")
    return p


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.out_dir is not None:
        changes["output_dir"] = str(args.out_dir)
    if args.seed is not None:
        changes["seed"] = args.seed
    return cfg.replace(**changes) if changes else cfg


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _operator(cfg: RunConfig, name: str | None):
    name = name or cfg.symbol.name
    try:
        sym = symbol_from_name(name)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc.args[0]) if exc.args else str(exc)) from exc
    geom = cfg.geometry.build()
    chi = make_cutoff(geom, cfg.cutoff.r, cfg.cutoff.profile)
    return assemble_kernel(geom, sym, chi), name


def cmd_check(args, cfg: RunConfig) -> int:
    from .verify import run_suite, write_reports

    def progress(r):
        status = "PASS" if r.passed else "FAIL"
        extra = f" ({r.error})" if r.error else ""
        _say(args, f"{status} {r.name}: measured={r.measured:.3e} tol={r.tolerance:.1e}{extra}")

    reports = run_suite(cfg, progress)
    paths = write_reports(reports, cfg.output_dir, cfg, plots=not args.no_plots)
    _say(args, f"reports: {paths['csv']} {paths['json']}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_kernel(args, cfg: RunConfig) -> int:
    P, name = _operator(cfg, args.symbol)
    csv_path = args.out_file or Path(cfg.output_dir) / f"kernel_{_slug(name)}.csv"
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    write_kernel_csv(P, csv_path)
    bin_path = write_kernel_binary(P, csv_path.with_suffix(".bin"))
    prov = P.provenance
    print(f"kernel symbol={name} geometry={P.geometry.describe()} order={P.order:g} "
          f"cutoff=r:{prov['cutoff']['r']:g},{prov['cutoff']['profile']} method={prov['method']} "
          f"density={prov['density']} -> {csv_path} {bin_path}")
    return EXIT_OK


def _read_values(path: Path) -> np.ndarray:
    try:
        rows = [line.strip() for line in path.read_text().splitlines() if line.strip()]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise UsageError(f"{path} contains no values")
    vals = []
    for k, row in enumerate(rows, 1):
        parts = row.split(",")
        try:
            if len(parts) == 1:
                vals.append(complex(float(parts[0]), 0.0))
            elif len(parts) == 2:
                vals.append(complex(float(parts[0]), float(parts[1])))
            else:
                raise ValueError
        except ValueError:
            raise UsageError(f"{path}:{k}: expected 're' or 're,im', got {row!r}") from None
    return np.array(vals)


def cmd_apply(args, cfg: RunConfig) -> int:
    u = _read_values(args.input)
    if u.size != cfg.geometry.n:
        raise UsageError(f"input has {u.size} values but the grid has N = {cfg.geometry.n}")
    P, name = _operator(cfg, args.symbol)
    v = P.apply(u)
    out = args.out_file or Path(cfg.output_dir) / "applied.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("".join(f"{float(z.real)!r},{float(z.imag)!r}\n" for z in v))
    _say(args, f"applied {name} on {P.geometry.describe()} -> {out}")
    return EXIT_OK


def _slug(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


COMMANDS = {"check": cmd_check, "kernel": cmd_kernel, "apply": cmd_apply}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, UsageError) as exc:
        print(f"kncalc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
