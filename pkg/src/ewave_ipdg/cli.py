"""Command-line entry point: ``ewave-ipdg <subcommand> [flags] [--key=value ...]``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import experiment as ex

log = logging.getLogger("ewave_ipdg")

COMMANDS = {
    "convergence": "time-convergence study (convergence.csv, telemetry.csv)",
    "condnum": "condition numbers of K(tau) over the tau sweep (condnum.csv)",
    "spectrum": "normalized spectra and eigenvalue clusters of K(tau) (spectrum.csv, clusters.csv)",
    "field": "displacement and velocity at t = T (field.csv)",
    "assemble": "export M, A (and K for the first tau) as Matrix Market files",
}


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ewave-ipdg",
        allow_abbrev=False,
        description="Space-time interior penalty dG / FEM experiments for the 2D elastic wave equation.",
        epilog="Any config key can be overridden with --key=value, e.g. --gamma0=1e3,1e6 --scheme=SIPG,FEM.",
    )
    ap.add_argument("command", choices=sorted(COMMANDS), help="; ".join(f"{k}: {v}" for k, v in COMMANDS.items()))
    ap.add_argument("--config", type=Path, help="key = value config file")
    ap.add_argument("--out", help="output directory (default: results)")
    ap.add_argument("--full", action="store_true", help="full-scale 40x40 mesh; runs take tens of minutes")
    ap.add_argument("--emit-matrix", dest="emit_matrix", help="write assembled matrices as Matrix Market files")
    ap.add_argument("--dump-trajectory", dest="dump_trajectory", action="store_true",
                    help="write every time step's coefficients as CSV")
    ap.add_argument("--tau-field", type=float, default=None, help="time step for the field subcommand")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def parse_overrides(extra: list[str]) -> dict:
    out = {}
    for item in extra:
        if not item.startswith("--") or "=" not in item:
            raise SystemExit(f"unrecognised argument {item!r}; overrides take the form --key=value")
        key, value = item[2:].split("=", 1)
        key = key.replace("-", "_")
        try:
            out[key] = ex.coerce(key, value)
        except (KeyError, ValueError) as exc:
            raise SystemExit(str(exc)) from None
    return out


def _dispatch(args, cfg, out: Path) -> None:
    log.info("command: %s", args.command)
    log.info("resolved config:\n%s", cfg.resolved())

    t0 = time.perf_counter()
    if args.command == "convergence":
        rows = ex.run_convergence(cfg)
        for r in rows:
            print(f"{r.scheme:5s} gamma0={r.gamma0 if r.gamma0 is not None else '-':>8} tau={r.tau:.4e} "
                  f"error={r.error:.4e} eoc={r.eoc:.2f}")
    elif args.command == "condnum":
        for r in ex.run_condnum_sweep(cfg):
            print(f"{r.scheme:5s} gamma0={r.gamma0 if r.gamma0 is not None else '-':>8} tau={r.tau:.4e} "
                  f"kappa={r.kappa:.6e} ({r.method}) cg_iterations={r.cg_iterations}")
    elif args.command == "spectrum":
        for rep in ex.run_spectrum_study(cfg):
            spans = " ".join(f"[{lo:.4g},{hi:.4g}]" for lo, hi in rep.clusters)
            print(f"{rep.label:5s} tau={rep.tau:.3e} clusters={len(rep.clusters)} "
                  f"compactness={rep.compactness:.4g} {spans}")
    elif args.command == "field":
        rows = ex.run_field_dump(cfg, args.tau_field)
        print(f"wrote {len(rows)} nodal rows to {out / 'field.csv'}")
    elif args.command == "assemble":
        for p in ex.run_assemble(cfg):
            print(p)
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - t0)


def main(argv: list[str] | None = None) -> int:
    ap = make_parser()
    args, extra = ap.parse_known_args(argv)
    overrides = parse_overrides(extra)
    if args.out:
        overrides["out"] = args.out
    if args.emit_matrix:
        overrides["emit_matrix"] = args.emit_matrix
    if args.dump_trajectory:
        overrides["dump_trajectory"] = True
    try:
        cfg = ex.load_config(args.config, overrides, full=args.full)
    except (KeyError, ValueError, TypeError) as exc:
        ap.error(str(exc))

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    level = logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format="%(message)s", stream=sys.stderr)
    root = logging.getLogger()
    root.setLevel(level)
    fh = logging.FileHandler(out / "experiment.log", mode="w")
    fh.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root.addHandler(fh)
    try:
        _dispatch(args, cfg, out)
    finally:
        root.removeHandler(fh)
        fh.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
