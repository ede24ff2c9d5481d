"""Command-line entry point.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
Units at this boundary: pump powers in mW, rates in cps, times in seconds,
LO phases in degrees.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import defaultdict
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fock, io
from .analysis import fit_eq8, format_loss_report, loss_report, theory_curves
from .config import SCHEMA, config_from_dict, load_config
from .exceptions import InputError, NumericalError
from .herald import ExperimentConfig
from .modeest import TemporalModePCA
from .pipeline import run_pipeline
from .tomo import MLETomography, negativity_report
from .tracegen import QuadratureDataset

OUT_DIR_ENV = "CATSIM_OUT_DIR"


def _config(args):
    cfg = load_config(args.config) if args.config else config_from_dict({})
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "pump", None):
        cfg = replace(cfg, pump_powers=args.pump)
    return cfg


def _out_dir(args):
    path = Path(args.out_dir or os.environ.get(OUT_DIR_ENV, "catsim_out"))
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_simulate(args):
    cfg = _config(args)
    manifest = run_pipeline(cfg, _out_dir(args), trace_stage=not args.no_trace_stage,
                            dump_traces=args.dump_traces, jobs=args.jobs)
    for tag, entry in manifest.pumps.items():
        m = entry["metrics"]
        print(f"{tag:>8s}  r={m['r_true']:.3f}  W_min={m['wigner_min']:+.4f} "
              f"(truth {m['wigner_min_truth']:+.4f})  F={m['fidelity']:.4f}  "
              f"rate={m['herald_rate_cps'] / 1e3:.1f} kcps")
    print(f"fitted loss {manifest.summary['loss_hat']:.3f}; "
          f"manifest {manifest.out_dir / 'manifest.json'} ({manifest.hash[:12]})")


def cmd_analyze(args):
    out = _out_dir(args)
    if args.quadratures:
        dataset = io.read_quadratures_csv(args.quadratures)
    else:
        if not args.traces:
            raise InputError("analyze needs --traces or --quadratures")
        records = [io.read_traces(p)[0] for p in args.traces]
        pca = TemporalModePCA(sample_rate=records[0].sample_rate,
                              trigger_index=records[0].trigger_index)
        pca.fit(np.vstack([r.samples for r in records]))
        if args.shot_noise:
            pca.calibrate(io.read_traces(args.shot_noise)[0].samples)
        io.write_mode_csv(out / "mode.csv", pca.mode_)
        dataset = QuadratureDataset.from_groups(
            {r.lo_phase_deg: pca.transform(r.samples) for r in records})
        io.write_quadratures_csv(out / "quadratures.csv", dataset)
        if pca.gamma_ is not None:
            print(f"mode growth rate gamma = 2pi x {pca.gamma_ / (2 * np.pi) / 1e6:.2f} MHz")
    mle = MLETomography(cutoff=args.cutoff, bin_width=args.bin_width).fit(dataset.to_X())
    rho = mle.density_matrix_
    report = negativity_report(rho)
    io.write_density_matrix_json(out / "rho.json", rho)
    io.write_wigner_csv(out / "wigner.csv", fock.wigner(rho))
    print(json.dumps({
        "wigner_min": report.wigner_min,
        "location": report.location,
        "parity_value": report.parity_value,
        "mle_iterations": mle.n_iter_,
        "mle_converged": mle.converged_,
    }, indent=2))


def cmd_theory(args):
    cfg = _config(args)
    rows = theory_curves(cfg)
    out = _out_dir(args) / "theory.csv"
    io.write_rows_csv(out, rows)
    print(",".join(rows[0]))
    for row in rows:
        print(",".join(f"{v:.6g}" for v in row.values()))


def cmd_loss_report(args):
    report = loss_report(_config(args))
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(format_loss_report(report))


def cmd_fit_eq8(args):
    rows = io.read_rows_csv(args.input)
    variances, counts = defaultdict(dict), defaultdict(dict)
    for row in rows:
        variances[row["pump_mw"]][row["theta_deg"]] = row["variance"]
        if "n" in row:
            counts[row["pump_mw"]][row["theta_deg"]] = row["n"]
    fit = fit_eq8(dict(variances), dict(counts) if counts else None)
    print(json.dumps({"r": {f"{p:g}": r for p, r in fit.r.items()}, "loss": fit.loss,
                      "cost": fit.cost, "success": fit.success}, indent=2))


def cmd_schema(args):
    print(json.dumps(SCHEMA, indent=2))


def build_parser():
    parser = argparse.ArgumentParser(prog="catsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, pumps=True):
        p.add_argument("--config", help="JSON config (defaults if omitted)")
        p.add_argument("--out-dir", help=f"output directory (env {OUT_DIR_ENV})")
        if pumps:
            p.add_argument("--pump", type=float, action="append", help="pump power in mW (repeatable)")

    p = sub.add_parser("simulate", help="run the full simulated experiment")
    common(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-trace-stage", action="store_true",
                   help="sample quadratures directly instead of synthesizing traces")
    p.add_argument("--dump-traces", action="store_true", help="also write binary trace files")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="PCA + tomography on external traces or quadratures")
    p.add_argument("--traces", nargs="+", help="trace files (.bin or .csv), one per LO phase")
    p.add_argument("--shot-noise", help="vacuum trace file for quadrature calibration")
    p.add_argument("--quadratures", help="quadrature CSV (theta_deg,x); skips PCA")
    p.add_argument("--cutoff", type=int, default=15)
    p.add_argument("--bin-width", type=float, default=0.1)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("theory", help="squeezing and Wigner-minimum theory curves")
    common(p)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("loss-report", help="loss-budget tables")
    common(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_loss_report)

    p = sub.add_parser("fit-eq8", help="fit squeezing and loss to quadrature variances")
    p.add_argument("--input", required=True, help="CSV with pump_mw,theta_deg,variance[,n]")
    p.set_defaults(func=cmd_fit_eq8)

    p = sub.add_parser("schema", help="print the config JSON schema")
    p.set_defaults(func=cmd_schema)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
