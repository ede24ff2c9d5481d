"""End-to-end simulated experiment: herald, record, recover mode, reconstruct."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fock, io
from .analysis import fit_eq8
from .config import config_hash
from .herald import heralded_state, mode_function
from .modeest import TemporalModePCA, mode_overlap
from .tomo import MLETomography, negativity_report
from .tracegen import NoiseModel, QuadratureDataset, sample_quadratures, synth_traces

log = logging.getLogger(__name__)


@dataclass
class RunManifest:
    config_hash: str
    seed: int
    trace_stage: bool
    pumps: dict
    summary: dict
    out_dir: Path

    def to_dict(self):
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "trace_stage": self.trace_stage,
            "pumps": self.pumps,
            "summary": self.summary,
        }

    @property
    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def paths(self):
        for entry in self.pumps.values():
            for rel in entry["files"].values():
                yield self.out_dir / rel

    def write(self):
        data = self.to_dict()
        data["manifest_hash"] = self.hash
        with open(self.out_dir / "manifest.json", "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)


def _tag(pump):
    return f"{pump:g}mW"


def run_pump(config, pump, seed_seq, out_dir, trace_stage=True, dump_traces=False):
    """Simulate and analyse one pump setting; returns the manifest entry."""
    rng = np.random.default_rng(seed_seq)
    out_dir = Path(out_dir)
    tag = _tag(pump)
    outcome = heralded_state(config, pump)
    planted = mode_function(config.gamma, config.time_grid())
    n = config.events_per_basis
    files = {}

    groups = {}
    metrics = {}
    if trace_stage:
        noise = NoiseModel(background_state=outcome.unheralded_state,
                           lowpass_hz=config.trace_lowpass_hz)
        traces = [synth_traces(outcome.state, planted, th, n, noise, seed=rng)
                  for th in config.bases_deg]
        pca = TemporalModePCA(sample_rate=traces[0].sample_rate,
                              trigger_index=traces[0].trigger_index)
        pca.fit(np.vstack([tr.samples for tr in traces]))
        shot_noise = synth_traces(fock.vacuum(1), planted, 0.0, n,
                                  NoiseModel(lowpass_hz=config.trace_lowpass_hz), seed=rng)
        pca.calibrate(shot_noise.samples)
        for tr in traces:
            groups[tr.lo_phase_deg] = pca.transform(tr.samples)
            if dump_traces:
                name = f"traces_{tag}_{tr.lo_phase_deg:g}deg.bin"
                io.write_traces_binary(out_dir / name, tr)
                files[f"traces_{tr.lo_phase_deg:g}deg"] = name
        if dump_traces:
            io.write_traces_binary(out_dir / f"shotnoise_{tag}.bin", shot_noise)
            files["shot_noise"] = f"shotnoise_{tag}.bin"
        mode = pca.mode_
        metrics["mode_overlap"] = mode_overlap(mode, planted)
        metrics["gamma_hat"] = pca.gamma_
        metrics["calibration_scale"] = pca.scale_
    else:
        for th in config.bases_deg:
            groups[th] = sample_quadratures(outcome.state, np.deg2rad(th), n, seed=rng)
        mode = planted

    unconditioned = {th: sample_quadratures(outcome.unheralded_state, np.deg2rad(th), n, seed=rng)
                     for th in config.bases_deg}

    dataset = QuadratureDataset.from_groups(groups)
    mle = MLETomography(cutoff=config.tomo_cutoff, bin_width=config.tomo_bin_width,
                        max_iter=config.tomo_max_iter).fit(dataset.to_X())
    rho_hat = mle.density_matrix_
    report = negativity_report(rho_hat)
    truth_min, _ = fock.wigner_min(outcome.state)
    grid = fock.wigner(rho_hat)

    files.update({
        "mode": f"mode_{tag}.csv",
        "quadratures": f"quadratures_{tag}.csv",
        "unconditioned": f"unconditioned_{tag}.csv",
        "rho": f"rho_{tag}.json",
        "wigner": f"wigner_{tag}.csv",
    })
    io.write_mode_csv(out_dir / files["mode"], mode)
    io.write_quadratures_csv(out_dir / files["quadratures"], dataset)
    io.write_quadratures_csv(out_dir / files["unconditioned"],
                             QuadratureDataset.from_groups(unconditioned))
    io.write_density_matrix_json(out_dir / files["rho"], rho_hat)
    io.write_wigner_csv(out_dir / files["wigner"], grid)

    metrics.update({
        "r_true": outcome.r,
        "wigner_min": report.wigner_min,
        "wigner_min_location": list(report.location),
        "parity_value": report.parity_value,
        "wigner_min_truth": truth_min,
        "fidelity": fock.fidelity(fock.resize(rho_hat, outcome.state.shape[0]), outcome.state),
        "p_click": outcome.p_click,
        "herald_rate_cps": outcome.herald_rate_cps,
        "fake_fraction": outcome.fake_fraction,
        "mle_iterations": mle.n_iter_,
        "mle_converged": mle.converged_,
        "unconditioned_variance": {f"{th:g}": float(np.var(v, ddof=1))
                                   for th, v in unconditioned.items()},
    })
    log.info("%s: W_min %.4f (truth %.4f), fidelity %.4f", tag, report.wigner_min,
             truth_min, metrics["fidelity"])
    return {"pump_mw": float(pump), "files": files, "metrics": metrics}


def run_pipeline(config, out_dir, trace_stage=True, dump_traces=False, jobs=1):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    children = np.random.SeedSequence(config.seed).spawn(len(config.pump_powers))
    args = [(config, p, s, out_dir, trace_stage, dump_traces)
            for p, s in zip(config.pump_powers, children)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(run_pump, *zip(*args)))
    else:
        entries = [run_pump(*a) for a in args]

    variances = {e["pump_mw"]: {float(k): v for k, v in e["metrics"]["unconditioned_variance"].items()}
                 for e in entries}
    counts = {p: {th: config.events_per_basis for th in v} for p, v in variances.items()}
    fit = fit_eq8(variances, counts)
    rows = [{"pump_mw": p, "theta_deg": th, "variance": v, "n": config.events_per_basis}
            for p, per in variances.items() for th, v in per.items()]
    io.write_rows_csv(out_dir / "unconditioned_variances.csv", rows)

    pumps = {_tag(e["pump_mw"]): e for e in entries}
    summary = {
        "r_hat": {_tag(p): r for p, r in fit.r.items()},
        "loss_hat": fit.loss,
        "wigner_min": {_tag(e["pump_mw"]): e["metrics"]["wigner_min"] for e in entries},
        "herald_rate_cps": {_tag(e["pump_mw"]): e["metrics"]["herald_rate_cps"] for e in entries},
        "variances_csv": "unconditioned_variances.csv",
    }
    manifest = RunManifest(config_hash=config_hash(config), seed=config.seed,
                           trace_stage=trace_stage, pumps=pumps, summary=summary, out_dir=out_dir)
    manifest.write()
    return manifest
