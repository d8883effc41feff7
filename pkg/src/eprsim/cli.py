"""Command-line front end: predict | simulate | analyze | check.

All variances are quoted in dB as 10*log10 of the ratio to shot noise.
"""
import argparse
import dataclasses
import logging
import math
import os
import sys

import numpy as np

from . import analysis
from .analysis import band_report, predicted_spectra, welch_spectra
from .config import ConfigError, ExperimentConfig, load_config, serialize_config, validate_config
from .gaussian import QuadratureAngles, to_db
from .nopo import Check, cavity_consistency, model_spectra, sfg_pump_power
from .synth import SynthesisError, electronic_noise_trace, shot_noise_reference, synthesize
from .traces import TraceFileError, read_trace, write_trace

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_FORMAT = 0, 2, 3, 4

TRACE_FILES = {"x": "trace_x.eprt", "y": "trace_y.eprt", "shot": "shot.eprt", "dark": "dark.eprt"}
X_ANGLES = QuadratureAngles(0.0, 0.0)
Y_ANGLES = QuadratureAngles(math.pi / 2, math.pi / 2)

log = logging.getLogger("eprsim")


def _out_dir(path) -> str:
    if not os.path.isdir(path):
        raise FileNotFoundError(f"output directory {path!r} does not exist")
    return path


def _write_config(cfg: ExperimentConfig, out: str) -> str:
    path = os.path.join(out, "config.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_config(cfg))
    return path


def _write_reports(reports, out: str, formats) -> list[str]:
    paths = []
    if "csv" in formats:
        p = os.path.join(out, "report.csv")
        analysis.write_report_csv(reports, p)
        paths.append(p)
    if "text" in formats:
        p = os.path.join(out, "report.txt")
        with open(p, "w", encoding="utf-8") as fh:
            fh.write("\n".join(r.to_text() for r in reports))
        paths.append(p)
    return paths


def _reports(spectra, cfg: ExperimentConfig):
    return [
        band_report(
            spectra,
            band,
            cfg.efficiency_chain(),
            gain_mode=cfg.analysis.gain_mode,
            mad_threshold=cfg.analysis.mad_threshold,
            labels=cfg.labels,
        )
        for band in cfg.analysis.bands
    ]


def cmd_predict(cfg: ExperimentConfig, out: str | None = None, formats=("csv", "text"),
                sweep=None):
    """Analytic spectra and predicted reports; no randomness involved."""
    a = cfg.analysis
    spectra = predicted_spectra(cfg.model(), cfg.synth.sample_rate_hz, a.fft_length)
    reports = _reports(spectra, cfg)
    if out is not None:
        out = _out_dir(out)
        analysis.write_spectrum_csv(spectra, os.path.join(out, "predicted_spectrum.csv"))
        _write_reports(reports, out, formats)
        _write_config(cfg, out)
        if sweep is not None:
            write_sweep(cfg, sweep, os.path.join(out, "sigma_sweep.csv"))
    return spectra, reports


def sigma_sweep(cfg: ExperimentConfig, sigmas):
    """Band-averaged detected variances (dB) for each pump ratio, first band."""
    freqs = np.fft.rfftfreq(cfg.analysis.fft_length, 1 / cfg.synth.sample_rate_hz)
    lo, hi = cfg.analysis.bands[0]
    mask = (freqs >= lo) & (freqs <= hi)
    rows = []
    for s in sigmas:
        c = dataclasses.replace(cfg, pump=dataclasses.replace(cfg.pump, sigma=float(s), power_w=0.0))
        m = model_spectra(c.model(), freqs[mask])
        rows.append((float(s), *(to_db(float(np.mean(m[k]))) for k in analysis.COMBINATIONS)))
    return rows


def write_sweep(cfg, sigmas, path):
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["sigma", *(f"{k}_db" for k in analysis.COMBINATIONS)])
        for row in sigma_sweep(cfg, sigmas):
            wr.writerow([analysis.format_number(v) for v in row])


def cmd_simulate(cfg: ExperimentConfig, out: str) -> dict:
    """Write X- and Y-setting signal traces, a shot-noise reference and a dark trace."""
    out = _out_dir(out)
    # keep the output location out of the traces so runs are comparable across directories
    config_text = serialize_config(dataclasses.replace(cfg, output=type(cfg.output)()))
    plan = {
        "x": lambda: synthesize(cfg.synth_config(X_ANGLES, stream=0)),
        "y": lambda: synthesize(cfg.synth_config(Y_ANGLES, stream=1)),
        "shot": lambda: shot_noise_reference(cfg.synth_config(X_ANGLES, stream=2)),
        "dark": lambda: electronic_noise_trace(cfg.synth_config(X_ANGLES, stream=3)),
    }
    paths = {}
    for name, make in plan.items():
        tr = make()
        tr.metadata["config"] = config_text
        tr.metadata["seed"] = cfg.synth.seed
        paths[name] = os.path.join(out, TRACE_FILES[name])
        write_trace(paths[name], tr)
        log.info("wrote %s (%d samples)", paths[name], tr.n_samples)
        del tr
    paths["config"] = _write_config(cfg, out)
    return paths


def resolve_traces(run_dir=None, x=None, y=None, shot=None, dark=None) -> dict:
    paths = {"x": x, "y": y, "shot": shot, "dark": dark}
    if run_dir is not None:
        for k, name in TRACE_FILES.items():
            candidate = os.path.join(run_dir, name)
            if paths[k] is None and os.path.exists(candidate):
                paths[k] = candidate
    if paths["shot"] is None:
        raise analysis.CalibrationMissingError(
            "calibration missing: no shot-noise reference trace (--shot or shot.eprt)"
        )
    if paths["x"] is None:
        raise analysis.AnalysisError("no X-setting trace given (--x or trace_x.eprt)")
    if paths["y"] is None:
        raise analysis.AnalysisError("no Y-setting trace given (--y or trace_y.eprt)")
    return paths


def cmd_analyze(paths: dict, cfg: ExperimentConfig, out: str | None = None, formats=("csv", "text")):
    """Load traces, build normalized spectra and one report per configured band."""
    if out is not None:
        out = _out_dir(out)
    a = cfg.analysis
    spectra = welch_spectra(
        read_trace(paths["x"]),
        read_trace(paths["y"]),
        reference=read_trace(paths["shot"]),
        electronic=read_trace(paths["dark"]) if paths.get("dark") else None,
        fft_length=a.fft_length,
        n_averages=a.n_averages,
        window=cfg.window,
    )
    reports = _reports(spectra, cfg)
    if out is not None:
        analysis.write_spectrum_csv(spectra, os.path.join(out, "spectrum.csv"))
        _write_reports(reports, out, formats)
        _write_config(cfg, out)
    return spectra, reports


def cmd_check(cfg: ExperimentConfig):
    """Derived cavity and efficiency figures with pass/fail against the quoted values."""
    eff = cfg.efficiency_chain()
    checks = cavity_consistency(cfg.cavity_params(), eff)
    checks.append(Check("eta_det_mean", eff.eta_det, 0.945, 0.0005 / 0.945))
    blue = sfg_pump_power(cfg.sfg.power_852_w, cfg.sfg.power_1064_w, cfg.sfg.efficiency_per_w)
    checks.append(Check("sfg_full_power_w", blue, cfg.sfg.min_blue_w, math.inf, at_least=True))
    derived = {
        "fsr_hz": checks[0].value,
        "fsr_over_bandwidth": checks[1].value,
        "eta_det_mean": eff.eta_det,
        "eta_esc_mean": eff.eta_esc,
        "eta_opt_mean": eff.eta_opt,
        "eta_tot_mean": eff.eta_tot,
        "eta_tot_852": eff.channel1.eta_tot,
        "eta_tot_1064": eff.channel2.eta_tot,
        "pump_power_w": cfg.sigma * cfg.cavity.threshold_power_w,
        "sfg_full_power_w": blue,
    }
    return checks, derived


def format_checks(checks, derived) -> str:
    fmt = analysis.format_number
    lines = ["derived quantities:"]
    lines += [f"  {k:22} {fmt(v)}" for k, v in derived.items()]
    lines.append("checks:")
    for c in checks:
        rel = ">=" if c.at_least else f"residual {fmt(c.residual)}"
        lines.append(
            f"  {'PASS' if c.passed else 'FAIL'}  {c.name:22} {fmt(c.value)}  vs {fmt(c.reference)}  ({rel})"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- argument parsing


def _band(text: str):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI in Hz, got {text!r}") from None
    return (lo, hi)


def _sweep(text: str):
    try:
        lo, hi, n = text.split(":")
        return list(np.linspace(float(lo), float(hi), int(n)))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:STOP:COUNT, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="eprsim",
        description=__doc__,
        epilog="exit codes: 0 success, 2 validation error, 3 I/O error, 4 trace format error",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (key = value); defaults reproduce the reference operating point")
    common.add_argument("--seed", type=int, help="override synth.seed")
    common.add_argument("--band", type=_band, action="append", metavar="LO:HI",
                        help="analysis band in Hz (repeatable); replaces analysis.bands")
    common.add_argument("--out", help="output directory (must exist)")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--csv", dest="formats", action="store_const", const=("csv",),
                     help="write the report as CSV only")
    fmt.add_argument("--text", dest="formats", action="store_const", const=("text",),
                     help="write the report as text only")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    pr = sub.add_parser("predict", parents=[common], help="analytic spectra and report")
    pr.add_argument("--sweep-sigma", type=_sweep, metavar="START:STOP:COUNT",
                    help="also write band variances over a pump-ratio grid")
    sub.add_parser("simulate", parents=[common], help="synthesize signal, shot-noise and dark traces")
    an = sub.add_parser("analyze", parents=[common], help="spectra and report from trace files")
    an.add_argument("run_dir", nargs="?", help="directory written by 'simulate'")
    an.add_argument("--x", help="trace at LO angles (0, 0)")
    an.add_argument("--y", help="trace at LO angles (pi/2, pi/2)")
    an.add_argument("--shot", help="shot-noise reference trace")
    an.add_argument("--dark", help="electronic-noise trace (enables per-bin correction)")
    sub.add_parser("check", parents=[common], help="cavity and efficiency consistency checks")
    return p


def _configure(args) -> ExperimentConfig:
    cfg = load_config(args.config, validate=False)
    if args.seed is not None:
        cfg.synth.seed = args.seed
    if args.band:
        cfg.analysis.bands = list(args.band)
    if args.out is not None:
        cfg.output.dir = args.out
    validate_config(cfg)
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    formats = args.formats or ("csv", "text")
    try:
        cfg = _configure(args)
        if args.command == "predict":
            _, reports = cmd_predict(cfg, args.out, formats, args.sweep_sigma)
            sys.stdout.write("\n".join(r.to_text() for r in reports))
        elif args.command == "simulate":
            paths = cmd_simulate(cfg, cfg.output.dir)
            for k, v in paths.items():
                print(f"{k}: {v}")
        elif args.command == "analyze":
            paths = resolve_traces(args.run_dir, args.x, args.y, args.shot, args.dark)
            _, reports = cmd_analyze(paths, cfg, args.out, formats)
            sys.stdout.write("\n".join(r.to_text() for r in reports))
            if not all(r.criteria_computed for r in reports):
                return EXIT_VALIDATION
        elif args.command == "check":
            checks, derived = cmd_check(cfg)
            sys.stdout.write(format_checks(checks, derived))
            if not all(c.passed for c in checks):
                return EXIT_VALIDATION
    except (ConfigError, SynthesisError, analysis.AnalysisError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except TraceFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
