"""Squeezing versus pump ratio, and the best pump ratio in the presence of phase noise.

    python3 scripts/pump_sweep.py [--phase-noise RAD] [--out sweep.csv]
"""
import argparse

import numpy as np

from eprsim import cli
from eprsim.config import load_config
from eprsim.gaussian import to_db
from eprsim.nopo import apply_phase_noise, optimal_sigma, spectrum_pm


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config")
    p.add_argument("--phase-noise", type=float, help="RMS phase noise in rad (default from config)")
    p.add_argument("--points", type=int, default=19)
    p.add_argument("--out", help="also write the detected band variances to this CSV")
    args = p.parse_args()

    cfg = load_config(args.config)
    if args.phase_noise is not None:
        cfg.phase_noise.rms_rad = args.phase_noise
    eta = cfg.efficiency_chain().eta_tot
    d = cfg.phase_noise.rms_rad
    sigmas = np.linspace(0, 0.95, args.points)

    print(f"symmetric chain eta_tot = {eta:.4f}, phase noise = {d:.4f} rad, zero frequency")
    print(f"{'sigma':>6}{'X- ideal':>10}{'X- jitter':>11}{'X+':>8}   (dB)")
    for s in sigmas:
        v = spectrum_pm(s, 0.0, eta)
        print(f"{s:6.2f}{to_db(v.vXminus):10.2f}{to_db(apply_phase_noise(v.vXminus, v.vYminus, d)):11.2f}"
              f"{to_db(v.vXplus):8.2f}")
    s_opt, v_opt = optimal_sigma(eta, 0.0, d)
    print(f"best pump ratio {s_opt:.4f}: {to_db(v_opt):.2f} dB")

    rows = cli.sigma_sweep(cfg, sigmas)
    lo, hi = cfg.analysis.bands[0]
    best = min(rows, key=lambda r: r[1])
    print(f"per-channel loss model, band {lo / 1e3:g}-{hi / 1e3:g} kHz: best sigma {best[0]:.2f} "
          f"at {best[1]:.2f} dB")
    if args.out:
        cli.write_sweep(cfg, sigmas, args.out)


if __name__ == "__main__":
    main()
