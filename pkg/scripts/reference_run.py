"""Simulate the reference operating point, analyze it and compare with the model.

    python3 scripts/reference_run.py --out runs/reference [--seed N] [--duration S]
"""
import argparse
import os

from eprsim import cli
from eprsim.analysis import COMBINATIONS
from eprsim.config import load_config


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--out", default="runs/reference")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float, help="record length in s (default 3.2)")
    args = p.parse_args()

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.synth.seed = args.seed
    if args.duration is not None:
        cfg.synth.duration_s = args.duration
        cfg.analysis.n_averages = int(args.duration * cfg.synth.sample_rate_hz) // cfg.analysis.fft_length
    os.makedirs(args.out, exist_ok=True)

    paths = cli.cmd_simulate(cfg, args.out)
    _, sim = cli.cmd_analyze(paths, cfg, args.out)
    _, pred = cli.cmd_predict(cfg)
    for s, q in zip(sim, pred):
        print(f"band {s.band[0] / 1e3:g}-{s.band[1] / 1e3:g} kHz, {s.n_averages} averages")
        print(f"{'':4}{'simulated':>12}{'+-':>8}{'predicted':>12}   (corrected, dB)")
        for k in COMBINATIONS:
            print(f"{k:4}{s.corrected_db[k]:12.3f}{s.corrected_se_db[k]:8.3f}{q.corrected_db[k]:12.3f}")
        print(f"Reid E   {s.reid_E:.4f} (model {q.reid_E:.4f})")
        print(f"Duan     {s.duan:.4f} (model {q.duan:.4f})")
        print(f"purity   {s.purity:.4f} (model {q.purity:.4f})")


if __name__ == "__main__":
    main()
