"""Seeded synthesis of two-channel homodyne photocurrents.

Each chunk of ``chunk_length`` samples draws its randomness from its own
``SeedSequence`` substream, so the output depends only on the seed and the
configuration. The slow phase-jitter process is carried across chunk
boundaries through its filter state.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .gaussian import QuadratureAngles, from_db
from .nopo import NopoModel, PhaseNoise, channel_efficiencies, spectrum_pm
from .traces import MAX_SAMPLES, QuadratureTraceSet

# spawn-key domains keep signal, shot-noise and dark traces statistically independent
_SIGNAL, _REFERENCE, _DARK = 1, 2, 3


class SynthesisError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    model: NopoModel | None
    duration: float  # s
    sample_rate: float = 5e6  # Hz
    lo_angles: QuadratureAngles = QuadratureAngles()
    seed: int = 0
    stream: int = 0
    electronic_noise_db: float | None = -18.5  # relative to shot noise; None disables
    cmrr_db: float = 40.0
    lo_noise_db: float | None = 0.0  # classical LO noise before rejection; None disables
    lo_noise_corner: float = 100e3  # Hz, 1/f below, flat above
    phase_jitter: PhaseNoise | None = None  # None: take the model's RMS phase noise
    jitter_corner: float = 1e3  # Hz
    peaks: tuple = ()  # (frequency Hz, power in shot-noise units) sinusoids
    chunk_length: int = 1_024_000
    record_time: bool = False

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise SynthesisError("sample rate must be positive")
        if self.duration <= 0:
            raise SynthesisError("duration must be positive")
        n = self.duration * self.sample_rate
        if n >= MAX_SAMPLES:
            raise SynthesisError(f"{n:.3g} samples do not fit the trace format")
        if self.n_samples < 1:
            raise SynthesisError("duration shorter than one sample")
        if self.chunk_length < 2:
            raise SynthesisError("chunk length must be at least 2")
        if not 0 <= self.seed < 2**64:
            raise SynthesisError("seed must be a 64-bit unsigned integer")
        for f, _ in self.peaks:
            if not 0 < f < self.sample_rate / 2:
                raise SynthesisError(f"peak frequency {f} Hz outside (0, Nyquist)")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))

    @property
    def jitter_rms(self) -> float:
        if self.phase_jitter is not None:
            return self.phase_jitter.delta_theta_rms
        if self.model is not None:
            return self.model.phase_noise.delta_theta_rms
        return 0.0


def _snapshot(config: SynthConfig, kind: str) -> dict:
    d = dataclasses.asdict(config)
    d.pop("record_time")
    meta = {"kind": kind, "synth": json.loads(json.dumps(d, default=str))}
    if config.record_time:
        import datetime

        meta["created"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return meta


def _rng(config: SynthConfig, *key) -> np.random.Generator:
    ss = np.random.SeedSequence(config.seed, spawn_key=(config.stream, *key))
    return np.random.Generator(np.random.PCG64(ss))


def _chunks(n: int, size: int):
    for k, start in enumerate(range(0, n, size)):
        yield k, start, min(size, n - start)


def colored_noise(rng: np.random.Generator, n: int, psd) -> np.ndarray:
    """Stationary Gaussian series whose per-bin variance density is ``psd``.

    ``psd`` holds one value per ``rfft`` bin in units of the per-sample variance
    of white noise (so ``psd == 1`` everywhere yields unit-variance white noise).
    Bin amplitudes are drawn directly and the Hermitian half-spectrum is inverted,
    i.e. a circulant embedding of the target covariance on ``n`` points.
    """
    m = n // 2 + 1
    amp = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    amp *= math.sqrt(n / 2)
    amp[0] = amp[0].real * math.sqrt(2)
    if n % 2 == 0:
        amp[-1] = amp[-1].real * math.sqrt(2)
    return np.fft.irfft(amp * np.sqrt(psd), n=n)


def _lo_leak_psd(config: SynthConfig, freqs: np.ndarray) -> np.ndarray:
    level = from_db(config.lo_noise_db - config.cmrr_db)
    psd = np.full_like(freqs, level)
    low = freqs < config.lo_noise_corner
    with np.errstate(divide="ignore"):
        psd[low] = level * config.lo_noise_corner / freqs[low]
    psd[0] = 0.0
    return psd


class _Jitter:
    """Ornstein-Uhlenbeck angle process sampled at the trace rate."""

    def __init__(self, config: SynthConfig, rng: np.random.Generator):
        self.rms = config.jitter_rms
        self.a = math.exp(-2 * math.pi * config.jitter_corner / config.sample_rate)
        self.b = self.rms * math.sqrt(1 - self.a**2)
        self.state = rng.standard_normal() * self.rms
        self.sum_sq = 0.0
        self.count = 0

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.rms == 0:
            return np.zeros(n)
        xi = rng.standard_normal(n) * self.b
        xi[0] += self.a * self.state
        d = lfilter([1.0], [1.0, -self.a], xi)
        self.state = d[-1]
        self.sum_sq += float(np.dot(d, d))
        self.count += n
        return d

    @property
    def realized_rms(self) -> float:
        return math.sqrt(self.sum_sq / self.count) if self.count else 0.0


def _add_instrument_noise(config, rng, chunk, start, n, peak_phases):
    """Electronic noise, LO leakage and laser peaks, added in place to a (2, n) chunk."""
    if config.electronic_noise_db is not None:
        chunk += rng.standard_normal((2, n)) * math.sqrt(from_db(config.electronic_noise_db))
    if config.lo_noise_db is not None:
        freqs = np.fft.rfftfreq(n, 1 / config.sample_rate)
        psd = _lo_leak_psd(config, freqs)
        for j in range(2):
            chunk[j] += colored_noise(rng, n, psd)
    if config.peaks:
        t = (start + np.arange(n)) / config.sample_rate
        for (f0, power), phase in zip(config.peaks, peak_phases):
            chunk += math.sqrt(2 * power) * np.cos(2 * math.pi * f0 * t + phase)


def _generate(config: SynthConfig, domain: int, quantum: bool) -> tuple[np.ndarray, float]:
    n = config.n_samples
    out = np.empty((2, n))
    g = _rng(config, domain, 0)
    peak_phases = g.uniform(0, 2 * math.pi, len(config.peaks))
    model = config.model
    jitter = _Jitter(config, g) if quantum else None
    if quantum:
        e1, e2 = channel_efficiencies(model)
        if model.efficiency.is_symmetric():
            e1 = e2 = math.sqrt(e1 * e2)
    th1, th2 = config.lo_angles.theta1, config.lo_angles.theta2
    r = 1 / math.sqrt(2)
    for k, start, m in _chunks(n, config.chunk_length):
        rng = _rng(config, domain, k + 1)
        if quantum:
            freqs = np.fft.rfftfreq(m, 1 / config.sample_rate)
            ideal = spectrum_pm(model.sigma, freqs / model.bandwidth, 1.0)
            xm = colored_noise(rng, m, ideal.vXminus)
            xp = colored_noise(rng, m, ideal.vXplus)
            ym = colored_noise(rng, m, ideal.vYminus)
            yp = colored_noise(rng, m, ideal.vYplus)
            quads = [r * (xp + xm), r * (yp + ym), r * (xp - xm), r * (yp - ym)]
            del xm, xp, ym, yp
            for j, eta in ((0, e1), (1, e1), (2, e2), (3, e2)):
                if eta < 1:
                    quads[j] = math.sqrt(eta) * quads[j] + math.sqrt(1 - eta) * rng.standard_normal(m)
            delta = jitter.draw(rng, m)
            a1, a2 = th1 + delta, th2 + delta
            out[0, start : start + m] = np.cos(a1) * quads[0] + np.sin(a1) * quads[1]
            out[1, start : start + m] = np.cos(a2) * quads[2] + np.sin(a2) * quads[3]
        elif domain == _REFERENCE:
            out[:, start : start + m] = rng.standard_normal((2, m))
        else:
            out[:, start : start + m] = 0.0
        if domain == _DARK:
            if config.electronic_noise_db is not None:
                out[:, start : start + m] += rng.standard_normal((2, m)) * math.sqrt(
                    from_db(config.electronic_noise_db)
                )
        else:
            _add_instrument_noise(config, rng, out[:, start : start + m], start, m, peak_phases)
    return out, (jitter.realized_rms if jitter else 0.0)


def synthesize(config: SynthConfig) -> QuadratureTraceSet:
    """Photocurrents of the NOPO output measured at ``config.lo_angles``."""
    if config.model is None:
        raise SynthesisError("synthesis needs a NOPO model")
    channels, rms = _generate(config, _SIGNAL, quantum=True)
    meta = _snapshot(config, "signal")
    meta["realized_jitter_rms"] = rms
    return QuadratureTraceSet(channels, config.sample_rate, config.lo_angles, (1.0, 1.0), meta)


def shot_noise_reference(config: SynthConfig) -> QuadratureTraceSet:
    """Vacuum input (NOPO output blocked) with the same detector noise."""
    channels, _ = _generate(config, _REFERENCE, quantum=False)
    meta = _snapshot(dataclasses.replace(config, model=None), "shot_noise")
    return QuadratureTraceSet(channels, config.sample_rate, config.lo_angles, (1.0, 1.0), meta)


def electronic_noise_trace(config: SynthConfig) -> QuadratureTraceSet:
    """Detector dark noise alone (local oscillators blocked)."""
    channels, _ = _generate(config, _DARK, quantum=False)
    meta = _snapshot(dataclasses.replace(config, model=None), "electronic")
    return QuadratureTraceSet(channels, config.sample_rate, config.lo_angles, (1.0, 1.0), meta)
