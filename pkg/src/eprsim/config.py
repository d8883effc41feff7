"""Experiment configuration in a flat ``section.key = value`` text format.

Lines starting with ``#`` are comments. Bands are written ``LO:HI`` in Hz and
separated by commas; laser-noise peaks likewise as ``FREQ:POWER``. Every key
has a default describing the reference NOPO operating point, so an empty file is a
valid configuration.
"""
import dataclasses
import math
import typing
from dataclasses import dataclass, field

from .gaussian import QuadratureAngles
from .nopo import (
    AboveThresholdError,
    CavityParams,
    ChannelEfficiency,
    EfficiencyChain,
    NopoModel,
    PhaseNoise,
    PumpSetting,
)
from .synth import SynthConfig


class ConfigError(ValueError):
    pass


@dataclass
class CavitySection:
    length_m: float = 0.390
    output_coupler_T: float = 0.12
    loss_852nm: float = 0.0021
    loss_1064nm: float = 0.0015
    bandwidth_hz: float = 15e6
    fsr_hz: float = 769e6
    finesse: float = 52.0
    threshold_power_w: float = 0.320


@dataclass
class ChannelSection:
    wavelength_nm: float = 852.0
    esc: float = 0.983
    pro: float = 0.990
    mm: float = 0.984
    det: float = 0.96
    label: str = "852 nm"


def _idler():
    return ChannelSection(1064.0, 0.987, 0.991, 0.989, 0.93, "1064 nm")


@dataclass
class PumpSection:
    sigma: float = 0.25
    # 0 means: use sigma
    power_w: float = 0.0


@dataclass
class PhaseNoiseSection:
    rms_rad: float = 0.0203


@dataclass
class SfgSection:
    power_852_w: float = 2.2
    power_1064_w: float = 10.0
    efficiency_per_w: float = 0.055
    min_blue_w: float = 0.9


@dataclass
class SynthSection:
    sample_rate_hz: float = 5e6
    duration_s: float = 3.2
    seed: int = 20201
    electronic_noise_db: float = -18.5
    electronic_noise: bool = True
    cmrr_db: float = 40.0
    lo_noise_db: float = 0.0
    lo_noise: bool = True
    lo_noise_corner_hz: float = 100e3
    jitter_corner_hz: float = 1e3
    peaks: list = field(default_factory=list)
    chunk_length: int = 1_024_000


@dataclass
class AnalysisSection:
    demod_hz: float = 200e3
    lpf_cutoff_hz: float = 10e3
    fft_length: int = 16000
    n_averages: int = 1000
    bands: list = field(default_factory=lambda: [(50e3, 300e3)])
    gain_mode: str = "band"
    mad_threshold: float = 5.0
    window: str = "none"


@dataclass
class OutputSection:
    dir: str = "."


@dataclass
class ExperimentConfig:
    cavity: CavitySection = field(default_factory=CavitySection)
    channel1: ChannelSection = field(default_factory=ChannelSection)
    channel2: ChannelSection = field(default_factory=_idler)
    pump: PumpSection = field(default_factory=PumpSection)
    phase_noise: PhaseNoiseSection = field(default_factory=PhaseNoiseSection)
    sfg: SfgSection = field(default_factory=SfgSection)
    synth: SynthSection = field(default_factory=SynthSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    output: OutputSection = field(default_factory=OutputSection)

    @property
    def sigma(self) -> float:
        if self.pump.power_w > 0:
            return self.pump.power_w / self.cavity.threshold_power_w
        return self.pump.sigma

    def efficiency_chain(self) -> EfficiencyChain:
        chans = [
            ChannelEfficiency(c.wavelength_nm, c.esc, c.pro, c.mm, c.det)
            for c in (self.channel1, self.channel2)
        ]
        return EfficiencyChain(*chans)

    def cavity_params(self) -> CavityParams:
        c = self.cavity
        return CavityParams(
            length=c.length_m,
            output_coupler_T=c.output_coupler_T,
            intracavity_loss={852.0: c.loss_852nm, 1064.0: c.loss_1064nm},
            bandwidth=c.bandwidth_hz,
            fsr=c.fsr_hz,
            finesse=c.finesse,
            threshold_power=c.threshold_power_w,
        )

    def model(self) -> NopoModel:
        return NopoModel(
            self.cavity_params(),
            self.efficiency_chain(),
            PumpSetting(self.sigma),
            PhaseNoise(self.phase_noise.rms_rad),
        )

    def synth_config(self, lo_angles=QuadratureAngles(), stream: int = 0) -> SynthConfig:
        s = self.synth
        return SynthConfig(
            model=self.model(),
            duration=s.duration_s,
            sample_rate=s.sample_rate_hz,
            lo_angles=lo_angles,
            seed=s.seed,
            stream=stream,
            electronic_noise_db=s.electronic_noise_db if s.electronic_noise else None,
            cmrr_db=s.cmrr_db,
            lo_noise_db=s.lo_noise_db if s.lo_noise else None,
            lo_noise_corner=s.lo_noise_corner_hz,
            jitter_corner=s.jitter_corner_hz,
            peaks=tuple(tuple(p) for p in s.peaks),
            chunk_length=s.chunk_length,
        )

    @property
    def labels(self) -> tuple:
        return (self.channel1.label, self.channel2.label)

    @property
    def window(self):
        return None if self.analysis.window.lower() in ("none", "rect", "boxcar") else self.analysis.window


# ---------------------------------------------------------------- (de)serialization


def _sections(cfg):
    return [(f.name, getattr(cfg, f.name)) for f in dataclasses.fields(cfg)]


def _pairs(text: str):
    for i, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {i}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        yield i, key, value


def _parse_pairs(value: str, key: str):
    out = []
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            a, b = item.split(":")
            out.append((float(a), float(b)))
        except ValueError:
            raise ConfigError(f"{key}: expected A:B pairs, got {item!r}") from None
    return out


def _convert(value: str, kind, key: str):
    try:
        if kind is bool:
            v = value.lower()
            if v in ("true", "yes", "on", "1"):
                return True
            if v in ("false", "no", "off", "0"):
                return False
            raise ValueError
        if kind is int:
            return int(value)
        if kind is float:
            return float(value)
        if kind is str:
            return value
        if kind is list:
            return _parse_pairs(value, key)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {value!r} as {kind.__name__}") from None
    raise ConfigError(f"{key}: unsupported type")


def parse_config(text: str, validate: bool = True) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, key, value in _pairs(text):
        section, _, name = key.partition(".")
        sec = getattr(cfg, section, None) if section in {f.name for f in dataclasses.fields(cfg)} else None
        if sec is None or name not in {f.name for f in dataclasses.fields(sec)}:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        kind = typing.get_type_hints(type(sec))[name]
        setattr(sec, name, _convert(value, kind, key))
    if validate:
        validate_config(cfg)
    return cfg


def load_config(path=None, validate: bool = True) -> ExperimentConfig:
    if path is None:
        cfg = ExperimentConfig()
        if validate:
            validate_config(cfg)
        return cfg
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), validate)


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ", ".join(f"{a!r}:{b!r}" for a, b in v)
    return str(v)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for name, sec in _sections(cfg):
        lines.append(f"# {name}")
        for f in dataclasses.fields(sec):
            lines.append(f"{name}.{f.name} = {_format(getattr(sec, f.name))}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------- validation


def validate_config(cfg: ExperimentConfig) -> None:
    """Raise :class:`ConfigError` naming the first offending field."""
    c, s, a = cfg.cavity, cfg.synth, cfg.analysis

    def need(ok, key, msg):
        if not ok:
            raise ConfigError(f"{key}: {msg}")

    need(c.length_m > 0, "cavity.length_m", "must be positive")
    need(c.output_coupler_T > 0, "cavity.output_coupler_T", "must be positive")
    need(c.loss_852nm >= 0, "cavity.loss_852nm", "must be non-negative")
    need(c.loss_1064nm >= 0, "cavity.loss_1064nm", "must be non-negative")
    need(c.bandwidth_hz > 0, "cavity.bandwidth_hz", "must be positive")
    need(c.threshold_power_w > 0, "cavity.threshold_power_w", "must be positive")
    for ch in ("channel1", "channel2"):
        sec = getattr(cfg, ch)
        for k in ("esc", "pro", "mm", "det"):
            need(0 <= getattr(sec, k) <= 1, f"{ch}.{k}", "must lie in [0, 1]")
    need(cfg.pump.power_w >= 0, "pump.power_w", "must be non-negative")
    key = "pump.power_w" if cfg.pump.power_w > 0 else "pump.sigma"
    need(cfg.sigma >= 0, key, "must be non-negative")
    need(cfg.sigma < 1, key, f"pump ratio {cfg.sigma:g} is at or above threshold")
    need(cfg.phase_noise.rms_rad >= 0, "phase_noise.rms_rad", "must be non-negative")
    need(s.sample_rate_hz > 0, "synth.sample_rate_hz", "must be positive")
    need(s.duration_s > 0, "synth.duration_s", "must be positive")
    need(s.duration_s * s.sample_rate_hz < 2**64, "synth.duration_s", "too many samples")
    need(0 <= s.seed < 2**64, "synth.seed", "must be a 64-bit unsigned integer")
    need(s.chunk_length >= 2, "synth.chunk_length", "must be at least 2")
    need(s.jitter_corner_hz > 0, "synth.jitter_corner_hz", "must be positive")
    nyquist = s.sample_rate_hz / 2
    for f, _ in s.peaks:
        need(0 < f < nyquist, "synth.peaks", f"peak at {f:g} Hz outside (0, Nyquist)")
    need(a.fft_length >= 2, "analysis.fft_length", "must be at least 2")
    need(a.n_averages >= 1, "analysis.n_averages", "must be at least 1")
    need(len(a.bands) >= 1, "analysis.bands", "at least one band is required")
    for lo, hi in a.bands:
        need(0 <= lo < hi, "analysis.bands", f"band {lo:g}:{hi:g} is empty")
        need(hi < nyquist, "analysis.bands", f"band edge {hi:g} Hz exceeds Nyquist {nyquist:g} Hz")
    need(a.lpf_cutoff_hz > 0, "analysis.lpf_cutoff_hz", "must be positive")
    need(
        a.demod_hz + a.lpf_cutoff_hz < nyquist,
        "analysis.demod_hz",
        "demodulation frequency plus low-pass cutoff must stay below Nyquist",
    )
    need(a.gain_mode in ("band", "bin"), "analysis.gain_mode", "must be 'band' or 'bin'")
    need(a.mad_threshold > 0, "analysis.mad_threshold", "must be positive")
    try:
        cfg.model()
    except (ValueError, AboveThresholdError) as exc:
        raise ConfigError(str(exc)) from None
    if not math.isfinite(s.electronic_noise_db):
        raise ConfigError("synth.electronic_noise_db: must be finite")
