"""Analytic model of a non-degenerate OPO operated below threshold."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .gaussian import (
    CovarianceMatrix,
    InvalidArgumentError,
    TwoModeVariances,
    apply_efficiency,
    rotation,
    symmetric_state,
)

SPEED_OF_LIGHT = 299_792_458.0  # m/s
PHASE_NOISE_WARN = 0.3  # rad; small-angle picture breaks down beyond this
# symmetric closed form is used only when channel efficiencies agree this closely
SYMMETRIC_TOLERANCE = 0.02

INV_PHI = (math.sqrt(5) - 1) / 2


class AboveThresholdError(ValueError):
    pass


class NoSolutionError(ValueError):
    pass


def _unit_interval(name, v):
    if not 0.0 <= v <= 1.0:
        raise InvalidArgumentError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class ChannelEfficiency:
    wavelength_nm: float
    esc: float
    pro: float
    mm: float
    det: float

    def __post_init__(self):
        for name in ("esc", "pro", "mm", "det"):
            _unit_interval(name, getattr(self, name))

    @property
    def eta_opt(self) -> float:
        return self.esc * self.pro * self.mm

    @property
    def eta_tot(self) -> float:
        return self.eta_opt * self.det


def geometric_mean(a: float, b: float) -> float:
    return math.sqrt(a * b)


@dataclass(frozen=True)
class EfficiencyChain:
    """Per-wavelength efficiency budget; ``channel1`` is the signal, ``channel2`` the idler."""

    channel1: ChannelEfficiency
    channel2: ChannelEfficiency

    @property
    def channels(self):
        return (self.channel1, self.channel2)

    def average(self, attr: str) -> float:
        return geometric_mean(getattr(self.channel1, attr), getattr(self.channel2, attr))

    @property
    def eta_det(self) -> float:
        return self.average("det")

    @property
    def eta_esc(self) -> float:
        return self.average("esc")

    @property
    def eta_opt(self) -> float:
        return self.average("eta_opt")

    @property
    def eta_tot(self) -> float:
        return self.average("eta_tot")

    def is_symmetric(self, attr: str = "eta_tot") -> bool:
        a, b = getattr(self.channel1, attr), getattr(self.channel2, attr)
        return abs(a - b) / geometric_mean(a, b) < SYMMETRIC_TOLERANCE


@dataclass(frozen=True)
class CavityParams:
    length: float  # m, round trip of the bow-tie ring
    output_coupler_T: float
    intracavity_loss: dict = field(default_factory=dict)  # wavelength_nm -> loss
    bandwidth: float = 15e6  # Hz
    fsr: float = 769e6  # Hz
    finesse: float = 52.0
    threshold_power: float = 0.320  # W

    def __post_init__(self):
        if self.length <= 0 or self.bandwidth <= 0 or self.threshold_power <= 0:
            raise InvalidArgumentError("cavity length, bandwidth and threshold must be positive")


@dataclass(frozen=True)
class PumpSetting:
    sigma: float

    def __post_init__(self):
        if not 0.0 <= self.sigma:
            raise InvalidArgumentError(f"pump ratio must be non-negative, got {self.sigma}")
        if self.sigma >= 1.0:
            raise AboveThresholdError(f"pump ratio {self.sigma} is at or above threshold")

    @classmethod
    def from_power(cls, power: float, threshold_power: float) -> "PumpSetting":
        return cls(power / threshold_power)


@dataclass(frozen=True)
class PhaseNoise:
    delta_theta_rms: float = 0.0

    def __post_init__(self):
        if self.delta_theta_rms < 0:
            raise InvalidArgumentError("RMS phase noise must be non-negative")
        if self.delta_theta_rms > PHASE_NOISE_WARN:
            warnings.warn(
                f"RMS phase noise {self.delta_theta_rms} rad exceeds the small-angle regime",
                stacklevel=3,
            )


@dataclass(frozen=True)
class NopoModel:
    cavity: CavityParams
    efficiency: EfficiencyChain
    pump: PumpSetting
    phase_noise: PhaseNoise = PhaseNoise()

    @property
    def sigma(self) -> float:
        return self.pump.sigma

    @property
    def bandwidth(self) -> float:
        return self.cavity.bandwidth


def spectrum_pm(sigma, omega_tilde, eta_tot) -> TwoModeVariances:
    """Two-mode quadrature variances at normalized sideband frequency ``omega_tilde``.

    ``omega_tilde`` may be an array, in which case the fields of the result are arrays.
    """
    if sigma < 0:
        raise InvalidArgumentError(f"pump ratio must be non-negative, got {sigma}")
    if sigma >= 1:
        raise AboveThresholdError(f"pump ratio {sigma} is at or above threshold")
    _unit_interval("eta_tot", eta_tot)
    w = np.asarray(omega_tilde, dtype=float)
    if np.any(w < 0):
        raise InvalidArgumentError("normalized frequency must be non-negative")
    w2 = w**2
    s = math.sqrt(sigma)
    sq = eta_tot * 4 * s / (w2 + (1 + s) ** 2)
    asq = eta_tot * 4 * s / (w2 + (1 - s) ** 2)
    if np.ndim(sq) == 0:
        sq, asq = float(sq), float(asq)
    return TwoModeVariances(1 - sq, 1 + asq, 1 + asq, 1 - sq)


def spectrum_pm_hz(sigma, freq_hz, bandwidth_hz, eta_tot) -> TwoModeVariances:
    return spectrum_pm(sigma, np.asarray(freq_hz, dtype=float) / bandwidth_hz, eta_tot)


def apply_phase_noise(v, v_orth, delta_theta):
    """Mix a quadrature variance with its orthogonal partner for RMS angle jitter."""
    if np.any(np.asarray(delta_theta) < 0):
        raise InvalidArgumentError("RMS phase noise must be non-negative")
    c2 = np.cos(delta_theta) ** 2
    return c2 * v + (1 - c2) * v_orth


def apply_phase_noise_pm(v: TwoModeVariances, delta_theta: float) -> TwoModeVariances:
    """Phase jitter on all four combinations; X- pairs with Y-, X+ with Y+."""
    return TwoModeVariances(
        apply_phase_noise(v.vXminus, v.vYminus, delta_theta),
        apply_phase_noise(v.vXplus, v.vYplus, delta_theta),
        apply_phase_noise(v.vYminus, v.vXminus, delta_theta),
        apply_phase_noise(v.vYplus, v.vXplus, delta_theta),
    )


def infer_phase_noise(v_measured: float, v_sq_model: float, v_asq_model: float) -> float:
    if not v_sq_model <= v_measured <= v_asq_model:
        raise NoSolutionError(
            f"measured variance {v_measured} outside [{v_sq_model}, {v_asq_model}]"
        )
    if v_asq_model == v_sq_model:
        return 0.0
    return math.asin(math.sqrt((v_measured - v_sq_model) / (v_asq_model - v_sq_model)))


def golden_section(f, a: float, b: float, tol: float = 1e-6, max_iter: int = 200):
    """Minimize a unimodal ``f`` on [a, b]; returns (x, f(x)).

    The iteration count is fixed by ``tol`` so results are reproducible bit for bit.
    """
    h = b - a
    n = 0 if h <= tol else min(max_iter, math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = b - INV_PHI * h
    d = a + INV_PHI * h
    fc, fd = f(c), f(d)
    for _ in range(n):
        if fc <= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = b - INV_PHI * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + INV_PHI * h
            fd = f(d)
    candidates = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    fx, x = min(candidates, key=lambda t: (t[0], t[1]))
    return x, fx


def optimal_sigma(eta_tot: float, omega_tilde: float, delta_theta: float, tol: float = 1e-6):
    """Pump ratio minimizing the jittered squeezed variance; returns (sigma*, v_min)."""
    hi = 1.0 - 1e-6

    def objective(sigma):
        v = spectrum_pm(sigma, omega_tilde, eta_tot)
        return apply_phase_noise(v.vXminus, v.vXplus, delta_theta)

    sigma, v = golden_section(objective, 0.0, hi, tol=tol)
    # flat objective (no light reaches the detector): prefer the unpumped cavity
    v0 = objective(0.0)
    if v0 <= v:
        return 0.0, v0
    return sigma, v


def escape_efficiency(T: float, loss: float) -> float:
    if T <= 0:
        raise InvalidArgumentError(f"output coupler transmission must be positive, got {T}")
    if loss < 0:
        raise InvalidArgumentError(f"intracavity loss must be non-negative, got {loss}")
    return T / (T + loss)


def sfg_pump_power(p1: float, p2: float, gamma: float) -> float:
    """Single-pass sum-frequency power for input powers p1, p2 and efficiency gamma (1/W)."""
    if p1 < 0 or p2 < 0:
        raise InvalidArgumentError("input powers must be non-negative")
    return gamma * p1 * p2


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    reference: float
    rtol: float
    at_least: bool = False  # one-sided: pass when value >= reference

    @property
    def residual(self) -> float:
        return (self.value - self.reference) / self.reference

    @property
    def passed(self) -> bool:
        if self.at_least:
            return self.value >= self.reference
        return abs(self.residual) <= self.rtol


def cavity_consistency(c: CavityParams, efficiency: EfficiencyChain | None = None) -> list[Check]:
    """Cross-check the quoted cavity figures against each other."""
    fsr = SPEED_OF_LIGHT / c.length
    checks = [
        Check("fsr_hz", fsr, c.fsr, 0.01),
        Check("finesse", c.fsr / c.bandwidth, c.finesse, 0.05),
    ]
    if efficiency is not None:
        computed = []
        for ch in efficiency.channels:
            loss = c.intracavity_loss.get(ch.wavelength_nm)
            if loss is None:
                continue
            esc = escape_efficiency(c.output_coupler_T, loss)
            computed.append(esc)
            # quoted to 0.1 percentage point
            checks.append(Check(f"eta_esc_{ch.wavelength_nm:g}nm", esc, ch.esc, 0.001 / ch.esc))
        if len(computed) == 2:
            checks.append(
                Check("eta_esc_mean", geometric_mean(*computed), efficiency.eta_esc, 0.002)
            )
    return checks


def channel_efficiencies(model: NopoModel, include_detector: bool = True) -> tuple[float, float]:
    attr = "eta_tot" if include_detector else "eta_opt"
    return tuple(getattr(ch, attr) for ch in model.efficiency.channels)


def ideal_state(sigma: float, omega_tilde: float) -> CovarianceMatrix:
    return symmetric_state(spectrum_pm(sigma, omega_tilde, 1.0))


def jittered_state(cm: CovarianceMatrix, delta_theta: float) -> CovarianceMatrix:
    """Covariance-level phase jitter: a common rotation of both modes."""
    r = rotation(math.pi / 2, math.pi / 2)
    c2 = math.cos(delta_theta) ** 2
    return CovarianceMatrix(c2 * cm.entries + (1 - c2) * (r @ cm.entries @ r.T))


def model_state(model: NopoModel, omega_tilde: float, include_detector: bool = True) -> CovarianceMatrix:
    """Covariance matrix of the detected state at one frequency, per-channel losses included."""
    e1, e2 = channel_efficiencies(model, include_detector)
    cm = apply_efficiency(ideal_state(model.sigma, omega_tilde), e1, e2)
    return jittered_state(cm, model.phase_noise.delta_theta_rms)


def model_spectra(model: NopoModel, freqs, include_detector: bool = True) -> dict:
    """Second moments of the detected state on a frequency grid (Hz).

    Returns arrays keyed by ``x1, x2, xc, y1, y2, yc`` (channel variances and
    covariances) and ``X-, X+, Y-, Y+``. Equal channel efficiencies (within
    ``SYMMETRIC_TOLERANCE``) use the symmetric closed form with the geometric
    mean efficiency; otherwise each mode gets its own beam-splitter loss.
    """
    wt = np.asarray(freqs, dtype=float) / model.bandwidth
    e1, e2 = channel_efficiencies(model, include_detector)
    attr = "eta_tot" if include_detector else "eta_opt"
    dtheta = model.phase_noise.delta_theta_rms
    if model.efficiency.is_symmetric(attr):
        e1 = e2 = geometric_mean(e1, e2)
    ideal = spectrum_pm(model.sigma, wt, 1.0)
    # beam-splitter loss on the symmetric ideal state, written out per moment
    ax = 0.5 * (ideal.vXplus + ideal.vXminus)
    cx = 0.5 * (ideal.vXplus - ideal.vXminus)
    ay = 0.5 * (ideal.vYplus + ideal.vYminus)
    cy = 0.5 * (ideal.vYplus - ideal.vYminus)
    g = math.sqrt(e1 * e2)
    m = {
        "x1": e1 * ax + 1 - e1,
        "x2": e2 * ax + 1 - e2,
        "xc": g * cx,
        "y1": e1 * ay + 1 - e1,
        "y2": e2 * ay + 1 - e2,
        "yc": g * cy,
    }
    # common-rotation jitter swaps x and y moments (y -> -x keeps covariances' sign)
    c2 = math.cos(dtheta) ** 2
    s2 = 1 - c2
    m = {
        "x1": c2 * m["x1"] + s2 * m["y1"],
        "x2": c2 * m["x2"] + s2 * m["y2"],
        "xc": c2 * m["xc"] + s2 * m["yc"],
        "y1": c2 * m["y1"] + s2 * m["x1"],
        "y2": c2 * m["y2"] + s2 * m["x2"],
        "yc": c2 * m["yc"] + s2 * m["xc"],
    }
    m["X-"] = 0.5 * (m["x1"] + m["x2"]) - m["xc"]
    m["X+"] = 0.5 * (m["x1"] + m["x2"]) + m["xc"]
    m["Y-"] = 0.5 * (m["y1"] + m["y2"]) - m["yc"]
    m["Y+"] = 0.5 * (m["y1"] + m["y2"]) + m["yc"]
    return m
