"""Measurement chain: demodulation, averaged spectra, normalization and criteria."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import firwin, get_window, upfirdn

from . import gaussian as g
from .nopo import EfficiencyChain, NopoModel, model_spectra
from .traces import QuadratureTraceSet

log = logging.getLogger(__name__)

COMBINATIONS = ("X-", "X+", "Y-", "Y+")
CHANNEL_KEYS = ("x1", "x2", "xc", "y1", "y2", "yc")
# cross spectra may be negative, so they have no dB column
AUTO_KEYS = ("X-", "X+", "Y-", "Y+", "x1", "x2", "y1", "y2")
NUM_FMT = "{:.8e}"  # 9 significant digits


class AnalysisError(ValueError):
    pass


class InsufficientSamplesError(AnalysisError):
    pass


class CalibrationMissingError(AnalysisError):
    pass


class BandError(AnalysisError):
    pass


class GridMismatchError(AnalysisError):
    pass


class AliasingError(AnalysisError):
    pass


# ---------------------------------------------------------------- demodulation


@dataclass(frozen=True)
class Envelope:
    """In-phase and quadrature envelopes, shape (channels, n)."""

    i: np.ndarray
    q: np.ndarray
    sample_rate: float


def lowpass_taps(sample_rate: float, cutoff: float) -> np.ndarray:
    # Hamming windowed sinc; transition band roughly one cutoff wide
    numtaps = int(math.ceil(3.3 * sample_rate / cutoff)) | 1
    return firwin(numtaps, cutoff, fs=sample_rate, window="hamming")


def demodulate(traces, f_demod: float, lpf_cutoff: float, sample_rate: float | None = None) -> Envelope:
    """Mix down at ``f_demod``, low-pass at ``lpf_cutoff`` and decimate to ~4x the cutoff.

    Envelopes are scaled so that white shot noise of unit variance gives unit
    envelope variance; in general the envelope variance is the normalized
    spectrum averaged over ``f_demod +- lpf_cutoff``.
    """
    if isinstance(traces, QuadratureTraceSet):
        x, fs = traces.channels, traces.sample_rate
    else:
        x, fs = np.atleast_2d(np.asarray(traces, dtype=float)), sample_rate
        if fs is None:
            raise AnalysisError("sample_rate is required for raw arrays")
    if f_demod + lpf_cutoff >= fs / 2:
        raise AliasingError(
            f"demodulation at {f_demod} Hz with {lpf_cutoff} Hz bandwidth aliases at {fs} Hz"
        )
    q = max(1, int(round(fs / (4 * lpf_cutoff))))
    h = lowpass_taps(fs, lpf_cutoff)
    h = h / math.sqrt(np.dot(h, h))
    t = np.arange(x.shape[1]) / fs
    lo_i = math.sqrt(2) * np.cos(2 * math.pi * f_demod * t)
    lo_q = math.sqrt(2) * np.sin(2 * math.pi * f_demod * t)
    # drop outputs whose filter support runs past either end of the record
    skip = -(-(len(h) - 1) // q)
    n_valid = (x.shape[1] - len(h)) // q + 1
    if n_valid < 1:
        raise InsufficientSamplesError("record shorter than the low-pass filter")

    def run(lo):
        out = np.array([upfirdn(h, ch * lo, up=1, down=q) for ch in x])
        return out[:, skip : skip + n_valid]

    return Envelope(run(lo_i), run(lo_q), fs / q)


# ---------------------------------------------------------------- spectra


@dataclass(frozen=True)
class _Accumulated:
    """Per-bin mean and standard error of segment periodograms."""

    mean: dict
    se: dict
    n: int


def _periodograms(traces: QuadratureTraceSet, fft_length: int, n_averages: int, window, block: int = 32):
    fs = traces.sample_rate
    n_avail = traces.n_samples // fft_length
    if n_avail < 1:
        raise InsufficientSamplesError(
            f"{traces.n_samples} samples is less than one {fft_length}-sample segment"
        )
    n = min(n_averages, n_avail)
    if n < n_averages:
        log.warning("only %d of %d requested averages available", n, n_averages)
    w = np.ones(fft_length) if window is None else get_window(window, fft_length)
    scale = np.full(fft_length // 2 + 1, 2.0 / (fs * np.dot(w, w)))
    scale[0] /= 2
    if fft_length % 2 == 0:
        scale[-1] /= 2
    keys = ("c1", "c2", "cross", "minus", "plus")
    s1 = {k: np.zeros_like(scale) for k in keys}
    s2 = {k: np.zeros_like(scale) for k in keys}
    for start in range(0, n, block):
        stop = min(n, start + block)
        seg = traces.channels[:, start * fft_length : stop * fft_length]
        seg = seg.reshape(2, stop - start, fft_length) * w
        f1 = np.fft.rfft(seg[0], axis=1)
        f2 = np.fft.rfft(seg[1], axis=1)
        p = {
            "c1": np.abs(f1) ** 2,
            "c2": np.abs(f2) ** 2,
            "cross": (f1 * f2.conj()).real,
            "minus": 0.5 * np.abs(f1 - f2) ** 2,
            "plus": 0.5 * np.abs(f1 + f2) ** 2,
        }
        for k in keys:
            pk = p[k] * scale
            s1[k] += pk.sum(axis=0)
            s2[k] += (pk**2).sum(axis=0)
    mean = {k: s1[k] / n for k in keys}
    if n > 1:
        var = {k: np.maximum(s2[k] / n - mean[k] ** 2, 0.0) * n / (n - 1) for k in keys}
    else:
        var = {k: np.zeros_like(scale) for k in keys}
    se = {k: np.sqrt(var[k] / n) for k in keys}
    return _Accumulated(mean, se, n)


def subtract_electronic(raw, electronic):
    return np.asarray(raw) - np.asarray(electronic)


def add_electronic(corrected, electronic):
    return np.asarray(corrected) + np.asarray(electronic)


def normalize(spectrum, reference):
    """Bin-by-bin ratio to a shot-noise reference spectrum."""
    reference = np.asarray(reference, dtype=float)
    if np.any(reference <= 0):
        raise AnalysisError("shot-noise reference spectrum must be positive")
    return np.asarray(spectrum) / reference


@dataclass(frozen=True, eq=False)
class SpectrumSet:
    """Shot-noise-normalized spectra on a common grid.

    ``spectra`` and ``se`` map keys ``X-, X+, Y-, Y+`` (combinations) and
    ``x1, x2, xc, y1, y2, yc`` (channel autos and real cross spectra for the
    X and Y settings) to arrays. ``se`` holds the per-bin standard error of the
    mean over segments.
    """

    freqs: np.ndarray = field(repr=False)
    spectra: dict = field(repr=False)
    se: dict = field(repr=False)
    n_averages: int
    resolution_bandwidth: float
    electronic_corrected: bool = False
    analytic: bool = False

    def __post_init__(self):
        for k, v in self.spectra.items():
            if len(v) != len(self.freqs):
                raise GridMismatchError(f"spectrum {k!r} does not match the frequency grid")

    def db(self, key: str) -> np.ndarray:
        return g.to_db(self.spectra[key])


def _normalized_setting(sig: _Accumulated, ref: _Accumulated, dark: _Accumulated | None):
    """Normalize one LO setting; returns (spectra, se) keyed by minus/plus/c1/c2/cross."""
    spectra, se = {}, {}

    def corrected(acc, k):
        if dark is None:
            return acc.mean[k], acc.se[k] ** 2
        return subtract_electronic(acc.mean[k], dark.mean[k]), acc.se[k] ** 2 + dark.se[k] ** 2

    refs = {}
    for k in ("c1", "c2", "minus", "plus"):
        r, rv = corrected(ref, k)
        if np.any(r <= 0):
            raise AnalysisError("electronic noise exceeds the shot-noise reference")
        refs[k] = (r, rv)
    for k in ("c1", "c2", "minus", "plus"):
        s, sv = corrected(sig, k)
        r, rv = refs[k]
        val = normalize(s, r)
        spectra[k] = val
        se[k] = np.sqrt(sv / r**2 + val**2 * rv / r**2)
    s, sv = corrected(sig, "cross")
    rr = np.sqrt(refs["c1"][0] * refs["c2"][0])
    spectra["cross"] = normalize(s, rr)
    se["cross"] = np.sqrt(sv) / rr
    return spectra, se


def welch_spectra(
    x_traces: QuadratureTraceSet,
    y_traces: QuadratureTraceSet | None = None,
    reference: QuadratureTraceSet | None = None,
    electronic: QuadratureTraceSet | None = None,
    fft_length: int = 16000,
    n_averages: int = 1000,
    window=None,
) -> SpectrumSet:
    """Averaged periodograms of non-overlapping segments, normalized to shot noise.

    ``x_traces`` is recorded at LO angles (0, 0) and ``y_traces`` at (pi/2, pi/2).
    With ``electronic`` given, its spectrum is subtracted from signal and
    reference (linear power) before the ratio is taken.
    """
    if reference is None:
        raise CalibrationMissingError("a shot-noise reference trace is required for normalization")
    if n_averages < 1:
        raise AnalysisError("n_averages must be at least 1")
    fs = x_traces.sample_rate
    for t in (y_traces, reference, electronic):
        if t is not None and t.sample_rate != fs:
            raise GridMismatchError("all traces must share one sample rate")
    ref = _periodograms(reference, fft_length, n_averages, window)
    dark = _periodograms(electronic, fft_length, n_averages, window) if electronic is not None else None
    spectra, se = {}, {}
    n_used = ref.n
    for tr, quad in ((x_traces, "X"), (y_traces, "Y")):
        if tr is None:
            continue
        acc = _periodograms(tr, fft_length, n_averages, window)
        n_used = min(n_used, acc.n)
        s, e = _normalized_setting(acc, ref, dark)
        low = quad.lower()
        for src, dst in (
            ("minus", f"{quad}-"),
            ("plus", f"{quad}+"),
            ("c1", f"{low}1"),
            ("c2", f"{low}2"),
            ("cross", f"{low}c"),
        ):
            spectra[dst], se[dst] = s[src], e[src]
    freqs = np.fft.rfftfreq(fft_length, 1 / fs)
    return SpectrumSet(
        freqs=freqs,
        spectra=spectra,
        se=se,
        n_averages=n_used,
        resolution_bandwidth=fs / fft_length,
        electronic_corrected=electronic is not None,
    )


def predicted_spectra(model: NopoModel, sample_rate: float = 5e6, fft_length: int = 16000) -> SpectrumSet:
    """Analytic detected spectra on the grid a Welch analysis would produce."""
    freqs = np.fft.rfftfreq(fft_length, 1 / sample_rate)
    m = model_spectra(model, freqs)
    return SpectrumSet(
        freqs=freqs,
        spectra=m,
        se={k: np.zeros_like(freqs) for k in m},
        n_averages=0,
        resolution_bandwidth=sample_rate / fft_length,
        analytic=True,
    )


# ---------------------------------------------------------------- combinations


def combine_traces(o1, o2, w: float, scale: float = 1.0) -> np.ndarray:
    """(o1 - w*o2)/scale; ``w=+-1`` with ``scale=sqrt(2)`` gives the two-mode combinations."""
    o1, o2 = np.asarray(o1), np.asarray(o2)
    if o1.shape != o2.shape:
        raise GridMismatchError(f"channel shapes differ: {o1.shape} vs {o2.shape}")
    return (o1 - w * o2) / scale


def combined_variance(o1, o2, w: float) -> float:
    return float(np.var(combine_traces(o1, o2, w)))


def combined_spectrum(s11, s22, s12, w):
    """Spectrum of o1 - w*o2 from auto spectra and the real cross spectrum."""
    s11, s22, s12 = map(np.asarray, (s11, s22, s12))
    if not s11.shape == s22.shape == s12.shape:
        raise GridMismatchError("spectra lie on different grids")
    return s11 - 2 * w * s12 + w**2 * s22


def optimal_gain(o1, o2) -> tuple[float, float]:
    """Closed-form (minimum variance, gain) of o1 - w*o2 from the sample covariance."""
    c = np.cov(np.vstack([o1, o2]), bias=True)
    if c[1, 1] <= 0:
        raise g.DivisionGuardError("conditioning channel has zero variance")
    w = c[0, 1] / c[1, 1]
    return float(c[0, 0] - c[0, 1] * w), float(w)


# ---------------------------------------------------------------- reports


def band_mask(freqs, band) -> np.ndarray:
    lo, hi = band
    if not lo < hi:
        raise BandError(f"empty band {band}")
    if lo < freqs[0] or hi > freqs[-1]:
        raise BandError(f"band {band} Hz outside the spectrum grid [{freqs[0]}, {freqs[-1]}]")
    m = (freqs >= lo) & (freqs <= hi)
    if not m.any():
        raise BandError(f"no frequency bins inside band {band}")
    return m


def outlier_mask(values, threshold: float = 5.0) -> np.ndarray:
    """True for bins within ``threshold`` median absolute deviations of the median."""
    values = np.asarray(values)
    med = np.median(values)
    mad = np.median(np.abs(values - med))
    if mad == 0 or not np.isfinite(threshold):
        return np.ones(values.shape, dtype=bool)
    return np.abs(values - med) <= threshold * mad


def _band_mean(spectra: SpectrumSet, key, mask):
    v = spectra.spectra[key][mask]
    e = spectra.se[key][mask]
    return float(np.mean(v)), float(math.sqrt(np.sum(e**2)) / v.size)


def _propagate(f, values, ses, rel_step=1e-6):
    """First-order error propagation by central differences (independent inputs)."""
    values = list(values)
    total = 0.0
    for i, (v, s) in enumerate(zip(values, ses)):
        if s == 0:
            continue
        h = rel_step * max(abs(v), 1e-12)
        hi, lo = list(values), list(values)
        hi[i] += h
        lo[i] -= h
        total += ((f(hi) - f(lo)) / (2 * h) * s) ** 2
    return math.sqrt(total)


def spectral_conditional(spectra: SpectrumSet, band, quad: str = "x", mode: str = "band",
                         eta_det: float = 1.0, mad_threshold: float = 5.0):
    """Conditional variance of quad1 given quad2 directly from channel spectra.

    ``mode="band"`` optimizes one gain on band-averaged moments; ``mode="bin"``
    optimizes per bin and averages the conditional variances.
    Returns (variance, gain).
    """
    fm = band_mask(spectra.freqs, band)
    keys = (f"{quad}1", f"{quad}2", f"{quad}c")
    mask = fm.copy()
    for k in keys[:2]:
        mask[fm] &= outlier_mask(spectra.spectra[k][fm], mad_threshold)
    a = (spectra.spectra[keys[0]][mask] - 1) / eta_det + 1
    b = (spectra.spectra[keys[1]][mask] - 1) / eta_det + 1
    c = spectra.spectra[keys[2]][mask] / eta_det
    if mode == "band":
        a, b, c = a.mean(), b.mean(), c.mean()
        w = c / b
        return float(a - c * w), float(w)
    if mode == "bin":
        w = c / b
        return float(np.mean(a - c * w)), float(np.mean(w))
    raise AnalysisError(f"unknown gain mode {mode!r}")


@dataclass(frozen=True)
class EntanglementReport:
    band: tuple
    eta_det: float
    measured: dict  # linear variances per combination
    measured_se: dict
    corrected: dict
    corrected_se: dict
    reid_E: float | None
    reid_E2: float | None
    w_x: float | None
    w_y: float | None
    duan: float | None
    purity: float | None
    uncertainties: dict
    physicality: str
    electronic_corrected: bool
    n_averages: int
    n_bins: int
    gain_mode: str = "band"
    labels: tuple = ("852 nm", "1064 nm")
    notes: tuple = ()

    @property
    def measured_db(self) -> dict:
        return {k: g.to_db(v) for k, v in self.measured.items()}

    @property
    def corrected_db(self) -> dict:
        return {k: g.to_db(v) if v and v > 0 else float("nan") for k, v in self.corrected.items()}

    @staticmethod
    def _se_db(value, se):
        return 10 / math.log(10) * se / value if value and value > 0 else float("nan")

    @property
    def measured_se_db(self) -> dict:
        return {k: self._se_db(self.measured[k], s) for k, s in self.measured_se.items()}

    @property
    def corrected_se_db(self) -> dict:
        return {k: self._se_db(self.corrected[k], s) for k, s in self.corrected_se.items()}

    @property
    def criteria_computed(self) -> bool:
        return self.reid_E is not None and self.duan is not None

    @property
    def reid_entangled(self) -> bool | None:
        return None if self.reid_E is None else self.reid_E < 1.0

    @property
    def duan_entangled(self) -> bool | None:
        return None if self.duan is None else self.duan < 2.0

    def rows(self) -> list[tuple[str, object]]:
        """Flat (name, value) pairs for CSV output."""
        out = [("band_lo_hz", self.band[0]), ("band_hi_hz", self.band[1]), ("eta_det", self.eta_det)]
        for k in COMBINATIONS:
            out += [
                (f"measured_{k}_linear", self.measured[k]),
                (f"measured_{k}_db", self.measured_db[k]),
                (f"measured_{k}_se_db", self.measured_se_db[k]),
                (f"corrected_{k}_linear", self.corrected[k]),
                (f"corrected_{k}_db", self.corrected_db[k]),
                (f"corrected_{k}_se_db", self.corrected_se_db[k]),
            ]
        for name in ("reid_E", "reid_E2", "w_x", "w_y", "duan", "purity"):
            out.append((name, getattr(self, name)))
        for name, v in self.uncertainties.items():
            out.append((f"{name}_se", v))
        out += [
            ("reid_entangled", self.reid_entangled),
            ("duan_entangled", self.duan_entangled),
            ("physicality", self.physicality),
            ("electronic_corrected", self.electronic_corrected),
            ("n_averages", self.n_averages),
            ("n_bins", self.n_bins),
            ("gain_mode", self.gain_mode),
        ]
        return out

    def to_text(self) -> str:
        lo, hi = self.band
        lines = [
            f"Band {format_number(lo)} - {format_number(hi)} Hz  "
            f"(channel 1: {self.labels[0]}, channel 2: {self.labels[1]})",
            f"averages: {self.n_averages}   bins: {self.n_bins}   "
            f"electronic noise corrected: {'yes (per bin)' if self.electronic_corrected else 'no'}",
            f"detector efficiency used for correction: {format_number(self.eta_det)}",
            "",
            f"{'':4}{'measured dB':>18}{'+-':>17}{'corrected dB':>18}{'+-':>17}",
        ]
        for k in COMBINATIONS:
            lines.append(
                f"{k:4}{format_number(self.measured_db[k]):>18}{format_number(self.measured_se_db[k]):>17}"
                f"{format_number(self.corrected_db[k]):>18}{format_number(self.corrected_se_db[k]):>17}"
            )
        lines.append("")
        u = self.uncertainties

        def line(name, v, key, bound):
            if v is None:
                return f"{name}: not computed"
            verdict = "entangled" if v < bound else "not entangled"
            return f"{name}: {format_number(v)} +- {format_number(u.get(key, 0.0))}  (< {bound}: {verdict})"

        lines.append(line("Reid product E", self.reid_E, "reid_E", 1))
        if self.reid_E2 is not None:
            lines.append(f"E^2: {format_number(self.reid_E2)} +- {format_number(u.get('reid_E2', 0.0))}")
            lines.append(f"optimal gains: w_x = {format_number(self.w_x)}, w_y = {format_number(self.w_y)}")
        lines.append(line("Duan-Simon sum", self.duan, "duan", 2))
        if self.purity is not None:
            lines.append(f"purity: {format_number(self.purity)} +- {format_number(u.get('purity', 0.0))}")
        lines.append(f"state: {self.physicality}")
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def band_report(spectra: SpectrumSet, band, det_eff, gain_mode: str = "band",
                mad_threshold: float = 5.0, labels=("852 nm", "1064 nm")) -> EntanglementReport:
    """Band-averaged variances, detector correction and both entanglement criteria.

    ``det_eff`` is an :class:`EfficiencyChain` (its geometric-mean detector
    efficiency is used) or a plain number.
    """
    eta = det_eff.eta_det if isinstance(det_eff, EfficiencyChain) else float(det_eff)
    fm = band_mask(spectra.freqs, band)
    missing = [k for k in COMBINATIONS if k not in spectra.spectra]
    if missing:
        raise AnalysisError(f"spectra lack combinations {missing}")
    measured, measured_se = {}, {}
    for k in COMBINATIONS:
        mask = fm.copy()
        mask[fm] = outlier_mask(spectra.spectra[k][fm], mad_threshold)
        measured[k], measured_se[k] = _band_mean(spectra, k, mask)
    notes = []
    if spectra.electronic_corrected:
        notes.append("electronic noise subtracted bin by bin")
    corrected, corrected_se = {}, {}
    try:
        for k in COMBINATIONS:
            corrected[k] = g.invert_efficiency(measured[k], eta)
            corrected_se[k] = measured_se[k] / eta
    except g.UnphysicalCorrectionError as exc:
        notes.append(str(exc))
        corrected = {k: corrected.get(k) for k in COMBINATIONS}
        corrected_se = {k: corrected_se.get(k, float("nan")) for k in COMBINATIONS}
        return EntanglementReport(
            band=tuple(band), eta_det=eta, measured=measured, measured_se=measured_se,
            corrected=corrected, corrected_se=corrected_se, reid_E=None, reid_E2=None,
            w_x=None, w_y=None, duan=None, purity=None, uncertainties={},
            physicality="unphysical", electronic_corrected=spectra.electronic_corrected,
            n_averages=spectra.n_averages, n_bins=int(fm.sum()), gain_mode=gain_mode,
            labels=tuple(labels), notes=tuple(notes),
        )

    order = COMBINATIONS
    vals = [corrected[k] for k in order]
    ses = [corrected_se[k] for k in order]

    def state(v):
        return g.symmetric_state(g.TwoModeVariances(*v))

    cm = state(vals)
    physicality = cm.physicality()
    if physicality != "physical":
        notes.append(f"reconstructed covariance matrix is {physicality}")
    if gain_mode == "band":
        e, e2 = g.reid_product(cm)
        _, w_x = g.conditional_variance(cm, "x1", "x2")
        _, w_y = g.conditional_variance(cm, "y1", "y2")
        unc_e = _propagate(lambda v: g.reid_product(state(v))[0], vals, ses)
    elif gain_mode == "bin":
        vx, w_x = spectral_conditional(spectra, band, "x", "bin", eta, mad_threshold)
        vy, w_y = spectral_conditional(spectra, band, "y", "bin", eta, mad_threshold)
        e2 = vx * vy
        e = math.sqrt(e2)
        # per-bin moments carry the same relative scatter as the band means
        unc_e = _propagate(lambda v: g.reid_product(state(v))[0], vals, ses)
    else:
        raise AnalysisError(f"unknown gain mode {gain_mode!r}")
    uncertainties = {
        "reid_E": unc_e,
        "reid_E2": 2 * e * unc_e,
        "duan": math.hypot(corrected_se["X-"], corrected_se["Y+"]),
        "purity": _propagate(lambda v: 1 / math.sqrt(np.prod(v)), vals, ses),
    }
    return EntanglementReport(
        band=tuple(band),
        eta_det=eta,
        measured=measured,
        measured_se=measured_se,
        corrected=corrected,
        corrected_se=corrected_se,
        reid_E=e,
        reid_E2=e2,
        w_x=w_x,
        w_y=w_y,
        duan=g.duan_sum(cm),
        purity=g.purity(cm),
        uncertainties=uncertainties,
        physicality=physicality,
        electronic_corrected=spectra.electronic_corrected,
        n_averages=spectra.n_averages,
        n_bins=int(fm.sum()),
        gain_mode=gain_mode,
        labels=tuple(labels),
        notes=tuple(notes),
    )


# ---------------------------------------------------------------- output


def format_number(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return NUM_FMT.format(float(v))


def write_spectrum_csv(spectra: SpectrumSet, path) -> None:
    keys = [k for k in (*COMBINATIONS, *CHANNEL_KEYS) if k in spectra.spectra]
    header = ["frequency_hz"]
    for k in keys:
        header.append(f"{k}_linear")
        if k in AUTO_KEYS:
            header.append(f"{k}_db")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        dbs = {k: g.to_db(np.maximum(spectra.spectra[k], 1e-300)) for k in keys if k in AUTO_KEYS}
        for i, f in enumerate(spectra.freqs):
            row = [format_number(f)]
            for k in keys:
                row.append(format_number(spectra.spectra[k][i]))
                if k in AUTO_KEYS:
                    row.append(format_number(dbs[k][i]))
            wr.writerow(row)


def write_report_csv(reports, path) -> None:
    reports = list(reports)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["quantity", *[f"band_{i}" for i in range(len(reports))]])
        columns = [r.rows() for r in reports]
        for i, (name, _) in enumerate(columns[0]):
            wr.writerow([name, *[format_number(c[i][1]) for c in columns]])


def read_report_csv(path) -> list[dict]:
    """Parse a report CSV back into one dict per band (numbers as floats)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    n = len(rows[0]) - 1
    out = [{} for _ in range(n)]
    for name, *vals in rows[1:]:
        for i, v in enumerate(vals):
            try:
                out[i][name] = float(v)
            except ValueError:
                out[i][name] = v
    return out
