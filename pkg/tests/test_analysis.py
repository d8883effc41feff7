import csv
import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eprsim import analysis as an
from eprsim import nopo
from eprsim.gaussian import QuadratureAngles, from_db, to_db
from eprsim.synth import SynthConfig, shot_noise_reference, synthesize
from eprsim.traces import QuadratureTraceSet

FS = 5e6
BAND = (50e3, 300e3)


def white(rng, n, scale=1.0, fs=FS):
    return QuadratureTraceSet(rng.standard_normal((2, n)) * scale, fs)


@pytest.fixture(scope="module")
def predicted():
    from eprsim.config import ExperimentConfig

    return an.predicted_spectra(ExperimentConfig().model())


# ---------------------------------------------------------------- demodulation


def test_demodulated_shot_noise_has_unit_variance(rng):
    env = an.demodulate(white(rng, 500_000), 200e3, 10e3)
    assert env.sample_rate == pytest.approx(FS / 125)
    for part in (env.i, env.q):
        # neighbouring envelope samples overlap through the filter; leave room
        assert np.var(part) == pytest.approx(1.0, rel=0.08)


def test_sinusoid_gives_constant_envelope():
    t = np.arange(400_000) / FS
    x = np.vstack([np.cos(2 * math.pi * 200e3 * t + 0.3), np.sin(2 * math.pi * 200e3 * t)])
    env = an.demodulate(x, 200e3, 10e3, sample_rate=FS)
    r2 = env.i**2 + env.q**2
    np.testing.assert_allclose(r2, np.broadcast_to(r2.mean(axis=1, keepdims=True), r2.shape), rtol=1e-3)


def test_demodulation_keeps_correlation_sign(default_model):
    for angles, sign in ((QuadratureAngles(0, 0), 1), (QuadratureAngles(math.pi / 2, math.pi / 2), -1)):
        t = synthesize(SynthConfig(default_model, 0.1, FS, lo_angles=angles))
        env = an.demodulate(t, 200e3, 10e3)
        rho = np.corrcoef(env.i)[0, 1]
        assert sign * rho > 0.9


def test_aliasing_detected(rng):
    with pytest.raises(an.AliasingError):
        an.demodulate(white(rng, 10_000), 2.495e6, 10e3)


def test_short_record_rejected(rng):
    with pytest.raises(an.InsufficientSamplesError):
        an.demodulate(white(rng, 100), 200e3, 10e3)


# ---------------------------------------------------------------- spectra


def test_self_normalization_is_exactly_zero_db(rng):
    ref = white(rng, 160_000)
    s = an.welch_spectra(ref, ref, ref, fft_length=16000, n_averages=10)
    assert s.resolution_bandwidth == 312.5
    for k in ("X-", "X+", "x1", "x2", "Y-", "Y+", "y1", "y2"):
        np.testing.assert_array_equal(s.spectra[k], 1.0)


def test_missing_reference(rng):
    with pytest.raises(an.CalibrationMissingError):
        an.welch_spectra(white(rng, 1000), fft_length=100, n_averages=10)


def test_too_few_samples(rng):
    with pytest.raises(an.InsufficientSamplesError):
        an.welch_spectra(white(rng, 100), reference=white(rng, 100), fft_length=1000)


def test_sample_rate_mismatch(rng):
    with pytest.raises(an.GridMismatchError):
        an.welch_spectra(white(rng, 1000), reference=white(rng, 1000, fs=1e6), fft_length=100)


def lorentzian(rng, n, width=0.02):
    # AR(1) filtered noise has a Lorentzian-like spectrum
    from scipy.signal import lfilter

    e = rng.standard_normal((2, n))
    return lfilter([1.0], [1.0, -(1 - width)], e, axis=1)


@pytest.mark.parametrize("kind", ["white", "lorentzian"])
def test_parseval(rng, kind):
    n_fft, n_avg = 4096, 200
    x = rng.standard_normal((2, n_fft * n_avg)) if kind == "white" else lorentzian(rng, n_fft * n_avg)
    acc = an._periodograms(QuadratureTraceSet(x, FS), n_fft, n_avg, None)
    df = FS / n_fft
    for j, key in enumerate(("c1", "c2")):
        assert np.sum(acc.mean[key]) * df == pytest.approx(np.var(x[j]), rel=0.01)


def test_parseval_with_window(rng):
    x = rng.standard_normal((2, 4096 * 100))
    acc = an._periodograms(QuadratureTraceSet(x, FS), 4096, 100, "hann")
    assert np.sum(acc.mean["c1"]) * FS / 4096 == pytest.approx(np.var(x[0]), rel=0.02)


def test_standard_error_scales_as_inverse_sqrt(rng):
    x = QuadratureTraceSet(rng.standard_normal((2, 256 * 1600)), FS)
    se = [np.median(an._periodograms(x, 256, n, None).se["c1"]) for n in (100, 400, 1600)]
    assert se[0] / se[1] == pytest.approx(2.0, rel=0.1)
    assert se[1] / se[2] == pytest.approx(2.0, rel=0.1)


def test_normalization_idempotent(rng):
    s = rng.uniform(0.5, 2, 100)
    r = rng.uniform(0.5, 2, 100)
    once = an.normalize(s, r)
    np.testing.assert_allclose(an.normalize(once, np.ones(100)), once)
    with pytest.raises(an.AnalysisError):
        an.normalize(s, np.zeros(100))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=20), st.floats(0, 1e-2))
def test_electronic_round_trip(values, floor):
    v = np.array(values)
    back = an.add_electronic(an.subtract_electronic(v, floor), floor)
    np.testing.assert_allclose(back, v, rtol=1e-10, atol=1e-12)


def test_electronic_correction_removes_floor(default_model):
    cfg = SynthConfig(default_model, 0.32, FS, lo_noise_db=None)
    from eprsim.synth import electronic_noise_trace

    sig = synthesize(dataclasses.replace(cfg, lo_angles=QuadratureAngles(0, 0)))
    ref, dark = shot_noise_reference(cfg), electronic_noise_trace(cfg)
    raw = an.welch_spectra(sig, reference=ref, fft_length=16000, n_averages=100)
    cor = an.welch_spectra(sig, reference=ref, electronic=dark, fft_length=16000, n_averages=100)
    target = nopo.model_spectra(default_model, raw.freqs)["X-"]
    m = an.band_mask(raw.freqs, BAND)
    e = from_db(-18.5)
    assert np.mean(raw.spectra["X-"][m]) == pytest.approx(np.mean((target[m] + e) / (1 + e)), rel=0.01)
    assert np.mean(cor.spectra["X-"][m]) == pytest.approx(np.mean(target[m]), rel=0.01)
    assert cor.electronic_corrected and not raw.electronic_corrected


# ---------------------------------------------------------------- combinations


def test_combine_traces_limits(rng):
    o1, o2 = rng.standard_normal((2, 1000))
    np.testing.assert_array_equal(an.combine_traces(o1, o2, 0.0), o1)
    np.testing.assert_allclose(an.combine_traces(o1, o2, 1.0, math.sqrt(2)), (o1 - o2) / math.sqrt(2))
    np.testing.assert_allclose(an.combine_traces(o1, o2, -1.0, math.sqrt(2)), (o1 + o2) / math.sqrt(2))
    with pytest.raises(an.GridMismatchError):
        an.combine_traces(o1, o2[:10], 1.0)


def test_optimal_gain_matches_scan(rng):
    z = rng.standard_normal((2, 20_000))
    o1, o2 = z[0] + 0.8 * z[1], 1.2 * z[1]
    v, w = an.optimal_gain(o1, o2)
    c = np.cov(o1, o2, bias=True)
    assert w == pytest.approx(c[0, 1] / c[1, 1], abs=1e-12)
    ws = np.arange(-2, 2, 1e-3)
    scan = [an.combined_variance(o1, o2, x) for x in ws]
    assert ws[int(np.argmin(scan))] == pytest.approx(w, abs=1e-3)
    assert v == pytest.approx(min(scan), abs=1e-6)
    with pytest.raises(ZeroDivisionError):
        an.optimal_gain(o1, np.zeros_like(o1))


def test_combined_spectrum_formula():
    s11, s22, s12 = np.array([2.0]), np.array([3.0]), np.array([1.5])
    assert an.combined_spectrum(s11, s22, s12, 0.5)[0] == pytest.approx(2 - 1.5 + 0.75)


# ---------------------------------------------------------------- band reports


def test_band_mask_errors():
    f = np.linspace(0, 1e6, 101)
    with pytest.raises(an.BandError):
        an.band_mask(f, (3e5, 3e5))
    with pytest.raises(an.BandError):
        an.band_mask(f, (0, 2e6))
    with pytest.raises(an.BandError):
        an.band_mask(f, (1e3, 2e3))


def test_outlier_mask_drops_peaks():
    v = np.r_[np.linspace(0.9, 1.1, 50), 30.0]
    m = an.outlier_mask(v)
    assert m[:-1].all() and not m[-1]
    assert an.outlier_mask(np.ones(5)).all()


def test_vacuum_report(rng):
    ref = white(rng, 16000 * 20)
    s = an.welch_spectra(ref, ref, ref, n_averages=20)
    r = an.band_report(s, BAND, 0.945)
    for k in an.COMBINATIONS:
        assert r.measured_db[k] == 0.0
        assert r.corrected[k] == pytest.approx(1.0)
    assert r.reid_E == pytest.approx(1.0)
    assert r.duan == pytest.approx(2.0)
    assert r.purity == pytest.approx(1.0)
    assert not r.reid_entangled


def test_predicted_report_default_chain(predicted, default_model):
    r = an.band_report(predicted, BAND, default_model.efficiency)
    assert r.eta_det == pytest.approx(0.944881, abs=1e-6)
    assert r.measured_db["X-"] == pytest.approx(-7.095, abs=0.01)
    assert r.corrected_db["X-"] == pytest.approx(-8.290, abs=0.01)
    assert r.corrected_db["X+"] == pytest.approx(9.391, abs=0.01)
    assert r.reid_E == pytest.approx(0.29154, abs=1e-4)
    assert r.duan == pytest.approx(0.29652, abs=1e-4)
    assert r.purity == pytest.approx(0.77605, abs=1e-4)
    assert r.reid_entangled and r.duan_entangled
    assert r.physicality == "physical"


def test_measured_to_corrected_example():
    """A flat -7.1 dB squeezed spectrum corrects to about -8.3 dB."""
    f = np.linspace(0, 1e6, 201)
    lin = {"X-": from_db(-7.1), "Y+": from_db(-7.1), "X+": from_db(9.3), "Y-": from_db(9.3)}
    spectra = {k: np.full_like(f, v) for k, v in lin.items()}
    s = an.SpectrumSet(f, spectra, {k: np.zeros_like(f) for k in lin}, 1, 5e3)
    r = an.band_report(s, BAND, 0.945)
    assert r.corrected_db["X-"] == pytest.approx(-8.29, abs=0.01)


def test_unphysical_correction_skips_criteria():
    f = np.linspace(0, 1e6, 201)
    lin = {"X-": 0.02, "Y+": 0.02, "X+": 10.0, "Y-": 10.0}
    s = an.SpectrumSet(f, {k: np.full_like(f, v) for k, v in lin.items()},
                       {k: np.zeros_like(f) for k in lin}, 1, 5e3)
    r = an.band_report(s, BAND, 0.9)
    assert not r.criteria_computed
    assert r.reid_entangled is None
    assert "not computed" in r.to_text()


def test_more_jitter_degrades_squeezing(default_model):
    worse = dataclasses.replace(default_model, phase_noise=nopo.PhaseNoise(0.08))
    a = an.band_report(an.predicted_spectra(default_model), BAND, 0.945)
    b = an.band_report(an.predicted_spectra(worse), BAND, 0.945)
    assert b.corrected["X-"] > a.corrected["X-"]
    assert b.reid_E > a.reid_E


@pytest.mark.parametrize("quad", ["x", "y"])
def test_bin_gain_never_worse_than_band_gain(predicted, quad):
    # mean(c)^2/mean(b) <= mean(c^2/b) by Cauchy-Schwarz
    vb, _ = an.spectral_conditional(predicted, BAND, quad, "band", 0.945)
    vn, _ = an.spectral_conditional(predicted, BAND, quad, "bin", 0.945)
    assert vn <= vb + 1e-12
    assert vn == pytest.approx(vb, rel=0.02)


def test_bin_mode_report_close_to_band_mode(predicted):
    a = an.band_report(predicted, BAND, 0.945, gain_mode="band")
    b = an.band_report(predicted, BAND, 0.945, gain_mode="bin")
    assert b.gain_mode == "bin"
    assert b.reid_E == pytest.approx(a.reid_E, rel=0.02)


def test_spectral_conditional_band_matches_state(predicted):
    r = an.band_report(predicted, BAND, 0.945)
    vx, wx = an.spectral_conditional(predicted, BAND, "x", "band", 0.945)
    vy, wy = an.spectral_conditional(predicted, BAND, "y", "band", 0.945)
    # symmetric reconstruction and direct channel moments agree to the channel asymmetry
    assert math.sqrt(vx * vy) == pytest.approx(r.reid_E, rel=0.02)
    assert wx > 0 > wy


def test_unknown_gain_mode(predicted):
    with pytest.raises(an.AnalysisError):
        an.band_report(predicted, BAND, 0.945, gain_mode="median")


# ---------------------------------------------------------------- output


@pytest.mark.parametrize(
    "value, text",
    [(1.0, "1.00000000e+00"), (-8.2898, "-8.28980000e+00"), (True, "true"), (3, "3"), (None, "nan")],
)
def test_format_number(value, text):
    assert an.format_number(value) == text


def test_spectrum_csv(tmp_path, predicted):
    p = tmp_path / "s.csv"
    an.write_spectrum_csv(predicted, p)
    rows = list(csv.reader(open(p)))
    header = rows[0]
    assert header[:3] == ["frequency_hz", "X-_linear", "X-_db"]
    assert "xc_linear" in header and "xc_db" not in header
    assert len(rows) == len(predicted.freqs) + 1
    i = header.index("X-_db")
    assert float(rows[10][i]) == pytest.approx(to_db(predicted.spectra["X-"][9]), abs=1e-7)


def test_report_csv_round_trip(tmp_path, predicted):
    reports = [an.band_report(predicted, b, 0.945) for b in (BAND, (300e3, 1e6))]
    p = tmp_path / "r.csv"
    an.write_report_csv(reports, p)
    back = an.read_report_csv(p)
    assert len(back) == 2
    assert back[0]["reid_E"] == pytest.approx(reports[0].reid_E, rel=1e-8)
    assert back[1]["band_lo_hz"] == 300e3
    assert back[0]["reid_entangled"] == "true"


def test_grid_mismatch():
    with pytest.raises(an.GridMismatchError):
        an.SpectrumSet(np.arange(3.0), {"X-": np.ones(4)}, {}, 1, 1.0)
