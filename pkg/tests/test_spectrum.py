"""Unit tests for ``cavityflux.spectrum``."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from cavityflux.dynamics import FluxSeries, ModelParams, photon_flux_analytic
from cavityflux.nonmarkov import markovian_boundary
from cavityflux.spectrum import (
    EmptyRegion,
    NoSignal,
    classify,
    coherent_frequency,
    detrend,
    dft,
    dominant_peak,
    threshold_frequency,
)
from cavityflux.trajectories import estimate_flux

# the four spectral showcase points (delta, v) and their frozen analytic
# peak locations and prominences at T = 14, dt = 1e-3
SHOWCASE = {
    (2.0, 2.0): (4.367715317483424, 0.13893462960022532),
    (0.0, 0.9): (0.5447903873459334, 0.18848144571838718),
    (1.0, 0.7): (0.5375509146727204, 0.19454215241813272),
    (1.7, 0.3): (1.6986165200958128, 0.1581121495507907),
}


def _flux_spectrum(v, delta):
    flux = photon_flux_analytic(ModelParams(v=v, delta=delta))
    return dft(detrend(flux), flux.dt)


def test_detrend_removes_mean():
    flux = photon_flux_analytic(ModelParams(v=1.0, delta=0.0), dt=1e-2)
    r = detrend(flux)
    assert abs(r.mean()) < 1e-15
    const = FluxSeries(times=np.arange(10) * 0.1,
                       values=np.full(10, 3.7), kind="analytic")
    assert_allclose(detrend(const), np.zeros(10), rtol=0.0, atol=1e-15)


def test_dft_validation():
    with pytest.raises(ValueError):
        dft(np.array([1.0]), 0.1)
    with pytest.raises(ValueError):
        dft(np.ones(8), 0.1, window="flat-top")


def test_dft_grid():
    spec = dft(np.zeros(100), 0.05)
    assert spec.omega.size == 51
    assert spec.omega[0] == 0.0
    assert_allclose(spec.bin_width, 2.0 * np.pi / (100 * 0.05))
    assert_allclose(np.diff(spec.omega), spec.bin_width)


def test_pure_cosine_concentrates_in_one_bin():
    n, dt, k = 1000, 0.01, 50
    t = np.arange(n) * dt
    spec = dft(np.cos(2.0 * np.pi * k * t / (n * dt)), dt)
    assert_allclose(spec.power[k], (n / 2.0) ** 2, rtol=1e-12)
    others = np.delete(spec.power, k)
    assert np.max(others) < 1e-20 * spec.power[k]


def test_parseval():
    # sum over all N bins of |S_k|^2 equals N sum r^2, odd and even N
    rng = np.random.default_rng(23)
    for n in (16, 17, 200, 201):
        r = rng.standard_normal(n)
        spec = dft(r, 0.1)
        assert_allclose(spec.total_power(), n * np.sum(r ** 2), rtol=1e-10)
        full = np.sum(np.abs(np.fft.fft(r)) ** 2)
        assert_allclose(spec.total_power(), full, rtol=1e-10)


def test_wiener_khinchin():
    # inverse transform of the power equals the circular autocorrelation
    rng = np.random.default_rng(29)
    for n in (64, 101):
        r = rng.standard_normal(n)
        spec = dft(r, 0.1)
        via_fft = np.fft.irfft(spec.power, n=n)
        brute = np.array([np.dot(r, np.roll(r, -lag)) for lag in range(n)])
        assert_allclose(via_fft, brute, rtol=0.0,
                        atol=1e-10 * np.abs(brute[0]))


def test_hann_window_available():
    r = np.random.default_rng(1).standard_normal(64)
    plain = dft(r, 0.1)
    windowed = dft(r, 0.1, window="hann")
    assert windowed.signal_scale == plain.signal_scale
    assert not np.allclose(windowed.power, plain.power)


def test_coherent_frequency_values():
    assert coherent_frequency(2.0, 2.0) == pytest.approx(np.sqrt(20.0))
    assert coherent_frequency(1.0, 0.0) == pytest.approx(2.0)
    assert coherent_frequency(0.0, 1.3) == pytest.approx(1.3)
    assert coherent_frequency(0.5, -1.0) == coherent_frequency(0.5, 1.0)


def test_dominant_peak_pure_cosine():
    n, dt, k = 1000, 0.01, 50
    t = np.arange(n) * dt
    spec = dft(np.cos(2.0 * np.pi * k * t / (n * dt)), dt)
    peak = dominant_peak(spec)
    assert peak.k_peak == k
    assert peak.omega_peak == pytest.approx(k * spec.bin_width, rel=1e-12)
    # with the shoulder excluded a pure tone keeps prominence one half
    assert peak.prominence == pytest.approx(0.5, rel=1e-9)


def test_dominant_peak_off_bin():
    # sub-bin interpolation beats the half-bin rounding error
    n, dt = 1000, 0.01
    t = np.arange(n) * dt
    bw = 2.0 * np.pi / (n * dt)
    for frac in (50.3, 50.5, 37.77):
        omega = frac * bw
        r = np.cos(omega * t)
        peak = dominant_peak(dft(r - r.mean(), dt))
        assert abs(peak.omega_peak - omega) < 0.35 * bw


def test_white_noise_has_no_prominent_line():
    noise = np.random.default_rng(0).standard_normal(14001)
    peak = dominant_peak(dft(noise - noise.mean(), 1e-3))
    assert peak.prominence < 0.05


@pytest.mark.parametrize("point,expected", sorted(SHOWCASE.items()))
def test_flux_peaks_frozen(point, expected):
    delta, v = point
    peak = dominant_peak(_flux_spectrum(v, delta))
    omega_ref, prom_ref = expected
    assert peak.omega_peak == pytest.approx(omega_ref, rel=1e-9)
    assert peak.prominence == pytest.approx(prom_ref, rel=1e-9)


def test_strong_point_peak_near_coherent_frequency():
    spec = _flux_spectrum(2.0, 2.0)
    peak = dominant_peak(spec)
    assert abs(peak.omega_peak - np.sqrt(20.0)) <= spec.bin_width


def test_peak_tracks_coherent_frequency():
    # in the deep non-Markovian regime the line sits at Omega(V, delta)
    for v, delta in [(1.5, 0.0), (2.0, 1.0), (1.2, 2.0), (2.5, 2.5)]:
        spec = _flux_spectrum(v, delta)
        peak = dominant_peak(spec)
        omega = coherent_frequency(v, delta)
        assert abs(peak.omega_peak - omega) <= spec.bin_width + 0.05 * omega


def test_no_signal():
    zero = photon_flux_analytic(ModelParams(v=0.0, delta=0.0))
    with pytest.raises(NoSignal):
        dominant_peak(dft(detrend(zero), zero.dt))
    const = FluxSeries(times=np.arange(50) * 0.1,
                       values=np.full(50, 2.0), kind="analytic")
    with pytest.raises(NoSignal):
        dominant_peak(dft(detrend(const), 0.1))


def test_spectrum_csv(tmp_path):
    spec = _flux_spectrum(1.0, 0.0)
    path = tmp_path / "spectrum.csv"
    spec.to_csv(path)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert data.dtype.names == ("omega", "power")
    assert_array_equal(data["omega"], spec.omega)
    assert_array_equal(data["power"], spec.power)


def test_threshold_frequency_resonant_column():
    curve = markovian_boundary([0.0])
    thr = threshold_frequency(curve)
    # Omega at the resonant critical coupling is 2 V_c = 0.5
    assert thr.omega_m == pytest.approx(0.5, abs=2e-3)
    assert thr.delta_star == 0.0
    assert thr.v_star == pytest.approx(0.25, abs=1e-3)


def test_threshold_frequency_grows_with_domain():
    small = threshold_frequency(markovian_boundary([0.0]))
    larger = threshold_frequency(markovian_boundary([0.0, 0.5, 1.0]))
    assert larger.omega_m > small.omega_m
    assert larger.delta_star == 1.0


def test_threshold_frequency_with_grid():
    curve = markovian_boundary([0.0])
    thr = threshold_frequency(curve, v_grid=[0.1, 0.2, 0.24])
    assert thr.v_star == pytest.approx(0.24)
    assert thr.omega_m == pytest.approx(0.48)
    with pytest.raises(EmptyRegion):
        threshold_frequency(curve, v_grid=[0.3, 0.5])


def test_threshold_frequency_all_markovian_column():
    curve = markovian_boundary([0.0], v_search=(0.05, 0.2))
    thr = threshold_frequency(curve)
    assert thr.v_star == pytest.approx(0.2)
    assert thr.omega_m == pytest.approx(0.4)


def test_threshold_frequency_empty_region():
    curve = markovian_boundary([1.9])   # whole window non-Markovian
    with pytest.raises(EmptyRegion):
        threshold_frequency(curve)


OMEGA_M = 1.8170


def test_classify_quartet():
    detected = classify(ModelParams(v=2.0, delta=2.0), OMEGA_M,
                        ground_truth=True)
    assert detected.label == "NonMarkovianDetected"
    assert detected.n_value > 1e-10

    for v, delta in [(0.9, 0.0), (0.7, 1.0)]:
        verdict = classify(ModelParams(v=v, delta=delta), OMEGA_M,
                           ground_truth=True)
        assert verdict.label == "NonMarkovianUndetectable"

    # weak-flux point: the detector alone keeps it MarkovianConsistent
    weak = classify(ModelParams(v=0.3, delta=1.7), OMEGA_M)
    assert weak.label == "MarkovianConsistent"
    assert weak.n_value is None
    # although the exact measure knows it is (barely) non-Markovian
    refined = classify(ModelParams(v=0.3, delta=1.7), OMEGA_M,
                       ground_truth=True)
    assert refined.label == "NonMarkovianUndetectable"
    assert 0.0 < refined.n_value < 1e-3


def test_classify_markovian_point():
    verdict = classify(ModelParams(v=0.2, delta=0.0), OMEGA_M,
                       ground_truth=True)
    assert verdict.label == "Markovian"
    assert verdict.n_value == 0.0


def test_classify_prominence_gate():
    verdict = classify(ModelParams(v=2.0, delta=2.0), OMEGA_M,
                       min_prominence=0.99)
    assert verdict.label == "MarkovianConsistent"


def test_classify_zero_flux():
    verdict = classify(ModelParams(v=0.0, delta=0.0), OMEGA_M)
    assert verdict.label == "MarkovianConsistent"
    assert verdict.note == "zero flux"
    assert verdict.omega_peak is None
    refined = classify(ModelParams(v=0.0, delta=0.0), OMEGA_M,
                       ground_truth=True)
    assert refined.label == "Markovian"
    assert refined.note == "zero flux"


def test_classify_accepts_estimated_flux():
    params = ModelParams(v=2.0, delta=2.0)
    est = estimate_flux(params, 20000, bin_width=0.1, master_seed=42)
    verdict = classify(params, OMEGA_M, flux=est)
    assert verdict.label == "NonMarkovianDetected"


def test_classify_n_value_passthrough():
    verdict = classify(ModelParams(v=0.9, delta=0.0), OMEGA_M,
                       ground_truth=True, n_value=0.42)
    assert verdict.n_value == 0.42
    assert verdict.label == "NonMarkovianUndetectable"


def test_verdict_serialization():
    verdict = classify(ModelParams(v=0.9, delta=0.0), OMEGA_M)
    blob = verdict.to_dict()
    assert blob["label"] == "MarkovianConsistent"
    assert blob["params"]["v"] == 0.9
    assert "omega_peak" in verdict.to_json()
