import json

import numpy as np
import pytest

from wirtflow import OCTANARY, RandomSource, SpectralConfig, sample_cdp_ensemble
from wirtflow.core import DimensionError
from wirtflow.harness.experiments import (
    ExperimentSpec,
    fft_unit_calibration,
    predicted_fft_units,
    recover_channel,
    regularity_pass_rate,
    run_image_recovery,
    run_success_sweep,
    run_trial,
    trial_stream,
)
from wirtflow.harness.export import curve_from_dict, curve_to_csv, curve_to_dict, export_results
from wirtflow.harness.images import (
    ImageProblem,
    MalformedHeaderError,
    TruncatedPayloadError,
    UnsupportedFormatError,
    UnsupportedMaxvalError,
    encode_image,
    ingest_image,
    parse_image,
    test_pattern,
    write_image,
)
from wirtflow.harness.signals import SignalModel, generate_signal, lowpass_frequencies
from wirtflow.solver import Schedule, SolverConfig


# -- signals ------------------------------------------------------------------


def test_gaussian_signal_power():
    n = 64
    norms = [np.linalg.norm(generate_signal(SignalModel(), n, RandomSource(1, t))) ** 2 for t in range(400)]
    assert np.mean(norms) == pytest.approx(2 * n, rel=0.05)


def test_lowpass_support():
    n = 128
    x = generate_signal(SignalModel("lowpass"), n, RandomSource(2))
    spectrum = np.fft.fft(x)
    mask = np.zeros(n, bool)
    mask[lowpass_frequencies(n, n // 8)] = True
    assert mask.sum() == 16
    assert np.max(np.abs(spectrum[~mask])) <= 1e-9 * np.max(np.abs(spectrum))
    assert np.all(np.abs(spectrum[mask]) > 0)


def test_lowpass_band_matches_synthesis_formula():
    # x[t] = sum over k = -(M/2-1)..M/2 of c_k exp(2 pi i (k-1)(t-1)/n), t = 1..n
    n, M = 32, 4
    bins = sorted(((k - 1) % n) for k in range(-(M // 2 - 1), M // 2 + 1))
    assert sorted(lowpass_frequencies(n, M)) == bins


def test_signal_determinism_and_errors():
    a = generate_signal(SignalModel("lowpass", 8), 64, RandomSource(3))
    b = generate_signal(SignalModel("lowpass", 8), 64, RandomSource(3))
    assert a.tobytes() == b.tobytes()
    with pytest.raises(DimensionError):
        generate_signal(SignalModel("lowpass", 65), 64, RandomSource(3))
    with pytest.raises(ValueError):
        SignalModel("square")


# -- images -------------------------------------------------------------------


def test_parse_pgm():
    img = parse_image(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    assert (img.width, img.height, len(img.channels)) == (2, 2, 1)
    assert np.allclose(img.channels[0], [0, 1, 128 / 255, 64 / 255])


def test_parse_ppm_channel_order():
    img = parse_image(b"P6 # comment\n1 2 255\n" + bytes([1, 2, 3, 4, 5, 6]))
    assert [c.tolist() for c in img.channels] == [[1 / 255, 4 / 255], [2 / 255, 5 / 255], [3 / 255, 6 / 255]]


@pytest.mark.parametrize("data, error", [
    (b"P4\n2 2\n1\n\0", UnsupportedFormatError),
    (b"P5\n2 x\n255\n" + bytes(4), MalformedHeaderError),
    (b"P5\n2 2\n", MalformedHeaderError),
    (b"P5\n2 2\n65535\n" + bytes(8), UnsupportedMaxvalError),
    (b"P5\n2 2\n255\n" + bytes(3), TruncatedPayloadError),
])
def test_image_errors(data, error):
    with pytest.raises(error):
        parse_image(data)


@pytest.mark.parametrize("channels", [1, 3])
def test_image_round_trip(tmp_path, channels):
    img = test_pattern(9, 7, channels)
    write_image(tmp_path / "a.img", img)
    back = ingest_image(tmp_path / "a.img")
    assert back.width == 9 and back.height == 7
    for a, b in zip(img.channels, back.channels):
        assert np.allclose(a, b, atol=1e-12)
    assert back.to_array().shape == ((7, 9) if channels == 1 else (7, 9, 3))


def test_image_validation():
    with pytest.raises(ValueError):
        ImageProblem(2, 2, [np.zeros(3)])
    with pytest.raises(ValueError):
        ImageProblem(2, 2, [np.zeros(4)] * 2)


# -- sweeps -------------------------------------------------------------------


def small_spec(**kw):
    base = dict(model="cdp", n=16, sweep=(2, 10), trials=4, seed=5,
                solver=SolverConfig(600, Schedule.heuristic(330, 0.2), trace_every=600))
    base.update(kw)
    return ExperimentSpec(**base)


def test_sweep_curve_shape():
    curve = run_success_sweep(small_spec(), workers=1)
    assert [p.sweep_value for p in curve.points] == [2.0, 10.0]
    for p in curve.points:
        assert 0 <= p.successes <= p.trials == 4
    assert curve.points[1].successes == 4
    assert curve.spec["model"] == "cdp"


def test_sweep_order_independent():
    spec = small_spec()
    a = curve_to_csv(run_success_sweep(spec, workers=1))
    order = list(reversed(range(8)))
    assert curve_to_csv(run_success_sweep(spec, workers=1, order=order)) == a
    assert curve_to_csv(run_success_sweep(spec, workers=2)) == a


def test_trial_streams_distinct():
    assert trial_stream(0, 1) != trial_stream(1, 0)
    spec = small_spec(trials=2)
    assert run_trial(spec, 1, 0) == run_trial(spec, 1, 0)


def test_divergent_trials_count_as_failures():
    spec = ExperimentSpec(model="gaussian", n=16, sweep=(1.0,), trials=3, seed=1,
                          solver=SolverConfig(300, Schedule.constant(1.0), trace_every=300))
    curve = run_success_sweep(spec, workers=1)
    assert curve.points[0].successes == 0


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(model="cdp", sweep=(2.5,))
    with pytest.raises(ValueError):
        ExperimentSpec(trials=0)
    with pytest.raises(ValueError):
        ExperimentSpec(sweep=())
    assert ExperimentSpec(n=128, sweep=(4.5,)).measurement_count(4.5) == 576


# -- export -------------------------------------------------------------------


def test_export_csv_and_json(tmp_path):
    curve = run_success_sweep(small_spec(trials=2), workers=1)
    export_results(curve, tmp_path / "c.csv", "csv")
    first = (tmp_path / "c.csv").read_bytes()
    export_results(curve, tmp_path / "c.csv", "csv")
    assert (tmp_path / "c.csv").read_bytes() == first
    assert first.decode().splitlines()[0] == "sweep_value,successes,trials,success_rate,mean_iters,mean_rel_error"
    export_results(curve, tmp_path / "c.json", "json")
    data = json.loads((tmp_path / "c.json").read_text())
    assert curve_to_dict(curve_from_dict(data)) == data
    with pytest.raises(ValueError):
        export_results(curve, tmp_path / "c.txt", "yaml")
    with pytest.raises(ValueError):
        export_results({"a": 1}, tmp_path / "d.csv", "csv")


def test_export_nan_as_null(tmp_path):
    from wirtflow.harness.experiments import SuccessCurve, SweepPoint
    curve = SuccessCurve([SweepPoint(1.0, 0, 2, 10.0, float("nan"))])
    assert curve_to_csv(curve).splitlines()[1].endswith(",")
    export_results(curve, tmp_path / "n.json", "json")
    assert json.loads((tmp_path / "n.json").read_text())["points"][0]["mean_rel_error"] is None


# -- images, timing, diagnostics ----------------------------------------------


def test_image_recovery_small():
    img = test_pattern(16, 16, 3)
    rec = run_image_recovery(img, L=10, solver=SolverConfig(300, Schedule.heuristic(330, 0.4)), seed=2)
    assert len(rec.results) == 3
    assert max(rec.rel_errors) < 1e-6
    assert rec.fft_count == rec.predicted_fft_units == predicted_fft_units(10, 50, 300)
    for orig, got, err in zip(img.channels, rec.recovered.channels, rec.rel_errors):
        assert np.linalg.norm(got - orig) / np.linalg.norm(orig) <= err + 1e-12


def test_image_channels_independent():
    rgb = test_pattern(8, 8, 3)
    solver = SolverConfig(50)
    full = run_image_recovery(rgb, L=6, solver=solver, seed=4)
    ensemble = sample_cdp_ensemble(64, 6, OCTANARY, RandomSource(4, 0))
    for c in (2, 0, 1):
        result, _, _ = recover_channel(ensemble, rgb.channels[c], SpectralConfig(), solver, RandomSource(4, c + 1))
        assert result.z_final.tobytes() == full.results[c].z_final.tobytes()


def test_fft_calibration():
    small = fft_unit_calibration(256, 50)
    large = fft_unit_calibration(65536, 50)
    assert 0 < small < 1 and np.isfinite(large)
    assert large > small
    with pytest.raises(ValueError):
        fft_unit_calibration(1)


def test_fft_units_bookkeeping():
    img = test_pattern(8, 8)
    rec = run_image_recovery(img, L=3, solver=SolverConfig(20), seed=0, calibrate=True)
    assert rec.fft_units_measured == pytest.approx(rec.wall_seconds / rec.fft_unit_seconds)
    assert predicted_fft_units(20, 50, 300) == 14_000


def test_regularity_pass_rate_small():
    stats = regularity_pass_rate(16, 320, 30, 3 * 16 + 550, 20, seed=3)
    assert stats["samples"] == 20 and 0 <= stats["pass_rate"] <= 1
    assert stats["pass_rate"] >= 0.9
