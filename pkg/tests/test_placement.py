import numpy as np
import pytest
from scipy.stats import ortho_group

from vibromix.placement import (
    LabeledRecording,
    actuator_report,
    ase,
    e_ratio,
    placement_report,
    rms3,
    snr,
)
from vibromix.signal_model import SampleBlock, TriAxisSeries
from vibromix.synth import ScenarioScript, apply_mixing, render_scenario, rotation_tone

RATE = 8000.0


def noise_series(level=0.01, n=8000, seed=0):
    rng = np.random.default_rng(seed)
    return TriAxisSeries(*(level * rng.standard_normal((3, n))), rate=RATE)


class TestRms3:
    def test_constant_ones(self):
        n = 100
        s = TriAxisSeries(np.ones(n), np.ones(n), np.ones(n), RATE)
        assert rms3(s) == pytest.approx(np.sqrt(3))

    def test_zeros(self):
        assert rms3(TriAxisSeries.zeros(10, RATE)) == 0.0

    def test_matches_brute_force(self):
        s = noise_series(seed=5)
        total = 0.0
        for i in range(len(s)):  # direct per-sample oracle
            total += s.x[i] ** 2 + s.y[i] ** 2 + s.z[i] ** 2
        assert rms3(s) == pytest.approx((total / len(s)) ** 0.5, rel=1e-12)

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            rms3(TriAxisSeries.zeros(0, RATE))


class TestSnr:
    def test_decade_is_20db(self):
        noise = noise_series(level=0.1, seed=1)
        signal = TriAxisSeries(10 * noise.x, 10 * noise.y, 10 * noise.z, RATE)
        sig = LabeledRecording(signal, "lower", "contact")
        idl = LabeledRecording(noise, "lower", "idle")
        assert snr(sig, idl) == pytest.approx(20.0, abs=1e-9)

    def test_signal_equals_noise_is_0db(self):
        noise = noise_series(level=0.1, seed=2)
        sig = LabeledRecording(noise, "lower", "contact")
        idl = LabeledRecording(noise, "lower", "idle")
        assert snr(sig, idl) == pytest.approx(0.0, abs=1e-12)

    def test_scale_invariance(self):
        noise = noise_series(level=0.1, seed=3)
        signal = noise_series(level=0.5, seed=4)
        sig = LabeledRecording(signal, "loc", "contact")
        idl = LabeledRecording(noise, "loc", "idle")
        base = snr(sig, idl)
        k = 7.3
        sig_k = LabeledRecording(
            TriAxisSeries(k * signal.x, k * signal.y, k * signal.z, RATE),
            "loc", "contact",
        )
        idl_k = LabeledRecording(
            TriAxisSeries(k * noise.x, k * noise.y, k * noise.z, RATE),
            "loc", "idle",
        )
        assert snr(sig_k, idl_k) == pytest.approx(base, abs=1e-9)

    def test_per_axis(self):
        noise = noise_series(level=0.1, seed=6)
        signal = TriAxisSeries(10 * noise.x, noise.y, noise.z, RATE)
        out = snr(
            LabeledRecording(signal, "l", "contact"),
            LabeledRecording(noise, "l", "idle"),
            per_axis=True,
        )
        assert out["x"] == pytest.approx(20.0, abs=1e-9)
        assert out["y"] == pytest.approx(0.0, abs=1e-9)

    def test_zero_noise_errors(self):
        sig = LabeledRecording(noise_series(seed=7), "l", "contact")
        idl = LabeledRecording(TriAxisSeries.zeros(100, RATE), "l", "idle")
        with pytest.raises(ValueError):
            snr(sig, idl)

    def test_requires_idle_noise_and_same_location(self):
        a = LabeledRecording(noise_series(seed=8), "l", "contact")
        b = LabeledRecording(noise_series(seed=9), "l", "motion")
        with pytest.raises(ValueError):
            snr(a, b)
        c = LabeledRecording(noise_series(seed=9), "other", "idle")
        with pytest.raises(ValueError):
            snr(a, c)


class TestAse:
    def test_unit_sine_is_half_duration(self):
        T = 2.0  # whole periods of 100 Hz
        t = np.arange(int(T * RATE)) / RATE
        block = SampleBlock(np.sin(2 * np.pi * 100 * t), RATE)
        assert ase(block) == pytest.approx(T / 2, rel=0.01)

    def test_zeros(self):
        assert ase(SampleBlock(np.zeros(100), RATE)) == 0.0

    def test_decaying_sinusoid_vs_trapezoidal_oracle(self):
        t = np.arange(int(0.5 * RATE)) / RATE
        wave = 2.0 * np.exp(-t / 0.05) * np.sin(2 * np.pi * 300 * t)
        block = SampleBlock(wave, RATE)
        oracle = np.trapezoid(wave**2, t)
        assert ase(block) == pytest.approx(oracle, rel=0.005)

    def test_additive_over_disjoint_segments(self):
        rng = np.random.default_rng(11)
        samples = rng.standard_normal(1000)
        whole = ase(SampleBlock(samples, RATE))
        parts = ase(SampleBlock(samples[:400], RATE)) + ase(
            SampleBlock(samples[400:], RATE)
        )
        assert whole == pytest.approx(parts, rel=1e-12)


class TestEnergyRatio:
    def test_identity_is_one(self):
        s = noise_series(seed=12)
        assert e_ratio(s, s) == pytest.approx(1.0)

    def test_half_amplitude_is_quarter(self):
        s = noise_series(seed=13)
        half = TriAxisSeries(s.x / 2, s.y / 2, s.z / 2, RATE)
        assert e_ratio(half, s) == pytest.approx(0.25, rel=1e-12)

    def test_rotation_invariance(self):
        s = noise_series(seed=14)
        rot = ortho_group.rvs(3, random_state=1)
        rotated = TriAxisSeries.from_axes(rot @ s.axes, RATE)
        assert e_ratio(rotated, s) == pytest.approx(1.0, rel=1e-6)

    def test_scaling_law(self):
        s = noise_series(seed=15)
        for k in (0.3, 2.0, 9.9):
            scaled = TriAxisSeries(k * s.x, k * s.y, k * s.z, RATE)
            assert e_ratio(scaled, s) == pytest.approx(k**2, rel=1e-6)

    def test_zero_source_errors(self):
        s = noise_series(seed=16)
        with pytest.raises(ValueError):
            e_ratio(s, TriAxisSeries.zeros(len(s), RATE))


def synthetic_placement_dataset(gains=(1.0, 0.5, 0.25),
                                locations=("upper", "middle", "lower"),
                                rotation_artifact_at="middle"):
    """Three locations with known contact attenuations; one location gets a
    strong rotation artifact, mirroring the bearing-vibration confound."""
    contact_script = ScenarioScript(
        duration=2.0,
        events=[{"t0": 0.3 + 0.4 * i, "kind": "contact",
                 "params": {"amplitude": 2.0}} for i in range(4)],
    )
    base_contact, _ = render_scenario(contact_script)
    dataset = []
    for loc, gain in zip(locations, gains):
        rng_idle = np.random.default_rng(hash(loc) % 2**32)
        idle = TriAxisSeries(*(0.01 * rng_idle.standard_normal((3, 16000))),
                             rate=RATE)
        dataset.append(LabeledRecording(idle, loc, "idle"))
        contact = apply_mixing(base_contact, gain * np.eye(3))
        noisy = TriAxisSeries(contact.x + idle.x, contact.y + idle.y,
                              contact.z + idle.z, RATE)
        dataset.append(LabeledRecording(noisy, loc, "contact"))
        level = 1.0 if loc == rotation_artifact_at else 0.02
        rotation = rotation_tone(level, 30.0, 2.0, RATE)
        rot = TriAxisSeries(rotation.x + idle.x, rotation.y + idle.y,
                            rotation.z + idle.z, RATE)
        dataset.append(LabeledRecording(rot, loc, "rotation"))
    return dataset


class TestPlacementReport:
    def test_selects_low_attenuation_quiet_rotation_location(self):
        # gains upper=0.25, middle=0.5, lower=1.0; rotation artifact at middle
        dataset = synthetic_placement_dataset(
            gains=(0.25, 0.5, 1.0), rotation_artifact_at="middle"
        )
        report = placement_report(dataset)
        assert report.best_location == "lower"
        contact_by_loc = {
            c.location: c.mean_db for c in report.cells if c.action == "contact"
        }
        assert (contact_by_loc["lower"] > contact_by_loc["middle"]
                > contact_by_loc["upper"])

    def test_snr_ordering_matches_injected_gains(self):
        dataset = synthetic_placement_dataset(gains=(1.0, 0.5, 0.25))
        report = placement_report(dataset)
        contact = {c.location: c.mean_db
                   for c in report.cells if c.action == "contact"}
        assert contact["upper"] > contact["middle"] > contact["lower"]
        # each halving of amplitude costs ~6 dB of SNR
        assert contact["upper"] - contact["middle"] == pytest.approx(6.02, abs=0.3)

    def test_single_location_no_selection_needed(self):
        dataset = [
            r for r in synthetic_placement_dataset() if r.location == "lower"
        ]
        report = placement_report(dataset)
        assert {c.location for c in report.cells} == {"lower"}
        assert report.best_location == "lower"

    def test_tie_reported(self):
        dataset = synthetic_placement_dataset(gains=(0.5, 0.5, 0.5),
                                              rotation_artifact_at="nowhere")
        # identical idle noise so the SNRs tie exactly
        idle = dataset[0].series
        for rec in dataset:
            if rec.action == "idle":
                rec.series = idle
            elif rec.action == "contact":
                base = [r for r in dataset if r.action == "contact"][0]
                rec.series = base.series
        report = placement_report(dataset)
        assert report.best_location is None
        assert sorted(report.tied_locations) == ["lower", "middle", "upper"]

    def test_missing_idle_cell_omitted(self):
        dataset = [r for r in synthetic_placement_dataset()
                   if not (r.location == "upper" and r.action == "idle")]
        report = placement_report(dataset)
        assert any("upper" in o for o in report.omitted)
        assert report.cell("upper", "contact") is None

    def test_per_axis_contact_present(self):
        report = placement_report(synthetic_placement_dataset())
        assert set(report.per_axis_contact) == {"upper", "middle", "lower"}
        assert set(report.per_axis_contact["lower"]) == {"x", "y", "z"}


class TestActuatorReport:
    def test_best_location_by_mean_ratio(self):
        source = noise_series(level=1.0, seed=20)
        pairs = []
        for loc, gain in (("a", 0.2), ("b", 0.9), ("c", 0.5)):
            for _ in range(3):
                handle = TriAxisSeries(gain * source.x, gain * source.y,
                                       gain * source.z, RATE)
                pairs.append((loc, handle, source))
        report = actuator_report(pairs)
        assert report.best_location == "b"
        by_loc = {r["location"]: r["mean"] for r in report.rows}
        assert by_loc["b"] == pytest.approx(0.81, rel=1e-9)
        assert all(r["mean"] >= 0 for r in report.rows)
