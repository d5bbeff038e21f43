import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from iongate import experiment as ex
from iongate.noise import (
    NoiseConfig,
    confusion_matrix,
    counter_uniforms,
    detection_flip,
    sample_shot,
    sample_shots,
    thermal_n,
)
from iongate.pulses import ShotParams


class TestThermal:
    def test_zero(self):
        u = np.linspace(0, 0.999999, 1000)
        assert np.all(thermal_n(0.0, u) == 0)

    def test_ground_fraction(self):
        nbar = 0.010101
        assert 1 / (1 + nbar) == pytest.approx(0.99, abs=1e-6)
        u = counter_uniforms(1, 0, 0, np.arange(200_000), 1)[:, 0]
        assert np.mean(thermal_n(nbar, u) == 0) == pytest.approx(0.99, abs=0.002)

    def test_mean(self):
        u = counter_uniforms(5, 0, 0, np.arange(1_000_000), 1)[:, 0]
        assert thermal_n(0.5, u, n_max=200).mean() == pytest.approx(0.5, abs=0.01)

    def test_distribution(self):
        nbar = 0.8
        u = counter_uniforms(9, 0, 0, np.arange(100_000), 1)[:, 0]
        n = thermal_n(nbar, u, n_max=1000)
        counts = np.bincount(n, minlength=6)[:6]
        p = nbar ** np.arange(6) / (1 + nbar) ** (np.arange(6) + 1)
        assert np.max(np.abs(counts / n.size - p)) < 0.005

    def test_scalar_and_clip(self):
        assert isinstance(thermal_n(0.5, 0.3), int)
        assert thermal_n(100.0, 0.999999, n_max=8) == 8

    def test_negative(self):
        with pytest.raises(ValueError):
            thermal_n(-0.1, 0.5)

    @settings(max_examples=1000, deadline=None)
    @given(st.floats(0, 50), st.floats(0, 1, exclude_max=True), st.integers(2, 20))
    def test_range(self, nbar, u, n_max):
        assert 0 <= thermal_n(nbar, u, n_max) <= n_max


class TestSampleShot:
    def test_ideal(self):
        cfg = NoiseConfig.ideal()
        for k in range(5):
            assert sample_shot(cfg, k) == ShotParams(0, (0.0, 0.0), 1.0)

    def test_deterministic(self):
        cfg = NoiseConfig(dephasing_sigma=(100.0, 50.0), seed=42)
        assert sample_shot(cfg, 17) == sample_shot(cfg, 17)
        assert sample_shot(cfg, 17) != sample_shot(cfg, 18)

    def test_vector_matches_scalar(self):
        cfg = NoiseConfig(dephasing_sigma=(100.0, 50.0), thermal_nbar=0.3, seed=3)
        batch = sample_shots(cfg, 50)
        for k in (0, 7, 49):
            s = sample_shot(cfg, k)
            assert s.initial_n == batch.initial_n[k]
            assert s.detuning == tuple(batch.detuning[k])
            assert s.intensity_factor == batch.intensity_factor[k]

    def test_order_independent(self):
        cfg = NoiseConfig(dephasing_sigma=(100.0, 50.0), seed=8)
        a = sample_shots(cfg, 100)
        b = sample_shots(cfg, 40, start=60)
        assert np.array_equal(a.detuning[60:], b.detuning)

    def test_detuning_statistics(self):
        cfg = NoiseConfig(dephasing_sigma=(200.0, 80.0), seed=11)
        det = sample_shots(cfg, 100_000).detuning
        assert det[:, 0].std() == pytest.approx(200.0, rel=0.02)
        assert det[:, 1].std() == pytest.approx(80.0, rel=0.02)
        assert abs(np.corrcoef(det.T)[0, 1]) < 0.02

    def test_intensity_truncation(self):
        cfg = NoiseConfig(intensity_rms=0.05, seed=4)
        f = sample_shots(cfg, 100_000).intensity_factor
        assert f.mean() == pytest.approx(1.0, abs=1e-3)
        assert f.std() == pytest.approx(0.05, rel=0.02)
        assert np.all(np.abs(f - 1) <= 4 * 0.05 + 1e-12)

    def test_streams_differ(self):
        a = counter_uniforms(1, 0, 0, np.arange(10), 3)
        for args in ((2, 0, 0), (1, 1, 0), (1, 0, 1)):
            assert not np.array_equal(a, counter_uniforms(*args, np.arange(10), 3))

    def test_uniform_range_and_ks(self):
        u = counter_uniforms(0, 0, 0, np.arange(50_000), 4).ravel()
        assert np.all((u > 0) & (u < 1))
        assert stats.kstest(u, "uniform").pvalue > 0.001


class TestDetection:
    def test_identity(self):
        cfg = NoiseConfig.ideal()
        rng = np.random.default_rng(0)
        for s in ("SS", "SD", "DS", "DD"):
            assert detection_flip(s, cfg, rng.random(2)) == s

    def test_rate(self):
        cfg = NoiseConfig(detection_accuracy=0.98)
        u = counter_uniforms(2, 0, 0, np.arange(100_000), 2)
        frac = np.mean([detection_flip("SS", cfg, row) == "SS" for row in u])
        assert frac == pytest.approx(0.9604, abs=0.005)

    def test_half_uniform(self):
        cfg = NoiseConfig(detection_accuracy=0.5)
        u = counter_uniforms(3, 0, 0, np.arange(20_000), 2)
        out = [detection_flip("DD", cfg, row) for row in u]
        counts = [out.count(s) for s in ("SS", "SD", "DS", "DD")]
        assert stats.chisquare(counts).pvalue > 0.001

    def test_confusion(self):
        m = confusion_matrix(0.98, 2)
        assert m[0, 0] == pytest.approx(0.9604)
        np.testing.assert_allclose(m.sum(axis=0), 1.0)


class TestConfigJson:
    def test_round_trip(self):
        cfg = NoiseConfig(dephasing_sigma=(10.0, 20.0), seed=99)
        assert NoiseConfig.from_json(cfg.to_json()) == cfg

    def test_unknown_key(self):
        d = NoiseConfig().to_dict()
        d["dephasing_sigmaa"] = [1, 2]
        with pytest.raises(ValueError, match="dephasing_sigmaa"):
            NoiseConfig.from_dict(d)

    def test_unknown_nested_key(self):
        d = NoiseConfig().to_dict()
        d["addressing"]["waist"] = 1.0
        with pytest.raises(ValueError, match="waist"):
            NoiseConfig.from_dict(d)

    @pytest.mark.parametrize("kw", [dict(detection_accuracy=1.5), dict(thermal_nbar=-1.0),
                                    dict(intensity_rms=-0.1), dict(dephasing_sigma=(-1.0, 0.0)),
                                    dict(seed=-1)])
    def test_invariants(self, kw):
        with pytest.raises(ValueError):
            NoiseConfig(**kw)

    def test_bundled(self):
        cfg = NoiseConfig.tuned()
        assert cfg.addressing.error_on_neighbor == (0.069, 0.029)
        assert 1 / (1 + cfg.thermal_nbar) == pytest.approx(0.99, abs=1e-6)
        assert cfg.detection_accuracy == 0.98
        assert json.loads(cfg.to_json())["seed"] == cfg.seed

    def test_for_ions(self):
        cfg = NoiseConfig().for_ions(1)
        assert cfg.dephasing_sigma == (0.0,) and cfg.addressing.error_on_neighbor == (0.069,)
        with pytest.raises(ValueError):
            NoiseConfig().for_ions(3)


def test_reproducible_counts():
    cfg = NoiseConfig(dephasing_sigma=(300.0, 300.0), seed=77)
    a = ex.run_shots(ex.cz_cnot(), "DS", cfg, 500, "sampled")
    b = ex.run_shots(ex.cz_cnot(), "DS", cfg, 500, "sampled")
    assert np.array_equal(a.counts, b.counts)


def _per_shot_fidelity(cfg, shots):
    """(shots,) truth-table fidelity for each shot, averaged over the four inputs."""
    fid = np.zeros(shots)
    for i, inp in enumerate(ex.TRUTH_INPUTS):
        states = ex.final_states(ex.cz_cnot(), inp, cfg, shots, experiment=ex.EXP_TRUTH, point=i)
        amps = np.stack([s.amplitudes for s in states]).reshape(shots, 4, -1)
        probs = (np.abs(amps) ** 2).sum(axis=-1)
        fid += probs[:, ex.TRUTH_INPUTS.index(ex.cnot_target(inp))] / 4
    return fid


def test_dephasing_monotone():
    means, errs = [], []
    for sigma in (0.0, 50.0, 100.0, 200.0, 400.0):
        cfg = NoiseConfig.from_dict({**NoiseConfig.ideal(seed=5).to_dict(), "dephasing_sigma": [sigma, sigma]})
        f = _per_shot_fidelity(cfg, 10_000)
        means.append(f.mean())
        errs.append(f.std() / np.sqrt(f.size))
    assert means[0] == pytest.approx(1.0, abs=1e-12)
    for k in range(len(means) - 1):
        assert means[k + 1] <= means[k] + 3 * max(errs[k], errs[k + 1])
    assert means[-1] < means[0] - 3 * errs[-1]
