import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iongate.fitting import RabiFrequencyFit, fit_phase_slope
from iongate.hilbert import RegisterConfig, RegisterState, basis_index, init_state, populations, product_state
from iongate.pulses import (
    AcStark,
    AddressingModel,
    Pulse,
    PulseContext,
    PulseKind,
    RabiConfig,
    ShotParams,
    apply_pulse,
    blue_sideband,
    carrier,
    deflection_phase,
    rabi_profile,
)

from oracles import blue_unitary, carrier_unitary, d_phase_unitary

CFG = RegisterConfig()


def random_state(rng, cfg=CFG):
    v = rng.normal(size=cfg.dim) + 1j * rng.normal(size=cfg.dim)
    return RegisterState(cfg, v / np.linalg.norm(v))


class TestCarrier:
    def test_pi_pulse(self):
        out = carrier(init_state("SS"), 1, np.pi, 0.0)
        assert out.amplitudes[basis_index("DS", 0)] == pytest.approx(-1j)
        assert populations(out).ion_pd[0] == pytest.approx(1.0)

    def test_zero_angle(self):
        s = random_state(np.random.default_rng(0))
        assert np.array_equal(carrier(s, 2, 0.0, 1.3).amplitudes, s.amplitudes)

    @pytest.mark.parametrize("phi", [0.0, 0.7, -2.0])
    def test_two_pi_sign(self, phi):
        out = carrier(init_state("SS"), 1, 2 * np.pi, phi)
        assert out.amplitudes[0] == pytest.approx(-1, abs=1e-15)

    @pytest.mark.parametrize("ion", [1, 2])
    def test_matches_expm(self, ion):
        s = random_state(np.random.default_rng(ion))
        u = carrier_unitary(ion, 1.234, 0.567)
        np.testing.assert_allclose(carrier(s, ion, 1.234, 0.567).amplitudes, u @ s.amplitudes, atol=1e-12)

    def test_bus_marginal_unchanged(self):
        s = random_state(np.random.default_rng(9))
        before = populations(s).bus
        after = populations(carrier(s, 1, 2.1, 0.3)).bus
        np.testing.assert_allclose(after, before, atol=1e-14)

    def test_invalid_ion(self):
        with pytest.raises(ValueError):
            carrier(init_state("SS"), 3, 1.0, 0.0)


class TestBlueSideband:
    def test_pi_pulse_maps_to_bus(self):
        out = blue_sideband(init_state("SS"), 1, np.pi, 0.0)
        assert out.amplitudes[basis_index("DS", 1)] == pytest.approx(-1j)

    @pytest.mark.parametrize("theta,phi", [(np.pi, 0.0), (1.7, 2.2), (25.0, -1.0)])
    def test_d0_invariant(self, theta, phi):
        s = init_state("DS", 0)
        out = blue_sideband(s, 1, theta, phi)
        assert np.max(np.abs(out.amplitudes - s.amplitudes)) < 1e-12

    def test_n1_transfer(self):
        out = blue_sideband(init_state("SS", 1), 1, np.pi, 0.0)
        p = abs(out.amplitudes[basis_index("DS", 2)]) ** 2
        assert p == pytest.approx(np.sin(np.pi * np.sqrt(2) / 2) ** 2, abs=1e-14)
        assert p == pytest.approx(0.6331276710207078, abs=1e-12)

    def test_top_level_left_alone(self):
        s = init_state("SS", 8)
        assert np.array_equal(blue_sideband(s, 1, 1.0, 0.0).amplitudes, s.amplitudes)

    @pytest.mark.parametrize("ion", [1, 2])
    def test_matches_expm(self, ion):
        s = random_state(np.random.default_rng(10 + ion))
        u = blue_unitary(ion, 2.345, -0.4)
        np.testing.assert_allclose(blue_sideband(s, ion, 2.345, -0.4).amplitudes, u @ s.amplitudes, atol=1e-12)

    def test_sqrt_scaling(self):
        thetas = np.linspace(0, 6 * np.pi, 400)

        def flop(n):
            return np.array([abs(blue_sideband(init_state("SS", n), 1, t, 0.0).amplitudes[
                basis_index("DS", n + 1)]) ** 2 for t in thetas])

        w0 = RabiFrequencyFit().fit(thetas, flop(0)).omega_
        w1 = RabiFrequencyFit().fit(thetas, flop(1)).omega_
        assert abs(w1 / w0 - np.sqrt(2)) < 1e-9


class TestApplyPulse:
    def test_ideal_reduces(self):
        s = random_state(np.random.default_rng(1))
        for kind, fn in ((PulseKind.CARRIER, carrier), (PulseKind.BLUE, blue_sideband)):
            p = Pulse.make(kind, 2, 1.1, 0.4)
            np.testing.assert_array_equal(apply_pulse(s, p).amplitudes, fn(s, 2, 1.1, 0.4).amplitudes)

    def test_crosstalk(self):
        ctx = PulseContext(addressing=AddressingModel())
        out = apply_pulse(init_state("SS"), Pulse.carrier(1, np.pi), ctx)
        pops = populations(out)
        assert pops.ion_pd[1] == pytest.approx(np.sin(0.069 * np.pi / 2) ** 2, abs=1e-12)
        assert pops.ion_pd[1] == pytest.approx(0.011701368968087707, abs=1e-12)

    def test_crosstalk_matches_oracle(self):
        am = AddressingModel(error_on_neighbor=(0.069, 0.029), crosstalk_phase=0.3)
        ctx = PulseContext(addressing=am)
        s = random_state(np.random.default_rng(5))
        u = blue_unitary(1, 0.029 * 2.0, 0.5 + 0.3) @ blue_unitary(2, 2.0, 0.5)
        out = apply_pulse(s, Pulse.blue(2, 2.0, 0.5), ctx)
        np.testing.assert_allclose(out.amplitudes, u @ s.amplitudes, atol=1e-12)

    def test_ramsey_wait(self):
        ctx = PulseContext(shot=ShotParams(detuning=(1e3, 0.0)))
        s = product_state([(1, 1), (1, 0)])
        out = apply_pulse(s, Pulse.wait(500e-6), ctx)
        a_s = out.amplitudes[basis_index("SS", 0)]
        a_d = out.amplitudes[basis_index("DS", 0)]
        assert np.angle(a_d / a_s) == pytest.approx(np.pi, abs=1e-9) or \
            np.angle(a_d / a_s) == pytest.approx(-np.pi, abs=1e-9)

    def test_ac_stark_phase(self):
        stark = AcStark(shift=800.0, compensated=False)
        p = Pulse.blue(1, 1.0, 0.2)
        s = random_state(np.random.default_rng(7))
        out = apply_pulse(s, p, PulseContext(ac_stark=stark))
        u = d_phase_unitary(1, 2 * np.pi * 800.0 * p.duration) @ blue_unitary(1, 1.0, 0.2)
        np.testing.assert_allclose(out.amplitudes, u @ s.amplitudes, atol=1e-12)
        # compensated -> no phase
        same = apply_pulse(s, p, PulseContext(ac_stark=AcStark(800.0, True)))
        np.testing.assert_allclose(same.amplitudes, blue_sideband(s, 1, 1.0, 0.2).amplitudes, atol=1e-15)

    def test_intensity_jitter(self):
        ctx = PulseContext(shot=ShotParams(intensity_factor=1.1))
        out = apply_pulse(init_state("SS"), Pulse.carrier(1, np.pi), ctx)
        assert populations(out).ion_pd[0] == pytest.approx(np.sin(1.1 * np.pi / 2) ** 2)

    def test_inverse(self):
        s = random_state(np.random.default_rng(2))
        for kind in (PulseKind.CARRIER, PulseKind.BLUE):
            a = apply_pulse(s, Pulse.make(kind, 1, 1.9, 0.8))
            b = apply_pulse(a, Pulse.make(kind, 1, 1.9, 0.8 + np.pi))
            assert np.max(np.abs(b.amplitudes - s.amplitudes)) < 1e-10

    def test_neighbor_untouched_without_crosstalk(self):
        s = random_state(np.random.default_rng(4))
        before = populations(s).ion_pd[1]
        after = populations(apply_pulse(s, Pulse.carrier(1, 2.5, 1.0))).ion_pd[1]
        assert after == pytest.approx(before, abs=1e-14)

    @settings(max_examples=1000, deadline=None)
    @given(kind=st.sampled_from([PulseKind.CARRIER, PulseKind.BLUE]), ion=st.integers(1, 2),
           theta=st.floats(0, 20), phi=st.floats(-7, 7), seed=st.integers(0, 2**32 - 1),
           eps=st.floats(0, 0.2), det=st.floats(-2e3, 2e3))
    def test_unitarity(self, kind, ion, theta, phi, seed, eps, det):
        s = random_state(np.random.default_rng(seed))
        ctx = PulseContext(addressing=AddressingModel(error_on_neighbor=(eps, eps)),
                           shot=ShotParams(detuning=(det, -det)), ac_stark=AcStark(500.0, False))
        out = apply_pulse(s, Pulse.make(kind, ion, theta, phi), ctx)
        assert abs(out.norm() - 1) < 1e-12


class TestPulse:
    def test_duration(self):
        p = Pulse.carrier(1, np.pi)
        assert p.duration * 1e6 == pytest.approx(14.084507042253522, rel=1e-12)
        assert Pulse.blue(1, np.pi).duration == pytest.approx(95e-6, rel=1e-12)

    @pytest.mark.parametrize("kw", [dict(theta=-1.0), dict(duration=-1.0), dict(ion=0)])
    def test_invalid(self, kw):
        base = dict(kind=PulseKind.CARRIER, ion=1, theta=1.0, phi=0.0, duration=1e-6)
        with pytest.raises(ValueError):
            Pulse(**{**base, **kw})

    def test_wait_no_angle(self):
        with pytest.raises(ValueError):
            Pulse(PulseKind.WAIT, None, 1.0)

    def test_rabi_positive(self):
        with pytest.raises(ValueError):
            RabiConfig(carrier_rabi=(0.0, 1.0))

    def test_truncated(self):
        p = Pulse.blue(1, np.pi).truncated(0.5)
        assert p.theta == pytest.approx(np.pi / 2) and p.duration == pytest.approx(47.5e-6)


class TestGeometry:
    def test_profile(self):
        m = AddressingModel()
        assert rabi_profile(0.0, m) == 1.0
        assert rabi_profile(m.beam_waist, m) == pytest.approx(np.exp(-1))
        assert rabi_profile(4.90e-6, m) == pytest.approx(0.021459239080080388, rel=1e-12)

    def test_intensity_convention(self):
        m = AddressingModel(profile="intensity")
        assert rabi_profile(m.beam_waist, m) == pytest.approx(np.exp(-0.5))

    def test_phase_linear(self):
        m = AddressingModel(phase_slope=2.5e5)
        assert deflection_phase(0.0, m).value == 0
        x = 0.7e-6
        assert abs(deflection_phase(2 * x, m).value - 2 * deflection_phase(x, m).value) < 1e-12
        assert deflection_phase(x, m).in_linear_range
        assert not deflection_phase(3e-6, m).in_linear_range

    def test_slope_fit_recovers(self):
        rng = np.random.default_rng(11)
        slope = 3.1e5
        x = np.linspace(-2e-6, 2e-6, 41)
        y = slope * x + rng.normal(0, 0.01, x.size)
        assert fit_phase_slope(x, y) == pytest.approx(slope, rel=0.01)

    def test_addressing_bounds(self):
        with pytest.raises(ValueError):
            AddressingModel(error_on_neighbor=(1.0, 0.0))
