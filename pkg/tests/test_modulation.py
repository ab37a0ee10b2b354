import math

import numpy as np
import pytest

from gaugerotor.modulation import (
    ModulationSequence,
    ORTHOGONAL,
    UNITARY,
    build_amplitude_modulation,
    build_experimental_sequence,
    build_random_phase_sequence,
    classify_symmetry,
    predict_peak_times,
    symmetry_axes,
)

TWO_PI = 2 * math.pi
A_EXP = 0.21 * TWO_PI  # phase offset used for the period-10 drive


class TestBuilders:
    def test_amplitude_modulation_values(self):
        seq = build_amplitude_modulation(1.0, 5, 0.0)
        t = np.arange(5)
        assert seq.amplitudes[0] == pytest.approx(2.0)
        np.testing.assert_allclose(seq.amplitudes, 1 + np.cos(TWO_PI * t / 5))
        assert np.all(seq.phases == 0)

    def test_amplitude_modulation_period_two(self):
        seq = build_amplitude_modulation(1.0, 2, 0.0)
        np.testing.assert_allclose(seq.amplitudes, [2.0, 0.0], atol=1e-12)

    def test_amplitude_modulation_phase_pi(self):
        seq = build_amplitude_modulation(1.0, 5, math.pi)
        assert seq.amplitudes[0] == pytest.approx(0.0, abs=1e-12)

    def test_amplitude_modulation_rejects_bad_args(self):
        with pytest.raises(ValueError):
            build_amplitude_modulation(1.0, 1, 0.0)
        with pytest.raises(ValueError):
            build_amplitude_modulation(-1.0, 5, 0.0)
        with pytest.raises(ValueError):
            build_amplitude_modulation(math.nan, 5, 0.0)
        with pytest.raises(ValueError):
            build_amplitude_modulation(1.0, 5, math.inf)

    def test_experimental_sequence_structure(self):
        seq = build_experimental_sequence(1.0, 0.0, A_EXP)
        assert seq.period == 10
        t = np.arange(10)
        np.testing.assert_allclose(seq.amplitudes,
                                   1 + np.cos(TWO_PI * (t - 1) / 5))
        # odd kicks carry +a, even kicks -a
        np.testing.assert_allclose(seq.phases[1::2], A_EXP)
        np.testing.assert_allclose(seq.phases[0::2], TWO_PI - A_EXP)

    def test_experimental_sequence_zero_offset(self):
        seq = build_experimental_sequence(1.0, 0.0, 0.0)
        assert seq.period == 10
        assert np.all(seq.phases == 0)

    def test_experimental_sequence_control_phase_on_odd_kicks(self):
        phi = -3 * math.pi / 5
        seq = build_experimental_sequence(1.0, phi, A_EXP)
        t = np.arange(10)
        expected = 1 + np.cos(TWO_PI * (t - 1) / 5 + np.where(t % 2 == 1, phi, 0.0))
        np.testing.assert_allclose(seq.amplitudes, expected)

    def test_random_sequence_deterministic(self):
        s1 = build_random_phase_sequence(4.0, 7, rng_seed=123)
        s2 = build_random_phase_sequence(4.0, 7, rng_seed=123)
        np.testing.assert_array_equal(s1.phases, s2.phases)
        np.testing.assert_array_equal(s1.amplitudes, np.full(7, 4.0))

    def test_random_sequence_antisymmetric_structure(self):
        for N in (3, 4, 5, 6, 9):
            seq = build_random_phase_sequence(4.0, N, rng_seed=5,
                                              antisymmetric=True)
            # a(1+s) = -a(-s) about the axis between kicks 0 and 1
            for s in range(N):
                lhs = seq.phase_at(1 + s)
                rhs = seq.phase_at(-s)
                assert abs(math.remainder(lhs + rhs, TWO_PI)) < 1e-9


class TestClassification:
    def test_eq2_orthogonal_cases(self):
        assert classify_symmetry(build_amplitude_modulation(1.0, 5, 0.0)).tag == ORTHOGONAL
        assert classify_symmetry(build_amplitude_modulation(1.0, 5, math.pi / 5)).tag == ORTHOGONAL

    def test_eq2_unitary_case(self):
        assert classify_symmetry(build_amplitude_modulation(1.0, 5, 0.3)).tag == UNITARY

    def test_experimental_unitary(self):
        seq = build_experimental_sequence(1.0, -3 * math.pi / 5, A_EXP)
        assert classify_symmetry(seq).tag == UNITARY

    def test_experimental_orthogonal(self):
        seq = build_experimental_sequence(1.0, 0.0, A_EXP)
        assert classify_symmetry(seq).tag == ORTHOGONAL

    def test_n2_always_orthogonal(self):
        for phi in np.linspace(0, TWO_PI, 17, endpoint=False):
            seq = build_amplitude_modulation(1.0, 2, float(phi))
            assert classify_symmetry(seq).tag == ORTHOGONAL

    def test_flux_rule_matches_axis_search(self):
        # N*phi = 0 (mod pi) <=> orthogonal, for the pure amplitude family
        rng = np.random.default_rng(0)
        for N in range(2, 9):
            for k in range(2 * N):
                phi = k * math.pi / N
                seq = build_amplitude_modulation(2.0, N, phi)
                assert classify_symmetry(seq).tag == ORTHOGONAL, (N, phi)
            for phi in rng.uniform(0, TWO_PI, size=10):
                if N == 2:
                    continue
                if abs(math.remainder(N * phi, math.pi)) < 1e-6:
                    continue
                seq = build_amplitude_modulation(2.0, N, float(phi))
                assert classify_symmetry(seq).tag == UNITARY, (N, phi)

    def test_antisymmetrized_random_always_orthogonal(self):
        for seed in range(100):
            seq = build_random_phase_sequence(4.0, 3, seed, antisymmetric=True)
            assert classify_symmetry(seq).tag == ORTHOGONAL

    def test_plain_random_generically_unitary(self):
        for seed in range(100):
            seq = build_random_phase_sequence(4.0, 3, seed, antisymmetric=False)
            assert classify_symmetry(seq).tag == UNITARY

    def test_classification_rotation_invariant(self):
        for seed in range(20):
            for anti in (False, True):
                seq = build_random_phase_sequence(4.0, 5, seed, antisymmetric=anti)
                tag = classify_symmetry(seq).tag
                for shift in range(1, seq.period):
                    assert classify_symmetry(seq.rotated(shift)).tag == tag

    def test_flux_metadata(self):
        seq = build_amplitude_modulation(1.0, 5, 0.3)
        assert classify_symmetry(seq).flux == pytest.approx(1.5 % TWO_PI)


class TestPeakTimes:
    def test_first_cbs_kick_table(self):
        # control phases 2*pi*{0, 1/5, 2/5, 3/5, 4/5} -> first CBS kicks
        expected = {0: 6, 1: 10, 2: 4, 3: 8, 4: 2}
        for k, first in expected.items():
            seq = build_experimental_sequence(1.0, TWO_PI * k / 5, A_EXP)
            cbs, cfs = predict_peak_times(seq, 40)
            assert cbs[0] == first, (k, cbs)
            assert cbs == list(range(first, 41, 10))

    def test_cfs_multiples_of_period(self):
        seq = build_experimental_sequence(1.0, 0.0, A_EXP)
        cbs, cfs = predict_peak_times(seq, 35)
        assert cfs == [10, 20, 30]
        assert cbs == [6, 16, 26]

    def test_minus_two_fifths(self):
        seq = build_experimental_sequence(1.0, -2 * TWO_PI / 10, A_EXP)
        cbs, _ = predict_peak_times(seq, 40)
        assert cbs == [2, 12, 22, 32]

    def test_unitary_has_no_cbs(self):
        seq = build_experimental_sequence(1.0, -3 * math.pi / 5, A_EXP)
        cbs, cfs = predict_peak_times(seq, 30)
        assert cbs == []
        assert cfs == [10, 20, 30]

    def test_cbs_only_on_even_kicks_with_phase_flip(self):
        for k in range(5):
            seq = build_experimental_sequence(1.5, TWO_PI * k / 5, A_EXP)
            cbs, _ = predict_peak_times(seq, 100)
            assert all(t % 2 == 0 for t in cbs)

    def test_horizon_validation(self):
        seq = build_amplitude_modulation(1.0, 5, 0.0)
        with pytest.raises(ValueError):
            predict_peak_times(seq, 3)


class TestSerialization:
    def test_table_round_trip(self):
        seq = build_experimental_sequence(1.7, -3 * math.pi / 5, A_EXP)
        back = ModulationSequence.from_table(seq.to_table())
        assert back.period == seq.period
        np.testing.assert_array_equal(back.amplitudes, seq.amplitudes)
        np.testing.assert_array_equal(back.phases, seq.phases)
        assert back.control_phase == seq.control_phase
        assert back.flux == pytest.approx(seq.flux)

    def test_evaluation_wraps_mod_period(self):
        seq = build_amplitude_modulation(1.0, 5, 0.0)
        assert seq.amplitude_at(7) == seq.amplitude_at(2)
        assert seq.amplitude_at(-1) == seq.amplitude_at(4)


def test_axes_of_experimental_sequence():
    seq = build_experimental_sequence(1.0, 0.0, A_EXP)
    # amplitude is symmetric about kick indices 3.5 and 8.5; with the
    # period-2 phase flip only inter-kick axes survive
    assert symmetry_axes(seq) == [3.0, 8.0]
