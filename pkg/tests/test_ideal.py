import math

import numpy as np
import pytest

from mdfilter import (DegenerateConditioningError, FilterThreshold,
                      LossChannel, distinguishability,
                      distinguishability_vs_loss, lossy_photon_distribution,
                      macro_qubit, macro_qubit_mixture, project_mdf,
                      threshold_sweep, uniform_diff_state)
from mdfilter.ideal import JointPhotonDistribution, loss_matrix


class TestProjection:
    def test_zero_threshold_is_identity(self):
        st = uniform_diff_state(4)
        out, success = project_mdf(st, FilterThreshold(0))
        assert out is st
        assert success == 1.0

    def test_odd_difference_state_unaffected_by_threshold_one(self, phi_187):
        out, success = project_mdf(phi_187, FilterThreshold(1))
        assert abs(success - 1.0) <= 1e-8
        assert set(out.amplitudes) == set(phi_187.amplitudes)

    def test_uniform_four_photons_threshold_two(self):
        out, success = project_mdf(uniform_diff_state(4), FilterThreshold(2))
        assert success == pytest.approx(0.8, rel=1e-12)
        assert set(out.amplitudes) == {(4, 0), (3, 1), (1, 3), (0, 4)}
        assert out.norm_sq() == pytest.approx(1.0, abs=1e-12)

    def test_idempotence(self, phi_187):
        th = FilterThreshold(100)
        once, s1 = project_mdf(phi_187, th)
        twice, s2 = project_mdf(once, th)
        assert s2 == pytest.approx(1.0, abs=1e-12)
        for key, a in once.items():
            b = twice.amplitude(*key)
            assert b.sign == a.sign
            assert abs(b.log_mag - a.log_mag) <= 1e-12

    @pytest.mark.parametrize("dth", [0, 3, 50, 200])
    def test_mirror_fairness_is_exact(self, dth):
        phi = macro_qubit(1.87, "phi", 1e-9)
        perp = macro_qubit(1.87, "phi_perp", 1e-9)
        _, s1 = project_mdf(phi, FilterThreshold(dth))
        _, s2 = project_mdf(perp, FilterThreshold(dth))
        assert s1 == s2          # bitwise: identical summation order

    def test_empty_signal(self):
        out, success = project_mdf(uniform_diff_state(2), FilterThreshold(5))
        assert out is None and success == 0.0

    def test_ensemble_reweighting(self):
        ens = macro_qubit_mixture(0.8, 1e-9)
        out, success = project_mdf(ens, FilterThreshold(3))
        assert 0.0 < success < 1.0
        ws = [w for w, _ in out]
        assert ws[0] == pytest.approx(ws[1], rel=1e-12)
        assert math.fsum(ws) == pytest.approx(1.0, abs=1e-12)


class TestLossyDistribution:
    def test_lossless_equals_filtered_probabilities_exactly(self):
        st = macro_qubit(0.8, "phi", 1e-10)
        filtered, _ = project_mdf(st, FilterThreshold(3))
        jpd = lossy_photon_distribution(st, LossChannel(0.0), FilterThreshold(3),
                                        grid_tail=1e-300)
        for (n, m), a in filtered.items():
            assert jpd.probs[n, m] == math.exp(2 * a.log_mag)

    def test_full_loss_is_vacuum_point_mass(self):
        st = macro_qubit(0.8, "phi", 1e-10)
        jpd = lossy_photon_distribution(st, LossChannel(1.0), FilterThreshold(0))
        assert jpd.probs.shape == (1, 1)
        assert jpd.probs[0, 0] == pytest.approx(1.0, abs=1e-9)

    def test_mirror_property_under_loss(self):
        phi = macro_qubit(0.8, "phi", 1e-10)
        perp = macro_qubit(0.8, "phi_perp", 1e-10)
        a = lossy_photon_distribution(phi, LossChannel(0.3), FilterThreshold(2),
                                      grid_tail=1e-300)
        b = lossy_photon_distribution(perp, LossChannel(0.3), FilterThreshold(2),
                                      grid_tail=1e-300)
        assert np.allclose(a.probs, b.probs.T, rtol=0, atol=1e-14)

    def test_normalization_bookkeeping(self):
        st = macro_qubit(0.8, "phi", 1e-10)
        jpd = lossy_photon_distribution(st, LossChannel(0.4), FilterThreshold(5))
        assert jpd.probs.sum() + jpd.discarded_mass == pytest.approx(1.0, abs=1e-8)
        assert (jpd.probs >= 0).all()

    def test_matches_naive_quadruple_sum(self):
        st = macro_qubit(0.5, "phi", 1e-10)
        th, R = FilterThreshold(2), 0.25
        jpd = lossy_photon_distribution(st, LossChannel(R), th, grid_tail=1e-300)
        filtered, _ = project_mdf(st, th)
        ref = np.zeros_like(jpd.probs)
        for (n, m), a in filtered.items():
            p = math.exp(2 * a.log_mag)
            for k in range(n + 1):
                for l in range(m + 1):
                    ref[k, l] += (p
                                  * math.comb(n, k) * (1 - R) ** k * R ** (n - k)
                                  * math.comb(m, l) * (1 - R) ** l * R ** (m - l))
        assert np.abs(jpd.probs - ref).max() <= 1e-10

    def test_empty_filter_raises(self):
        with pytest.raises(DegenerateConditioningError):
            lossy_photon_distribution(uniform_diff_state(2), LossChannel(0.0),
                                      FilterThreshold(9))


class TestDistinguishability:
    def test_mirror_symmetric_mass_gives_zero(self):
        p = np.zeros((2, 2))
        p[1, 0] = p[0, 1] = 0.5
        assert distinguishability(JointPhotonDistribution(p)).v == 0.0

    def test_all_mass_one_side(self):
        p = np.zeros((3, 3))
        p[2, 0] = 1.0
        rep = distinguishability(JointPhotonDistribution(p))
        assert rep.v == 1.0 and rep.P_S1 == 1.0

    def test_diagonal_mass_is_uninformative(self):
        p = np.zeros((2, 2))
        p[0, 0] = 1.0
        rep = distinguishability(JointPhotonDistribution(p))
        assert rep.v == 0.0
        assert rep.P_S1 == 1.0          # bookkeeping: diagonal counted in S1

    def test_region_sum_invariant(self, phi_187):
        jpd = lossy_photon_distribution(phi_187, LossChannel(0.2),
                                        FilterThreshold(50))
        rep = distinguishability(jpd)
        assert rep.P_S1 + rep.P_S2 == pytest.approx(1.0, abs=1e-10)


class TestSweeps:
    def test_full_loss_endpoint_is_exactly_zero(self):
        for dth in (0, 100):
            rows = distinguishability_vs_loss(1.87, FilterThreshold(dth), [1.0],
                                              tail_tolerance=1e-8)
            assert rows[0].v == 0.0

    def test_threshold_monotonicity_lossless(self):
        rows = threshold_sweep(1.87, [0, 50, 100, 200], 0.0, 1e-9)
        vs = [r.v for r in rows]
        assert vs == sorted(vs)
        assert rows[0].success_prob == 1.0

    def test_loss_matrix_rows_are_distributions(self):
        B = loss_matrix(40, 0.35)
        assert np.allclose(B.sum(axis=1), 1.0, atol=1e-12)
        assert (B >= 0).all()
