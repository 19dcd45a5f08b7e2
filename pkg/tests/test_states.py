import math

import pytest

from mdfilter import (GainParam, StateEnsemble, TwoModeFockState, macro_qubit,
                      macro_qubit_mixture, uniform_diff_state)
from mdfilter.numerics import LogAmplitude


class TestMacroQubit:
    def test_zero_gain_limit_is_single_photon(self):
        st = macro_qubit(1e-8, "phi", 1e-12)
        assert len(st) == 1
        amp = st.amplitude(1, 0)
        assert amp.sign == 1
        assert math.exp(amp.log_mag) == pytest.approx(1.0, abs=1e-12)

    def test_retained_norm_meets_tail_tolerance(self):
        st = macro_qubit(0.5, "phi", 1e-12)
        n2 = st.norm_sq()
        assert 1.0 - 1e-12 <= n2 <= 1.0 + 1e-13
        assert st.tail_mass <= 1e-12

    def test_mean_total_photons_at_working_gain(self):
        st = macro_qubit(1.87, "phi", 1e-10)
        m1, m2 = st.photon_means()
        total = m1 + m2
        assert total == pytest.approx(1.0 + 4.0 * math.sinh(1.87) ** 2, abs=1e-4)
        # the headline amplifier estimate 4 sinh^2 g
        assert total == pytest.approx(4.0 * math.sinh(1.87) ** 2, rel=0.03)

    @pytest.mark.parametrize("g", [0.3, 0.8, 1.87])
    def test_mode_mean_relation(self, g):
        # exact for the amplified single photon: mean1 = 3*mean2 + 1
        st = macro_qubit(g, "phi", 1e-10)
        m1, m2 = st.photon_means()
        assert m1 - 3.0 * m2 == pytest.approx(1.0, abs=1e-5)

    def test_parity_support_and_orthogonality(self):
        phi = macro_qubit(0.8, "phi", 1e-10)
        perp = macro_qubit(0.8, "phi_perp", 1e-10)
        for (n, m), _ in phi.items():
            assert n % 2 == 1 and m % 2 == 0
        for (n, m), _ in perp.items():
            assert n % 2 == 0 and m % 2 == 1
        # disjoint supports make the overlap exactly zero
        assert not (set(phi.amplitudes) & set(perp.amplitudes))

    def test_orientations_are_exact_mirrors(self):
        phi = macro_qubit(1.2, "phi", 1e-9)
        perp = macro_qubit(1.2, "phi_perp", 1e-9)
        assert phi.is_mirror_of(perp)
        assert phi.mirrored().amplitudes == perp.amplitudes

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            macro_qubit(0.5, "phi", 0.0)
        with pytest.raises(ValueError):
            macro_qubit(0.5, "phi", 1.5)
        with pytest.raises(ValueError):
            macro_qubit(-1.0, "phi")
        with pytest.raises(ValueError):
            macro_qubit(0.5, "sideways")
        with pytest.raises(ValueError):
            GainParam(float("inf"))


class TestUniformDiffState:
    def test_smallest_cases(self):
        st0 = uniform_diff_state(0)
        assert len(st0) == 1 and st0.amplitude(0, 0).sign == 1
        st1 = uniform_diff_state(1)
        for key in ((0, 1), (1, 0)):
            p = math.exp(2 * st1.amplitude(*key).log_mag)
            assert p == pytest.approx(0.5, rel=1e-14)

    def test_flat_profile_at_200(self):
        st = uniform_diff_state(200)
        assert len(st) == 201
        assert st.tail_mass == 0.0
        for (n, m), a in st.items():
            assert n + m == 200
            assert math.exp(2 * a.log_mag) == pytest.approx(1 / 201, rel=1e-13)


class TestEnsembles:
    def test_mixture_weights_and_mirror(self):
        ens = macro_qubit_mixture(1.87, 1e-9)
        ws = [w for w, _ in ens]
        assert ws == [0.5, 0.5]
        a, b = (st for _, st in ens)
        assert a.is_mirror_of(b)
        ma = a.photon_means()
        mb = b.photon_means()
        assert ma[0] == pytest.approx(mb[1], rel=1e-12)
        assert ma[1] == pytest.approx(mb[0], rel=1e-12)

    def test_total_photon_distribution_is_component_average(self):
        ens = macro_qubit_mixture(0.3, 1e-10)
        mix = ens.total_photon_distribution()
        parts = [st.total_photon_distribution() for _, st in ens]
        for n, p in mix.items():
            direct = 0.5 * parts[0].get(n, 0.0) + 0.5 * parts[1].get(n, 0.0)
            assert p == pytest.approx(direct, rel=1e-12)

    def test_weight_validation(self):
        st = uniform_diff_state(1)
        with pytest.raises(ValueError):
            StateEnsemble(((0.6, st), (0.6, st)))
        with pytest.raises(ValueError):
            StateEnsemble(((1.2, st),))


class TestSerialization:
    def test_round_trip_preserves_amplitudes_and_order(self):
        st = macro_qubit(0.8, "phi", 1e-8)
        back = TwoModeFockState.from_json(st.to_json())
        assert back.amplitudes == st.amplitudes
        assert list(back.items()) == list(st.items())
        assert back.tail_mass == st.tail_mass
        assert back.truncation_bound == st.truncation_bound

    def test_schema_fields(self):
        d = uniform_diff_state(2).to_json_dict()
        assert d["basis"] == "fock2"
        assert set(d) == {"basis", "trunc", "tail", "terms"}
        assert all(len(t) == 4 for t in d["terms"])

    def test_rejects_unknown_basis(self):
        with pytest.raises(ValueError):
            TwoModeFockState.from_json_dict({"basis": "nope", "terms": []})

    def test_norm_validation(self):
        with pytest.raises(ValueError):
            TwoModeFockState({(0, 0): LogAmplitude(1, 1.0)})
