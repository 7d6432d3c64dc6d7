import math

import numpy as np
import pytest

from noonsim.circuits import compile_circuit, preset
from noonsim.experiment import delay_scans, patterns_of
from noonsim.fock import apply_linear_map, coincidence_probability
from noonsim.source import (
    DEFAULT_SIGMA,
    Scenario,
    emission_weight,
    exchange_matrix,
    pair_packets,
    pair_sector_coefficient,
    pdc_state,
    permuted,
    scenario_build,
)
from noonsim.temporal import exchange_ratio, packet_overlap

from .oracles import pair_photons, product_coincidence, product_norm

ETA = 0.1


def test_pair_amplitudes_identical_packets():
    s4 = pdc_state(scenario_build("four_x_one", eta=ETA), 2)
    assert s4.basis.dim == 1
    assert pair_sector_coefficient(s4, 1) == pytest.approx(ETA, abs=1e-12)
    assert pair_sector_coefficient(s4, 2) == pytest.approx(math.sqrt(2) * ETA**2, abs=1e-12)
    s6 = pdc_state(scenario_build("six_x_one", eta=ETA), 3)
    assert s6.basis.dim == 1
    assert pair_sector_coefficient(s6, 2) == pytest.approx(math.sqrt(2) * ETA**2, abs=1e-12)
    assert pair_sector_coefficient(s6, 3) == pytest.approx(math.sqrt(6) * ETA**3, abs=1e-12)
    assert s6.state.terms[()] == 1


def test_pair_sector_coefficient_needs_single_mode():
    with pytest.raises(ValueError):
        pair_sector_coefficient(pdc_state(scenario_build("two_x_two"), 2), 2)


def test_two_x_two_is_product_of_pairs():
    sc = scenario_build("two_x_two", separation=20 * DEFAULT_SIGMA, eta=ETA)
    src = pdc_state(sc, 2)
    assert src.basis.dim == 2
    four = src.state.sector(4)
    # one monomial: H and V of each pair, each in its own orthonormal mode
    assert len(four.terms) == 1
    (mono, c), = four.terms.items()
    assert len(set(mono)) == 4
    assert abs(c) == pytest.approx(ETA**2 / math.sqrt(2), abs=1e-15)


def test_order_validation():
    sc = scenario_build("two_x_two")
    with pytest.raises(ValueError):
        pdc_state(sc, 3)
    with pytest.raises(ValueError):
        pdc_state(sc, 0)


def test_scenario_times():
    s = 20 * DEFAULT_SIGMA
    assert scenario_build("four_x_one").pair_times == (0.0, 0.0)
    assert scenario_build("six_x_one").pair_times == (0.0, 0.0, 0.0)
    assert scenario_build("two_x_two").pair_times == (0.0, s)
    t = scenario_build("four_x_one_plus_two").pair_times
    assert sorted(t) == [0.0, 0.0, s] and len(set(t)) == 2
    assert scenario_build("two_x_three").pair_times == (0.0, s, 2 * s)


def test_well_separated_pairs_are_orthogonal():
    x = exchange_matrix(scenario_build("two_x_three"))
    assert np.all(x[~np.eye(3, dtype=bool)] < 1e-40)


def test_scenario_validation():
    with pytest.raises(ValueError):
        scenario_build("three_x_one")
    with pytest.raises(ValueError):
        scenario_build("two_x_two", separation=-1)
    with pytest.raises(ValueError):
        Scenario("two_x_two", (0.0,), DEFAULT_SIGMA, ETA)
    with pytest.raises(ValueError):
        Scenario("custom", (0.0,), 0.0, ETA)


def test_emission_weight_limits():
    # thermal for coincident pairs, Poissonian for separated ones
    assert emission_weight(scenario_build("four_x_one", eta=ETA)) == pytest.approx(ETA**4)
    assert emission_weight(scenario_build("two_x_two", eta=ETA)) == pytest.approx(ETA**4 / 2)
    assert emission_weight(scenario_build("six_x_one", eta=ETA)) == pytest.approx(ETA**6)
    assert emission_weight(scenario_build("two_x_three", eta=ETA)) == pytest.approx(ETA**6 / 6)


def test_emission_weight_against_exchange_ratio():
    for sep in (0.0, 150.0, 300.0, 1e4):
        sc = Scenario("custom", (0.0, sep), DEFAULT_SIGMA, ETA)
        x = exchange_ratio(*sc.packets())
        o = packet_overlap(*sc.packets())
        # the bare operator product carries one Gram permanent per polarization
        photons = pair_photons(sc.pair_times, DEFAULT_SIGMA, 0.0)
        assert product_norm(photons) == pytest.approx((1 + o**2) ** 2, rel=1e-12)
        # emission probability interpolates between Poissonian (x=0) and thermal (x=1)
        assert emission_weight(sc) == pytest.approx(ETA**4 / 2 * (1 + x), rel=1e-12)


def test_h_v_overlap_monotone_in_delay():
    sc = scenario_build("four_x_one")
    o = [packet_overlap(*pair_packets(sc, d)[0]) for d in np.linspace(0, 2000, 41)]
    assert o[0] == 1.0
    assert np.all(np.diff(o) < 0)
    assert packet_overlap(*pair_packets(sc, 1e5)[0]) == 0.0


@pytest.mark.parametrize("dT", [0.0, 120.0, 500.0])
@pytest.mark.parametrize("sep", [0.0, 180.0, 1e4])
def test_four_fold_matches_first_quantized_oracle(dT, sep):
    c = preset("noon4")
    m = compile_circuit(c)
    sc = Scenario("custom", (0.0, sep), DEFAULT_SIGMA, ETA)
    src = pdc_state(sc, 2, dT, c.n_paths).state.sector(4)
    p = coincidence_probability(apply_linear_map(m, src), c.modes("ABCD"))
    photons = pair_photons(sc.pair_times, DEFAULT_SIGMA, dT)
    dets = sorted(x.index for x in c.modes("ABCD"))
    # sector coefficient is eta^2 / sqrt(2!) on the plain operator product
    expected = ETA**4 / 2 * product_coincidence(photons, m.matrix, dets)
    assert p == pytest.approx(expected, rel=1e-10, abs=1e-20)


def test_rates_invariant_under_pair_relabeling():
    c = preset("noon6")
    sc = Scenario("custom", (0.0, 0.0, 250.0), DEFAULT_SIGMA, ETA)
    pats = ["ABCDEF"] + patterns_of("ABCDEF", 4)[:4]
    d = [0.0, 200.0]
    ref = delay_scans(sc, c, pats, d)
    for order in [(2, 0, 1), (1, 2, 0)]:
        got = delay_scans(permuted(sc, order), c, pats, d)
        for p in pats:
            np.testing.assert_allclose(got[p].rates, ref[p].rates, rtol=1e-10, atol=1e-30)


def test_subsets_enumerate_pair_choices():
    subs = list(scenario_build("two_x_three").subsets(2))
    assert len(subs) == 3 and all(s.n_pairs == 2 for s in subs)
