import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noonsim.circuits import preset
from noonsim.experiment import (
    C_UM_PER_FS,
    R0,
    EAEstimate,
    MissingPatternError,
    ScanResult,
    combine_accidental_four,
    combine_accidental_six,
    delay_scan,
    delay_scans,
    ea_from_baseline_ratio,
    ea_from_packets,
    ea_from_v4,
    four_fold_from_pairs,
    patterns_of,
    subtract_background,
    v4_from_ea,
)
from noonsim.fit import visibility_model_free
from noonsim.source import pair_scenario
from noonsim.temporal import GaussianPacket

from .conftest import GRID


def const(r, label="X", n=5):
    return ScanResult(np.linspace(-1, 1, n), np.full(n, float(r)), label)


# -- ScanResult -----------------------------------------------------------------


def test_scan_validation():
    with pytest.raises(ValueError):
        ScanResult([0, 1], [1.0], "A")
    with pytest.raises(ValueError):
        ScanResult([0, 1], [1.0, -1.0], "A")
    with pytest.raises(ValueError):
        ScanResult([0], [1.0], "A", unit="mm")


def test_scan_is_immutable():
    s = const(1.0)
    with pytest.raises(ValueError):
        s.rates[0] = 2.0


def test_csv_round_trip(tmp_path):
    s = ScanResult([-1.5, 0.0, 1.5], [0.1, 1 / 3, 2.0], "ABCD")
    s.to_csv(tmp_path / "s.csv")
    text = (tmp_path / "s.csv").read_text()
    assert text.splitlines()[0] == "# label=ABCD unit=fs"
    back = ScanResult.from_csv(tmp_path / "s.csv")
    assert back.label == "ABCD" and back.unit == "fs"
    np.testing.assert_array_equal(back.rates, s.rates)
    np.testing.assert_array_equal(back.delays, s.delays)


def test_unit_conversion():
    s = ScanResult([0.0, 100.0], [1.0, 1.0], "A")
    um = s.in_unit("um")
    assert um.unit == "um" and um.delays[1] == pytest.approx(100 * C_UM_PER_FS)
    np.testing.assert_allclose(um.in_unit("fs").delays, s.delays, rtol=1e-15)


def test_baseline_uses_far_points():
    s = ScanResult([-2, -1, 0, 1, 2], [4.0, 3, 0, 3, 6.0], "A")
    assert s.baseline() == 5.0


# -- simulated scans ---------------------------------------------------------------


def test_hom_dip_is_zero_at_origin():
    s = delay_scan(pair_scenario(), preset("hom"), "AB", [0.0, 2000.0])
    assert s.rates[0] == pytest.approx(0.0, abs=1e-20)
    assert s.rates[1] > 0
    assert visibility_model_free(delay_scan(pair_scenario(), preset("hom"), "AB", GRID)) == pytest.approx(1.0)


def test_noon4_scenarios(scenario):
    c = preset("noon4")
    one = delay_scan(scenario("four_x_one"), c, "ABCD", GRID)
    two = delay_scan(scenario("two_x_two"), c, "ABCD", GRID)
    assert one.rates[10] == pytest.approx(0.0, abs=1e-18)
    assert one.baseline() > 0
    assert visibility_model_free(two) == pytest.approx(1 / 3, abs=1e-6)


def test_noon4_two_fold_classes():
    # AB and CD compare one analyser's outputs; cross-arm patterns carry no pair interference
    scans = delay_scans(pair_scenario(), preset("noon4"), patterns_of("ABCD", 2), GRID)
    assert visibility_model_free(scans["AB"]) == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(scans["CD"].rates, scans["AB"].rates, rtol=1e-10)
    for p in ("AC", "AD", "BC", "BD"):
        assert visibility_model_free(scans[p]) == pytest.approx(0.0, abs=1e-9)


def test_rep_rate_only_scales():
    sc = pair_scenario()
    a = delay_scan(sc, preset("hom"), "AB", GRID)
    b = delay_scan(sc, preset("hom"), "AB", GRID, rep_rate=1.0)
    np.testing.assert_allclose(a.rates, b.rates * R0, rtol=1e-14)
    assert visibility_model_free(a) == pytest.approx(visibility_model_free(b), abs=1e-14)


def test_parallel_scan_matches_serial(scenario):
    sc = scenario("two_x_two")
    c = preset("noon4")
    d = GRID[::4]
    serial = delay_scans(sc, c, ["ABCD", "AB"], d)
    par = delay_scans(sc, c, ["ABCD", "AB"], d, max_workers=2)
    for p in serial:
        np.testing.assert_array_equal(par[p].rates, serial[p].rates)


def test_scan_argument_errors(scenario):
    c = preset("noon4")
    with pytest.raises(ValueError):
        delay_scans(pair_scenario(), c, ["ABCD"], GRID)
    with pytest.raises(ValueError):
        delay_scans(scenario("two_x_two"), c, ["ABCD"], [])
    with pytest.raises(ValueError):
        delay_scans(scenario("two_x_two"), c, ["ABCX"], GRID)
    with pytest.raises(ValueError):
        delay_scans(scenario("two_x_two"), c, [], GRID)


# -- accidental combinations -----------------------------------------------------------


def test_four_fold_constant_inputs():
    s = combine_accidental_four(*(const(r) for r in (1, 2, 3, 4, 5, 6)), rep_rate=2.0)
    np.testing.assert_allclose(s.rates, (1 * 2 + 3 * 4 + 5 * 6) / 2.0)


def test_four_fold_zero_pair_vanishes():
    s = combine_accidental_four(const(0), const(7), const(1), const(1), const(1), const(1), rep_rate=1.0)
    np.testing.assert_allclose(s.rates, 2.0)


def test_four_fold_grid_mismatch():
    with pytest.raises(ValueError):
        combine_accidental_four(*(const(1) for _ in range(5)), const(1, n=6))


def test_six_fold_constant_inputs():
    labels = "ABCDEF"
    two = {p: const(2.0, p) for p in patterns_of(labels, 2)}
    four = {p: const(5.0, p) for p in patterns_of(labels, 4)}
    s = combine_accidental_six(two, four, rep_rate=10.0, mode="four_plus_two")
    np.testing.assert_allclose(s.rates, 15 * 2.0 * 5.0 / 10.0)
    # two_by_three builds each four-fold from three products: 15 * r * (3 r^2 / R0) / R0
    s = combine_accidental_six(two, None, rep_rate=10.0, mode="two_by_three")
    np.testing.assert_allclose(s.rates, 15 * 2.0 * (3 * 4.0 / 10.0) / 10.0)


def test_six_fold_errors():
    two = {p: const(1.0, p) for p in patterns_of("ABCDEF", 2)}
    with pytest.raises(MissingPatternError):
        combine_accidental_six(two, None, mode="four_plus_two")
    with pytest.raises(ValueError):
        combine_accidental_six(two, None, mode="three_by_two")
    del two["AF"]
    with pytest.raises(MissingPatternError):
        combine_accidental_six(two, None, mode="two_by_three")


def test_pattern_lookup_ignores_order():
    two = {p[::-1]: const(1.0, p) for p in patterns_of("ABCD", 2)}
    assert four_fold_from_pairs(two, "ABCD", rep_rate=1.0).rates[0] == 3.0


def test_accidental_four_matches_direct_two_x_two(scenario):
    c = preset("noon4")
    two = delay_scans(pair_scenario(), c, patterns_of("ABCD", 2), GRID)
    comb = four_fold_from_pairs(two, "ABCD")
    direct = delay_scan(scenario("two_x_two"), c, "ABCD", GRID)
    assert np.all(comb.rates >= 0)
    k = direct.rates @ comb.rates / (comb.rates @ comb.rates)
    assert np.max(np.abs(k * comb.rates / direct.rates - 1)) < 1e-6
    assert visibility_model_free(comb) == pytest.approx(1 / 3, abs=1e-6)


# -- E/A estimators ------------------------------------------------------------------


def test_v4_from_ea_examples():
    assert v4_from_ea(1, 1) == 1
    assert v4_from_ea(1, 0) == 1 / 3
    assert v4_from_ea(0.89, 0.9265) == pytest.approx(0.900, abs=5e-4)


def test_ea_from_v4_examples():
    assert ea_from_v4(1 / 3, 1).raw == pytest.approx(0.0, abs=1e-15)
    assert ea_from_v4(1, 1).raw == pytest.approx(1.0, abs=1e-15)
    e = ea_from_v4(0.90, 0.89)
    assert e.raw == pytest.approx(0.926511174847124, abs=1e-12)
    assert e.method == "from_visibility" and e.feasible


def test_ea_from_v4_errors_and_flags():
    with pytest.raises(ValueError):
        ea_from_v4(0.5, 0.0)
    with pytest.raises(ValueError):
        ea_from_v4(0.5, 1.2)
    v2 = 1.0
    with pytest.raises(ZeroDivisionError):
        ea_from_v4((6 * v2 - v2**2) / 3, v2)
    e = ea_from_v4(0.2, 1.0)
    assert not e.feasible and e.raw < 0 and e.value == 0.0 and e.clamped


@given(st.floats(1e-3, 1.0), st.floats(0.0, 1.0))
def test_ea_round_trip(v2, x):
    assert abs(ea_from_v4(v4_from_ea(v2, x), v2).raw - x) < 1e-12


def test_ea_from_baseline_ratio_examples():
    assert ea_from_baseline_ratio(2.0, 1.0).value == 1.0
    assert ea_from_baseline_ratio(1.0, 1.0).value == 0.0
    assert ea_from_baseline_ratio(1.92, 1.0).value == pytest.approx(0.92, abs=1e-12)
    with pytest.raises(ValueError):
        ea_from_baseline_ratio(1.0, 0.0)


def test_ea_from_packets():
    g = GaussianPacket(0, 100)
    assert ea_from_packets(g, g).value == 1.0
    dt = 100 * math.sqrt(-8 * math.log(0.9))
    assert ea_from_packets(g, GaussianPacket(dt, 100)).value == pytest.approx(0.6561)


def test_ea_estimate_nan_stays_nan():
    assert math.isnan(EAEstimate(math.nan, "from_visibility").value)


# -- background ----------------------------------------------------------------------


def test_subtract_background():
    s = ScanResult(GRID, 5 + np.sin(GRID / 500) ** 2, "AB")
    assert subtract_background(s, 0).rates.tolist() == s.rates.tolist()
    shifted = ScanResult(GRID, s.rates + 0.37, "AB")
    np.testing.assert_allclose(subtract_background(shifted, 0.37).rates, s.rates, atol=1e-12)
    flat = subtract_background(const(2.5), 2.5)
    assert np.all(flat.rates == 0) and flat.clipped == ()
    clipped = subtract_background(const(1.0), 2.0)
    assert np.all(clipped.rates == 0) and len(clipped.clipped) == 5
    with pytest.raises(ValueError):
        subtract_background(const(1.0), -1.0)
