import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzicic.link_metrics import (McsEntry, McsTable, NoiseModel, achieved_rbs, availability, db,
                                   dbm_to_w, default_mcs_table, jain_fairness, power_efficiency,
                                   rate_per_rb, sinr, slot_metrics, user_throughput, w_to_dbm)


def test_mcs_table_contents():
    t = default_mcs_table()
    assert len(t) == 16 and t.max_index == 15
    assert t[0].efficiency == 0.0 and math.isnan(t.min_sinr_db[0])
    assert t[7].efficiency == 1.4766 and t[7].min_sinr_db == 5.0
    assert t[1].efficiency == 0.1523 and t[15].efficiency == 5.5547
    assert np.all(np.diff(t.efficiency[1:]) > 0)
    assert np.all(np.diff(t.min_sinr_db[1:]) >= 0)


def test_mcs_table_validation():
    good = [McsEntry(0, math.nan, "None", math.nan, 0.0), McsEntry(1, -6, "QPSK", 0.1, 0.2)]
    McsTable(good)
    with pytest.raises(ValueError):
        McsTable(good + [McsEntry(2, -5, "QPSK", 0.1, 0.1)])     # efficiency not increasing
    with pytest.raises(ValueError):
        McsTable(good + [McsEntry(2, -7, "QPSK", 0.2, 0.3)])     # threshold decreasing
    with pytest.raises(ValueError):
        McsTable([good[1]])                                      # index 0 missing


def test_noise_floor():
    n = NoiseModel()
    assert n.dbm == pytest.approx(-121.4473, abs=1e-3)
    assert round(n.dbm, 2) == -121.45
    assert n.watts > 0


def test_sinr_examples():
    eta = NoiseModel().watts
    s = dbm_to_w(-90.0)
    assert db(sinr(s, 0.0, eta)) == pytest.approx(31.45, abs=0.01)
    assert db(sinr(1.0, 1.0, 1e-15)) == pytest.approx(0.0, abs=1e-9)
    assert db(sinr(2 * s, 0.0, eta)) - db(sinr(s, 0.0, eta)) == pytest.approx(3.0103, abs=1e-4)


def test_dbm_conversions():
    assert dbm_to_w(10.0) == pytest.approx(0.01)
    assert w_to_dbm(0.002) == pytest.approx(3.0103, abs=1e-4)
    assert w_to_dbm(0.0) == -np.inf
    assert w_to_dbm(0.0, -200.0) == -200.0


def test_throughput_examples():
    eff = default_mcs_table().efficiency[7]
    rb = rate_per_rb(eff)
    assert float(rb) == pytest.approx(265788.0)
    ten = user_throughput(np.full(10, 100.0), 5.0, eff)
    assert ten == pytest.approx(2.658e6, rel=1e-3)
    assert ten == pytest.approx(10 * 12 * 15000 * 1.4766)
    assert user_throughput(np.full(10, 1.0), 5.0, eff) == 0.0
    half = user_throughput(np.r_[np.full(5, 100.0), np.full(5, 1.0)], 5.0, eff)
    assert half == ten / 2


def test_threshold_is_inclusive():
    assert achieved_rbs([10 ** 0.5], 5.0) == 1
    assert achieved_rbs([10 ** 0.499], 5.0) == 0
    assert achieved_rbs([], 5.0) == 0


def test_power_efficiency():
    assert power_efficiency(1e6, [0.01]) == pytest.approx(1e8)
    assert power_efficiency(1e6, [0.0025, 0.0025]) == pytest.approx(2e8)
    assert power_efficiency(0.0, [0.01]) == 0.0
    assert power_efficiency(0.0, []) == 0.0


def test_availability():
    assert availability([1, 2, 3], [1, 2, 3]) == 1.0
    assert availability([0, 0], [1, 1]) == 0.0
    assert availability([1, 1, 1, 0], [1, 1, 1, 1]) == 0.75
    with pytest.raises(ValueError):
        availability([], [])


def test_jain_examples():
    assert jain_fairness([3, 3, 3]) == pytest.approx(1.0)
    assert jain_fairness([0, 0, 5, 0]) == pytest.approx(0.25)
    assert jain_fairness([2, 4]) == pytest.approx(0.9)
    assert jain_fairness([0, 0]) == 1.0


@given(st.lists(st.floats(0, 1e7), min_size=1, max_size=20), st.floats(1e-3, 1e3))
def test_jain_bounds_and_scale_invariance(c, k):
    f = jain_fairness(c)
    if any(x > 0 for x in c):
        assert 1 / len(c) - 1e-12 <= f <= 1 + 1e-12
        assert jain_fairness(np.array(c) * k) == pytest.approx(f, rel=1e-9)


@given(st.floats(1e-15, 1e-3), st.floats(0, 1e-6), st.floats(0, 1e-6))
def test_sinr_monotone_in_interference(s, i1, di):
    eta = NoiseModel().watts
    assert sinr(s, i1 + di, eta) <= sinr(s, i1, eta)


def test_slot_metrics_aggregates():
    c = np.array([1e6, 0.0, 2e6])
    m = slot_metrics(c, [1e6, 1e6, 3e6], [0.01, 0.0, 0.005], [4, 0, 3])
    assert m.system_throughput == pytest.approx(c.sum(), rel=1e-12)
    assert m.availability == pytest.approx(1 / 3)
    np.testing.assert_array_equal(m.satisfied, [True, False, False])
    # the silent user has no efficiency to report
    assert m.mean_efficiency == pytest.approx((1e8 + 4e8) / 2)
    assert m.fairness == pytest.approx(jain_fairness(c))
