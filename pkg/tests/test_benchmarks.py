import numpy as np
import pytest

from fuzzicic.benchmarks import AbsAgent, AbsConfig, MaxPowerAgent, abs_gate, max_power_allocate
from fuzzicic.config import SystemParams
from fuzzicic.icic import CellObservations
from fuzzicic.link_metrics import w_to_dbm
from fuzzicic.scenario import UserDemand


def test_max_power_examples():
    out = max_power_allocate(np.random.default_rng(0).random((1, 10)), [5], 0.01, [7], [0.0], [1e6])
    np.testing.assert_allclose(out[0].power_w, 0.002)
    assert out[0].full_power.all() and len(out[0].rbs) == 5
    one = max_power_allocate(np.zeros((1, 4)), [1], 0.01, [7], [0.0], [1e6])
    assert float(w_to_dbm(one[0].power_w[0])) == pytest.approx(10.0)


def test_abs_gate_extremes_and_rate():
    rng = np.random.default_rng(1)
    assert not abs_gate(rng, 0.0, 1000).any()
    assert abs_gate(rng, 1.0, 1000).all()
    assert abs(abs_gate(np.random.default_rng(2), 0.1, 10_000).mean() - 0.1) < 0.01
    with pytest.raises(ValueError):
        abs_gate(rng, 1.5, 3)
    with pytest.raises(ValueError):
        AbsConfig(-0.1)


def _agent(cls, **kw):
    p = SystemParams(n_rb=8)
    dem = [UserDemand(1e6, 7, 3), UserDemand(1e6, 9, 2)]
    obs = CellObservations.initial([1e-9, 1e-9], np.ones((2, 8)), [5.0, 9.0])
    return cls(cell=0, demands=dem, obs=obs, params=p, **kw)


def test_max_power_agent():
    a = _agent(MaxPowerAgent)
    out = a.decide(np.random.default_rng(3))
    used = np.concatenate([x.rbs for x in out])
    assert len(set(used.tolist())) == 5
    for x, n in zip(out, (3, 2)):
        np.testing.assert_allclose(x.power_w, a.params.p_max_w / n)
        assert not x.blank


def test_abs_agent_blanks_whole_subframe():
    a = _agent(AbsAgent, blank_prob=1.0)
    for x in a.decide(np.random.default_rng(4)):
        assert x.blank and not x.power_w.any()
    b = _agent(AbsAgent, blank_prob=0.0)
    assert not any(x.blank for x in b.decide(np.random.default_rng(4)))
