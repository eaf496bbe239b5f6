import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzicic.channel import (ChannelRealization, LinkGain, PathLossParams, ShadowingMap,
                              compose_gain, distance, exponential_pdp, fading_per_rb, path_loss,
                              realize_channel, shadowing_maps)


@pytest.mark.parametrize("d, expected", [(1, 97.0), (10, 127.0), (100, 157.0)])
def test_path_loss_examples(d, expected):
    assert path_loss(d) == pytest.approx(expected)


def test_path_loss_domain():
    with pytest.raises(ValueError):
        path_loss(0.0)
    with pytest.raises(ValueError):
        PathLossParams(97, 0)


@given(st.floats(0.01, 1e3), st.floats(0.01, 1e3))
def test_path_loss_increasing(a, b):
    if a < b:
        assert path_loss(a) < path_loss(b)


def test_minimum_distance():
    d = distance([[0.0, 0.0]], [[0.0, 0.0], [3.0, 4.0]])
    np.testing.assert_allclose(d, [[0.1, 5.0]])


def test_gain_composition():
    assert LinkGain(127.0, 0.0, 1.0).gain == pytest.approx(10 ** -12.7, rel=1e-12)
    assert LinkGain(127.0, 0.0, 2.0).gain == pytest.approx(2 * 10 ** -12.7, rel=1e-12)
    assert LinkGain(127.0, 10.0, 1.0).gain == pytest.approx(10 ** -11.7, rel=1e-12)


def test_realization_recomposes_exactly():
    rng = np.random.default_rng(1)
    ch = realize_channel(rng, rng.uniform(0, 20, (3, 2)), rng.uniform(0, 20, (4, 2)), 8, (20, 20))
    assert ch.gain.shape == (3, 4, 8)
    for j, u, m in [(0, 0, 0), (2, 3, 7), (1, 2, 4)]:
        link = ch.link(j, u, m)
        assert link.gain == pytest.approx(ch.gain[j, u, m], rel=1e-12)
    np.testing.assert_allclose(ch.gain, ch.large_scale[..., None] * ch.fading, rtol=1e-12)
    assert np.all(ch.gain > 0)


def test_realization_csv(tmp_path):
    rng = np.random.default_rng(2)
    ch = realize_channel(rng, [[1.0, 1.0]], [[5.0, 5.0]], 3, (10, 10))
    path = tmp_path / "gains.csv"
    ch.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "tx_id,rx_id,rb,pathloss_db,shadow_db,fading_pow,gain_lin"
    assert len(lines) == 4
    assert float(lines[1].split(",")[-1]) == ch.gain[0, 0, 0]


def test_shadowing_sample_deterministic_and_clamped():
    m = shadowing_maps(np.random.default_rng(3), 1, (10, 10))[0]
    assert m.sample((3.3, 4.4)) == m.sample((3.3, 4.4))
    assert m.sample((-5.0, 0.0)) == m.sample((0.0, 0.0))
    assert m.sample((0.0, 0.0)) == m.values[0, 0]
    assert m.sample((2.0, 1.0)) == m.values[1, 2]


def test_shadowing_bilinear():
    m = ShadowingMap(np.array([[0.0, 1.0], [2.0, 3.0]]), 1.0, 1.0, 50.0)
    assert m.sample((0.5, 0.5)) == pytest.approx(1.5)
    assert m.sample((1.0, 0.25)) == pytest.approx(1.5)


def test_shadowing_marginal_and_correlation():
    # 100-map ensemble on a 60 m strip: marginal std and correlation at 50 m
    rng = np.random.default_rng(4)
    maps = shadowing_maps(rng, 400, (60, 0), sigma=10.0, decorrelation=50.0)
    v = np.stack([m.values[0] for m in maps])       # (400, 61)
    assert abs(v.std() - 10.0) < 1.0
    a, b = v[:, 0], v[:, 50]
    rho = np.corrcoef(a, b)[0, 1]
    assert abs(rho - math.exp(-1)) < 0.1
    near = np.corrcoef(v[:, 10], v[:, 11])[0, 1]
    assert near > rho


def test_exponential_pdp_rms():
    delays, powers = exponential_pdp(6, 50e-9)
    assert powers.sum() == pytest.approx(1.0)
    mean = powers @ delays
    assert math.sqrt(powers @ delays**2 - mean**2) == pytest.approx(50e-9, rel=1e-6)
    d1, p1 = exponential_pdp(1, 50e-9)
    assert p1.tolist() == [1.0]
    with pytest.raises(ValueError):
        exponential_pdp(0, 1e-9)


def test_single_tap_is_flat():
    h = fading_per_rb(np.random.default_rng(5), 12, n_taps=1, size=(10,))
    np.testing.assert_allclose(h, h[:, :1].repeat(12, axis=1), rtol=1e-12)


def test_fading_unit_mean_and_frequency_correlation():
    h = fading_per_rb(np.random.default_rng(6), 50, size=(10_000,))
    assert abs(h.mean(axis=0) - 1.0).max() < 0.05
    adj = np.corrcoef(h[:, 10], h[:, 11])[0, 1]
    far = np.corrcoef(h[:, 10], h[:, 40])[0, 1]
    assert adj > far


def test_compose_gain_linear_in_fading():
    np.testing.assert_allclose(compose_gain(100.0, 0.0, np.array([1.0, 2.0])), [1e-10, 2e-10])


def test_realization_is_seeded():
    args = ([[1.0, 2.0], [15.0, 3.0]], [[4.0, 4.0]], 5, (20, 10))
    a = realize_channel(np.random.default_rng(7), *args)
    b = realize_channel(np.random.default_rng(7), *args)
    np.testing.assert_array_equal(a.gain, b.gain)
    assert isinstance(a, ChannelRealization)
