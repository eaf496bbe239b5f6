import itertools
import math

import numpy as np
import pytest

from fuzzicic.config import SystemParams
from fuzzicic.harness import run_instance
from fuzzicic.icic import CellObservations, ComplexityCounters, FuzzyAgent
from fuzzicic.link_metrics import default_mcs_table
from fuzzicic.optimality import (ENUM_BUDGET, BudgetExceeded, GreedySinrAgent, OptInstance,
                                 count_complexity, enumeration_nodes, evaluate, exhaustive_optimum,
                                 greedy_sinr_allocate, make_instance)
from fuzzicic.scenario import UserDemand


def toy(gain, n_rb, mcs, ls=None):
    gain = np.asarray(gain, float)
    J, _, M = gain.shape
    params = SystemParams(n_rb=M)
    if ls is None:
        ls = gain.mean(axis=2)
    return OptInstance(gain, np.asarray(ls, float), np.asarray(n_rb), np.asarray(mcs), params)


def test_single_cell_picks_best_gains():
    params = SystemParams(n_rb=4)
    # per-RB SNR at Max power (P_max/2 per RB) relative to the MCS-15 target of 20 dB
    snr_db = np.array([15.0, 26.0, 18.0, 22.0])
    g = 10 ** ((snr_db + 10 * np.log10(params.noise.watts / (params.p_max_w / 2))) / 10)
    inst = toy(g[None, None, :], [2], [15])
    res = exhaustive_optimum(inst)
    assert sorted(res.rbs[0]) == [1, 3]
    # ties prefer Half: RB 1 keeps 23 dB at Half, RB 3 needs Max
    assert res.levels == ((0.5, 1.0),)
    assert res.c_sys == pytest.approx(2 * inst.rb_rate[0])


def test_two_overlapping_cells_orthogonal_split_is_optimal():
    M = 4
    g = np.full((2, 2, M), 1e-9)          # symmetric, strong coupling
    inst = toy(g, [2, 2], [10, 10])
    res = exhaustive_optimum(inst)
    # brute-force all 36 joint subsets at Max power
    subsets = list(itertools.combinations(range(M), 2))
    assert len(subsets) ** 2 == 36
    vals = {}
    for a, b in itertools.product(subsets, subsets):
        vals[(a, b)] = evaluate(inst, (a, b), ((1.0, 1.0), (1.0, 1.0))).sum()
    best = max(vals.values())
    orth = [k for k, v in vals.items() if v == best and not set(k[0]) & set(k[1])]
    assert orth, "an orthogonal split must be among the maximizers"
    assert res.c_sys >= best - 1e-9
    assert not set(res.rbs[0]) & set(res.rbs[1])


def test_literal_and_decomposed_agree():
    for seed in range(4):
        inst = make_instance(np.random.default_rng(seed), n_cells=2, n_rbs=5, max_rbs=2)
        lit = exhaustive_optimum(inst, literal=True)
        dec = exhaustive_optimum(inst)
        assert lit.c_sys == pytest.approx(dec.c_sys, rel=1e-12)
        assert lit.rbs == dec.rbs and lit.levels == dec.levels
        assert lit.nodes == inst.enumeration_size()
        assert evaluate(inst, dec.rbs, dec.levels).sum() == pytest.approx(dec.c_sys)


def test_budget_refusal():
    g = np.full((3, 3, 8), 1e-9)
    inst = toy(g, [4, 4, 4], [5, 5, 5])
    with pytest.raises(BudgetExceeded) as err:
        exhaustive_optimum(inst)
    assert err.value.required == 70 ** 3 * 2 ** 12
    assert err.value.budget == ENUM_BUDGET


def test_enumeration_node_examples():
    assert enumeration_nodes(8, [4]) == math.comb(8, 4) * 2 ** 4 == 1120
    rng = np.random.default_rng(0)
    for _ in range(10):
        M = int(rng.integers(4, 9))
        n = rng.integers(1, 4, size=int(rng.integers(1, 4)))
        assert enumeration_nodes(M, n) == math.prod(math.comb(M, int(k)) for k in n) * 2 ** int(n.sum())


def test_relabeling_invariance():
    inst = make_instance(np.random.default_rng(5))
    perm = np.random.default_rng(6).permutation(inst.n_rbs)
    other = OptInstance(inst.gain[:, :, perm], inst.large_scale, inst.n_rb, inst.mcs, inst.params)
    assert exhaustive_optimum(other).c_sys == pytest.approx(exhaustive_optimum(inst).c_sys)


def test_complexity_examples():
    c = count_complexity(10, 50)
    assert c.fuzzy_evals == 2000 and c.heuristic_evals == 1000
    assert count_complexity(10, 50, 25).fuzzy_evals == 50_000
    counters = ComplexityCounters()
    inst = make_instance(np.random.default_rng(1))
    exhaustive_optimum(inst, counters=counters)
    assert counters.enum_nodes == inst.enumeration_size()


def test_greedy_examples():
    noise = SystemParams().noise.watts
    g = np.array([1.0, 3.0, 2.0, 0.5])
    a = greedy_sinr_allocate(1e-9, g, np.full(4, 1e-13), 2, 0.01, noise)
    assert a.rbs.tolist() == [1, 2] and a.full_power.all()
    b = greedy_sinr_allocate(1e-9, np.ones(4), [1e-12, 1e-12, 0.0, 1e-12], 1, 0.01, noise)
    assert b.rbs.tolist() == [2]
    c = greedy_sinr_allocate(1e-9, np.ones(4), [1e-12, np.nan, 1e-12, 1e-12], 1, 0.01, noise)
    assert c.rbs.tolist() == [1]          # never-observed counts as zero interference


def test_fuzzy_and_greedy_agree_on_flat_toy():
    p = SystemParams(n_rb=6)
    interf = np.array([[2e-13, 5e-15, 3e-13, 1e-15, 4e-13, 8e-14]])
    obs = CellObservations(interf, np.ones((1, 6)), np.array([1e-10]), np.array([10.0]),
                           np.array([5.0]))
    dem = [UserDemand(3e5, 7, 2)]
    f = FuzzyAgent(cell=0, demands=dem, obs=obs, params=p).decide(np.random.default_rng(0))[0]
    g = GreedySinrAgent(cell=0, demands=dem, obs=obs, params=p).decide(np.random.default_rng(0))[0]
    assert sorted(f.rbs.tolist()) == sorted(g.rbs.tolist()) == [1, 3]


def test_greedy_counters():
    p = SystemParams(n_rb=6)
    obs = CellObservations.initial([1e-10, 1e-10], np.ones((2, 6)), [5.0, 5.0])
    agent = GreedySinrAgent(cell=0, demands=[UserDemand(1e5, 7, 1)] * 2, obs=obs, params=p)
    agent.decide(np.random.default_rng(0))
    assert agent.counters.heuristic_evals == 2 * 2 * 6


def test_optimum_dominates_policies():
    for seed in range(5):
        inst = make_instance(np.random.default_rng(seed))
        opt = exhaustive_optimum(inst).c_sys
        for policy in ("fuzzy", "greedy"):
            m = run_instance(inst, policy, seed, slots=10)
            assert m[-1].system_throughput <= opt + 1e-6


def test_make_instance_bounds():
    for seed in range(20):
        inst = make_instance(np.random.default_rng(seed))
        assert inst.n_cells == 3 and inst.n_rbs == 8
        assert (1 <= inst.n_rb).all() and (inst.n_rb <= 4).all()
        assert (1 <= inst.mcs).all() and (inst.mcs <= 15).all()
        assert inst.enumeration_size() <= ENUM_BUDGET
        np.testing.assert_allclose(inst.rates, inst.n_rb * 180e3 * default_mcs_table().efficiency[inst.mcs])
    with pytest.raises(ValueError):
        make_instance(np.random.default_rng(0), n_cells=5)
