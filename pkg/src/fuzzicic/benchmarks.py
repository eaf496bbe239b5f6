"""Reference policies: maximum power everywhere, and random almost-blank subframes.

Both place RBs with the PFS scheduler fed uniform random scores, which keeps
the allocation frequency-diverse without looking at the channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .icic import Allocation, CellAgent, schedule_cell


@dataclass(frozen=True)
class AbsConfig:
    blank_prob: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.blank_prob <= 1.0:
            raise ValueError("blank probability must lie in [0, 1]")


def abs_gate(rng: np.random.Generator, blank_prob: float, size=None):
    """True where the user blanks this slot (independent Bernoulli draws)."""
    if not 0.0 <= blank_prob <= 1.0:
        raise ValueError("blank probability must lie in [0, 1]")
    return rng.random(size) < blank_prob


def max_power_allocate(scores, n_rb, p_max_w: float, mcs, achieved, desired) -> list[Allocation]:
    """PFS placement of each MS's RBs, every one at P_max / n_RB."""
    sets = schedule_cell(scores, n_rb, "pfs", achieved=achieved, desired=desired)
    out = []
    for u, rbs in enumerate(sets):
        watts = np.full(len(rbs), p_max_w / int(n_rb[u]))
        out.append(Allocation(rbs, watts, np.ones(len(rbs), bool), int(mcs[u])))
    return out


@dataclass
class MaxPowerAgent(CellAgent):
    def decide(self, rng: np.random.Generator) -> list[Allocation]:
        scores = rng.random((self.n_ms, self.params.n_rb))
        return max_power_allocate(scores, self.n_rb, self.params.p_max_w, self.mcs,
                                  self.achieved, self.rate)


@dataclass
class AbsAgent(MaxPowerAgent):
    blank_prob: float = 0.1

    def decide(self, rng: np.random.Generator) -> list[Allocation]:
        out = super().decide(rng)
        blank = abs_gate(rng, self.blank_prob, self.n_ms)
        for a, b in zip(out, blank):
            if b:
                a.power_w = np.zeros_like(a.power_w)
                a.blank = True
        return out
