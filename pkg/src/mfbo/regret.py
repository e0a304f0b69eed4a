"""Regret accounting over policy traces.

Cumulative regret charges the full budget at the target exchange rate: a
trace with budget B and target cost c_m could have bought B / c_m target
queries, so

    R(B) = (B / c_m) f* - sum_j f(x_j)

over the target queries x_j actually made. decompose_regret splits this
into the exploration overhead (cost diverted from target queries, plus
any unspent residue, priced in f* units) and the sum of per-query
instantaneous regrets; the two sides agree to rounding error by
construction, and the check is wired into the acceptance suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .policy import Episode, Trace


def episode_regret(episode: Episode, f_star: float, target_cost: float) -> float:
    """Budget-rated regret of one episode: (cost/c_m) f* minus its reward."""
    return (episode.cost / target_cost) * f_star - episode.target_true


def cumulative_regret(trace: Trace, f_star: float) -> float:
    rewards = float(np.sum(trace.rewards()))
    return (trace.budget / trace.target_cost) * f_star - rewards


def cumulative_regret_at(trace: Trace, f_star: float, cost: float) -> float:
    """Regret against spend level `cost`, counting episodes finished by then."""
    rewards = 0.0
    acc = 0.0
    for ep in trace.episodes:
        acc += ep.cost
        if acc > cost + 1e-9:
            break
        rewards += ep.target_true
    return (cost / trace.target_cost) * f_star - rewards


def decompose_regret(trace: Trace, f_star: float) -> dict:
    """Split cumulative regret into exploration overhead and query regret.

    Returns total, the two parts, their recombination and the gap
    |total - recombined|. The residue (budget left unspent because it no
    longer covered a target query) is charged to the exploration side.
    """
    lam = trace.target_cost
    explore_total = float(sum(ep.explore_cost for ep in trace.episodes))
    residue = trace.budget - trace.spent
    overhead = (f_star / lam) * (explore_total + residue)
    query = float(sum(f_star - ep.target_true for ep in trace.episodes))
    total = cumulative_regret(trace, f_star)
    recombined = overhead + query
    return {
        "total": total,
        "exploration_overhead": overhead,
        "query_regret": query,
        "explore_cost_total": explore_total,
        "residue": residue,
        "recombined": recombined,
        "gap": abs(total - recombined),
    }


@dataclass(frozen=True)
class RegretCurve:
    """Per-episode checkpoints of some running quantity against spend."""

    kind: str
    costs: np.ndarray   # cumulative cost after each episode, increasing
    values: np.ndarray

    def __post_init__(self):
        costs = np.asarray(self.costs, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if costs.shape != values.shape or costs.ndim != 1:
            raise ValueError("costs and values must be matching 1-d arrays")
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "values", values)

    def value_at(self, cost: float) -> float:
        """Last recorded value at spend <= cost; NaN before the first point."""
        idx = np.searchsorted(self.costs, cost + 1e-9, side="right") - 1
        if idx < 0:
            return float("nan")
        return float(self.values[idx])


def simple_regret_curve(trace: Trace, f_star: float | None = None) -> RegretCurve:
    """Running best target value after each episode, as regret if f* given."""
    costs = np.cumsum([ep.cost for ep in trace.episodes])
    best = np.maximum.accumulate(trace.rewards())
    if f_star is None:
        return RegretCurve("simple_reward", costs, best)
    return RegretCurve("simple_regret", costs, f_star - best)


def cumulative_regret_curve(trace: Trace, f_star: float) -> RegretCurve:
    costs = np.cumsum([ep.cost for ep in trace.episodes])
    rewards = np.cumsum(trace.rewards())
    values = (costs / trace.target_cost) * f_star - rewards
    return RegretCurve("cumulative_regret", costs, values)


def write_curves_csv(path, runs) -> None:
    """Write (seed, policy, RegretCurve) triples as seed,policy,cost,value,kind."""
    with open(path, "w") as fh:
        fh.write("seed,policy,cost,value,kind\n")
        for seed, policy, curve in runs:
            for c, v in zip(curve.costs, curve.values):
                fh.write("%d,%s,%.12g,%.12g,%s\n" % (seed, policy, c, v, curve.kind))
