"""Finite-support return distributions and the metrics used to compare them.

Everything here works on exact atom lists.  The 1-Wasserstein distance is
the area between the two CDFs, computed by one sweep over the merged
support; the CVaR at level ``alpha`` integrates the left-continuous
generalized inverse ``inf{z : F(z) >= u}`` over (0, alpha], splitting the
atom that straddles ``alpha`` proportionally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mdp import Dataset, RewardGrid, discretize_reward

__all__ = [
    "DiscreteReturnDistribution",
    "ATOM_MERGE_TOL",
    "wasserstein",
    "total_variation",
    "cvar",
    "mean",
    "variance",
    "dkw_band",
    "empirical_return_distribution",
]

#: Support values closer than this are treated as the same atom.
ATOM_MERGE_TOL = 1e-12

_MASS_TOL = 1e-9


@dataclass(frozen=True)
class DiscreteReturnDistribution:
    """A probability distribution with finite, strictly increasing support.

    Construct with :meth:`from_weighted` when the atoms may be unsorted,
    repeated, or separated by less than ``ATOM_MERGE_TOL``: floating-point
    returns of equal grid sums must collapse to one atom.  The stored
    weights are normalized exactly to one (inputs may drift by up to
    ``1e-9``, e.g. out of an LP solution).
    """

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        support = np.asarray(self.support, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if support.ndim != 1 or support.shape != probs.shape or support.size == 0:
            raise ValueError("support and probs must be matching nonempty 1-D arrays")
        if not np.isfinite(support).all() or not np.isfinite(probs).all():
            raise ValueError("support and probs must be finite")
        if support.size > 1 and not (np.diff(support) > 0).all():
            raise ValueError("support must be strictly increasing")
        if probs.min() < -_MASS_TOL:
            raise ValueError("negative probability")
        total = probs.sum()
        if abs(total - 1.0) > _MASS_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        probs = np.clip(probs, 0.0, None) / np.clip(probs, 0.0, None).sum()
        support = support.copy()
        support.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_weighted(cls, values, weights) -> "DiscreteReturnDistribution":
        """Build a distribution from raw (value, weight) pairs.

        Values are sorted, near-duplicates merged (weight-averaged position),
        and zero-weight atoms dropped.
        """
        values = np.asarray(values, dtype=float).ravel()
        weights = np.asarray(weights, dtype=float).ravel()
        if values.size != weights.size or values.size == 0:
            raise ValueError("values and weights must be matching nonempty arrays")
        order = np.argsort(values, kind="stable")
        v, w = values[order], weights[order]
        group = np.zeros(v.size, dtype=np.int64)
        if v.size > 1:
            group[1:] = np.cumsum(np.diff(v) > ATOM_MERGE_TOL)
        n_groups = int(group[-1]) + 1
        mass = np.zeros(n_groups)
        np.add.at(mass, group, w)
        pos = np.zeros(n_groups)
        np.add.at(pos, group, v * w)
        # Zero-mass groups keep their first value so merging stays defined.
        first = np.zeros(n_groups)
        first[group[::-1]] = v[::-1]
        with np.errstate(invalid="ignore", divide="ignore"):
            merged = np.where(mass > 0, pos / np.where(mass > 0, mass, 1.0), first)
        keep = mass > 0
        return cls(merged[keep], mass[keep])

    @classmethod
    def point_mass(cls, value: float) -> "DiscreteReturnDistribution":
        return cls(np.array([float(value)]), np.array([1.0]))


def _aligned(
    p: DiscreteReturnDistribution, q: DiscreteReturnDistribution
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Common support of two distributions, grouping atoms within tolerance."""
    v = np.concatenate([p.support, q.support])
    wp = np.concatenate([p.probs, np.zeros_like(q.probs)])
    wq = np.concatenate([np.zeros_like(p.probs), q.probs])
    order = np.argsort(v, kind="stable")
    v, wp, wq = v[order], wp[order], wq[order]
    group = np.zeros(v.size, dtype=np.int64)
    if v.size > 1:
        group[1:] = np.cumsum(np.diff(v) > ATOM_MERGE_TOL)
    n = int(group[-1]) + 1
    values = np.zeros(n)
    values[group[::-1]] = v[::-1]  # representative: first value of each group
    pa = np.zeros(n)
    qa = np.zeros(n)
    np.add.at(pa, group, wp)
    np.add.at(qa, group, wq)
    return values, pa, qa


def wasserstein(p: DiscreteReturnDistribution, q: DiscreteReturnDistribution) -> float:
    """1-Wasserstein distance: the integral of |F_p - F_q|."""
    values, pa, qa = _aligned(p, q)
    if values.size == 1:
        return 0.0
    gaps = np.diff(values)
    cdf_diff = np.cumsum(pa - qa)[:-1]
    return float(np.abs(cdf_diff) @ gaps)


def total_variation(p: DiscreteReturnDistribution, q: DiscreteReturnDistribution) -> float:
    """Total variation distance: half the L1 distance over the union support."""
    _, pa, qa = _aligned(p, q)
    return float(0.5 * np.abs(pa - qa).sum())


def cvar(p: DiscreteReturnDistribution, alpha: float) -> float:
    """Average of the worst ``alpha`` fraction of outcomes.

    Equals (1/alpha) * integral of the quantile function over (0, alpha];
    the atom straddling ``alpha`` contributes proportionally to the part of
    its mass below the level.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    cum = np.cumsum(p.probs)
    below = np.minimum(cum, alpha)
    weights = np.clip(below - (cum - p.probs), 0.0, None)
    return float(weights @ p.support / alpha)


def mean(p: DiscreteReturnDistribution) -> float:
    return float(p.probs @ p.support)


def variance(p: DiscreteReturnDistribution) -> float:
    m = mean(p)
    return float(p.probs @ (p.support - m) ** 2)


def dkw_band(n: int, delta: float) -> float:
    """Uniform CDF deviation bound sqrt(ln(2/delta) / (2 n)).

    With probability at least 1 - delta the empirical CDF of n i.i.d. draws
    stays within this band of the true CDF, uniformly.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def empirical_return_distribution(
    data: Dataset, reward: np.ndarray, grid: RewardGrid | None = None
) -> DiscreteReturnDistribution:
    """Empirical distribution of trajectory returns, one atom per observed value.

    With a ``grid``, the reward is first rounded onto it and returns are
    accumulated as exact integer multiples, so equal grid sums always land
    on the same atom.  Only observed values enter the support; grid points
    never visited carry no atoms (zero entries cannot affect any metric
    computed here).
    """
    if len(data) < 1:
        raise ValueError("empty dataset")
    reward = np.asarray(reward, dtype=float)
    n, horizon = data.states.shape
    stage_idx = np.arange(horizon)[None, :]
    if grid is None:
        steps = reward[stage_idx, data.states, data.actions]
        returns = steps.sum(axis=1)
        return DiscreteReturnDistribution.from_weighted(returns, np.full(n, 1.0 / n))
    gr = discretize_reward(reward, grid)
    steps = gr.multiples[stage_idx, data.states, data.actions]
    totals = steps.sum(axis=1)
    counts = np.bincount(totals)
    observed = np.nonzero(counts)[0]
    return DiscreteReturnDistribution(observed * grid.theta, counts[observed] / n)
