"""Posterior summaries in partition space.

Variation of information (base 2), normalized mutual information, the
posterior similarity matrix, the minimum expected-VI point estimate and
the VI credible ball.  Partitions are integer label vectors; labels only
matter up to relabeling.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "canonical",
    "enumerate_partitions",
    "entropy",
    "vi_distance",
    "nmi",
    "similarity_matrix",
    "expected_vi_lower_bound",
    "expected_vi_exact",
    "minvi_point_estimate",
    "credible_ball",
    "PartitionEstimate",
    "estimate_partition",
]


def canonical(z) -> np.ndarray:
    """Relabel to 0..H-1 in order of first appearance."""
    z = np.asarray(z)
    _, first, inverse = np.unique(z, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inverse.ravel()]


def enumerate_partitions(n: int) -> np.ndarray:
    """All set partitions of n items as canonical label vectors (Bell(n) rows)."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    out = []

    def grow(prefix, top):
        if len(prefix) == n:
            out.append(list(prefix))
            return
        for label in range(top + 2):
            prefix.append(label)
            grow(prefix, max(top, label))
            prefix.pop()

    grow([0], 0)
    return np.array(out, dtype=np.int64)


def _contingency(z1, z2) -> np.ndarray:
    a = canonical(z1)
    b = canonical(z2)
    table = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(table, (a, b), 1.0)
    return table


def _h(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log2(p)))


def entropy(z) -> float:
    z = np.asarray(z)
    return _h(np.bincount(canonical(z)), z.size)


def _entropies(z1, z2):
    z1, z2 = np.asarray(z1), np.asarray(z2)
    if z1.shape != z2.shape or z1.ndim != 1:
        raise ValueError(f"partitions must have equal length, got {z1.shape} and {z2.shape}")
    n = z1.size
    table = _contingency(z1, z2)
    h1 = _h(table.sum(axis=1), n)
    h2 = _h(table.sum(axis=0), n)
    h12 = _h(table.ravel(), n)
    return h1, h2, h12


def vi_distance(z1, z2) -> float:
    """VI = H(z1) + H(z2) - 2 I(z1, z2), in bits."""
    h1, h2, h12 = _entropies(z1, z2)
    return max(2.0 * h12 - h1 - h2, 0.0)


def nmi(z1, z2) -> float:
    """Mutual information over the arithmetic mean of the two entropies."""
    h1, h2, h12 = _entropies(z1, z2)
    if h1 + h2 == 0.0:
        return 1.0
    mutual = h1 + h2 - h12
    return float(np.clip(2.0 * mutual / (h1 + h2), 0.0, 1.0))


def similarity_matrix(partitions) -> np.ndarray:
    """s_vu = fraction of draws with z_v == z_u."""
    parts = np.atleast_2d(np.asarray(partitions))
    if parts.shape[0] == 0 or parts.size == 0:
        raise ValueError("similarity matrix needs at least one stored draw")
    num_nodes = parts.shape[1]
    S = np.zeros((num_nodes, num_nodes))
    for z in parts:
        S += z[:, None] == z[None, :]
    return S / parts.shape[0]


def expected_vi_lower_bound(candidates, S) -> np.ndarray:
    """Jensen lower bound on E[VI(z, candidate)] computed from S alone.

    For each node i: log2 |c_i| + log2 sum_j s_ij - 2 log2 sum_{j in c_i} s_ij,
    averaged over nodes.
    """
    cands = np.atleast_2d(np.asarray(candidates))
    S = np.asarray(S)
    log_row = np.log2(S.sum(axis=1))
    out = np.empty(cands.shape[0])
    for i, z in enumerate(cands):
        same = z[:, None] == z[None, :]
        size = same.sum(axis=1)
        overlap = (S * same).sum(axis=1)
        out[i] = np.mean(np.log2(size) + log_row - 2.0 * np.log2(overlap))
    return out


def expected_vi_exact(candidate, partitions) -> float:
    """Empirical mean of VI(candidate, z_t) over the stored draws."""
    return float(np.mean([vi_distance(candidate, z) for z in partitions]))


def _unique_draws(parts: np.ndarray):
    canon = np.array([canonical(z) for z in parts])
    uniq, first, inverse = np.unique(canon, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    return uniq[order], first[order], remap[inverse.ravel()]


def _greedy_refine(z: np.ndarray, S: np.ndarray, score: float):
    z = z.copy()
    improved = True
    while improved:
        improved = False
        for v in range(z.size):
            best_label, best = z[v], score
            for label in range(z.max() + 2):
                if label == z[v]:
                    continue
                trial = z.copy()
                trial[v] = label
                value = expected_vi_lower_bound(trial, S)[0]
                if value < best - 1e-12:
                    best_label, best = label, value
            if best_label != z[v]:
                z[v] = best_label
                z = canonical(z)
                score = best
                improved = True
    return z, score


def minvi_point_estimate(partitions, S=None, refine: bool = False):
    """argmin of the expected-VI lower bound over the stored draws.

    Returns ``(z_hat, expected_vi, draw_index)``; ties go to the earliest
    draw.  ``refine`` runs a greedy single-node-move search from the best
    draw (``draw_index`` is then -1 if the search moved away from it).
    """
    parts = np.atleast_2d(np.asarray(partitions))
    if S is None:
        S = similarity_matrix(parts)
    uniq, first, _ = _unique_draws(parts)
    scores = expected_vi_lower_bound(uniq, S)
    best = int(np.flatnonzero(scores <= scores.min() + 1e-12)[0])
    z_hat, value, index = uniq[best], float(scores[best]), int(first[best])
    if refine:
        refined, refined_value = _greedy_refine(z_hat, S, value)
        if refined_value < value - 1e-12:
            z_hat, value, index = refined, refined_value, -1
    return canonical(z_hat), max(value, 0.0), index


def credible_ball(partitions, z_hat, alpha: float = 0.05):
    """Smallest VI ball around ``z_hat`` holding >= 1 - alpha of the draws.

    Returns ``(radius, mass, z_bound, bound_index)`` where ``z_bound`` is the
    earliest stored draw at the maximal distance inside the ball.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    parts = np.atleast_2d(np.asarray(partitions))
    uniq, first, inverse = _unique_draws(parts)
    dist_uniq = np.array([vi_distance(z_hat, z) for z in uniq])
    dist = dist_uniq[inverse]
    levels = np.unique(np.round(dist, 12))
    frac = np.array([np.mean(dist <= lev + 1e-12) for lev in levels])
    k = int(np.argmax(frac >= 1.0 - alpha - 1e-12))
    radius = float(levels[k])
    mass = float(frac[k])
    at_radius = np.flatnonzero(np.abs(dist - radius) <= 1e-12)
    bound_index = int(at_radius.min())
    return radius, mass, canonical(parts[bound_index]), bound_index


@dataclass
class PartitionEstimate:
    z_hat: np.ndarray
    H_hat: int
    expected_vi: float
    ball_radius: float
    ball_mass: float
    z_bound: np.ndarray
    alpha: float
    draw_index: int
    bound_index: int

    def to_dict(self) -> dict:
        return {
            "z_hat": (self.z_hat + 1).tolist(),
            "H_hat": self.H_hat,
            "expected_vi": self.expected_vi,
            "alpha": self.alpha,
            "ball_radius": self.ball_radius,
            "ball_mass": self.ball_mass,
            "z_bound": (self.z_bound + 1).tolist(),
            "draw_index": self.draw_index,
            "bound_index": self.bound_index,
        }


def estimate_partition(partitions, alpha: float = 0.05, refine: bool = False):
    """Point estimate plus credible ball; returns ``(estimate, S)``."""
    parts = np.atleast_2d(np.asarray(partitions))
    if parts.shape[0] == 0:
        raise ValueError("empty trace")
    S = similarity_matrix(parts)
    z_hat, value, index = minvi_point_estimate(parts, S, refine=refine)
    radius, mass, z_bound, bound_index = credible_ball(parts, z_hat, alpha)
    est = PartitionEstimate(
        z_hat=z_hat,
        H_hat=int(z_hat.max()) + 1,
        expected_vi=value,
        ball_radius=radius,
        ball_mass=mass,
        z_bound=z_bound,
        alpha=alpha,
        draw_index=index,
        bound_index=bound_index,
    )
    return est, S
