"""Synthetic ZIP-SBM networks and the three benchmark scenarios."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netcore import AttributeVector, WeightedNetwork

__all__ = ["ScenarioSpec", "generate", "scenario_preset", "contaminate_attributes", "true_partition"]


def true_partition(sizes) -> np.ndarray:
    """Group 0 first, then group 1, and so on."""
    return np.repeat(np.arange(len(sizes)), sizes)


@dataclass(frozen=True)
class ScenarioSpec:
    z0: np.ndarray
    pi0: np.ndarray
    lambda0: np.ndarray
    contamination_count: int = 20
    name: str = "custom"

    def __post_init__(self):
        z0 = np.asarray(self.z0, dtype=np.int64)
        pi0 = np.asarray(self.pi0, dtype=float)
        lam0 = np.asarray(self.lambda0, dtype=float)
        H0 = int(z0.max()) + 1
        if pi0.shape != (H0, H0) or lam0.shape != (H0, H0):
            raise ValueError(f"block matrices must be {H0}x{H0}")
        if not (np.allclose(pi0, pi0.T) and np.allclose(lam0, lam0.T)):
            raise ValueError("block matrices must be symmetric")
        if np.any((pi0 < 0) | (pi0 > 1)) or np.any(lam0 < 0):
            raise ValueError("need pi in [0, 1] and lambda >= 0")
        object.__setattr__(self, "z0", z0)
        object.__setattr__(self, "pi0", pi0)
        object.__setattr__(self, "lambda0", lam0)

    @property
    def V(self) -> int:
        return self.z0.size

    @property
    def H0(self) -> int:
        return self.pi0.shape[0]

    def to_dict(self) -> dict:
        return {"name": self.name, "z0": (self.z0 + 1).tolist(), "pi0": self.pi0.tolist(),
                "lambda0": self.lambda0.tolist(), "contamination_count": self.contamination_count}

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        return cls(np.asarray(d["z0"]) - 1, d["pi0"], d["lambda0"],
                   d.get("contamination_count", 20), d.get("name", "custom"))


def generate(spec: ScenarioSpec, seed) -> tuple[WeightedNetwork, np.ndarray, np.ndarray]:
    """Draw w ~ Poisson(lambda), x ~ Bern(pi) per pair and set y = w (1 - x)."""
    rng = np.random.default_rng(seed)
    V = spec.V
    v_idx, u_idx = np.tril_indices(V, -1)
    hv, hu = spec.z0[v_idx], spec.z0[u_idx]
    x = (rng.random(v_idx.size) < spec.pi0[hv, hu]).astype(np.int64)
    w = rng.poisson(spec.lambda0[hv, hu]).astype(np.int64)
    y = w * (1 - x)
    X = np.zeros((V, V), dtype=np.int64)
    W = np.zeros((V, V), dtype=np.int64)
    Y = np.zeros((V, V), dtype=np.int64)
    for M, vals in ((X, x), (W, w), (Y, y)):
        M[v_idx, u_idx] = vals
        M[u_idx, v_idx] = vals
    return WeightedNetwork(Y), X, W


def _scenario1_blocks(H: int):
    lam = np.full((H, H), 0.1)
    np.fill_diagonal(lam, 3.0)
    pi = np.full((H, H), 0.15)
    np.fill_diagonal(pi, 0.05)
    return pi, lam


def _scenario2_blocks():
    pi = np.full((5, 5), 0.3)
    for h, k in [(2, 1), (3, 1), (4, 1), (5, 1), (4, 3), (5, 3)]:
        pi[h - 1, k - 1] = pi[k - 1, h - 1] = 0.6
    for h in (1, 2, 3):
        pi[h - 1, h - 1] = 0.0
    lam = np.full((5, 5), 0.5)
    np.fill_diagonal(lam, 4.0)
    for h, k in [(3, 2), (4, 2), (5, 4)]:
        lam[h - 1, k - 1] = lam[k - 1, h - 1] = 2.0
    lam[4, 1] = lam[1, 4] = 6.0
    return pi, lam


def scenario_preset(scenario: int) -> ScenarioSpec:
    if scenario == 1:
        pi, lam = _scenario1_blocks(5)
        return ScenarioSpec(true_partition([20, 25, 15, 15, 5]), pi, lam, 20, "scenario-1")
    if scenario == 2:
        pi, lam = _scenario2_blocks()
        return ScenarioSpec(true_partition([20, 25, 15, 15, 5]), pi, lam, 20, "scenario-2")
    if scenario == 3:
        pi = np.zeros((10, 10))
        lam = np.zeros((10, 10))
        pi[:5, :5], lam[:5, :5] = _scenario2_blocks()
        pi2, lam2 = _scenario1_blocks(5)
        pi2[1, 0] = pi2[0, 1] = 0.05
        lam2[1, 0] = lam2[0, 1] = 2.0
        lam2[0, 0] = lam2[1, 1] = 4.0
        pi[5:, 5:], lam[5:, 5:] = pi2, lam2
        # rows 6..10 against columns 1..5, mirrored to the upper-right block
        cross_pi = np.full((5, 5), 0.5)
        cross_lam = np.full((5, 5), 0.2)
        for h, k in [(10, 1), (8, 1), (9, 3)]:
            cross_pi[h - 6, k - 1] = 0.6
            cross_lam[h - 6, k - 1] = 5.0
        pi[5:, :5], lam[5:, :5] = cross_pi, cross_lam
        pi[:5, 5:], lam[:5, 5:] = cross_pi.T, cross_lam.T
        return ScenarioSpec(true_partition([20, 15, 10, 10, 5, 20, 15, 10, 10, 5]), pi, lam, 20, "scenario-3")
    raise ValueError(f"unknown scenario {scenario!r}; choose 1, 2 or 3")


def contaminate_attributes(z0, k: int, seed, num_classes: int | None = None) -> AttributeVector:
    """Copy of ``z0`` with ``k`` random nodes moved to a different class, chosen uniformly."""
    z0 = np.asarray(z0, dtype=np.int64)
    C = int(z0.max()) + 1 if num_classes is None else num_classes
    if not 0 <= k <= z0.size:
        raise ValueError(f"cannot contaminate {k} of {z0.size} nodes")
    if k and C < 2:
        raise ValueError("contamination needs at least two classes")
    rng = np.random.default_rng(seed)
    c = z0.copy()
    nodes = rng.choice(z0.size, size=k, replace=False)
    for v in nodes:
        shift = rng.integers(1, C)
        c[v] = (z0[v] + shift) % C
    return AttributeVector(c, np.ones(C))
