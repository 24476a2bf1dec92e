"""Zero-inflated Poisson kernels and Beta/Gamma-conjugate block marginals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln

__all__ = [
    "ZipHyper",
    "BlockStats",
    "BlockParams",
    "zip_log_pmf",
    "collapsed_log_ml_x",
    "collapsed_log_ml_w",
    "log_factorial_sum",
    "predictive_x",
    "predictive_w_log",
    "block_stats",
    "sample_block_params",
]


@dataclass(frozen=True)
class ZipHyper:
    """Beta(a, b) prior on zero inflation, Gamma(a1, a2) (shape, rate) on rates."""

    a: float = 1.0
    b: float = 9.0
    a1: float = 1.0
    a2: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "a1", "a2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"hyperparameter {name} must be positive")


@dataclass
class BlockStats:
    """Symmetric H x H tallies: pair counts n, latent indicator sums x, latent count sums w."""

    n: np.ndarray
    x: np.ndarray
    w: np.ndarray

    @property
    def num_groups(self) -> int:
        return self.n.shape[0]

    def lower(self):
        """(n, x, w) over blocks h >= k, row-major lower-triangular order."""
        idx = np.tril_indices(self.num_groups)
        return self.n[idx], self.x[idx], self.w[idx]

    @classmethod
    def single(cls, n, x=0, w=0) -> "BlockStats":
        return cls(np.array([[n]]), np.array([[x]]), np.array([[w]]))


@dataclass
class BlockParams:
    pi_bar: np.ndarray
    lambda_bar: np.ndarray

    @property
    def num_groups(self) -> int:
        return self.pi_bar.shape[0]

    def lower(self):
        idx = np.tril_indices(self.num_groups)
        return self.pi_bar[idx], self.lambda_bar[idx]

    @classmethod
    def from_lower(cls, pi_lower, lambda_lower) -> "BlockParams":
        m = len(pi_lower)
        num_groups = int(round((np.sqrt(8 * m + 1) - 1) / 2))
        idx = np.tril_indices(num_groups)
        pi = np.zeros((num_groups, num_groups))
        lam = np.zeros((num_groups, num_groups))
        pi[idx] = pi_lower
        lam[idx] = lambda_lower
        return cls(pi + np.tril(pi, -1).T, lam + np.tril(lam, -1).T)


def zip_log_pmf(y, pi, lam):
    """log[pi 1(y=0) + (1-pi) Poisson(y; lam)]."""
    y = np.asarray(y)
    with np.errstate(divide="ignore"):
        log_pois = y * np.log(lam) - lam - gammaln(y + 1.0)
        log_keep = np.log1p(-np.asarray(pi, dtype=float)) + log_pois
        out = np.where(y == 0, np.logaddexp(np.log(pi), log_keep), log_keep)
    return float(out) if out.ndim == 0 else out


def collapsed_log_ml_x(stats: BlockStats, hyper: ZipHyper) -> float:
    """log p(X | z) with the zero-inflation probabilities integrated out."""
    n, x, _ = stats.lower()
    return float(np.sum(betaln(hyper.a + x, hyper.b + n - x) - betaln(hyper.a, hyper.b)))


def collapsed_log_ml_w(stats: BlockStats, hyper: ZipHyper, log_w_factorials: float = 0.0) -> float:
    """log p(W | z) with the rates integrated out.

    ``log_w_factorials`` is sum log(w_vu!) over the strict lower triangle
    (see ``log_factorial_sum``); it does not depend on z.
    """
    n, _, w = stats.lower()
    a1, a2 = hyper.a1, hyper.a2
    per_block = a1 * np.log(a2) + gammaln(a1 + w) - (a1 + w) * np.log(a2 + n) - gammaln(a1)
    return float(np.sum(per_block) - log_w_factorials)


def log_factorial_sum(W) -> float:
    W = np.asarray(W)
    return float(np.sum(gammaln(W[np.tril_indices(W.shape[0], -1)] + 1.0)))


def predictive_x(x_rest, n_rest, hyper: ZipHyper) -> float:
    """pr(x_vu = 1 | rest of the block)."""
    return (hyper.a + x_rest) / (hyper.a + hyper.b + n_rest)


def predictive_w_log(w, w_rest, n_rest, hyper: ZipHyper) -> float:
    """log pr(w_vu = w | rest of the block): negative binomial with size
    a1 + w_rest and success probability (a2 + n_rest) / (a2 + n_rest + 1)."""
    shape = hyper.a1 + w_rest
    rate = hyper.a2 + n_rest
    return float(
        gammaln(shape + w) - gammaln(shape) - gammaln(w + 1.0)
        + shape * np.log(rate) - (shape + w) * np.log(rate + 1.0)
    )


def block_stats(z, X, W, num_groups: int | None = None) -> BlockStats:
    z = np.asarray(z, dtype=np.int64)
    X = np.asarray(X)
    W = np.asarray(W)
    V = z.size
    if X.shape != (V, V) or W.shape != (V, V):
        raise ValueError(f"X and W must be {V}x{V}")
    H = int(z.max()) + 1 if num_groups is None else num_groups
    v_idx, u_idx = np.tril_indices(V, -1)
    hv, hu = z[v_idx], z[u_idx]
    n = np.zeros((H, H), dtype=np.int64)
    x = np.zeros((H, H), dtype=np.int64)
    w = np.zeros((H, H), dtype=np.int64)
    for arr, vals in ((n, 1), (x, X[v_idx, u_idx]), (w, W[v_idx, u_idx])):
        np.add.at(arr, (hv, hu), vals)
        # fold into a symmetric matrix: off-diagonal tallies landed on one side
        tri = arr.copy()
        arr[...] = tri + tri.T - np.diag(np.diag(tri))
    return BlockStats(n, x, w)


def sample_block_params(stats: BlockStats, hyper: ZipHyper, rng: np.random.Generator) -> BlockParams:
    """One conjugate draw per block h >= k: Beta(a + x, b + n - x), Gamma(a1 + w, rate a2 + n)."""
    n, x, w = stats.lower()
    pi = rng.beta(hyper.a + x, hyper.b + n - x)
    lam = rng.gamma(hyper.a1 + w, 1.0 / (hyper.a2 + n))
    return BlockParams.from_lower(pi, lam)
