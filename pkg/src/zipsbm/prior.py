"""Gnedin process partition prior, with optional attribute supervision.

Node allocations are 0-based group labels.  The urn weights below are the
full conditionals used by the Gibbs sampler; ``log_partition_prior`` gives
the joint mass of a whole allocation vector.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .netcore import AttributeVector
from .partition import canonical, enumerate_partitions

__all__ = [
    "HyperError",
    "LabelError",
    "GnedinHyper",
    "UrnWeights",
    "num_groups_log_pmf",
    "urn_weights",
    "log_partition_prior",
    "sequential_urn_log_prior",
]


class HyperError(ValueError):
    pass


class LabelError(ValueError):
    pass


@dataclass(frozen=True)
class GnedinHyper:
    gamma: float = 0.3

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise HyperError(f"gamma must lie in (0, 1), got {self.gamma}")


@dataclass(frozen=True)
class UrnWeights:
    occupied: np.ndarray
    new_group: float

    def probabilities(self) -> np.ndarray:
        w = np.append(self.occupied, self.new_group)
        return w / w.sum()


def num_groups_log_pmf(h_bar, gamma: float):
    """log p(H) = log[gamma (1-gamma)_{H-1} / H!] for the total group count."""
    GnedinHyper(gamma)
    h_bar = np.asarray(h_bar, dtype=float)
    if np.any(h_bar < 1) or np.any(h_bar != np.floor(h_bar)):
        raise ValueError("h_bar must be a positive integer")
    # rising factorial (1-g)_{H-1} = Gamma(H-g) / Gamma(1-g)
    out = np.log(gamma) + gammaln(h_bar - gamma) - gammaln(1.0 - gamma) - gammaln(h_bar + 1.0)
    return float(out) if out.ndim == 0 else out


def _check_contiguous(z: np.ndarray) -> int:
    if z.size == 0:
        return 0
    if z.min() < 0 or set(np.unique(z)) != set(range(int(z.max()) + 1)):
        raise LabelError(f"labels must be contiguous 0..H-1, got {np.unique(z).tolist()}")
    return int(z.max()) + 1


def _log_urn(z_minus: np.ndarray, gamma: float, cls=None, cohesions=None, others_cls=None):
    """Log urn weights for one more node joining the groups in ``z_minus``."""
    n_other = z_minus.size
    num_groups = _check_contiguous(z_minus)
    sizes = np.bincount(z_minus, minlength=num_groups).astype(float)
    log_occ = np.log(sizes + 1.0) + np.log(n_other - num_groups + gamma)
    log_new = np.log(num_groups) + np.log(num_groups - gamma) if num_groups else -np.inf
    if cls is not None:
        alpha0 = cohesions.sum()
        same = np.bincount(z_minus[others_cls == cls], minlength=num_groups).astype(float)
        log_occ = log_occ + np.log(same + cohesions[cls]) - np.log(sizes + alpha0)
        log_new = log_new + np.log(cohesions[cls]) - np.log(alpha0)
    return log_occ, log_new


def urn_weights(v: int, z_minus, c: AttributeVector | None = None,
                hyper: GnedinHyper = GnedinHyper()) -> UrnWeights:
    """Unnormalized allocation weights of node ``v`` given the other nodes.

    ``z_minus`` lists the labels of the remaining nodes in index order with
    ``v`` removed; ``c`` (when given) covers all nodes including ``v``.
    """
    z_minus = np.asarray(z_minus, dtype=np.int64)
    if c is None:
        log_occ, log_new = _log_urn(z_minus, hyper.gamma)
    else:
        if c.num_nodes != z_minus.size + 1:
            raise ValueError("attribute vector must cover v and the other nodes")
        others = np.delete(c.labels, v)
        log_occ, log_new = _log_urn(z_minus, hyper.gamma, c.labels[v], c.cohesions, others)
    return UrnWeights(np.exp(log_occ), float(np.exp(log_new)))


def sequential_urn_log_prior(z, c: AttributeVector | None = None,
                             hyper: GnedinHyper = GnedinHyper()) -> float:
    """Sum of log normalized urn probabilities, adding nodes in index order.

    Without attributes this is exactly the exchangeable Gnedin partition
    probability.  With attributes the per-step normalizers depend on the
    order in which classes arrive, so the result is order dependent; use
    ``log_partition_prior`` for the joint prior.
    """
    z = canonical(np.asarray(z, dtype=np.int64))
    total = 0.0
    for i in range(1, z.size):
        if c is None:
            log_occ, log_new = _log_urn(z[:i], hyper.gamma)
        else:
            log_occ, log_new = _log_urn(z[:i], hyper.gamma, c.labels[i], c.cohesions, c.labels[:i])
        logw = np.append(log_occ, log_new)
        total += logw[z[i]] - logsumexp(logw)
    return float(total)


def _log_cohesion(z: np.ndarray, c: AttributeVector) -> float:
    # Dirichlet-multinomial marginal of the classes inside each group
    num_groups = int(z.max()) + 1
    counts = np.zeros((num_groups, c.num_classes))
    np.add.at(counts, (z, c.labels), 1.0)
    alpha = c.cohesions
    return float(
        np.sum(gammaln(counts + alpha) - gammaln(alpha))
        + np.sum(gammaln(c.alpha0) - gammaln(counts.sum(axis=1) + c.alpha0))
    )


def log_partition_prior(z, c: AttributeVector | None = None,
                        hyper: GnedinHyper = GnedinHyper(), normalized: bool = True) -> float:
    """Log prior mass of the allocation vector ``z``.

    The supervised prior is the product-partition form whose single-node
    full conditionals are the supervised urn weights:
    p(z | c) ∝ p_gn(z) * prod_h q(c restricted to group h), with q the
    Dirichlet-multinomial marginal of the cohesions.  Its normalizer sums
    over all set partitions, so ``normalized=True`` is limited to small V.
    """
    z = canonical(np.asarray(z, dtype=np.int64))
    _check_contiguous(z)
    base = sequential_urn_log_prior(z, None, hyper)
    if c is None:
        return base
    if c.num_nodes != z.size:
        raise ValueError("attribute vector length differs from the partition")
    value = base + _log_cohesion(z, c)
    if normalized:
        if z.size > 10:
            raise ValueError("exact normalization enumerates all partitions; use normalized=False for V > 10")
        value -= _log_normalizer(tuple(c.labels.tolist()), tuple(c.cohesions.tolist()), hyper.gamma)
    return value


@lru_cache(maxsize=64)
def _log_normalizer(labels: tuple, cohesions: tuple, gamma: float) -> float:
    c = AttributeVector(np.array(labels), np.array(cohesions))
    hyper = GnedinHyper(gamma)
    terms = [sequential_urn_log_prior(p, None, hyper) + _log_cohesion(p, c)
             for p in enumerate_partitions(len(labels))]
    return float(logsumexp(terms))
