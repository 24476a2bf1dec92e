"""Data-augmentation collapsed Gibbs sampler for the ZIP stochastic block model.

Each iteration redraws the latent obscuration indicators X and latent counts
W given the current block parameters, sweeps the node allocations with
X and W fixed and the block parameters integrated out, then redraws the
block parameters from their conjugate full conditionals.  The Poisson-SBM
baseline drops the augmentation and sets W = Y; the fixed-partition variant
skips the allocation sweep.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as K
from .likelihood import BlockParams, ZipHyper, block_stats, collapsed_log_ml_w, collapsed_log_ml_x
from .netcore import AttributeVector, WeightedNetwork
from .partition import canonical
from .prior import GnedinHyper, urn_weights

log = logging.getLogger(__name__)

__all__ = [
    "StateError",
    "SamplerConfig",
    "SamplerTrace",
    "ChainState",
    "chain_rng",
    "augment_x",
    "augment_w",
    "allocation_log_probs",
    "resample_allocation",
    "run_chain",
    "run_psbm",
    "run_fixed_partition",
    "run_chains",
]

VARIANTS = {"zip-sbm": K.VARIANT_ZIP, "p-sbm": K.VARIANT_PSBM, "fixed-partition": K.VARIANT_FIXED}


class StateError(ValueError):
    pass


@dataclass
class SamplerConfig:
    total_iters: int = 20000
    burn_in: int = 10000
    thinning: int = 1
    zip_hyper: ZipHyper = field(default_factory=ZipHyper)
    gnedin: GnedinHyper = field(default_factory=GnedinHyper)
    init: str = "singletons"
    seed: int = 0
    store_block_params: bool = False
    variant: str = "zip-sbm"
    debug_checks: bool = False

    def __post_init__(self):
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if not 0 <= self.burn_in < self.total_iters:
            raise ValueError("need 0 <= burn_in < total_iters")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def num_stored(self) -> int:
        return (self.total_iters - self.burn_in) // self.thinning

    def to_dict(self) -> dict:
        d = asdict(self)
        d["init"] = self.init if isinstance(self.init, str) else list(map(int, self.init))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SamplerConfig":
        d = dict(d)
        d["zip_hyper"] = ZipHyper(**d.get("zip_hyper", {}))
        d["gnedin"] = GnedinHyper(**d.get("gnedin", {}))
        return cls(**d)


def chain_rng(seed: int, chain: int = 0) -> np.random.Generator:
    """Chain ``i`` of a run seeded ``s`` draws from SeedSequence(s, spawn_key=(i,))."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chain,)))


@dataclass
class SamplerTrace:
    partitions: np.ndarray
    iterations: np.ndarray
    H_trace: np.ndarray
    loglik_trace: np.ndarray
    block_params: list[BlockParams] | None = None
    chains: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return self.partitions.shape[0]

    @property
    def num_nodes(self) -> int:
        return self.partitions.shape[1]

    def to_jsonl(self, path) -> None:
        """One record per stored draw; labels written 1-based."""
        with open(path, "w", encoding="utf-8") as fh:
            for i, z in enumerate(self.partitions):
                rec = {
                    "iteration": int(self.iterations[i]),
                    "chain": int(self.chains[i]) if self.chains is not None else 0,
                    "H": int(z.max()) + 1,
                    "z": (z + 1).tolist(),
                }
                if self.block_params is not None:
                    pi, lam = self.block_params[i].lower()
                    rec["pi_lower"] = pi.tolist()
                    rec["lambda_lower"] = lam.tolist()
                fh.write(json.dumps(rec) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "SamplerTrace":
        recs = [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
        if not recs:
            return cls(np.zeros((0, 0), dtype=np.int64), np.zeros(0, dtype=np.int64),
                       np.zeros(0, dtype=np.int64), np.zeros(0))
        parts = np.array([r["z"] for r in recs], dtype=np.int64) - 1
        params = None
        if "pi_lower" in recs[0]:
            params = [BlockParams.from_lower(r["pi_lower"], r["lambda_lower"]) for r in recs]
        return cls(
            partitions=parts,
            iterations=np.array([r["iteration"] for r in recs]),
            H_trace=np.array([r["H"] for r in recs]),
            loglik_trace=np.full(len(recs), np.nan),
            block_params=params,
            chains=np.array([r.get("chain", 0) for r in recs]),
        )


# --- single-pair augmentation -------------------------------------------------

def augment_x(y: int, pi: float, lam: float, rng: np.random.Generator) -> int:
    """x_vu | y_vu: 0 when the tie is observed positive, else Bernoulli(pr obscured | zero)."""
    if y > 0:
        return 0
    prob = pi / (pi + (1.0 - pi) * np.exp(-lam))
    return int(rng.random() < prob)


def augment_w(y: int, x: int, lam: float, rng: np.random.Generator) -> int:
    if y > 0:
        if x:
            raise StateError("an observed positive tie cannot be obscured")
        return int(y)
    return int(rng.poisson(lam)) if x else 0


# --- allocation full conditional (reference, non-incremental) -----------------

def allocation_log_probs(v: int, z, X, W, c: AttributeVector | None = None,
                         zip_hyper: ZipHyper = ZipHyper(), gnedin: GnedinHyper = GnedinHyper(),
                         use_x: bool = True):
    """Normalized log full conditional of z_v, recomputing every block marginal.

    Returns ``(log_probs, z_minus_labels)``: entry h < H_{-v} is joining
    group h of the compacted remaining partition, the last entry opens a
    new group.  This is the slow reference for the incremental kernel.
    """
    z = np.asarray(z, dtype=np.int64)
    mask = np.arange(z.size) != v
    z_minus = canonical(z[mask])
    H = int(z_minus.max()) + 1 if z_minus.size else 0
    urn = urn_weights(v, z_minus, c, gnedin)
    log_prior = np.log(np.append(urn.occupied, urn.new_group))
    out = np.empty(H + 1)
    for h in range(H + 1):
        trial = np.empty_like(z)
        trial[mask] = z_minus
        trial[v] = h
        stats = block_stats(trial, X, W)
        ll = collapsed_log_ml_w(stats, zip_hyper)
        if use_x:
            ll += collapsed_log_ml_x(stats, zip_hyper)
        out[h] = log_prior[h] + ll
    out -= np.logaddexp.reduce(out)
    return out, z_minus


def resample_allocation(v: int, z, X, W, rng: np.random.Generator, c: AttributeVector | None = None,
                        zip_hyper: ZipHyper = ZipHyper(), gnedin: GnedinHyper = GnedinHyper()):
    """Draw z_v from its full conditional; returns a new canonical partition."""
    logp, z_minus = allocation_log_probs(v, z, X, W, c, zip_hyper, gnedin)
    h = rng.choice(logp.size, p=np.exp(logp))
    z_new = np.empty(len(z), dtype=np.int64)
    mask = np.arange(len(z)) != v
    z_new[mask] = z_minus
    z_new[v] = h
    return canonical(z_new)


# --- chain state ---------------------------------------------------------------

class ChainState:
    """Mutable sampler state: allocations, group tallies, augmented data, block parameters."""

    def __init__(self, Y, z, c: AttributeVector | None, zip_hyper: ZipHyper,
                 gnedin: GnedinHyper, variant: str, rng: np.random.Generator):
        Y = np.ascontiguousarray(Y, dtype=np.int64).copy()
        np.fill_diagonal(Y, 0)
        V = Y.shape[0]
        self.V = V
        self.Y = Y
        self.variant = VARIANTS[variant]
        self.rng = rng
        self.hyp = K.pack_hyper(zip_hyper.a, zip_hyper.b, zip_hyper.a1, zip_hyper.a2)
        self.gamma = float(gnedin.gamma)
        self.supervised = c is not None
        if c is not None:
            if c.num_nodes != V:
                raise ValueError(f"attribute vector has {c.num_nodes} entries for {V} nodes")
            self.cls = np.ascontiguousarray(c.labels, dtype=np.int64)
            self.cohes = np.ascontiguousarray(c.cohesions, dtype=float)
        else:
            self.cls = np.zeros(V, dtype=np.int64)
            self.cohes = np.ones(1)
        self.alpha0 = float(self.cohes.sum())
        hmax = V + 1
        self.z = canonical(z).astype(np.int64)
        self.H = int(self.z.max()) + 1
        self.sizes = np.zeros(hmax, dtype=np.int64)
        self.sizes[: self.H] = np.bincount(self.z)
        self.ccount = np.zeros((hmax, self.cohes.size), dtype=np.int64)
        if self.supervised:
            np.add.at(self.ccount, (self.z, self.cls), 1)
        self.bn = np.zeros((hmax, hmax), dtype=np.int64)
        self.bx = np.zeros((hmax, hmax), dtype=np.int64)
        self.bw = np.zeros((hmax, hmax), dtype=np.int64)
        self.L = np.zeros((hmax, hmax))
        self.pi = np.zeros((hmax, hmax))
        self.lam = np.zeros((hmax, hmax))
        self.X = np.zeros((V, V), dtype=np.int64)
        self.W = Y.copy() if self.variant == K.VARIANT_PSBM else np.zeros((V, V), dtype=np.int64)
        self.cnt = np.zeros(hmax + 1, dtype=np.int64)
        self.xs = np.zeros(hmax + 1, dtype=np.int64)
        self.ws = np.zeros(hmax + 1, dtype=np.int64)
        self.scores = np.zeros(hmax + 1)
        self.skip_w = False
        # block parameters for the first augmentation come from the prior
        K.recompute_stats(self.z, self.H, self.X, self.W, self.bn, self.bx, self.bw)
        if self.variant == K.VARIANT_PSBM:
            K.recompute_cache(self.H, self.bn, self.bx, self.bw, self.L, self.hyp, False)
        zero = np.zeros_like(self.bn)
        K.sample_params(self.H, zero, zero, zero, self.pi, self.lam, self.hyp, self.rng,
                        self.variant != K.VARIANT_PSBM)

    def step(self) -> int:
        self.H = K.iterate(
            self.variant, self.skip_w, self.Y, self.X, self.W, self.z, self.H, self.sizes, self.ccount,
            self.cls, self.cohes, self.alpha0, self.supervised, self.gamma, self.bn, self.bx, self.bw,
            self.L, self.pi, self.lam, self.hyp, self.cnt, self.xs, self.ws, self.scores, self.rng,
        )
        return self.H

    def sweep_allocations(self) -> int:
        """Step 3 only, with X and W held fixed."""
        use_x = self.variant != K.VARIANT_PSBM
        self.H = K.sweep_allocations(
            self.z, self.H, self.sizes, self.ccount, self.cls, self.cohes, self.alpha0, self.supervised,
            self.gamma, self.bn, self.bx, self.bw, self.L, self.X, self.W, self.hyp, use_x,
            self.cnt, self.xs, self.ws, self.scores, self.rng,
        )
        return self.H

    def set_augmented(self, X, W) -> None:
        self.X[...] = X
        self.W[...] = W
        K.recompute_stats(self.z, self.H, self.X, self.W, self.bn, self.bx, self.bw)
        K.recompute_cache(self.H, self.bn, self.bx, self.bw, self.L, self.hyp, self.variant != K.VARIANT_PSBM)

    def block_params(self) -> BlockParams:
        H = self.H
        return BlockParams(self.pi[:H, :H].copy(), self.lam[:H, :H].copy())

    def loglik(self) -> float:
        return float(K.total_logml(self.H, self.L))

    def check_invariants(self) -> None:
        """Expensive consistency checks (debug mode)."""
        z, H = self.z, self.H
        if set(np.unique(z)) != set(range(H)):
            raise StateError("labels are not contiguous")
        if not np.array_equal(np.bincount(z, minlength=H), self.sizes[:H]) or self.sizes[H:].any():
            raise StateError("group sizes out of sync")
        off = ~np.eye(self.V, dtype=bool)
        if not np.array_equal((self.W * (1 - self.X))[off], self.Y[off]):
            raise StateError("augmented state violates y = w (1 - x)")
        fresh = block_stats(z, self.X, self.W, H)
        for name, arr in (("n", self.bn), ("x", self.bx), ("w", self.bw)):
            if not np.array_equal(getattr(fresh, name), arr[:H, :H]):
                raise StateError(f"incremental block tally {name} differs from recomputation")


def _initial_partition(init, V: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(init, str):
        if init == "singletons":
            return np.arange(V)
        if init == "all-in-one":
            return np.zeros(V, dtype=np.int64)
        if init.startswith("random"):
            k = int(init.split(":")[1]) if ":" in init else max(1, int(np.sqrt(V)))
            return canonical(rng.integers(k, size=V))
        raise ValueError(f"unknown init {init!r}")
    z = np.asarray(init, dtype=np.int64)
    if z.shape != (V,):
        raise ValueError(f"initial partition must have length {V}")
    return canonical(z)


def _ties(network) -> np.ndarray:
    return network.ties if isinstance(network, WeightedNetwork) else np.asarray(network)


def _run(network, c, config: SamplerConfig, variant: str, z_fixed=None, chain: int = 0,
         skip_step2: bool = False) -> SamplerTrace:
    Y = _ties(network)
    V = Y.shape[0]
    rng = chain_rng(config.seed, chain)
    z0 = z_fixed if z_fixed is not None else _initial_partition(config.init, V, rng)
    state = ChainState(Y, z0, c, config.zip_hyper, config.gnedin, variant, rng)
    state.skip_w = skip_step2
    store_params = config.store_block_params or variant == "fixed-partition"
    n_keep = config.num_stored
    parts = np.empty((n_keep, V), dtype=np.int64)
    iters = np.empty(n_keep, dtype=np.int64)
    H_trace = np.empty(config.total_iters, dtype=np.int64)
    ll_trace = np.empty(config.total_iters)
    params = [] if store_params else None
    started = time.perf_counter()
    j = 0
    for t in range(1, config.total_iters + 1):
        H_trace[t - 1] = state.step()
        ll_trace[t - 1] = state.loglik() if variant == "zip-sbm" or variant == "p-sbm" else np.nan
        if config.debug_checks:
            state.check_invariants()
        if t > config.burn_in and (t - config.burn_in) % config.thinning == 0 and j < n_keep:
            parts[j] = canonical(state.z)
            iters[j] = t
            if store_params:
                # reorder block parameters to the canonical labels of the stored z
                order = _canonical_order(state.z, state.H)
                bp = state.block_params()
                params.append(BlockParams(bp.pi_bar[np.ix_(order, order)], bp.lambda_bar[np.ix_(order, order)]))
            j += 1
    elapsed = time.perf_counter() - started
    log.info("chain %d (%s): %d iterations in %.1fs, final H=%d", chain, variant,
             config.total_iters, elapsed, state.H)
    return SamplerTrace(
        partitions=parts,
        iterations=iters,
        H_trace=H_trace,
        loglik_trace=ll_trace,
        block_params=params,
        chains=np.full(n_keep, chain, dtype=np.int64),
        provenance={"config": config.to_dict(), "variant": variant, "seed": config.seed,
                    "chain": chain, "wall_clock_seconds": elapsed},
    )


def _canonical_order(z: np.ndarray, H: int) -> np.ndarray:
    """Internal labels listed in order of first appearance."""
    _, first = np.unique(z, return_index=True)
    return np.argsort(first)[:H]


def run_chain(network, c: AttributeVector | None = None, config: SamplerConfig = SamplerConfig(),
              chain: int = 0, skip_step2: bool = False) -> SamplerTrace:
    """ZIP-SBM posterior over allocations (and optionally block parameters)."""
    return _run(network, c, config, "zip-sbm", chain=chain, skip_step2=skip_step2)


def run_psbm(network, c: AttributeVector | None = None, config: SamplerConfig = SamplerConfig(),
             chain: int = 0) -> SamplerTrace:
    """Poisson-SBM baseline: W fixed to Y, no zero inflation."""
    return _run(network, c, config, "p-sbm", chain=chain)


def run_fixed_partition(network, z_hat, config: SamplerConfig = SamplerConfig(),
                        chain: int = 0) -> SamplerTrace:
    """Plug-in posterior of the block parameters given a fixed partition.

    The returned trace's ``block_params`` follow the canonical labels of
    ``z_hat``.
    """
    z_hat = np.asarray(z_hat, dtype=np.int64)
    if np.unique(z_hat).size != z_hat.max() + 1 or z_hat.min() < 0:
        raise ValueError("z_hat must use contiguous labels")
    return _run(network, None, config, "fixed-partition", z_fixed=canonical(z_hat), chain=chain)


def _chain_job(args):
    network, c, config, variant, z_fixed, chain = args
    return _run(network, c, config, variant, z_fixed=z_fixed, chain=chain)


def run_chains(network, c: AttributeVector | None, config: SamplerConfig, num_chains: int = 1,
               variant: str = "zip-sbm", parallel: bool = True, z_fixed=None) -> SamplerTrace:
    """Independent chains with seed-derived streams, post-burn-in draws concatenated.

    ``z_fixed`` is required for (and only used by) the fixed-partition variant.
    """
    if variant == "fixed-partition":
        if z_fixed is None:
            raise ValueError("the fixed-partition variant needs z_fixed")
        z_fixed = canonical(np.asarray(z_fixed, dtype=np.int64))
        c = None
    else:
        z_fixed = None
    jobs = [(network, c, config, variant, z_fixed, i) for i in range(num_chains)]
    if num_chains > 1 and parallel:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=num_chains) as pool:
            traces = list(pool.map(_chain_job, jobs))
    else:
        traces = [_chain_job(j) for j in jobs]
    if len(traces) == 1:
        return traces[0]
    params = None
    if all(t.block_params is not None for t in traces):
        params = [p for t in traces for p in t.block_params]
    return SamplerTrace(
        partitions=np.concatenate([t.partitions for t in traces]),
        iterations=np.concatenate([t.iterations for t in traces]),
        H_trace=np.concatenate([t.H_trace for t in traces]),
        loglik_trace=np.concatenate([t.loglik_trace for t in traces]),
        block_params=params,
        chains=np.concatenate([t.chains for t in traces]),
        provenance={"chains": [t.provenance for t in traces]},
    )
