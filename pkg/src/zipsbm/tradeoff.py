"""Efficiency and security summaries of the plug-in block-parameter posterior."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .likelihood import BlockParams
from .netcore import WeightedNetwork
from .partition import canonical

__all__ = [
    "prob_obscured_given_zero",
    "prob_hidden_positive_given_zero",
    "prob_positive",
    "TradeoffReport",
    "build_report",
    "rank_zero_ties",
    "write_ranking_csv",
]


def prob_obscured_given_zero(pi, lam):
    """pr(x = 1 | y = 0) = pi / (pi + (1 - pi) e^{-lambda})."""
    pi = np.asarray(pi, dtype=float)
    out = pi / (pi + (1.0 - pi) * np.exp(-np.asarray(lam, dtype=float)))
    return float(out) if out.ndim == 0 else out


def prob_hidden_positive_given_zero(pi, lam):
    """pr(w > 0 | y = 0): an obscured tie that hides a nonzero interaction."""
    out = prob_obscured_given_zero(pi, lam) * -np.expm1(-np.asarray(lam, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def prob_positive(lam):
    """pr(w > 0) = 1 - e^{-lambda}, irrespective of obscuration."""
    out = -np.expm1(-np.asarray(lam, dtype=float))
    return float(out) if out.ndim == 0 else out


@dataclass
class TradeoffReport:
    """Pair- and block-level posterior means/SDs.

    Pair matrices are V x V with NaN marking not-applicable entries (the
    diagonal everywhere; observed positive ties in the two zero-conditional
    matrices).  Block matrices are H x H.
    """

    z_hat: np.ndarray
    zero_ties: np.ndarray
    p_obscured: np.ndarray
    p_obscured_sd: np.ndarray
    p_hidden_positive: np.ndarray
    p_hidden_positive_sd: np.ndarray
    p_positive: np.ndarray
    p_positive_sd: np.ndarray
    block_pi_mean: np.ndarray
    block_pi_sd: np.ndarray
    block_lambda_mean: np.ndarray
    block_lambda_sd: np.ndarray
    block_p_obscured: np.ndarray
    block_p_hidden_positive: np.ndarray
    block_p_positive: np.ndarray
    num_draws: int

    def to_dict(self) -> dict:
        def nested(M):
            return [[None if np.isnan(v) else float(v) for v in row] for row in M]

        return {
            "z_hat": (self.z_hat + 1).tolist(),
            "num_draws": self.num_draws,
            "pairs": {
                "p_obscured": nested(self.p_obscured),
                "p_obscured_sd": nested(self.p_obscured_sd),
                "p_hidden_positive": nested(self.p_hidden_positive),
                "p_hidden_positive_sd": nested(self.p_hidden_positive_sd),
                "p_positive": nested(self.p_positive),
                "p_positive_sd": nested(self.p_positive_sd),
            },
            "blocks": {
                "pi_mean": nested(self.block_pi_mean),
                "pi_sd": nested(self.block_pi_sd),
                "lambda_mean": nested(self.block_lambda_mean),
                "lambda_sd": nested(self.block_lambda_sd),
                "p_obscured": nested(self.block_p_obscured),
                "p_hidden_positive": nested(self.block_p_hidden_positive),
                "p_positive": nested(self.block_p_positive),
            },
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)


def build_report(network: WeightedNetwork, z_hat, draws: list[BlockParams]) -> TradeoffReport:
    """Monte Carlo means and SDs over every plug-in draw, mapped to pairs via z_hat."""
    z = canonical(np.asarray(z_hat))
    H = int(z.max()) + 1
    if z.size != network.num_nodes:
        raise ValueError(f"partition has {z.size} entries for {network.num_nodes} nodes")
    if not draws:
        raise ValueError("no plug-in draws")
    if any(d.num_groups != H for d in draws):
        raise ValueError(f"block-parameter draws do not match the {H} groups of z_hat")
    pi = np.stack([d.pi_bar for d in draws])
    lam = np.stack([d.lambda_bar for d in draws])
    obscured = prob_obscured_given_zero(pi, lam)
    hidden = prob_hidden_positive_given_zero(pi, lam)
    positive = prob_positive(lam)

    def moments(A):
        sd = A.std(axis=0, ddof=1) if A.shape[0] > 1 else np.zeros(A.shape[1:])
        return A.mean(axis=0), sd

    blocks = {name: moments(A) for name, A in
              (("pi", pi), ("lam", lam), ("obs", obscured), ("hid", hidden), ("pos", positive))}
    V = z.size
    ix = np.ix_(z, z)
    offdiag = ~np.eye(V, dtype=bool)
    zero = (network.ties == 0) & offdiag

    def pairs(mean_sd, mask):
        m, s = mean_sd
        return np.where(mask, m[ix], np.nan), np.where(mask, s[ix], np.nan)

    p_obs, p_obs_sd = pairs(blocks["obs"], zero)
    p_hid, p_hid_sd = pairs(blocks["hid"], zero)
    p_pos, p_pos_sd = pairs(blocks["pos"], offdiag)
    return TradeoffReport(
        z_hat=z,
        zero_ties=zero,
        p_obscured=p_obs,
        p_obscured_sd=p_obs_sd,
        p_hidden_positive=p_hid,
        p_hidden_positive_sd=p_hid_sd,
        p_positive=p_pos,
        p_positive_sd=p_pos_sd,
        block_pi_mean=blocks["pi"][0],
        block_pi_sd=blocks["pi"][1],
        block_lambda_mean=blocks["lam"][0],
        block_lambda_sd=blocks["lam"][1],
        block_p_obscured=blocks["obs"][0],
        block_p_hidden_positive=blocks["hid"][0],
        block_p_positive=blocks["pos"][0],
        num_draws=len(draws),
    )


def rank_zero_ties(report: TradeoffReport) -> list[tuple[int, int, float, float]]:
    """Observed zero ties (v < u), most likely hidden positives first."""
    v_idx, u_idx = np.nonzero(np.triu(report.zero_ties, 1))
    rows = [(int(v), int(u), float(report.p_hidden_positive[v, u]), float(report.p_hidden_positive_sd[v, u]))
            for v, u in zip(v_idx, u_idx)]
    rows.sort(key=lambda r: (-r[2], r[0], r[1]))
    return rows


def write_ranking_csv(ranking, path, node_labels=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "v", "u", "p_hidden_positive", "sd"])
        for i, (v, u, p, sd) in enumerate(ranking, start=1):
            name_v = node_labels[v] if node_labels else v + 1
            name_u = node_labels[u] if node_labels else u + 1
            writer.writerow([i, name_v, name_u, f"{p:.6g}", f"{sd:.6g}"])
