"""Weighted network and node-attribute containers, CSV readers and writers."""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "NetworkError",
    "SymmetryError",
    "FormatError",
    "DuplicateEdgeError",
    "LengthError",
    "WeightedNetwork",
    "AttributeVector",
    "NetworkSummary",
    "load_network",
    "write_network",
    "load_attributes",
    "write_attributes",
    "validate",
]


class NetworkError(ValueError):
    pass


class SymmetryError(NetworkError):
    pass


class FormatError(NetworkError):
    pass


class DuplicateEdgeError(NetworkError):
    pass


class LengthError(NetworkError):
    pass


_HEADER = re.compile(r"#\s*nodes\s*=\s*(\d+)\s+index-base\s*=\s*([01])\s*$")


@dataclass(frozen=True)
class WeightedNetwork:
    """Undirected count network.

    ``ties`` is kept exactly as read (diagonal included) so that writing it
    back reproduces the input; every model computation only looks at the
    strict lower triangle.
    """

    ties: np.ndarray
    node_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        ties = np.asarray(self.ties)
        if ties.ndim != 2 or ties.shape[0] != ties.shape[1] or ties.shape[0] < 1:
            raise FormatError(f"tie matrix must be square and non-empty, got shape {ties.shape}")
        if ties.dtype.kind == "f":
            if not np.all(np.isfinite(ties)) or np.any(ties != np.round(ties)):
                raise FormatError("tie weights must be integers")
        elif ties.dtype.kind not in "iub":
            raise FormatError(f"unsupported tie dtype {ties.dtype}")
        ties = ties.astype(np.int64)
        if np.any(ties < 0):
            raise FormatError("tie weights must be nonnegative")
        if not np.array_equal(ties, ties.T):
            v, u = np.argwhere(ties != ties.T)[0]
            raise SymmetryError(f"y[{v},{u}]={ties[v, u]} differs from y[{u},{v}]={ties[u, v]}")
        ties.setflags(write=False)
        object.__setattr__(self, "ties", ties)
        if self.node_labels is not None:
            labels = tuple(str(s) for s in self.node_labels)
            if len(labels) != ties.shape[0]:
                raise LengthError(f"{len(labels)} node labels for {ties.shape[0]} nodes")
            object.__setattr__(self, "node_labels", labels)

    @property
    def num_nodes(self) -> int:
        return self.ties.shape[0]

    def pair_values(self) -> np.ndarray:
        """Tie values over the strict lower triangle, row-major (v > u)."""
        return self.ties[np.tril_indices(self.num_nodes, -1)]

    def offdiag(self) -> np.ndarray:
        """Copy of the tie matrix with the (unused) diagonal zeroed."""
        y = self.ties.copy()
        np.fill_diagonal(y, 0)
        return y


@dataclass(frozen=True)
class AttributeVector:
    """Exogenous node classes, stored 0-based as ``labels`` in 0..C-1."""

    labels: np.ndarray
    cohesions: np.ndarray = None
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.size == 0:
            raise LengthError("attribute vector must be a non-empty 1-d array")
        if labels.min() < 0:
            raise FormatError("class labels must be nonnegative codes")
        num_classes = int(labels.max()) + 1
        if self.cohesions is None:
            cohesions = np.ones(num_classes)
        else:
            cohesions = np.asarray(self.cohesions, dtype=float)
            if cohesions.ndim != 1 or cohesions.size < num_classes:
                raise LengthError(f"need {num_classes} cohesion values, got {cohesions.size}")
        if np.any(cohesions <= 0):
            raise FormatError("cohesion parameters must be strictly positive")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "cohesions", cohesions)
        if not self.names:
            object.__setattr__(self, "names", tuple(str(i + 1) for i in range(cohesions.size)))

    @property
    def num_nodes(self) -> int:
        return self.labels.size

    @property
    def num_classes(self) -> int:
        return self.cohesions.size

    @property
    def alpha0(self) -> float:
        return float(self.cohesions.sum())

    def permuted(self, order) -> "AttributeVector":
        return AttributeVector(self.labels[np.asarray(order)], self.cohesions, self.names)


@dataclass(frozen=True)
class NetworkSummary:
    num_nodes: int
    num_edges: int
    max_weight: int
    density: float
    zero_fraction: float


def _read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    comments, rows = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                comments.append(stripped)
                continue
            rows.append(next(csv.reader([stripped])))
    return comments, rows


def _parse_int(token: str, where: str) -> int:
    try:
        value = int(token.strip())
    except ValueError:
        raise FormatError(f"{where}: {token!r} is not an integer") from None
    if value < 0:
        raise FormatError(f"{where}: negative weight {value}")
    return value


def load_network(path, format: str = "auto") -> WeightedNetwork:
    """Read a network from a dense CSV grid or a headered edge list.

    Edge lists must start with ``# nodes=V index-base=B``; pairs absent from
    the file are zero ties and a pair may appear only once in either
    orientation.
    """
    path = Path(path)
    comments, rows = _read_rows(path)
    header = next((m for m in map(_HEADER.match, comments) if m), None)
    if format == "auto":
        format = "edge-list" if header else "dense"
    if format == "dense":
        if not rows:
            raise FormatError(f"{path}: empty dense matrix")
        grid = [[_parse_int(t, f"{path} row {i + 1}") for t in row] for i, row in enumerate(rows)]
        if any(len(r) != len(grid) for r in grid):
            raise FormatError(f"{path}: dense matrix is not square")
        return WeightedNetwork(np.array(grid, dtype=np.int64))
    if format != "edge-list":
        raise ValueError(f"unknown network format {format!r}")
    if header is None:
        raise FormatError(f"{path}: edge list needs a '# nodes=V index-base=B' header")
    num_nodes, base = int(header.group(1)), int(header.group(2))
    if num_nodes < 1:
        raise FormatError(f"{path}: need at least one node")
    ties = np.zeros((num_nodes, num_nodes), dtype=np.int64)
    seen = set()
    for i, row in enumerate(rows):
        where = f"{path} row {i + 1}"
        if len(row) != 3:
            raise FormatError(f"{where}: expected 'u,v,weight'")
        try:
            u, v = int(row[0]) - base, int(row[1]) - base
        except ValueError:
            raise FormatError(f"{where}: node indices must be integers") from None
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise FormatError(f"{where}: node index out of range for V={num_nodes}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise DuplicateEdgeError(f"{where}: pair ({row[0]},{row[1]}) listed twice")
        seen.add(key)
        ties[u, v] = ties[v, u] = _parse_int(row[2], where)
    return WeightedNetwork(ties)


def write_network(network: WeightedNetwork, path, format: str = "dense", index_base: int = 1) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if format == "dense":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerows(network.ties.tolist())
        elif format == "edge-list":
            fh.write(f"# nodes={network.num_nodes} index-base={index_base}\n")
            v_idx, u_idx = np.nonzero(np.tril(network.ties, -1))
            for v, u in zip(v_idx, u_idx):
                fh.write(f"{u + index_base},{v + index_base},{network.ties[v, u]}\n")
        else:
            raise ValueError(f"unknown network format {format!r}")


def load_attributes(path, num_nodes: int) -> AttributeVector:
    """One label per line; labels are compacted in order of first appearance."""
    with open(path, encoding="utf-8") as fh:
        raw = [line.strip() for line in fh if line.strip() and not line.lstrip().startswith("#")]
    if len(raw) != num_nodes:
        raise LengthError(f"{path}: {len(raw)} labels for {num_nodes} nodes")
    return _compact_attributes(raw)


def _compact_attributes(raw) -> AttributeVector:
    codes: dict[str, int] = {}
    labels = [codes.setdefault(s, len(codes)) for s in raw]
    return AttributeVector(np.array(labels), names=tuple(codes))


def write_attributes(attributes: AttributeVector, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for code in attributes.labels:
            fh.write(f"{attributes.names[code]}\n")


def validate(network: WeightedNetwork) -> NetworkSummary:
    # construction already enforced the invariants; re-check in case of a
    # hand-built instance that bypassed __post_init__
    WeightedNetwork(network.ties)
    pairs = network.pair_values()
    num_pairs = pairs.size
    num_edges = int(np.count_nonzero(pairs))
    density = num_edges / num_pairs if num_pairs else 0.0
    return NetworkSummary(
        num_nodes=network.num_nodes,
        num_edges=num_edges,
        max_weight=int(pairs.max()) if num_pairs else 0,
        density=density,
        zero_fraction=1.0 - density if num_pairs else 0.0,
    )
