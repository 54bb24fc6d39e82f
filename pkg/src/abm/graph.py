"""
Random graphs with prescribed degree classes and class mixing
Stub matching to target inter-class edge counts, then local repair of
self-loops and multi-edges by degree- and class-preserving swaps
"""

import logging
from collections import Counter
from dataclasses import dataclass
from typing import List, Tuple

import networkx as nx
import numpy as np
import pandas as pd

from src.model.types import ClassNetwork
from src.utils.config import Config
from src.utils.exceptions import GraphConstructionError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AgentGraph:
    """Simple undirected graph whose nodes carry a degree class"""

    graph: nx.Graph
    classes: np.ndarray     # (N,) class index per agent
    net: ClassNetwork
    indptr: np.ndarray      # CSR neighbor lists
    indices: np.ndarray

    @property
    def n_agents(self) -> int:
        return int(self.classes.shape[0])

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.classes, minlength=self.net.n_classes)

    def neighbors(self, agent: int) -> np.ndarray:
        return self.indices[self.indptr[agent]:self.indptr[agent + 1]]

    def realized_degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def realized_mixing(self) -> np.ndarray:
        """Fraction of class-k link ends that reach class k'"""
        K = self.net.n_classes
        counts = np.zeros((K, K))
        src = np.repeat(self.classes, np.diff(self.indptr))
        dst = self.classes[self.indices]
        np.add.at(counts, (src, dst), 1.0)
        totals = counts.sum(axis=1, keepdims=True)
        return np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)

    def mixing_report(self) -> pd.DataFrame:
        realized = self.realized_mixing()
        rows = []
        for k in range(self.net.n_classes):
            for j in range(self.net.n_classes):
                rows.append({
                    "from_class": k + 1,
                    "to_class": j + 1,
                    "target": float(self.net.mixing[k, j]),
                    "realized": float(realized[k, j]),
                })
        return pd.DataFrame(rows)


def class_sizes(net: ClassNetwork, n_agents: int) -> np.ndarray:
    """Largest-remainder rounding of N*P(k), summing to N"""
    raw = n_agents * net.weights
    sizes = np.floor(raw).astype(int)
    short = n_agents - int(sizes.sum())
    order = np.argsort(-(raw - sizes), kind="stable")
    sizes[order[:short]] += 1
    return sizes


def _edge_targets(net: ClassNetwork, sizes: np.ndarray) -> np.ndarray:
    """
    Integer edge counts between classes

    Off-diagonal entries count k-l edges; the diagonal holds the number of
    stubs left for links inside the class, which must be even.
    """
    K = net.n_classes
    stubs = sizes * np.asarray(net.degrees)
    if int(stubs.sum()) % 2:
        raise GraphConstructionError(
            f"total stub count {int(stubs.sum())} is odd for class sizes {sizes.tolist()}"
        )

    edges = np.zeros((K, K), dtype=int)
    for k in range(K):
        for j in range(k + 1, K):
            expected = 0.5 * (stubs[k] * net.mixing[k, j] + stubs[j] * net.mixing[j, k])
            edges[k, j] = edges[j, k] = int(round(expected))

    def leftover():
        return stubs - edges.sum(axis=1)

    rest = leftover()
    while np.any(rest < 0):
        k = int(np.argmin(rest))
        j = int(np.argmax(np.where(np.arange(K) == k, -1, edges[k])))
        edges[k, j] -= 1
        edges[j, k] -= 1
        rest = leftover()

    # parity: pair up classes whose inner stub count is odd
    odd = [k for k in range(K) if rest[k] % 2]
    for a, b in zip(odd[::2], odd[1::2]):
        edges[a, b] += 1
        edges[b, a] += 1
    rest = leftover()
    np.fill_diagonal(edges, rest)
    return edges


def _match_stubs(net: ClassNetwork, sizes: np.ndarray, edges: np.ndarray,
                 rng: np.random.Generator) -> Tuple[np.ndarray, List[Tuple[int, int]]]:
    K = net.n_classes
    classes = np.repeat(np.arange(K), sizes)
    first = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    pools = []
    for k in range(K):
        nodes = np.arange(first[k], first[k] + sizes[k])
        pool = np.repeat(nodes, net.degrees[k])
        rng.shuffle(pool)
        pools.append(list(pool))

    pairs: List[Tuple[int, int]] = []
    for k in range(K):
        for j in range(k + 1, K):
            count = int(edges[k, j])
            left = [pools[k].pop() for _ in range(count)]
            right = [pools[j].pop() for _ in range(count)]
            pairs.extend(zip(left, right))
    for k in range(K):
        pool = pools[k]
        pairs.extend(zip(pool[0::2], pool[1::2]))
    return classes, [(int(a), int(b)) for a, b in pairs]


def _key(a: int, b: int) -> Tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _repair(pairs: List[Tuple[int, int]], classes: np.ndarray, budget: int,
            rng: np.random.Generator) -> Tuple[int, bool]:
    """Swap away self-loops and duplicate edges in place; returns (attempts, success)"""
    multiplicity = Counter(_key(a, b) for a, b in pairs)

    def is_bad(index: int) -> bool:
        a, b = pairs[index]
        return a == b or multiplicity[_key(a, b)] > 1

    bad = [i for i in range(len(pairs)) if is_bad(i)]
    attempts = 0
    while bad and attempts < budget:
        attempts += 1
        i = bad[-1]
        if not is_bad(i):
            bad.pop()
            continue
        a, b = pairs[i]
        if rng.random() < 0.5:
            a, b = b, a
        j = int(rng.integers(len(pairs)))
        if j == i:
            continue
        c, d = pairs[j]
        # keep class pairs: d must share b's class
        if classes[d] != classes[b]:
            c, d = d, c
        if classes[d] != classes[b]:
            continue
        new1, new2 = _key(a, d), _key(c, b)
        if a == d or c == b or new1 == new2 or multiplicity[new1] or multiplicity[new2]:
            continue
        for old in (_key(a, b), _key(c, d)):
            multiplicity[old] -= 1
        multiplicity[new1] += 1
        multiplicity[new2] += 1
        pairs[i] = (a, d)
        pairs[j] = (c, b)
        bad.pop()
        bad.extend(index for index in (i, j) if is_bad(index))
    return attempts, not bad


def sample_graph(
        net: ClassNetwork,
        n_agents: int,
        seed: int = Config.SEED,
        repair_factor: int = Config.ABM_REPAIR_FACTOR
) -> AgentGraph:
    """
    Sample a simple graph whose classes, degrees and mixing follow the network

    Args:
        net: Degree classes, weights and mixing
        n_agents: Number of agents N
        seed: Seed of the stub shuffles and repair swaps
        repair_factor: Swap attempts allowed per agent

    Returns:
        AgentGraph; every agent has exactly its class degree
    """
    if n_agents < 2:
        raise ValidationError(f"need at least two agents, got {n_agents}")
    sizes = class_sizes(net, n_agents)
    if np.any((sizes == 0) & (net.weights > 0)):
        raise GraphConstructionError(f"N={n_agents} leaves an empty class: sizes {sizes.tolist()}")
    for k, (size, degree) in enumerate(zip(sizes, net.degrees)):
        if size and degree >= n_agents:
            raise GraphConstructionError(f"class {k + 1} degree {degree} needs more than {n_agents} agents")

    rng = np.random.default_rng(seed)
    edges = _edge_targets(net, sizes)
    classes, pairs = _match_stubs(net, sizes, edges, rng)
    used, repaired = _repair(pairs, classes, repair_factor * n_agents, rng)

    if not repaired:
        graph = nx.Graph()
        graph.add_edges_from(pairs)
        realized = {"edges": graph.number_of_edges(), "stub_pairs": len(pairs)}
        target = {"mixing": net.mixing.tolist(), "sizes": sizes.tolist()}
        raise GraphConstructionError(
            f"could not remove self-loops and multi-edges within {repair_factor * n_agents} swaps",
            realized=realized,
            target=target,
        )

    graph = nx.Graph()
    graph.add_nodes_from((agent, {"cls": int(k)}) for agent, k in enumerate(classes))
    graph.add_edges_from(pairs)
    adjacency = nx.to_scipy_sparse_array(graph, nodelist=range(n_agents), format="csr", dtype=np.int8)
    agent_graph = AgentGraph(
        graph=graph,
        classes=classes,
        net=net,
        indptr=adjacency.indptr.astype(np.int64),
        indices=adjacency.indices.astype(np.int64),
    )

    expected = np.asarray(net.degrees)[classes]
    if not np.array_equal(agent_graph.realized_degrees(), expected):
        raise GraphConstructionError("realized degrees differ from the class degrees")
    logger.debug("Sampled graph: N=%d, %d edges, %d repair swaps", n_agents, graph.number_of_edges(), used)
    return agent_graph
