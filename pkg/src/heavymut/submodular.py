"""Set functions, directed cuts, exhaustive oracles and unconstrained local search."""

import math
from typing import Callable, List, Optional, Tuple

import numpy as np
from loguru import logger

from heavymut.core import (
    REAL_TOLERANCE,
    BitString,
    LocalSearchError,
    OracleSizeError,
    SetFunction,
    complement,
    enumerate_subsets,
    masks_to_bits,
)
from heavymut.graph_io import DirectedGraph

BRUTE_FORCE_MAX_N = 24
SUBMODULARITY_MAX_N = 12
RANDOM_SUBSET_MAX_N = 20

FeasibilityOracle = Callable[[BitString], bool]


def cut_value(graph: DirectedGraph, U: BitString) -> int:
    """Counts the arcs `(a, b)` with `a` in `U` and `b` outside `U`."""
    U = np.asarray(U, dtype=bool)
    if U.shape != (graph.n,):
        raise ValueError(f"Vertex set has length {len(U)}, graph has {graph.n} vertices.")
    return int(np.count_nonzero(U[graph.arc_sources] & ~U[graph.arc_targets]))


def cut_value_from_in_adjacency(graph: DirectedGraph, U: BitString) -> int:
    """Computes the same cut by counting, for each vertex outside `U`, its in-arcs from `U`."""
    U = np.asarray(U, dtype=bool)
    heads = np.repeat(np.arange(graph.n), graph.in_degree())
    return int(np.count_nonzero(U[graph.in_sources] & ~U[heads]))


def cut_delta(graph: DirectedGraph, U: BitString, current: int, flips: np.ndarray) -> int:
    """Returns the cut value of `U` with `flips` toggled, given `current = cut_value(graph, U)`.

    Only arcs incident to flipped vertices are touched.
    """
    flips = np.asarray(flips, dtype=np.int64)
    if flips.size == 0:
        return current
    U = np.asarray(U, dtype=bool)

    out_sources, out_targets = graph.out_arcs_of(flips)
    in_sources, in_targets = graph.in_arcs_of(flips)
    # Arcs between two flipped vertices are already among the out-arcs.
    keep = ~np.isin(in_sources, flips)
    sources = np.concatenate((out_sources, in_sources[keep]))
    targets = np.concatenate((out_targets, in_targets[keep]))

    old = U[sources] & ~U[targets]
    new = (U[sources] ^ np.isin(sources, flips)) & ~(U[targets] ^ np.isin(targets, flips))
    return current + int(np.count_nonzero(new)) - int(np.count_nonzero(old))


class CutFunction(SetFunction):
    """`f(U)`: number of arcs leaving `U` (unit weights)."""

    integral = True

    def __init__(self, graph: DirectedGraph, name: Optional[str] = None) -> None:
        super().__init__(graph.n)
        self.graph = graph
        self._name = name or "dicut"

    @property
    def name(self) -> str:
        return self._name

    def value(self, bits: BitString) -> float:
        return cut_value(self.graph, bits)

    def values(self, batch: BitString) -> np.ndarray:
        batch = np.asarray(batch, dtype=bool)
        leaving = batch[:, self.graph.arc_sources] & ~batch[:, self.graph.arc_targets]
        return np.count_nonzero(leaving, axis=1).astype(float)

    def flipped_value(self, bits: BitString, current: float, flips: np.ndarray) -> float:
        return cut_delta(self.graph, bits, int(current), flips)


class ModularFunction(SetFunction):
    """`f(S) = sum(weights[i] for i in S)`."""

    def __init__(self, weights: np.ndarray) -> None:
        weights = np.asarray(weights, dtype=float)
        super().__init__(len(weights))
        self.weights = weights
        self.integral = bool(np.all(weights == np.round(weights)))

    def value(self, bits: BitString) -> float:
        return float(self.weights[self.check_bits(bits)].sum())

    def values(self, batch: BitString) -> np.ndarray:
        return np.asarray(batch, dtype=float) @ self.weights

    def flipped_value(self, bits: BitString, current: float, flips: np.ndarray) -> float:
        signs = np.where(np.asarray(bits)[flips], -1.0, 1.0)
        return current + float(signs @ self.weights[flips])


class CoverageFunction(SetFunction):
    """Weighted coverage: element `i` covers the universe items `incidence[i]`."""

    def __init__(self, incidence: np.ndarray, weights: Optional[np.ndarray] = None) -> None:
        incidence = np.asarray(incidence, dtype=bool)
        super().__init__(incidence.shape[0])
        self.incidence = incidence
        self.weights = (
            np.ones(incidence.shape[1]) if weights is None else np.asarray(weights, dtype=float)
        )
        self.integral = bool(np.all(self.weights == np.round(self.weights)))

    def value(self, bits: BitString) -> float:
        covered = self.incidence[self.check_bits(bits)].any(axis=0)
        return float(self.weights[covered].sum())

    def values(self, batch: BitString) -> np.ndarray:
        covered = (np.asarray(batch, dtype=float) @ self.incidence.astype(float)) > 0
        return covered.astype(float) @ self.weights


class PotentialFunction(SetFunction):
    """`g(U) = f(U) + epsilon * opt / n`: a positive shift of `f`."""

    def __init__(self, base: SetFunction, epsilon: float, opt: float) -> None:
        if not epsilon > 0:
            raise ValueError(f"The potential needs epsilon > 0, got {epsilon}.")
        super().__init__(base.n)
        self.base = base
        self.epsilon = epsilon
        self.opt = opt
        self.shift = epsilon * opt / base.n

    def value(self, bits: BitString) -> float:
        return self.base.value(bits) + self.shift

    def values(self, batch: BitString) -> np.ndarray:
        return self.base.values(batch) + self.shift

    def flipped_value(self, bits: BitString, current: float, flips: np.ndarray) -> float:
        return self.base.flipped_value(bits, current - self.shift, flips) + self.shift


def potential_value(g: PotentialFunction, U: BitString) -> float:
    return g.value(U)


def random_digraph(n: int, p: float, rng: np.random.Generator) -> DirectedGraph:
    """Erdős–Rényi digraph: every ordered pair is an arc with probability `p`."""
    adjacency = rng.random((n, n)) < p
    np.fill_diagonal(adjacency, False)
    sources, targets = np.nonzero(adjacency)
    return DirectedGraph(n, sources, targets)


def random_undirected_graph(n: int, p: float, rng: np.random.Generator) -> DirectedGraph:
    """Erdős–Rényi graph stored as opposite arc pairs, so its cut function is symmetric."""
    upper = np.triu(rng.random((n, n)) < p, k=1)
    sources, targets = np.nonzero(upper)
    return DirectedGraph.from_arcs(zip(sources, targets), n=n, undirected=True)


def random_coverage(
    n: int, universe: int, rng: np.random.Generator, density: float = 0.3
) -> CoverageFunction:
    incidence = rng.random((n, universe)) < density
    weights = rng.integers(1, 10, size=universe)
    return CoverageFunction(incidence, weights)


def _check_size(f: SetFunction, limit: int, what: str) -> None:
    if f.n > limit:
        raise OracleSizeError(f"{what} is limited to n <= {limit}, got n={f.n}.")


def all_values(f: SetFunction) -> np.ndarray:
    """Evaluates `f` on every subset; entry `mask` holds the value of that subset."""
    return np.concatenate([f.values(batch) for batch in enumerate_subsets(f.n)])


def brute_force_max(
    f: SetFunction, constraint: Optional[FeasibilityOracle] = None
) -> Tuple[BitString, float]:
    """Exhaustively finds a maximizer of `f` over all (feasible) subsets.

    Ties are broken towards the smallest subset mask.

    Raises:
        OracleSizeError: If `n > 24`.
    """
    _check_size(f, BRUTE_FORCE_MAX_N, "Brute-force maximization")
    independent_rows = getattr(constraint, "independent_rows", None)

    best_bits: Optional[BitString] = None
    best_value = -math.inf
    for batch in enumerate_subsets(f.n):
        if constraint is not None:
            feasible = (
                independent_rows(batch)
                if independent_rows is not None
                else np.array([constraint(row) for row in batch], dtype=bool)
            )
            batch = batch[feasible]
            if not len(batch):
                continue
        values = f.values(batch)
        index = int(np.argmax(values))
        if values[index] > best_value:
            best_value, best_bits = float(values[index]), batch[index].copy()

    if best_bits is None:
        raise ValueError("No feasible subset exists.")
    return best_bits, best_value


def is_submodular(f: SetFunction, tolerance: float = REAL_TOLERANCE) -> bool:
    """Checks `f(S) + f(T) >= f(S | T) + f(S & T)` for all pairs, and diminishing returns.

    Raises:
        OracleSizeError: If `n > 12`.
    """
    _check_size(f, SUBMODULARITY_MAX_N, "The submodularity check")
    values = all_values(f)
    masks = np.arange(values.size, dtype=np.int64)

    for start in range(0, values.size, 256):
        S = masks[start : start + 256, None]
        lhs = values[S] + values[None, :]
        rhs = values[S | masks[None, :]] + values[S & masks[None, :]]
        if np.any(lhs < rhs - tolerance):
            return False

    # Diminishing returns: f(S + x) - f(S) >= f(S + x + y) - f(S + y).
    for x in range(f.n):
        for y in range(f.n):
            if x == y:
                continue
            bx, by = 1 << x, 1 << y
            S = masks[(masks & (bx | by)) == 0]
            gain = values[S | bx] - values[S]
            later_gain = values[S | bx | by] - values[S | by]
            if np.any(gain < later_gain - tolerance):
                return False
    return True


def improves(new: float, current: float, alpha: float) -> bool:
    """Whether moving from `current` to `new` is a `(1 + alpha)` improvement."""
    if current <= 0:
        return new > current
    return new >= (1 + alpha) * current


def move_budget(n: int, epsilon: float) -> int:
    """Safety bound on local-search moves; exceeding it signals a non-termination bug."""
    return math.ceil(10 * (n * n / epsilon) * math.log(n / epsilon + 2))


def _neighbors(S: BitString) -> Tuple[BitString, np.ndarray]:
    """Single-element neighbors of `S`: removals first, then additions, in index order."""
    n = len(S)
    order = np.concatenate((np.flatnonzero(S), np.flatnonzero(~S)))
    batch = np.repeat(S[None, :], n, axis=0)
    batch[np.arange(n), order] ^= True
    return batch, order


def is_local_optimum(
    f: SetFunction, S: BitString, alpha: float, tolerance: float = REAL_TOLERANCE
) -> bool:
    """Whether no single addition or removal beats `(1 + alpha) * f(S)`."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}.")
    S = f.check_bits(S)
    bound = (1 + alpha) * f.value(S)
    batch, _ = _neighbors(S)
    return bool(np.all(f.values(batch) <= bound + tolerance))


def find_local_optimum(
    f: SetFunction, alpha: float, start: BitString, max_moves: int
) -> BitString:
    """Applies the first `(1 + alpha)`-improving single-element move until none is left.

    Raises:
        LocalSearchError: If more than `max_moves` moves are made.
    """
    S = f.check_bits(start).copy()
    current = f.value(S)
    for moves in range(max_moves + 1):
        batch, _ = _neighbors(S)
        values = f.values(batch)
        candidates = [i for i, value in enumerate(values) if improves(value, current, alpha)]
        if not candidates:
            logger.debug("Local optimum with value {} after {} moves", current, moves)
            return S
        S, current = batch[candidates[0]].copy(), float(values[candidates[0]])
    raise LocalSearchError(f"Local search did not terminate within {max_moves} moves.")


def local_search_unconstrained(f: SetFunction, epsilon: float, start: BitString) -> BitString:
    """Finds a `(1 + epsilon / n**2)`-local optimum and returns the better of it and its complement."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}.")
    S = find_local_optimum(f, epsilon / f.n ** 2, start, move_budget(f.n, epsilon))
    other = complement(S)
    return other if f.value(other) > f.value(S) else S


def local_optima(f: SetFunction, alpha: float, tolerance: float = REAL_TOLERANCE) -> List[BitString]:
    """Enumerates every `(1 + alpha)`-local optimum of `f` (n <= 12)."""
    _check_size(f, SUBMODULARITY_MAX_N, "Local optimum enumeration")
    values = all_values(f)
    masks = np.arange(values.size, dtype=np.int64)
    neighbors = masks[:, None] ^ (1 << np.arange(f.n, dtype=np.int64))[None, :]
    optimal = np.all(values[neighbors] <= ((1 + alpha) * values)[:, None] + tolerance, axis=1)
    return list(masks_to_bits(masks[optimal], f.n))


def random_subset_mean(f: SetFunction) -> float:
    """Exact expectation of `f(R)` for a uniformly random subset `R` (n <= 20)."""
    _check_size(f, RANDOM_SUBSET_MAX_N, "The random-subset mean")
    return float(np.mean(all_values(f)))
