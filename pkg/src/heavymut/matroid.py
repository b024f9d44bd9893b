"""Matroid constraints: independence oracles, rank, the constrained fitness and swap local search."""

import abc
import itertools
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence

import numpy as np
from loguru import logger

from heavymut.core import (
    REAL_TOLERANCE,
    BitString,
    LocalSearchError,
    OracleSizeError,
    SetFunction,
    enumerate_subsets,
    popcount,
    split_spec,
)
from heavymut.submodular import improves, move_budget

EXCHANGE_MAX_DIFFERENCE = 8
AXIOM_CHECK_MAX_N = 10


class Matroid(abc.ABC):
    """Set system on `{0, ..., n-1}` given by an independence oracle."""

    def __init__(self, n: int) -> None:
        self.n = n

    @abc.abstractmethod
    def is_independent(self, bits: BitString) -> bool:
        """Independence oracle."""

    def __call__(self, bits: BitString) -> bool:
        return self.is_independent(bits)

    def independent_rows(self, batch: BitString) -> np.ndarray:
        return np.array([self.is_independent(row) for row in batch], dtype=bool)

    def rank(self, bits: BitString) -> int:
        """Greedy rank: scan the elements of `bits` in index order, keep those that stay independent."""
        kept = np.zeros(self.n, dtype=bool)
        size = 0
        for element in np.flatnonzero(bits):
            kept[element] = True
            if self.is_independent(kept):
                size += 1
            else:
                kept[element] = False
        return size

    def _check(self, bits: BitString) -> BitString:
        bits = np.asarray(bits, dtype=bool)
        if bits.shape != (self.n,):
            raise ValueError(f"Matroid has {self.n} elements, got a subset of length {len(bits)}.")
        return bits


class UniformMatroid(Matroid):
    """All subsets with at most `k` elements."""

    def __init__(self, n: int, k: int) -> None:
        if k < 0:
            raise ValueError(f"Uniform matroids need k >= 0, got {k}.")
        super().__init__(n)
        self.k = k

    def is_independent(self, bits: BitString) -> bool:
        return popcount(self._check(bits)) <= self.k

    def independent_rows(self, batch: BitString) -> np.ndarray:
        return np.count_nonzero(batch, axis=1) <= self.k

    def rank(self, bits: BitString) -> int:
        return min(popcount(self._check(bits)), self.k)

    def __repr__(self) -> str:
        return f"UniformMatroid(n={self.n}, k={self.k})"


class PartitionMatroid(Matroid):
    """At most `capacities[b]` elements from each block `b`; blocks partition the ground set."""

    def __init__(self, n: int, blocks: Sequence[Sequence[int]], capacities: Sequence[int]) -> None:
        super().__init__(n)
        if len(blocks) != len(capacities):
            raise ValueError("Every block needs exactly one capacity.")
        block_of = np.full(n, -1, dtype=np.int64)
        for index, block in enumerate(blocks):
            for element in block:
                if not 0 <= element < n:
                    raise ValueError(f"Block element {element} is outside [0, {n}).")
                if block_of[element] != -1:
                    raise ValueError(f"Element {element} belongs to more than one block.")
                block_of[element] = index
        missing = np.flatnonzero(block_of == -1)
        if missing.size:
            raise ValueError(f"Elements {missing.tolist()} are not in any block.")
        if any(capacity < 0 for capacity in capacities):
            raise ValueError("Block capacities must be non-negative.")
        self.block_of = block_of
        self.capacities = np.asarray(capacities, dtype=np.int64)

    def is_independent(self, bits: BitString) -> bool:
        counts = np.bincount(self.block_of[self._check(bits)], minlength=len(self.capacities))
        return bool(np.all(counts <= self.capacities))

    def independent_rows(self, batch: BitString) -> np.ndarray:
        one_hot = np.eye(len(self.capacities), dtype=np.int64)[self.block_of]
        counts = np.asarray(batch, dtype=np.int64) @ one_hot
        return np.all(counts <= self.capacities, axis=1)

    def __repr__(self) -> str:
        return f"PartitionMatroid(n={self.n}, blocks={len(self.capacities)})"


class ExplicitMatroid(Matroid):
    """Matroid given by the list of its independent sets (small test instances)."""

    def __init__(self, n: int, independent_sets: Iterable[Iterable[int]]) -> None:
        super().__init__(n)
        self.independent_sets: FrozenSet[FrozenSet[int]] = frozenset(
            frozenset(int(e) for e in members) for members in independent_sets
        )

    def is_independent(self, bits: BitString) -> bool:
        return frozenset(np.flatnonzero(self._check(bits)).tolist()) in self.independent_sets

    def verify_axioms(self) -> bool:
        """Checks the empty set, downward closure and the exchange axiom (n <= 10)."""
        if self.n > AXIOM_CHECK_MAX_N:
            raise OracleSizeError(f"Axiom checks are limited to n <= {AXIOM_CHECK_MAX_N}.")
        family = self.independent_sets
        if frozenset() not in family:
            return False
        for members in family:
            if any(members - {element} not in family for element in members):
                return False
        for S, T in itertools.product(family, repeat=2):
            if len(S) < len(T) and not any(S | {x} in family for x in T - S):
                return False
        return True


def rank(m: Matroid, S: BitString) -> int:
    return m.rank(S)


def parse_partition_blocks(text: str, n: int, ids: Optional[Sequence[int]] = None) -> PartitionMatroid:
    """Reads a block file: one `block_id capacity member...` line per block, `#` comments.

    Members are bit positions `0..n-1`. With `ids`, members are instead looked up in
    `ids` (for graphs, the original vertex ids before compaction) and mapped to their
    positions.
    """
    position = None if ids is None else {int(vertex): index for index, vertex in enumerate(ids)}
    blocks: Dict[str, List[int]] = {}
    capacities: Dict[str, int] = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) < 2:
            raise ValueError(f"line {line_number}: expected 'block_id capacity member...'.")
        block_id = fields[0]
        if block_id in blocks:
            raise ValueError(f"line {line_number}: block {block_id!r} is defined twice.")
        try:
            capacities[block_id] = int(fields[1])
            members = [int(member) for member in fields[2:]]
        except ValueError:
            raise ValueError(f"line {line_number}: capacity and members must be integers.") from None
        if position is not None:
            unknown = [member for member in members if member not in position]
            if unknown:
                raise ValueError(f"line {line_number}: unknown vertex ids {unknown}.")
            members = [position[member] for member in members]
        blocks[block_id] = members
    return PartitionMatroid(n, list(blocks.values()), list(capacities.values()))


def make_matroid(spec: str, n: int, ids: Optional[Sequence[int]] = None) -> Matroid:
    """Builds `uniform:<k>`, `partition:<blockfile>` or `partition-ids:<blockfile>`.

    `partition-ids` block files list ids from `ids` (default `0..n-1`) instead of positions.
    """
    name, args = split_spec(spec)
    if name == "uniform" and len(args) == 1:
        try:
            return UniformMatroid(n, int(args[0]))
        except ValueError as ex:
            raise ValueError(f"Invalid uniform constraint {spec!r}: {ex}") from None
    if name in ("partition", "partition-ids") and args:
        text = Path(":".join(args)).read_text(encoding="utf-8")
        if name == "partition":
            return parse_partition_blocks(text, n)
        return parse_partition_blocks(text, n, range(n) if ids is None else ids)
    raise ValueError(
        f"Unknown constraint {spec!r} (expected uniform:<k>, partition:<blockfile> or partition-ids:<blockfile>)."
    )


class ConstrainedFitness(SetFunction):
    """`z(C) = f(C)` for independent `C`, else `rank(C) - |C|` (always negative)."""

    def __init__(self, f: SetFunction, matroid: Matroid) -> None:
        if f.n != matroid.n:
            raise ValueError(f"Function has {f.n} elements, matroid has {matroid.n}.")
        super().__init__(f.n)
        self.f = f
        self.matroid = matroid
        self.integral = f.integral

    @property
    def name(self) -> str:
        return f"{self.f.name}+matroid"

    def value(self, bits: BitString) -> float:
        bits = self.check_bits(bits)
        if self.matroid.is_independent(bits):
            return self.f.value(bits)
        return float(self.matroid.rank(bits) - popcount(bits))

    def values(self, batch: BitString) -> np.ndarray:
        batch = np.asarray(batch, dtype=bool)
        feasible = self.matroid.independent_rows(batch)
        result = np.empty(len(batch))
        if feasible.any():
            result[feasible] = self.f.values(batch[feasible])
        for row in np.flatnonzero(~feasible):
            result[row] = self.matroid.rank(batch[row]) - popcount(batch[row])
        return result


def constrained_fitness(z: ConstrainedFitness, C: BitString) -> float:
    return z.value(C)


def _swap_neighbors(m: Matroid, S: BitString) -> BitString:
    """Feasible neighbors of independent `S`: deletions, insertions, then swaps, in index order."""
    inside, outside = np.flatnonzero(S), np.flatnonzero(~S)
    rows: List[BitString] = []
    for u in inside:
        row = S.copy()
        row[u] = False
        rows.append(row)
    for v in outside:
        row = S.copy()
        row[v] = True
        rows.append(row)
    for u in inside:
        for v in outside:
            row = S.copy()
            row[u], row[v] = False, True
            rows.append(row)
    if not rows:
        return np.empty((0, m.n), dtype=bool)
    batch = np.array(rows)
    return batch[m.independent_rows(batch)]


def is_local_optimum_constrained(
    f: SetFunction, m: Matroid, S: BitString, alpha: float, tolerance: float = REAL_TOLERANCE
) -> bool:
    """Whether no feasible deletion, insertion or swap beats `(1 + alpha) * f(S)`.

    Raises:
        ValueError: If `S` is not independent.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}.")
    S = f.check_bits(S)
    if not m.is_independent(S):
        raise ValueError("Local optimality is only defined for independent sets.")
    batch = _swap_neighbors(m, S)
    bound = (1 + alpha) * f.value(S)
    return bool(np.all(f.values(batch) <= bound + tolerance)) if len(batch) else True


def local_search_matroid(f: SetFunction, m: Matroid, epsilon: float, start: BitString) -> BitString:
    """Applies `(1 + epsilon / n**2)`-improving deletions, insertions and swaps until none is left.

    Raises:
        ValueError: If `start` is not independent.
        LocalSearchError: If the move budget is exceeded.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}.")
    S = f.check_bits(start).copy()
    if not m.is_independent(S):
        raise ValueError("Constrained local search must start from an independent set.")

    alpha = epsilon / f.n ** 2
    max_moves = move_budget(f.n, epsilon)
    current = f.value(S)
    for moves in range(max_moves + 1):
        batch = _swap_neighbors(m, S)
        values = f.values(batch) if len(batch) else np.empty(0)
        move = next((i for i, value in enumerate(values) if improves(value, current, alpha)), None)
        if move is None:
            logger.debug("Constrained local optimum with value {} after {} moves", current, moves)
            return S
        S, current = batch[move].copy(), float(values[move])
    raise LocalSearchError(f"Constrained local search did not terminate within {max_moves} moves.")


def verify_exchange_mapping(m: Matroid, I: BitString, J: BitString) -> bool:
    """Searches for `pi: J - I -> (I - J) + {None}` with `(I - pi(b)) + b` independent for all `b`
    and every element of `I - J` used at most once.

    Raises:
        ValueError: If `I` or `J` is dependent.
        OracleSizeError: If `|J - I| > 8`.
    """
    I, J = np.asarray(I, dtype=bool), np.asarray(J, dtype=bool)
    if not (m.is_independent(I) and m.is_independent(J)):
        raise ValueError("The exchange mapping needs two independent sets.")
    incoming = np.flatnonzero(J & ~I).tolist()
    outgoing = np.flatnonzero(I & ~J).tolist()
    if len(incoming) > EXCHANGE_MAX_DIFFERENCE:
        raise OracleSizeError(f"Exchange mapping search is limited to |J - I| <= {EXCHANGE_MAX_DIFFERENCE}.")

    def exchange_ok(b: int, e: Optional[int]) -> bool:
        candidate = I.copy()
        candidate[b] = True
        if e is not None:
            candidate[e] = False
        return m.is_independent(candidate)

    options = {b: [e for e in [*outgoing, None] if exchange_ok(b, e)] for b in incoming}

    def assign(position: int, used: FrozenSet[int]) -> bool:
        if position == len(incoming):
            return True
        for e in options[incoming[position]]:
            if e is None or e not in used:
                if assign(position + 1, used if e is None else used | {e}):
                    return True
        return False

    return assign(0, frozenset())


def independent_sets(m: Matroid) -> List[BitString]:
    """Lists every independent set of a small matroid (n <= 20)."""
    if m.n > 20:
        raise OracleSizeError("Listing independent sets is limited to n <= 20.")
    return [row for batch in enumerate_subsets(m.n) for row in batch[m.independent_rows(batch)]]

