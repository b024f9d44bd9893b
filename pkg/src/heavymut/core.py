"""Shared building blocks: bit strings, random sources, spec strings and set functions."""

import abc
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

BitString = np.ndarray
"""A fixed-length boolean numpy vector; also the characteristic vector of a subset."""

BitsLike = Union[BitString, str, Sequence[int]]

# Absolute tolerance for comparisons of real-valued set functions.
REAL_TOLERANCE = 1e-9


class OracleSizeError(ValueError):
    """Raised when an exhaustive oracle is asked for a ground set that is too large."""


class LocalSearchError(RuntimeError):
    """Raised when a local search exceeds its move budget."""


class FitnessMismatchError(AssertionError):
    """Raised when incremental and full fitness evaluation disagree."""


def as_bits(values: BitsLike) -> BitString:
    """Converts a `0`/`1` string, an integer sequence or an array into a bit string.

    Raises:
        ValueError: If the input contains values other than 0 and 1.
    """
    if isinstance(values, str):
        if set(values) - {"0", "1"}:
            raise ValueError(f"Bit strings may only contain 0 and 1, got {values!r}.")
        return np.frombuffer(values.encode("ascii"), dtype=np.uint8) == ord("1")

    array = np.asarray(values)
    if array.dtype == np.bool_:
        return array.astype(bool, copy=True)
    if array.ndim != 1 or not np.isin(array, (0, 1)).all():
        raise ValueError("Bit strings must be one-dimensional and binary.")
    return array.astype(bool)


def to_string(bits: BitString) -> str:
    return "".join("1" if bit else "0" for bit in bits)


def from_indices(indices: Iterable[int], n: int) -> BitString:
    """Builds the characteristic vector of a subset of `range(n)`."""
    bits = np.zeros(n, dtype=bool)
    positions = np.fromiter(indices, dtype=np.int64)
    if positions.size and (positions.min() < 0 or positions.max() >= n):
        raise ValueError(f"Subset elements must lie in [0, {n}).")
    bits[positions] = True
    return bits


def to_indices(bits: BitString) -> List[int]:
    return [int(i) for i in np.flatnonzero(bits)]


def popcount(bits: BitString) -> int:
    return int(np.count_nonzero(bits))


def hamming(x: BitString, y: BitString) -> int:
    """Returns the Hamming distance between two bit strings of equal length.

    Raises:
        ValueError: If the lengths differ.
    """
    if len(x) != len(y):
        raise ValueError(
            f"Hamming distance needs equal lengths, got {len(x)} and {len(y)}."
        )
    return int(np.count_nonzero(x != y))


def complement(bits: BitString) -> BitString:
    return ~np.asarray(bits, dtype=bool)


def flip(bits: BitString, positions: np.ndarray) -> BitString:
    """Returns a copy of `bits` with the given positions flipped."""
    flipped = np.array(bits, dtype=bool, copy=True)
    flipped[positions] ^= True
    return flipped


def make_rng(seed: int) -> np.random.Generator:
    """Creates the random source of a trial.

    The generator is the counter-based Philox bit generator seeded with a 64-bit value,
    so every trial owns an independent, reproducible stream.
    """
    if not 0 <= seed < 2 ** 64:
        raise ValueError(f"Seeds must be unsigned 64-bit integers, got {seed}.")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def derive_seed(master_seed: int, *keys: int) -> int:
    """Mixes a master seed with trial coordinates into a new 64-bit seed."""
    sequence = np.random.SeedSequence([master_seed, *keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def random_bits(n: int, rng: np.random.Generator) -> BitString:
    return rng.integers(0, 2, size=n, dtype=np.uint8).astype(bool)


def split_spec(spec: str) -> Tuple[str, List[str]]:
    """Splits a `name:arg:arg` spec string into its name and arguments."""
    if not spec or not spec.strip():
        raise ValueError("Empty spec string.")
    name, *args = spec.strip().split(":")
    return name.strip().lower(), [arg.strip() for arg in args]


def enumerate_subsets(n: int, chunk_size: int = 1 << 16) -> Iterator[BitString]:
    """Yields all subsets of `range(n)` as boolean matrices, in chunks of rows.

    Row `r` of the overall enumeration has bit `i` set iff bit `i` of the integer `r`
    is set, so the enumeration order is the integer order of the subset masks.
    """
    shifts = np.arange(n, dtype=np.int64)
    total = 1 << n
    for start in range(0, total, chunk_size):
        masks = np.arange(start, min(start + chunk_size, total), dtype=np.int64)
        yield ((masks[:, None] >> shifts) & 1).astype(bool)


def masks_to_bits(masks: np.ndarray, n: int) -> BitString:
    shifts = np.arange(n, dtype=np.int64)
    return ((np.asarray(masks, dtype=np.int64)[..., None] >> shifts) & 1).astype(bool)


class SetFunction(abc.ABC):
    """A function mapping subsets of a ground set `{0, ..., n-1}` to real numbers.

    Subsets are passed as boolean characteristic vectors. Instances are immutable and
    can be shared between concurrent trials.
    """

    #: Whether all values are integers (enables exact target comparison).
    integral: bool = False

    def __init__(self, n: int) -> None:
        if n < 1:
            raise ValueError(f"Ground sets must be non-empty, got n={n}.")
        self._n = n

    @property
    def n(self) -> int:
        return self._n

    @property
    def name(self) -> str:
        return type(self).__name__

    @abc.abstractmethod
    def value(self, bits: BitString) -> float:
        """Evaluates the function on the subset with characteristic vector `bits`."""

    def __call__(self, bits: BitString) -> float:
        return self.value(bits)

    def values(self, batch: BitString) -> np.ndarray:
        """Evaluates every row of a boolean matrix."""
        return np.array([self.value(row) for row in batch], dtype=float)

    def flipped_value(self, bits: BitString, current: float, flips: np.ndarray) -> float:
        """Returns the value after flipping `flips` in `bits`, whose value is `current`.

        Subclasses override this with an incremental computation.
        """
        if len(flips) == 0:
            return current
        return self.value(flip(bits, flips))

    @property
    def has_delta(self) -> bool:
        return type(self).flipped_value is not SetFunction.flipped_value

    def check_bits(self, bits: BitString) -> BitString:
        bits = np.asarray(bits, dtype=bool)
        if bits.shape != (self.n,):
            raise ValueError(
                f"{self.name} is defined on {self.n} elements, got a subset of length {len(bits)}."
            )
        return bits

    def __repr__(self) -> str:
        return f"{self.name}(n={self.n})"


class CallableSetFunction(SetFunction):
    """Wraps a plain callable on bit strings."""

    def __init__(
        self,
        n: int,
        func: Callable[[BitString], float],
        integral: bool = False,
        name: Optional[str] = None,
    ) -> None:
        super().__init__(n)
        self._func = func
        self.integral = integral
        self._name = name or getattr(func, "__name__", "CallableSetFunction")

    @property
    def name(self) -> str:
        return self._name

    def value(self, bits: BitString) -> float:
        return self._func(self.check_bits(bits))
