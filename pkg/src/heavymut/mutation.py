"""Mutation operators on bit strings and their flip-count distributions.

Every operator is immutable and takes an injected `numpy.random.Generator`, so a
single operator instance can be shared by concurrent trials while each trial owns
its random source.
"""

import abc
import functools
import math
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import stats

from heavymut.core import BitString, flip, make_rng


def harmonic(m: int, beta: float) -> float:
    """Returns the generalized harmonic number `sum(j ** -beta for j in 1..m)`.

    Raises:
        ValueError: If `m < 1` or `beta <= 0`.
    """
    if m < 1:
        raise ValueError(f"Harmonic numbers need m >= 1, got {m}.")
    if beta <= 0:
        raise ValueError(f"Harmonic numbers need beta > 0, got {beta}.")
    # Summing the smallest terms first keeps the partial sums accurate.
    terms = np.arange(m, 0, -1, dtype=float) ** -beta
    return math.fsum(terms)


class PowerLawDist:
    """Discrete power law `P[k] = k ** -beta / H` over `{1, ..., support_max}`."""

    def __init__(self, support_max: int, beta: float) -> None:
        if support_max < 1:
            raise ValueError(f"Power laws need a support of at least 1, got {support_max}.")
        if not beta > 1:
            raise ValueError(f"Power laws need beta > 1, got {beta}.")
        self.support_max = support_max
        self.beta = beta
        self.normalizer = harmonic(support_max, beta)

        probabilities = np.arange(1, support_max + 1, dtype=float) ** -beta
        probabilities /= self.normalizer
        cumulative = np.cumsum(probabilities)
        # Rounding must never let a uniform draw fall past the last entry.
        cumulative[-1] = 1.0

        probabilities.setflags(write=False)
        cumulative.setflags(write=False)
        self.probabilities = probabilities
        self.cumulative = cumulative

    def probability(self, k: int) -> float:
        if not 1 <= k <= self.support_max:
            return 0.0
        return float(self.probabilities[k - 1])

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        """Draws values by inverse-CDF lookup (binary search on the cumulative table)."""
        u = rng.random(size)
        return np.searchsorted(self.cumulative, u, side="right") + 1

    def __repr__(self) -> str:
        return f"PowerLawDist(support_max={self.support_max}, beta={self.beta})"


@functools.lru_cache(maxsize=256)
def power_law(support_max: int, beta: float) -> PowerLawDist:
    """Returns the (cached) power-law table for `(support_max, beta)`."""
    return PowerLawDist(support_max, beta)


def sample_flip_count(dist: PowerLawDist, rng: np.random.Generator) -> int:
    return int(dist.sample(rng))


def choose_positions(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draws `k` distinct positions out of `n`, uniformly among all `C(n, k)` sets."""
    if k == 0:
        return np.empty(0, dtype=np.int64)
    return np.sort(rng.choice(n, size=k, replace=False, shuffle=False)).astype(np.int64)


class OperatorKind(str, Enum):
    PMUT = "pmut"
    FMUT = "fmut"
    UNIF = "unif"
    UNIF1 = "unif1"
    CMUT = "cmut"


class OperatorSpec(BaseModel):
    """Parsed form of an operator spec string such as `pmut:1.5` or `unif1`."""

    model_config = ConfigDict(frozen=True)

    kind: OperatorKind
    parameter: Optional[float] = None

    @classmethod
    def parse(cls, text: str) -> "OperatorSpec":
        name, _, argument = text.strip().partition(":")
        try:
            kind = OperatorKind(name.strip().lower())
        except ValueError:
            known = ", ".join(kind.value for kind in OperatorKind)
            raise ValueError(f"Unknown mutation operator {name!r} (known: {known}).") from None
        if not argument:
            return cls(kind=kind)
        try:
            parameter = float(argument)
        except ValueError:
            raise ValueError(f"Operator parameter must be numeric, got {argument!r}.") from None
        return cls(kind=kind, parameter=parameter)


class MutationOperator(abc.ABC):
    """Maps a bit string to a mutated copy of the same length."""

    kind: OperatorKind

    @abc.abstractmethod
    def sample_flips(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Returns the distinct positions to flip in a bit string of length `n`."""

    @abc.abstractmethod
    def sample_counts(
        self, n: int, rng: np.random.Generator, size: int
    ) -> np.ndarray:
        """Draws `size` flip counts at once (the Hamming distance of each offspring)."""

    @abc.abstractmethod
    def flip_distribution(self, n: int) -> np.ndarray:
        """Exact probabilities of the Hamming distances `0..n` between parent and offspring."""

    def validate_for(self, n: int) -> None:
        """Checks that the operator is defined for bit strings of length `n`."""
        if n < 1:
            raise ValueError(f"Bit strings must have positive length, got {n}.")

    def apply(self, x: BitString, rng: np.random.Generator) -> BitString:
        return flip(x, self.sample_flips(len(x), rng))

    def __call__(self, x: BitString, rng: np.random.Generator) -> BitString:
        return self.apply(x, rng)

    @property
    @abc.abstractmethod
    def spec(self) -> str:
        """Canonical spec string of this operator."""

    def __str__(self) -> str:
        return self.spec

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec!r})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, MutationOperator) and other.spec == self.spec

    def __hash__(self) -> int:
        return hash(self.spec)


def _format(value: float) -> str:
    return f"{value:g}"


class PMut(MutationOperator):
    """Flips exactly `k` bits, with `k` drawn from a power law over `{1, ..., n}`."""

    kind = OperatorKind.PMUT

    def __init__(self, beta: float) -> None:
        if not beta > 1:
            raise ValueError(f"pmut requires beta > 1, got {beta}.")
        self.beta = beta

    @property
    def spec(self) -> str:
        return f"pmut:{_format(self.beta)}"

    def flip_count(self, n: int, rng: np.random.Generator) -> int:
        return sample_flip_count(power_law(n, self.beta), rng)

    def sample_flips(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return choose_positions(n, self.flip_count(n, rng), rng)

    def sample_counts(self, n: int, rng: np.random.Generator, size: int) -> np.ndarray:
        return power_law(n, self.beta).sample(rng, size)

    def flip_distribution(self, n: int) -> np.ndarray:
        return np.concatenate(([0.0], power_law(n, self.beta).probabilities))


class FMut(MutationOperator):
    """Draws a rate `alpha` from a power law over `{1, ..., n // 2}`, then flips each bit with probability `alpha / n`."""

    kind = OperatorKind.FMUT

    def __init__(self, beta: float) -> None:
        if not beta > 1:
            raise ValueError(f"fmut requires beta > 1, got {beta}.")
        self.beta = beta

    @property
    def spec(self) -> str:
        return f"fmut:{_format(self.beta)}"

    def validate_for(self, n: int) -> None:
        if n < 2:
            raise ValueError(f"fmut needs bit strings of length >= 2, got {n}.")

    def rate_index(self, n: int, rng: np.random.Generator) -> int:
        return sample_flip_count(power_law(n // 2, self.beta), rng)

    def sample_flips(self, n: int, rng: np.random.Generator) -> np.ndarray:
        self.validate_for(n)
        alpha = self.rate_index(n, rng)
        # A binomial count followed by a uniform set of positions is the same
        # distribution as flipping each bit independently with probability alpha / n.
        return choose_positions(n, int(rng.binomial(n, alpha / n)), rng)

    def sample_counts(self, n: int, rng: np.random.Generator, size: int) -> np.ndarray:
        self.validate_for(n)
        alphas = power_law(n // 2, self.beta).sample(rng, size)
        return rng.binomial(n, alphas / n)

    def flip_distribution(self, n: int) -> np.ndarray:
        self.validate_for(n)
        dist = power_law(n // 2, self.beta)
        distances = np.arange(n + 1)
        rates = np.arange(1, dist.support_max + 1) / n
        pmf = stats.binom.pmf(distances[None, :], n, rates[:, None])
        return dist.probabilities @ pmf


class Unif(MutationOperator):
    """Flips each bit independently with probability `p / n`.

    With `at_least_one` set, offspring equal to the parent are rejected and resampled.
    """

    def __init__(self, p: float = 1.0, at_least_one: bool = False) -> None:
        if not p > 0:
            raise ValueError(f"unif requires p > 0, got {p}.")
        self.p = p
        self.at_least_one = at_least_one
        self.kind = OperatorKind.UNIF1 if at_least_one else OperatorKind.UNIF

    @property
    def spec(self) -> str:
        if self.at_least_one:
            return "unif1" if self.p == 1 else f"unif1:{_format(self.p)}"
        return f"unif:{_format(self.p)}"

    def validate_for(self, n: int) -> None:
        super().validate_for(n)
        if self.p > n / 2:
            raise ValueError(f"unif requires p <= n/2, got p={self.p} for n={n}.")

    def sample_flips(self, n: int, rng: np.random.Generator) -> np.ndarray:
        count = rng.binomial(n, self.p / n)
        while self.at_least_one and count == 0:
            count = rng.binomial(n, self.p / n)
        return choose_positions(n, int(count), rng)

    def sample_counts(self, n: int, rng: np.random.Generator, size: int) -> np.ndarray:
        counts = rng.binomial(n, self.p / n, size)
        if self.at_least_one:
            zeros = np.flatnonzero(counts == 0)
            while zeros.size:
                counts[zeros] = rng.binomial(n, self.p / n, zeros.size)
                zeros = zeros[counts[zeros] == 0]
        return counts

    def flip_distribution(self, n: int) -> np.ndarray:
        pmf = stats.binom.pmf(np.arange(n + 1), n, self.p / n)
        if self.at_least_one:
            pmf[0] = 0.0
            pmf /= pmf.sum()
        return pmf


class CMut(MutationOperator):
    """With probability `p` flips one bit, otherwise `k` uniform in `{2, ..., n}` distinct bits."""

    kind = OperatorKind.CMUT

    def __init__(self, p: float) -> None:
        if not 0 < p < 1:
            raise ValueError(f"cmut requires 0 < p < 1, got {p}.")
        self.p = p

    @property
    def spec(self) -> str:
        return f"cmut:{_format(self.p)}"

    def validate_for(self, n: int) -> None:
        if n < 2:
            raise ValueError(f"cmut needs bit strings of length >= 2, got {n}.")

    def sample_flips(self, n: int, rng: np.random.Generator) -> np.ndarray:
        self.validate_for(n)
        if rng.random() < self.p:
            return choose_positions(n, 1, rng)
        return choose_positions(n, int(rng.integers(2, n + 1)), rng)

    def sample_counts(self, n: int, rng: np.random.Generator, size: int) -> np.ndarray:
        self.validate_for(n)
        single = rng.random(size) < self.p
        return np.where(single, 1, rng.integers(2, n + 1, size))

    def flip_distribution(self, n: int) -> np.ndarray:
        self.validate_for(n)
        probabilities = np.full(n + 1, (1 - self.p) / (n - 1))
        probabilities[0] = 0.0
        probabilities[1] = self.p
        return probabilities


def make_operator(spec: Union[str, OperatorSpec]) -> MutationOperator:
    """Builds an operator from its spec string (`pmut:1.5`, `fmut:2.5`, `unif:1`, `unif1`, `cmut:0.5`).

    Raises:
        ValueError: If the spec is unknown or its parameter is out of range.
    """
    if isinstance(spec, str):
        spec = OperatorSpec.parse(spec)

    kind, parameter = spec.kind, spec.parameter
    if kind in (OperatorKind.PMUT, OperatorKind.FMUT, OperatorKind.CMUT):
        if parameter is None:
            raise ValueError(f"{kind.value} needs a numeric parameter, e.g. {kind.value}:1.5.")
    if kind is OperatorKind.PMUT:
        return PMut(parameter)  # type: ignore
    if kind is OperatorKind.FMUT:
        return FMut(parameter)  # type: ignore
    if kind is OperatorKind.CMUT:
        return CMut(parameter)  # type: ignore
    p = 1.0 if parameter is None else parameter
    return Unif(p, at_least_one=kind is OperatorKind.UNIF1)


def pmut(x: BitString, beta: float, rng: np.random.Generator) -> BitString:
    return PMut(beta)(x, rng)


def fmut(x: BitString, beta: float, rng: np.random.Generator) -> BitString:
    return FMut(beta)(x, rng)


def unif(x: BitString, p: float, at_least_one: bool, rng: np.random.Generator) -> BitString:
    operator = Unif(p, at_least_one=at_least_one)
    operator.validate_for(len(x))
    return operator(x, rng)


def cmut(x: BitString, p: float, rng: np.random.Generator) -> BitString:
    return CMut(p)(x, rng)


# The seven operators compared in the directed-cut study.
DEFAULT_OPERATORS: List[str] = [
    "unif1",
    "fmut:1.5",
    "fmut:2.5",
    "fmut:3.5",
    "pmut:1.5",
    "pmut:2.5",
    "pmut:3.5",
]


def flip_count_histogram(
    operator: MutationOperator, n: int, draws: int, seed: int
) -> np.ndarray:
    """Counts how often each Hamming distance `0..n` occurs over `draws` offspring."""
    operator.validate_for(n)
    rng = make_rng(seed)
    counts = operator.sample_counts(n, rng, draws)
    return np.bincount(counts, minlength=n + 1)


def chi_square_fit(
    operator: MutationOperator, n: int, histogram: np.ndarray, min_expected: float = 5.0
) -> Tuple[float, float]:
    """Chi-square goodness of fit of a flip-count histogram against the exact distribution.

    Distances whose expected count falls below `min_expected` are pooled into one cell.

    Returns:
        The chi-square statistic and its p-value.
    """
    draws = histogram.sum()
    expected = operator.flip_distribution(n) * draws
    support = expected > 0
    observed, expected = histogram[support].astype(float), expected[support]

    large = expected >= min_expected
    if not large.all():
        observed = np.append(observed[large], observed[~large].sum())
        expected = np.append(expected[large], expected[~large].sum())
        if expected[-1] == 0:
            observed, expected = observed[:-1], expected[:-1]
    statistic, p_value = stats.chisquare(observed, expected * observed.sum() / expected.sum())
    return float(statistic), float(p_value)


def expected_flip_distribution(operator: MutationOperator, n: int) -> np.ndarray:
    """Exact probabilities of the Hamming distances `0..n` produced by `operator`."""
    operator.validate_for(n)
    return operator.flip_distribution(n)
