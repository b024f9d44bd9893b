"""Closed-form pseudo-Boolean benchmarks: OneMax and Jump."""

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from heavymut.core import BitString, SetFunction, popcount


class JumpParams(BaseModel):
    """Gap size `m` and length `n` of `Jump_{m,n}`, with `1 < m < n`."""

    model_config = ConfigDict(frozen=True)

    m: int
    n: int

    @model_validator(mode="after")
    def _check_gap(self) -> "JumpParams":
        if not 1 < self.m < self.n:
            raise ValueError(f"Jump needs 1 < m < n, got m={self.m}, n={self.n}.")
        return self


def onemax(x: BitString) -> int:
    return popcount(x)


def jump_of_count(m: int, n: int, ones: int) -> int:
    if ones <= n - m or ones == n:
        return m + ones
    return n - ones


def jump(params: JumpParams, x: BitString) -> int:
    if len(x) != params.n:
        raise ValueError(f"Jump_{params.m},{params.n} needs {params.n} bits, got {len(x)}.")
    return jump_of_count(params.m, params.n, popcount(x))


def _ones_after(bits: BitString, ones: int, flips: np.ndarray) -> int:
    flipped_ones = int(np.count_nonzero(np.asarray(bits)[flips]))
    return ones + len(flips) - 2 * flipped_ones


class OneMax(SetFunction):
    """Number of ones."""

    integral = True

    @property
    def name(self) -> str:
        return f"onemax:{self.n}"

    def value(self, bits: BitString) -> float:
        return onemax(self.check_bits(bits))

    def values(self, batch: BitString) -> np.ndarray:
        return np.count_nonzero(batch, axis=1).astype(float)

    def flipped_value(self, bits: BitString, current: float, flips: np.ndarray) -> float:
        return _ones_after(bits, int(current), flips)


class Jump(SetFunction):
    """`Jump_{m,n}`: OneMax shifted by `m`, with a valley of width `m - 1` before the optimum."""

    integral = True

    def __init__(self, m: int, n: int) -> None:
        self.params = JumpParams(m=m, n=n)
        super().__init__(n)

    @property
    def name(self) -> str:
        return f"jump:{self.params.m}:{self.n}"

    @property
    def optimum(self) -> int:
        return self.params.m + self.n

    def value(self, bits: BitString) -> float:
        return jump(self.params, self.check_bits(bits))

    def values(self, batch: BitString) -> np.ndarray:
        ones = np.count_nonzero(batch, axis=1)
        m, n = self.params.m, self.n
        return np.where((ones <= n - m) | (ones == n), m + ones, n - ones).astype(float)

    def flipped_value(self, bits: BitString, current: float, flips: np.ndarray) -> float:
        # The value alone does not determine the number of ones, so recount it.
        ones = _ones_after(bits, popcount(bits), flips)
        return jump_of_count(self.params.m, self.n, ones)
