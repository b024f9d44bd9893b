"""Gaussian mutual information between a feature subset and its complement.

The pipeline is: time series panel -> temporal differences -> sample covariance ->
canonical correlations between the blocks `S` and `V - S` -> mutual information,
used as fitness with a cardinality constraint.
"""

from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, field_validator
from scipy import linalg

from heavymut.core import BitString, SetFunction, popcount

DEFAULT_JITTER = 1e-8
SYMMETRY_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-9


class MIVariant(str, Enum):
    LOG_FORM = "log_form"
    LITERAL = "literal"


class TimeSeriesPanel:
    """`n` series of `T` observations each, stored as an `n x T` matrix."""

    def __init__(self, values: np.ndarray, names: Optional[Sequence[str]] = None) -> None:
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.ndim != 2:
            raise ValueError("Panels are two-dimensional (series x time).")
        if values.shape[1] < 2:
            raise ValueError(f"Panels need at least 2 observations, got {values.shape[1]}.")
        if not np.isfinite(values).all():
            raise ValueError("Panels must not contain missing or infinite values.")
        values.setflags(write=False)
        self.values = values
        self.names: List[str] = (
            list(names) if names is not None else [f"series_{i}" for i in range(len(values))]
        )

    @property
    def series_count(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def __repr__(self) -> str:
        return f"TimeSeriesPanel(n={self.series_count}, T={self.length})"


class CovarianceMatrix:
    """Symmetric positive semidefinite `n x n` matrix."""

    def __init__(self, matrix: np.ndarray) -> None:
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"Covariance matrices are square, got shape {matrix.shape}.")
        if not np.allclose(matrix, matrix.T, rtol=0, atol=SYMMETRY_TOLERANCE):
            raise ValueError("Covariance matrix is not symmetric.")
        matrix = (matrix + matrix.T) / 2
        smallest = float(np.linalg.eigvalsh(matrix)[0])
        if smallest < -PSD_TOLERANCE:
            raise ValueError(
                f"Covariance matrix is not positive semidefinite (smallest eigenvalue {smallest:.3g})."
            )
        matrix.setflags(write=False)
        self.matrix = matrix

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"CovarianceMatrix(n={self.dimension})"


def temporal_diff(panel: TimeSeriesPanel) -> TimeSeriesPanel:
    """First differences `Y[j] = X[j] - X[j-1]` of every series."""
    if panel.length < 2:
        raise ValueError("Temporal differences need at least 2 observations.")
    return TimeSeriesPanel(np.diff(panel.values, axis=1), panel.names)


def covariance(panel: TimeSeriesPanel) -> CovarianceMatrix:
    """Sample covariance with `1 / (T - 1)` normalization."""
    return CovarianceMatrix(np.cov(panel.values, ddof=1))


def _inverse_factor(block: np.ndarray, jitter: float) -> np.ndarray:
    try:
        return linalg.cholesky(block + jitter * np.eye(len(block)), lower=True)
    except linalg.LinAlgError:
        raise ValueError("Covariance block is not positive definite, increase the jitter.") from None


def canonical_correlations(
    sigma: CovarianceMatrix, S: BitString, jitter: float = DEFAULT_JITTER
) -> np.ndarray:
    """Canonical correlations between the blocks `S` and `V - S`, in descending order.

    They are the singular values of `L_S^-1 Sigma_{S,S'} L_S'^-T`, where `L` are the
    Cholesky factors of the jittered diagonal blocks.

    Raises:
        ValueError: If `S` is empty or the whole ground set, or a block is not positive definite.
    """
    S = np.asarray(S, dtype=bool)
    if S.shape != (sigma.dimension,):
        raise ValueError(f"Subset has length {len(S)}, covariance has dimension {sigma.dimension}.")
    size = popcount(S)
    if size == 0 or size == sigma.dimension:
        raise ValueError("Canonical correlations need a proper, non-empty subset.")

    matrix = sigma.matrix
    inside, outside = np.flatnonzero(S), np.flatnonzero(~S)
    factor_in = _inverse_factor(matrix[np.ix_(inside, inside)], jitter)
    factor_out = _inverse_factor(matrix[np.ix_(outside, outside)], jitter)

    whitened = linalg.solve_triangular(factor_in, matrix[np.ix_(inside, outside)], lower=True)
    whitened = linalg.solve_triangular(factor_out, whitened.T, lower=True).T
    singular = np.linalg.svd(whitened, compute_uv=False)
    return np.sqrt(np.clip(singular ** 2, 0.0, 1.0))


def mutual_information(
    sigma: CovarianceMatrix,
    S: BitString,
    variant: MIVariant = MIVariant.LOG_FORM,
    jitter: float = DEFAULT_JITTER,
) -> float:
    """Mutual information between `S` and `V - S`; zero for the empty and the full set.

    `LOG_FORM` is `-1/2 sum log(1 - rho**2 + jitter)`; `LITERAL` is
    `-1/2 sum (1 - rho**2)`.
    """
    size = popcount(S)
    if size == 0 or size == sigma.dimension:
        return 0.0
    rho_squared = canonical_correlations(sigma, S, jitter) ** 2
    if MIVariant(variant) is MIVariant.LITERAL:
        return float(-0.5 * np.sum(1.0 - rho_squared))
    return float(-0.5 * np.sum(np.log(1.0 - rho_squared + jitter)))


def mi_fitness(
    sigma: CovarianceMatrix, k: int, variant: MIVariant, S: BitString, jitter: float = DEFAULT_JITTER
) -> float:
    """Mutual information if `|S| <= k`, else `k - |S|`."""
    if k < 1:
        raise ValueError(f"The cardinality bound must be at least 1, got {k}.")
    size = popcount(S)
    if size > k:
        return float(k - size)
    return mutual_information(sigma, S, variant, jitter)


class MutualInfoFitness(SetFunction):
    """Cardinality-constrained mutual information as an EA fitness."""

    def __init__(
        self,
        sigma: CovarianceMatrix,
        k: int,
        variant: MIVariant = MIVariant.LOG_FORM,
        jitter: float = DEFAULT_JITTER,
    ) -> None:
        if k < 1:
            raise ValueError(f"The cardinality bound must be at least 1, got {k}.")
        super().__init__(sigma.dimension)
        self.sigma = sigma
        self.k = k
        self.variant = MIVariant(variant)
        self.jitter = jitter

    @property
    def name(self) -> str:
        return f"mi:{self.k}:{self.variant.value}"

    def value(self, bits: BitString) -> float:
        return mi_fitness(self.sigma, self.k, self.variant, self.check_bits(bits), self.jitter)


class BlockSpec(BaseModel):
    """A block of `size` series with pairwise correlation `rho`."""

    size: int
    rho: float

    @field_validator("size")
    @classmethod
    def _positive_size(cls, size: int) -> int:
        if size < 1:
            raise ValueError("blocks need at least one series")
        return size

    @field_validator("rho")
    @classmethod
    def _open_interval(cls, rho: float) -> float:
        if not -1 < rho < 1:
            raise ValueError(f"block correlation must satisfy |rho| < 1, got {rho}")
        return rho


def synthetic_panel(
    n: int,
    T: int,
    blocks: Sequence[Union[BlockSpec, Tuple[int, float]]],
    rng: np.random.Generator,
    as_levels: bool = False,
) -> Tuple[TimeSeriesPanel, CovarianceMatrix]:
    """Generates Gaussian series with planted correlated blocks.

    Each block shares one latent factor: series `i` of a block with correlation `rho` is
    `sqrt(rho) * z + sqrt(1 - rho) * e_i`. Negative correlations are supported for blocks
    of two series (opposite loadings). With `as_levels`, the panel holds cumulative sums,
    whose temporal differences are the planted series.

    Returns:
        The panel and the exact covariance of the generator.
    """
    blocks = [block if isinstance(block, BlockSpec) else BlockSpec(size=block[0], rho=block[1]) for block in blocks]
    if n < 2:
        raise ValueError(f"Synthetic panels need n >= 2, got {n}.")
    if T < n + 2:
        raise ValueError(f"Synthetic panels need T >= n + 2, got T={T} for n={n}.")
    if sum(block.size for block in blocks) != n:
        raise ValueError("Block sizes must add up to n.")

    loadings = np.zeros((n, len(blocks)))
    start = 0
    for index, block in enumerate(blocks):
        if block.rho < 0 and block.size != 2:
            raise ValueError("Negative block correlations need blocks of exactly two series.")
        signs = np.ones(block.size)
        if block.rho < 0:
            signs[1] = -1.0
        loadings[start : start + block.size, index] = signs * np.sqrt(abs(block.rho))
        start += block.size
    noise_scale = np.sqrt(1.0 - np.sum(loadings ** 2, axis=1))

    factors = rng.standard_normal((len(blocks), T))
    noise = rng.standard_normal((n, T))
    values = loadings @ factors + noise_scale[:, None] * noise
    if as_levels:
        values = np.cumsum(values, axis=1)

    truth = loadings @ loadings.T
    np.fill_diagonal(truth, 1.0)
    return TimeSeriesPanel(values), CovarianceMatrix(truth)


def read_panel_csv(path: Union[str, Path]) -> TimeSeriesPanel:
    """Reads a CSV with a header of series names and one row per time step."""
    frame = pd.read_csv(path)
    if frame.isna().any().any():
        raise ValueError(f"Panel {path} contains missing values.")
    try:
        values = frame.to_numpy(dtype=float).T
    except ValueError:
        raise ValueError(f"Panel {path} contains non-numeric values.") from None
    return TimeSeriesPanel(values, [str(column) for column in frame.columns])


def load_mi_fitness(
    path: Union[str, Path], k: int, variant: MIVariant = MIVariant.LOG_FORM
) -> MutualInfoFitness:
    """Builds the fitness of a CSV panel: differences, covariance, constrained MI."""
    sigma = covariance(temporal_diff(read_panel_csv(path)))
    return MutualInfoFitness(sigma, k, variant)
