"""Seeded construction of the benchmark instances.

Random families draw an ``N x (n+1)`` matrix ``A``; row ``i`` gives the
objective ``|<a_i, x> - b_i|`` with ``a_i`` the first ``n`` entries and
``b_i`` the last.  All instances use the unit Euclidean ball, start at
``(1, ..., 1) / sqrt(n)`` and take ``theta0 = 3``.

Sampling is pinned down so a seed means the same matrix everywhere:
64-bit words come from PCG64 (``numpy.random.PCG64(seed).random_raw``),
``u = (word >> 11) * 2**-53`` is uniform on ``[0, 1)``, and entries are
filled row-major with

* normal:      Box-Muller ``sqrt(-2 ln(1 - u1)) cos(2 pi u2)``, words taken in
  (u1, u2) pairs, one entry per pair
* uniform:     ``u``
* exponential: ``-ln(1 - u)``
* gumbel:      ``1 - 2 ln(-ln(u'))`` with ``u' = ((word >> 11) + 0.5) * 2**-53``
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InputError
from .instance import ProblemInstance
from .oracles import AffineAbsObjective, MaxAffineConstraint, SqrtQuadraticObjective
from .prox import ProxSetup
from .solver import RunConfig

THETA0 = 3.0
REMARK4_EPS = 0.5
REMARK4_N = 3
DIMENSION = 10

#: N used for each random family in the reference experiments.
PAPER_N = {"normal": 3000, "uniform": 6000, "exponential": 7000, "gumbel": 10000}


class Family(str, Enum):
    NORMAL = "normal"
    UNIFORM = "uniform"
    EXPONENTIAL = "exponential"
    GUMBEL = "gumbel"
    REMARK4 = "remark4"

    @classmethod
    def parse(cls, value) -> Family:
        """Accept a family name or an example label ``1``-``4`` / ``remark4``."""
        if isinstance(value, cls):
            return value
        by_example = {"1": cls.NORMAL, "2": cls.UNIFORM, "3": cls.EXPONENTIAL, "4": cls.GUMBEL}
        key = str(value).strip().lower()
        if key in by_example:
            return by_example[key]
        try:
            return cls(key)
        except ValueError:
            raise InputError(f"unknown family {value!r}") from None

    @property
    def example(self) -> str:
        if self is Family.REMARK4:
            return "remark4"
        return str(list(Family).index(self) + 1)


@dataclass(frozen=True)
class GeneratorSpec:
    family: Family
    N: int = 1
    dimension: int = DIMENSION
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if self.family is Family.REMARK4:
            object.__setattr__(self, "N", REMARK4_N)
            object.__setattr__(self, "dimension", DIMENSION)
        if int(self.N) != self.N or self.N < 1:
            raise InputError(f"N must be a positive integer, got {self.N}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise InputError(f"dimension must be a positive integer, got {self.dimension}")


def constraint_rows(dimension: int = DIMENSION) -> np.ndarray:
    """Rows ``(1, ..., 1)``, ``(1, 2, ..., n)`` and ``(1, 2, 4, 6, ..., 2(n-1))``."""
    j = np.arange(1, dimension + 1, dtype=float)
    third = np.where(j == 1, 1.0, 2.0 * (j - 1))
    return np.stack([np.ones(dimension), j, third])


def remark4_constraint() -> MaxAffineConstraint:
    j = np.arange(1, DIMENSION + 1, dtype=float)
    return MaxAffineConstraint(np.stack([j, 10 * j, 50 * j]), [1.0, 0.0, 0.0])


def remark4_forms(dimension: int = DIMENSION) -> list[np.ndarray]:
    """Quadratic forms of the three square-root objectives.

    ``sum_{i<n} (x_i + x_{i+1})^2``, ``0.1 (sum x_i^2 + sum_{i<n} x_i x_{i+1})``
    and ``sum x_i^2``.
    """
    n = dimension
    pair_sum = np.zeros((n, n))
    for i in range(n - 1):
        pair_sum[i : i + 2, i : i + 2] += 1.0
    off = np.eye(n, k=1) + np.eye(n, k=-1)
    banded = 0.1 * (np.eye(n) + 0.5 * off)
    return [pair_sum, banded, np.eye(n)]


def start_point(dimension: int) -> np.ndarray:
    return np.full(dimension, 1.0 / math.sqrt(dimension))


def _uniform_words(bitgen: np.random.PCG64, size: int) -> np.ndarray:
    return bitgen.random_raw(size) >> np.uint64(11)


def sample_matrix(family: Family, rows: int, cols: int, seed: int) -> np.ndarray:
    """Draw a ``rows x cols`` matrix from ``family`` with the pinned transforms."""
    family = Family.parse(family)
    bitgen = np.random.PCG64(seed)
    size = rows * cols
    unit = 2.0**-53
    if family is Family.NORMAL:
        words = _uniform_words(bitgen, 2 * size).astype(np.float64) * unit
        u1, u2 = words[0::2], words[1::2]
        values = np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)
    elif family is Family.UNIFORM:
        values = _uniform_words(bitgen, size).astype(np.float64) * unit
    elif family is Family.EXPONENTIAL:
        values = -np.log1p(-_uniform_words(bitgen, size).astype(np.float64) * unit)
    elif family is Family.GUMBEL:
        u = (_uniform_words(bitgen, size).astype(np.float64) + 0.5) * unit
        values = 1.0 - 2.0 * np.log(-np.log(u))
    else:
        raise InputError(f"{family.value} is not a random family")
    return values.reshape(rows, cols)


def generate(spec: GeneratorSpec) -> ProblemInstance:
    family = spec.family
    n = spec.dimension
    setup = ProxSetup.euclidean(n, THETA0)
    if family is Family.REMARK4:
        return ProblemInstance(
            objectives=[SqrtQuadraticObjective(f) for f in remark4_forms(n)],
            constraint=remark4_constraint(),
            setup=setup,
            x0=start_point(n),
            label="remark4",
        )
    A = sample_matrix(family, spec.N, n + 1, spec.seed)
    objectives = [AffineAbsObjective(row[:n], row[n]) for row in A]
    return ProblemInstance(
        objectives=objectives,
        constraint=MaxAffineConstraint(constraint_rows(n)),
        setup=setup,
        x0=start_point(n),
        label=f"ex. {family.example}",
    )


def default_run_params(spec: GeneratorSpec) -> RunConfig:
    """``eps = 1/sqrt(N)`` for the random families, ``eps = 0.5, N = 3`` for remark4."""
    if spec.family is Family.REMARK4:
        return RunConfig(REMARK4_N, REMARK4_EPS, seed=spec.seed)
    return RunConfig.from_constant(spec.N, 1.0, seed=spec.seed)
