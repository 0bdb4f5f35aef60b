"""Fitness functions and the name registry used by the CLI."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Sequence

import numpy as np

from .errors import ConfigurationError


class UnknownObjectiveError(ConfigurationError):
    pass


@dataclass(frozen=True)
class ObjectiveSpec:
    name: str = "sphere"
    dimension: int = 300
    lower_bound: float = -100.0
    upper_bound: float = 100.0

    def __post_init__(self):
        if self.dimension < 1:
            raise ConfigurationError(f"dimension must be >= 1, got {self.dimension}")
        if not self.lower_bound < self.upper_bound:
            raise ConfigurationError(
                f"lower_bound must be < upper_bound, got [{self.lower_bound}, {self.upper_bound}]"
            )


def sphere(genes: Sequence[float]) -> float:
    """Sum of squares, accumulated in index order."""
    if len(genes) == 0:
        raise ConfigurationError("sphere needs at least one gene")
    total = 0.0
    for g in genes:
        g = float(g)
        total += g * g
    return total


def sphere_rows(genes: np.ndarray) -> np.ndarray:
    """Row-wise sphere over an (n, D) array.

    Columns are added one at a time so each row is summed in exactly the same
    order as :func:`sphere`; the results are bit-identical to the scalar path.
    """
    genes = np.asarray(genes, dtype=np.float64)
    if genes.ndim != 2 or genes.shape[1] == 0:
        raise ConfigurationError(f"expected a non-empty (n, D) array, got shape {genes.shape}")
    sq = genes * genes
    total = np.zeros(genes.shape[0], dtype=np.float64)
    for j in range(genes.shape[1]):
        total += sq[:, j]
    return total


class ObjectiveFn:
    """An objective bound to a fixed dimension.

    Calling it on one gene vector returns a float; :meth:`evaluate_rows`
    evaluates a whole (n, D) block at once and must agree bit-for-bit with
    the scalar call.
    """

    def __init__(self, name: str, dimension: int,
                 scalar: Callable[[Sequence[float]], float],
                 rows: Callable[[np.ndarray], np.ndarray]):
        self.name = name
        self.dimension = dimension
        self._scalar = scalar
        self._rows = rows

    def _check(self, d: int):
        if d != self.dimension:
            raise ConfigurationError(
                f"objective {self.name!r} has dimension {self.dimension}, got {d} genes"
            )

    def __call__(self, genes: Sequence[float]) -> float:
        self._check(len(genes))
        return self._scalar(genes)

    def evaluate_rows(self, genes: np.ndarray) -> np.ndarray:
        self._check(genes.shape[1])
        return self._rows(genes)

    def __repr__(self):
        return f"ObjectiveFn({self.name!r}, dimension={self.dimension})"


_REGISTRY: Dict[str, tuple] = {
    "sphere": (sphere, sphere_rows),
}


def registered_objectives() -> list:
    return sorted(_REGISTRY)


def register_objective(name: str, scalar, rows) -> None:
    _REGISTRY[name] = (scalar, rows)


def lookup_objective(spec: ObjectiveSpec) -> ObjectiveFn:
    try:
        scalar, rows = _REGISTRY[spec.name]
    except KeyError:
        raise UnknownObjectiveError(
            f"unknown objective {spec.name!r}; registered: {', '.join(registered_objectives())}"
        ) from None
    return ObjectiveFn(spec.name, spec.dimension, scalar, rows)
