"""Independent uniform input parameters and sample designs.

Every random column is drawn from its own Philox stream keyed by
``(seed, role, parameter name)``.  Two spaces that share a parameter name
therefore see identical draws for it, which gives common random numbers for
free when a reduced space is compared against the full one.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "RandomParameter",
    "ParameterSpace",
    "SampleMatrix",
    "PickFreezeDesign",
    "sample",
    "pick_freeze",
    "standardize",
    "destandardize",
]

STRATEGIES = ("pseudo-random", "latin-hypercube")

# stream roles
_PLAIN, _PF_A, _PF_B = 0, 1, 2


@dataclass(frozen=True)
class RandomParameter:
    name: str
    nominal: float
    lower: float
    upper: float
    distribution: str = "uniform"

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ConfigurationError(f"parameter {self.name!r}: bounds must be finite")
        if not self.lower < self.upper:
            raise ConfigurationError(
                f"parameter {self.name!r}: lower bound {self.lower} must be below upper bound {self.upper}"
            )
        if not self.lower <= self.nominal <= self.upper:
            raise ConfigurationError(f"parameter {self.name!r}: nominal {self.nominal} outside its bounds")
        if self.distribution != "uniform":
            raise ConfigurationError(
                f"parameter {self.name!r}: distribution {self.distribution!r} not supported (uniform only)"
            )

    @classmethod
    def relative(cls, name: str, nominal: float, halfwidth: float = 0.05) -> "RandomParameter":
        """Uniform on ``nominal * (1 -/+ halfwidth)``."""
        if not halfwidth > 0:
            raise ConfigurationError(f"parameter {name!r}: relative halfwidth must be positive")
        a, b = nominal * (1 - halfwidth), nominal * (1 + halfwidth)
        return cls(name, nominal, min(a, b), max(a, b))

    @property
    def mean(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def variance(self) -> float:
        return (self.upper - self.lower) ** 2 / 12.0


@dataclass(frozen=True)
class ParameterSpace:
    parameters: tuple[RandomParameter, ...]

    def __init__(self, parameters: Iterable[RandomParameter]):
        params = tuple(parameters)
        if not params:
            raise ConfigurationError("a parameter space needs at least one parameter")
        names = [p.name for p in params]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ConfigurationError(f"duplicate parameter names: {dupes}")
        object.__setattr__(self, "parameters", params)

    def __len__(self) -> int:
        return len(self.parameters)

    def __iter__(self):
        return iter(self.parameters)

    def __getitem__(self, key: str | int) -> RandomParameter:
        if isinstance(key, str):
            return self.parameters[self.index(key)]
        return self.parameters[key]

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.parameters]

    @property
    def dim(self) -> int:
        return len(self.parameters)

    @property
    def lower(self) -> np.ndarray:
        return np.array([p.lower for p in self.parameters])

    @property
    def upper(self) -> np.ndarray:
        return np.array([p.upper for p in self.parameters])

    @property
    def nominal(self) -> np.ndarray:
        return np.array([p.nominal for p in self.parameters])

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no parameter named {name!r}") from None

    def without(self, names: Iterable[str]) -> "ParameterSpace":
        """The space left after pinning ``names`` to their nominal values."""
        drop = set(names)
        unknown = drop - set(self.names)
        if unknown:
            raise ConfigurationError(f"cannot fix unknown parameters: {sorted(unknown)}")
        return ParameterSpace(p for p in self.parameters if p.name not in drop)

    def to_dict(self) -> list[dict]:
        return [
            {"name": p.name, "nominal": p.nominal, "lower": p.lower, "upper": p.upper, "distribution": p.distribution}
            for p in self.parameters
        ]

    @classmethod
    def from_dict(cls, items: Sequence[dict]) -> "ParameterSpace":
        return cls(
            RandomParameter(d["name"], d["nominal"], d["lower"], d["upper"], d.get("distribution", "uniform"))
            for d in items
        )


@dataclass(frozen=True)
class SampleMatrix:
    """Read-only ``n_samples x N`` design in physical coordinates."""

    values: np.ndarray
    seed: int
    space: ParameterSpace
    strategy: str = "pseudo-random"

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.space.index(name)]

    def as_overrides(self) -> dict[str, np.ndarray]:
        return {name: self.values[:, j] for j, name in enumerate(self.space.names)}


@dataclass(frozen=True)
class PickFreezeDesign:
    A: SampleMatrix
    B: SampleMatrix
    AB: tuple[SampleMatrix, ...] = field(default_factory=tuple)

    @property
    def n_samples(self) -> int:
        return self.A.n_samples

    @property
    def total_rows(self) -> int:
        return self.A.n_samples + self.B.n_samples + sum(m.n_samples for m in self.AB)

    def stacked(self) -> np.ndarray:
        """All rows in the order A, B, AB[0], ..., AB[N-1]."""
        return np.vstack([self.A.values, self.B.values, *(m.values for m in self.AB)])


def _stream(seed: int, role: int, name: str) -> np.random.Generator:
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(role, key))))


def _draw_unit(n: int, seed: int, role: int, name: str, strategy: str) -> np.ndarray:
    rng = _stream(seed, role, name)
    if strategy == "pseudo-random":
        return rng.random(n)
    # one point per stratum [k/n, (k+1)/n), randomly placed and permuted
    return (rng.permutation(n) + rng.random(n)) / n


def _draw(space: ParameterSpace, n: int, seed: int, role: int, strategy: str) -> np.ndarray:
    if strategy not in STRATEGIES:
        raise ConfigurationError(f"unknown sampling strategy {strategy!r}; expected one of {STRATEGIES}")
    if int(n) != n or n < 1:
        raise ConfigurationError(f"n_samples must be a positive integer, got {n!r}")
    cols = []
    for p in space:
        u = _draw_unit(int(n), seed, role, p.name, strategy)
        cols.append(p.lower + (p.upper - p.lower) * u)
    return np.column_stack(cols)


def sample(space: ParameterSpace, n_samples: int, seed: int = 0, strategy: str = "pseudo-random") -> SampleMatrix:
    """Draw ``n_samples`` points from the product of uniform marginals."""
    return SampleMatrix(_draw(space, n_samples, seed, _PLAIN, strategy), seed, space, strategy)


def pick_freeze(space: ParameterSpace, n_samples: int, seed: int = 0, strategy: str = "pseudo-random") -> PickFreezeDesign:
    """Saltelli pick-and-freeze design: A, B and the N column-swapped hybrids."""
    if n_samples < 2:
        raise ConfigurationError("pick-and-freeze needs at least 2 samples")
    a = _draw(space, n_samples, seed, _PF_A, strategy)
    b = _draw(space, n_samples, seed, _PF_B, strategy)
    hybrids = []
    for j in range(space.dim):
        ab = a.copy()
        ab[:, j] = b[:, j]
        hybrids.append(SampleMatrix(ab, seed, space, strategy))
    return PickFreezeDesign(
        SampleMatrix(a, seed, space, strategy), SampleMatrix(b, seed, space, strategy), tuple(hybrids)
    )


def standardize(space: ParameterSpace, point) -> np.ndarray:
    """Affine map of physical coordinates onto ``[-1, 1]^N``.

    Works on a single point or on an ``(n, N)`` array of points.
    """
    x = np.asarray(point, dtype=float)
    lo, hi = space.lower, space.upper
    if x.shape[-1] != space.dim:
        raise DomainError(f"expected {space.dim} coordinates, got {x.shape[-1]}")
    span = hi - lo
    tol = 1e-12 * np.maximum(np.abs(lo), np.abs(hi))
    if np.any(x < lo - tol) or np.any(x > hi + tol):
        raise DomainError("point outside the parameter bounds")
    return np.clip((2.0 * x - lo - hi) / span, -1.0, 1.0)


def destandardize(space: ParameterSpace, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != space.dim:
        raise DomainError(f"expected {space.dim} coordinates, got {z.shape[-1]}")
    if np.any(np.abs(z) > 1.0 + 1e-12):
        raise DomainError("standardized point outside [-1, 1]")
    lo, hi = space.lower, space.upper
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * z
