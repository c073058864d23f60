"""Total-degree Legendre polynomial chaos expansions fitted by least squares.

Moments and (generalized) Sobol' indices follow from the coefficients of the
orthonormal basis: the mean is the constant coefficient, partial variances
are sums of squared coefficients over the matching multi-indices.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import ContractError
from .gsa_mc import VAR_EPS, SensitivityResult, aggregate
from .params import ParameterSpace, SampleMatrix, standardize
from .qoi import MomentField, QoiMatrix

__all__ = [
    "MultiIndexSet",
    "PceModel",
    "total_degree_multi_indices",
    "n_terms",
    "sample_size",
    "legendre_1d",
    "basis_eval",
    "design_matrix",
    "fit_pce",
    "pce_moments",
    "pce_sobol",
    "pce_generalized",
    "IllConditionedWarning",
]

COND_LIMIT = 1e12


class IllConditionedWarning(UserWarning):
    pass


def n_terms(n_params: int, degree: int) -> int:
    """Cardinality (N+P)! / (N! P!) of the total-degree set."""
    return math.comb(n_params + degree, degree)


def sample_size(n_params: int, degree: int, oversampling: float) -> int:
    """Regression sample size ceil(C K)."""
    if oversampling < 1:
        raise ContractError("oversampling coefficient must be >= 1")
    # round first so that e.g. 2.0 * 15 does not become 31 through float noise
    return int(math.ceil(round(oversampling * n_terms(n_params, degree), 9)))


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


@dataclass(frozen=True)
class MultiIndexSet:
    """Multi-indices ordered by total degree, then reverse-lexicographically.

    For N=2, P=2 the order is (0,0), (1,0), (0,1), (2,0), (1,1), (0,2).
    """

    indices: np.ndarray
    degree: int

    def __len__(self) -> int:
        return self.indices.shape[0]

    @property
    def n_params(self) -> int:
        return self.indices.shape[1]

    def as_tuples(self) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in row) for row in self.indices]


def total_degree_multi_indices(n_params: int, degree: int) -> MultiIndexSet:
    if n_params < 1 or degree < 0:
        raise ContractError("need n_params >= 1 and degree >= 0")
    rows = [c for d in range(degree + 1) for c in _compositions(d, n_params)]
    idx = np.array(rows, dtype=np.int64).reshape(-1, n_params)
    idx.setflags(write=False)
    return MultiIndexSet(idx, degree)


def legendre_1d(z, max_degree: int) -> np.ndarray:
    """Orthonormal Legendre values sqrt(2k+1) P_k(z), k = 0..max_degree.

    Returns an array of shape ``z.shape + (max_degree + 1,)``.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape + (max_degree + 1,))
    out[..., 0] = 1.0
    if max_degree >= 1:
        out[..., 1] = z
    for k in range(1, max_degree):
        out[..., k + 1] = ((2 * k + 1) * z * out[..., k] - k * out[..., k - 1]) / (k + 1)
    out *= np.sqrt(2.0 * np.arange(max_degree + 1) + 1.0)
    return out


def basis_eval(multi_index, z) -> float | np.ndarray:
    """Tensorized orthonormal Legendre polynomial at standardized point(s) ``z``."""
    alpha = np.asarray(multi_index, dtype=np.int64)
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != alpha.size:
        raise ContractError("point dimension does not match the multi-index")
    vals = legendre_1d(z, int(alpha.max(initial=0)))
    picked = np.take_along_axis(vals, alpha.reshape((1,) * (z.ndim - 1) + (-1, 1)), axis=-1)[..., 0]
    return np.prod(picked, axis=-1)


def design_matrix(mis: MultiIndexSet, z: np.ndarray) -> np.ndarray:
    """``(n, K)`` matrix of every basis polynomial at every standardized point."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if z.shape[1] != mis.n_params:
        raise ContractError("point dimension does not match the multi-index set")
    vals = legendre_1d(z, max(mis.degree, 0))  # (n, N, P+1)
    phi = np.ones((z.shape[0], len(mis)))
    for j in range(mis.n_params):
        phi *= vals[:, j, mis.indices[:, j]]
    return phi


@dataclass
class PceModel:
    multi_indices: MultiIndexSet
    coefficients: np.ndarray  # (K, M)
    space: ParameterSpace
    mask: np.ndarray
    fit_diagnostics: dict = field(default_factory=dict)

    @property
    def n_components(self) -> int:
        return self.coefficients.shape[1]

    def predict(self, x) -> np.ndarray:
        """Evaluate the surrogate at physical points ``x`` (shape ``(n, N)``)."""
        phi = design_matrix(self.multi_indices, standardize(self.space, np.atleast_2d(x)))
        out = phi @ self.coefficients
        out[:, ~self.mask] = np.nan
        return out

    def to_json(self) -> dict:
        return {
            "degree": self.multi_indices.degree,
            "multi_indices": self.multi_indices.indices.tolist(),
            "coefficients": self.coefficients.tolist(),
            "mask": self.mask.tolist(),
            "space": self.space.to_dict(),
            "fit_diagnostics": self.fit_diagnostics,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PceModel":
        idx = np.array(doc["multi_indices"], dtype=np.int64)
        idx.setflags(write=False)
        return cls(
            MultiIndexSet(idx, int(doc["degree"])),
            np.array(doc["coefficients"], dtype=float),
            ParameterSpace.from_dict(doc["space"]),
            np.array(doc["mask"], dtype=bool),
            dict(doc.get("fit_diagnostics", {})),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "PceModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def fit_pce(
    space: ParameterSpace,
    samples: SampleMatrix | np.ndarray,
    evals: QoiMatrix,
    degree: int,
    oversampling: float | None = None,
) -> PceModel:
    """Least-squares fit of every output component on one shared design matrix.

    The design matrix is factorized once (QR with column pivoting) and the
    factorization is reused for all right-hand sides.  Masked components get
    zero coefficients.
    """
    x = samples.values if isinstance(samples, SampleMatrix) else np.atleast_2d(np.asarray(samples, dtype=float))
    if x.shape[1] != space.dim:
        raise ContractError("sample dimension does not match the parameter space")
    if x.shape[0] != evals.n_samples:
        raise ContractError("number of samples and evaluations differ")
    mis = total_degree_multi_indices(space.dim, degree)
    k = len(mis)
    n = x.shape[0]
    if n < k:
        raise ContractError(f"underdetermined regression: {n} samples for {k} basis terms")
    if oversampling is not None and n < sample_size(space.dim, degree, oversampling):
        raise ContractError(
            f"{n} samples is below the required ceil({oversampling} * {k}) = "
            f"{sample_size(space.dim, degree, oversampling)}"
        )

    phi = design_matrix(mis, standardize(space, x))
    y = np.where(evals.mask, evals.values, 0.0)

    q, r, piv = linalg.qr(phi, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > diag[0] * k * np.finfo(float).eps)) if diag.size else 0
    sv = linalg.svdvals(r)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    if rank < k:
        raise ContractError(f"design matrix is rank deficient ({rank} < {k})")
    coef = np.empty((k, y.shape[1]))
    coef[piv] = linalg.solve_triangular(r, q.T @ y)
    coef[:, ~evals.mask] = 0.0

    resid = y - phi @ coef
    diagnostics = {
        "n_samples": int(n),
        "n_terms": int(k),
        "oversampling": float(n / k),
        "condition_estimate": cond,
        "residual_norm": float(np.linalg.norm(resid[:, evals.mask])),
        "warnings": [],
    }
    if cond > COND_LIMIT:
        msg = f"design matrix condition estimate {cond:.3g} exceeds {COND_LIMIT:.0e}"
        diagnostics["warnings"].append(msg)
        warnings.warn(msg, IllConditionedWarning, stacklevel=2)
    return PceModel(mis, coef, space, evals.mask.copy(), diagnostics)


def pce_moments(model: PceModel) -> MomentField:
    c = model.coefficients
    mean = c[0].copy()
    var = np.sum(c[1:] ** 2, axis=0)
    std = np.sqrt(var)
    mean[~model.mask] = np.nan
    std[~model.mask] = np.nan
    return MomentField(mean, std, model.mask.copy())


def _partial_variances(model: PceModel):
    idx = model.multi_indices.indices
    c2 = model.coefficients**2
    nonconst = idx.sum(axis=1) > 0
    var = c2[nonconst].sum(axis=0)
    n = idx.shape[1]
    first = np.empty((n, c2.shape[1]))
    total = np.empty((n, c2.shape[1]))
    for j in range(n):
        has_j = idx[:, j] > 0
        only_j = has_j & (idx.sum(axis=1) == idx[:, j])
        first[j] = c2[only_j].sum(axis=0)
        total[j] = c2[has_j].sum(axis=0)
    return first, total, var


def _pce_result(model: PceModel, strict: bool) -> SensitivityResult:
    first, total, var = _partial_variances(model)
    mask = model.mask.copy()
    degenerate = mask & ~(var >= VAR_EPS)
    valid = mask & ~degenerate
    with np.errstate(invalid="ignore", divide="ignore"):
        s1 = np.where(valid, first / var, np.nan)
        st = np.where(valid, total / var, np.nan)
    g1, gt = aggregate(first, total, np.where(valid, var, 0.0), valid, strict=strict)
    return SensitivityResult(
        tuple(model.space.names), s1, st, g1, gt, "pce", mask, degenerate, np.where(mask, var, np.nan)
    )


def pce_sobol(model: PceModel) -> SensitivityResult:
    """Sobol' indices from the coefficient partition (generalized fields included)."""
    return _pce_result(model, strict=False)


def pce_generalized(model: PceModel) -> SensitivityResult:
    """Generalized indices; raises when no component carries variance."""
    return _pce_result(model, strict=True)
