"""Sensitivity-guided model reduction and its validation by mean absolute error."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ContractError
from .gsa_mc import SensitivityResult
from .params import ParameterSpace
from .pipeline import UQSettings, pinned, run_uq
from .qoi import CostReport, MomentField

__all__ = ["ReductionReport", "DEFAULT_THRESHOLD", "select_noninfluential", "mae", "reduce_and_compare"]

DEFAULT_THRESHOLD = 0.01


@dataclass(frozen=True)
class ReductionReport:
    fixed_parameters: tuple[str, ...]
    threshold: float | None
    mae_mean: float
    mae_std: float
    full: MomentField
    reduced: MomentField
    method: str = "pce"

    def to_json(self) -> dict:
        return {
            "fixed_parameters": list(self.fixed_parameters),
            "threshold": self.threshold,
            "method": self.method,
            "mae_mean": self.mae_mean,
            "mae_std": self.mae_std,
            "n_components_compared": int(np.sum(self.full.mask & self.reduced.mask)),
        }


def select_noninfluential(result: SensitivityResult, threshold: float = DEFAULT_THRESHOLD) -> list[str]:
    """Parameters whose generalized total index is below ``threshold``, least influential first."""
    g = np.asarray(result.generalized_total, dtype=float)
    if g.shape != (len(result.names),) or np.all(np.isnan(g)):
        raise ContractError("result carries no generalized indices")
    order = np.argsort(g, kind="stable")
    return [result.names[i] for i in order if g[i] < threshold]


def mae(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> float:
    """Mean absolute difference over the components selected by ``mask``."""
    if not np.any(mask):
        raise ContractError("no common unmasked components to compare")
    return float(np.mean(np.abs(a[mask] - b[mask])))


def reduce_and_compare(
    space: ParameterSpace,
    fixed: Sequence[str],
    model,
    settings: UQSettings,
    threshold: float | None = None,
    full: MomentField | None = None,
    cost: CostReport | None = None,
) -> ReductionReport:
    """Re-run UQ with ``fixed`` pinned at nominal and compare against the full model.

    ``full`` may be passed to reuse an existing full-model run; it must have
    been produced with the same ``settings``.  Monte Carlo runs share their
    random numbers on the surviving parameters (columns are keyed by name).
    """
    fixed = tuple(fixed)
    unknown = set(fixed) - set(space.names)
    if unknown:
        raise ConfigurationError(f"cannot fix unknown parameters: {sorted(unknown)}")
    if full is None:
        full = run_uq(model, space, settings, cost)
    kept = [n for n in space.names if n not in fixed]
    reduced_space = space.without(fixed) if kept else None
    reduced = run_uq(pinned(model, space, fixed), reduced_space, settings, cost)
    common = full.mask & reduced.mask
    return ReductionReport(
        fixed,
        threshold,
        mae(full.mean, reduced.mean, common),
        mae(full.std, reduced.std, common),
        full,
        reduced,
        settings.method,
    )
