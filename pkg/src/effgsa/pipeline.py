"""End-to-end UQ and GSA runs on any vectorized model.

A *model* is a callable ``model(x, names) -> (n, M) array`` where ``x`` is an
``(n, N)`` array of physical parameter values with columns named by
``names``.  :class:`effgsa.qoi.EcmModel` is the circuit-model instance; the
test suite also feeds plain polynomial functions through the same code.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .gsa_mc import SensitivityResult, mc_sobol
from .params import ParameterSpace, pick_freeze, sample
from .pce import PceModel, fit_pce, pce_moments, pce_sobol, sample_size
from .qoi import CostReport, MomentField, QoiMatrix, evaluate, moments

__all__ = ["UQSettings", "pinned", "run_mc_moments", "run_pce", "run_uq", "run_mc_gsa", "run_gsa"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class UQSettings:
    """How statistics and indices are estimated.

    ``n_samples`` is the Monte Carlo base sample size; PCE runs size their
    sample as ceil(oversampling * K) instead.
    """

    method: str = "pce"
    n_samples: int = 1000
    seed: int = 0
    degree: int = 2
    oversampling: float = 2.0
    strategy: str = "pseudo-random"

    def __post_init__(self):
        if self.method not in ("mc", "pce"):
            raise ConfigurationError(f"method must be 'mc' or 'pce', got {self.method!r}")
        if self.n_samples < 1:
            raise ConfigurationError("n_samples must be positive")
        if self.degree < 0:
            raise ConfigurationError("degree must be non-negative")
        if self.oversampling < 1:
            raise ConfigurationError("oversampling must be >= 1")

    def with_method(self, method: str) -> "UQSettings":
        return replace(self, method=method)


class pinned:
    """Evaluate ``model`` on a reduced space, holding other inputs at nominal."""

    def __init__(self, model, full_space: ParameterSpace, fixed: Sequence[str]):
        self.model = model
        self.full_space = full_space
        self.fixed = tuple(fixed)
        self.opset = getattr(model, "opset", None)
        unknown = set(self.fixed) - set(full_space.names)
        if unknown:
            raise ConfigurationError(f"cannot fix unknown parameters: {sorted(unknown)}")

    def __call__(self, x, names):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        full = np.empty((x.shape[0], self.full_space.dim))
        for j, p in enumerate(self.full_space):
            if p.name in names:
                full[:, j] = x[:, list(names).index(p.name)]
            else:
                full[:, j] = p.nominal
        return self.model(full, self.full_space.names)


def run_mc_moments(model, space: ParameterSpace, settings: UQSettings, cost: CostReport | None = None):
    """Plain Monte Carlo estimate of the pointwise mean and standard deviation."""
    if settings.n_samples < 2:
        log.warning("Monte Carlo with %d sample(s) cannot estimate a spread", settings.n_samples)
    elif settings.n_samples < 10:
        log.warning("Monte Carlo with only %d samples; statistics will be very noisy", settings.n_samples)
    x = sample(space, settings.n_samples, settings.seed, settings.strategy)
    q = evaluate(model, x, cost=cost, phase="sampling")
    return moments(q), q


def run_pce(model, space: ParameterSpace, settings: UQSettings, cost: CostReport | None = None) -> PceModel:
    n = sample_size(space.dim, settings.degree, settings.oversampling)
    x = sample(space, n, settings.seed, settings.strategy)
    q = evaluate(model, x, cost=cost, phase="pce-fit")
    return fit_pce(space, x, q, settings.degree, settings.oversampling)


def _constant_run(model, space_full: ParameterSpace, cost: CostReport | None):
    q = evaluate(model, np.zeros((1, 0)), names=[], cost=cost, phase="sampling")
    mean = np.where(q.mask, q.values[0], np.nan)
    std = np.where(q.mask, 0.0, np.nan)
    return MomentField(mean, std, q.mask.copy())


def run_uq(model, space: ParameterSpace | None, settings: UQSettings, cost: CostReport | None = None) -> MomentField:
    """Pointwise mean and standard deviation by the configured method.

    ``space=None`` (or an empty reduction) means every input is pinned and
    the model is evaluated once.
    """
    if space is None:
        return _constant_run(model, space, cost)
    if settings.method == "mc":
        return run_mc_moments(model, space, settings, cost)[0]
    return pce_moments(run_pce(model, space, settings, cost))


def split_design(q: QoiMatrix, n_samples: int, n_params: int):
    """Split a stacked pick-and-freeze evaluation into A, B and the hybrids."""
    blocks = [
        QoiMatrix(q.values[i * n_samples : (i + 1) * n_samples], q.mask, q.opset) for i in range(n_params + 2)
    ]
    return blocks[0], blocks[1], blocks[2:]


def run_mc_gsa(model, space: ParameterSpace, settings: UQSettings, cost: CostReport | None = None):
    """Pick-and-freeze Monte Carlo GSA; returns ``(result, f_A)``.

    All ``(N + 2) * N_s`` rows are evaluated in one call so that the
    feasibility mask is shared by every block.
    """
    design = pick_freeze(space, settings.n_samples, settings.seed, settings.strategy)
    q = evaluate(model, design.stacked(), names=space.names, cost=cost, phase="pick-freeze")
    f_a, f_b, f_ab = split_design(q, settings.n_samples, space.dim)
    return mc_sobol(f_a, f_b, f_ab, names=space.names), f_a


def run_gsa(model, space: ParameterSpace, settings: UQSettings, cost: CostReport | None = None):
    """Sensitivity indices plus moments; returns ``(SensitivityResult, MomentField, PceModel | None)``."""
    if settings.method == "mc":
        res, f_a = run_mc_gsa(model, space, settings, cost)
        return res, moments(f_a), None
    pce = run_pce(model, space, settings, cost)
    return pce_sobol(pce), pce_moments(pce), pce
