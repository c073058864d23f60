"""``effgsa`` command-line interface.

Subcommands ``map``, ``uq``, ``gsa`` and ``reduce`` each read a run
configuration (TOML or JSON), apply command-line overrides, and write their
artifacts into the configured output directory.  Re-running a command with
the same configuration reproduces every file byte for byte.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, apply_overrides, load_config, parse_value
from .ecm import SolverError, solve_batch, torque_envelope
from .errors import ConfigurationError, ContractError, DomainError, ParseError
from .export import indices_document, write_envelope, write_field, write_json, write_sobol
from .params import sample
from .pce import IllConditionedWarning, pce_moments, sample_size
from .pipeline import run_gsa, run_mc_moments, run_pce, run_uq
from .qoi import CostReport, EcmModel, QoiMatrix, mc_gsa_cost, moments, pce_gsa_cost
from .reduction import reduce_and_compare, select_noninfluential

__all__ = ["main", "build_parser", "cmd_map", "cmd_uq", "cmd_gsa", "cmd_reduce", "WORKERS_ENV"]

log = logging.getLogger("effgsa")

#: Environment variable holding the default number of worker threads.
WORKERS_ENV = "EFFGSA_WORKERS"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# helpers


def _prepare(cfg: RunConfig, model=None):
    """Model and output directory for a run; the model defaults to the circuit model."""
    if model is None:
        model = EcmModel(cfg.ecm, cfg.build_operating_set())
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return model, out


def _write_meta(out: Path, command: str, cfg: RunConfig, model, extra: dict) -> None:
    write_json(
        out / "run_meta.json",
        {
            "command": command,
            "version": __version__,
            "config": cfg.resolved(),
            "n_op": model.opset.n_op,
            "operating_kind": model.opset.kind,
            **extra,
        },
    )


def _write_cost(out: Path, cost: CostReport, expected: dict | None = None) -> None:
    doc = cost.to_dict()
    if expected:
        doc["closed_form"] = expected
    write_json(out / "cost.json", doc)


def _expected_cost(cfg: RunConfig, n_op: int, gsa: bool) -> dict:
    s = cfg.settings
    n = cfg.space.dim
    if s.method == "pce":
        return {"formula": "N_s * N_op", "N_s": sample_size(n, s.degree, s.oversampling), "N_op": n_op,
                "value": pce_gsa_cost(sample_size(n, s.degree, s.oversampling), n_op)}
    if gsa:
        return {"formula": "(N + 2) * N_s * N_op", "N": n, "N_s": s.n_samples, "N_op": n_op,
                "value": mc_gsa_cost(n, s.n_samples, n_op)}
    return {"formula": "N_s * N_op", "N_s": s.n_samples, "N_op": n_op, "value": s.n_samples * n_op}


def _moments_files(out: Path, opset, mom) -> None:
    write_field(out / "mean.csv", opset, mom.mean, mom.mask)
    write_field(out / "std.csv", opset, mom.std, mom.mask)


# ---------------------------------------------------------------------------
# commands


def cmd_map(cfg: RunConfig, model=None) -> dict:
    """Nominal efficiency over the operating set plus the torque envelope."""
    model, out = _prepare(cfg, model)
    opset = model.opset
    ecm = getattr(model, "ecm", cfg.ecm)
    sol = solve_batch(ecm, opset.torque, opset.omega_m)
    cost = CostReport()
    cost.add("nominal", opset.n_op)
    write_field(out / "map.csv", opset, sol.efficiency, sol.feasible)
    if opset.omega_axis is not None:
        omega = opset.omega_axis
    else:
        omega = np.linspace(0.0, float(opset.omega_m.max()), 101)
    env = torque_envelope(ecm, omega)
    write_envelope(out / "envelope.csv", omega, env)
    _write_cost(out, cost)
    summary = {
        "n_feasible": int(sol.feasible.sum()),
        "n_idle": int(sol.idle.sum()),
        "efficiency_min": float(np.nanmin(sol.efficiency)) if sol.feasible.any() else None,
        "efficiency_max": float(np.nanmax(sol.efficiency)) if sol.feasible.any() else None,
        "envelope_max": float(env.max()),
    }
    _write_meta(out, "map", cfg, model, {"summary": summary})
    print(f"map: {opset.n_op} operating points, {summary['n_feasible']} feasible; written to {out}")
    return summary


def cmd_uq(cfg: RunConfig, compare: bool = False, model=None) -> dict:
    """Pointwise mean and standard deviation by the configured method.

    With ``compare`` both estimators run.  The compare fields hold
    ``|MC - PCE|`` where the PCE side is the surrogate evaluated on the
    Monte Carlo sample itself, so sampling noise cancels and the field
    measures surrogate error alone.  The run metadata additionally records
    the largest gap to the coefficient-based PCE moments.
    """
    model, out = _prepare(cfg, model)
    opset = model.opset
    cost = CostReport()
    s = cfg.settings
    extra: dict = {}
    pce = None
    if compare:
        mc_mom, q = run_mc_moments(model, cfg.space, s, cost)
        pce = run_pce(model, cfg.space, s, cost)
        x = sample(cfg.space, s.n_samples, s.seed, s.strategy).values  # the sample run_mc_moments drew
        surrogate = moments(QoiMatrix(pce.predict(x), q.mask & pce.mask, opset))
        common = mc_mom.mask & surrogate.mask
        d_mean = np.where(common, np.abs(mc_mom.mean - surrogate.mean), np.nan)
        d_std = np.where(common, np.abs(mc_mom.std - surrogate.std), np.nan)
        write_field(out / "compare_mean.csv", opset, d_mean, common)
        write_field(out / "compare_std.csv", opset, d_std, common)
        coef = pce_moments(pce)
        both = common & coef.mask
        extra["compare"] = {
            "max_abs_mean": float(np.max(d_mean[common])) if common.any() else None,
            "max_abs_std": float(np.max(d_std[common])) if common.any() else None,
            "max_abs_mean_vs_coefficients": float(np.max(np.abs(mc_mom.mean - coef.mean)[both])) if both.any() else None,
            "max_abs_std_vs_coefficients": float(np.max(np.abs(mc_mom.std - coef.std)[both])) if both.any() else None,
        }
        mom = mc_mom if s.method == "mc" else coef
    elif s.method == "pce":
        pce = run_pce(model, cfg.space, s, cost)
        mom = pce_moments(pce)
    else:
        mom = run_uq(model, cfg.space, s, cost)
    _moments_files(out, opset, mom)
    if pce is not None:
        pce.save(out / "pce_model.json")
    _write_cost(out, cost, None if compare else _expected_cost(cfg, opset.n_op, gsa=False))
    _write_meta(out, "uq", cfg, model, extra)
    print(f"uq ({s.method}{', compare' if compare else ''}): {int(mom.mask.sum())}/{opset.n_op} unmasked points; "
          f"{cost.model_evaluations} model evaluations; written to {out}")
    return {"moments": mom, "cost": cost, **extra}


def _gsa(cfg: RunConfig, model, out: Path, cost: CostReport):
    res, mom, pce = run_gsa(model, cfg.space, cfg.settings, cost)
    write_sobol(out, model.opset, res)
    write_json(out / "indices.json", indices_document(res, {"n_op": model.opset.n_op, "n_params": cfg.space.dim}))
    if pce is not None:
        pce.save(out / "pce_model.json")
    return res, mom


def _print_indices(res) -> None:
    print(f"{'parameter':<12}{'G_first':>12}{'G_total':>12}")
    for j, name in enumerate(res.names):
        print(f"{name:<12}{res.generalized_first[j]:>12.4g}{res.generalized_total[j]:>12.4g}")


def cmd_gsa(cfg: RunConfig, model=None) -> dict:
    """Per-point Sobol' indices and generalized indices."""
    model, out = _prepare(cfg, model)
    cost = CostReport()
    res, mom = _gsa(cfg, model, out, cost)
    _moments_files(out, model.opset, mom)
    _write_cost(out, cost, _expected_cost(cfg, model.opset.n_op, gsa=True))
    _write_meta(out, "gsa", cfg, model, {"ranking": res.ranking(), "n_degenerate": int(res.degenerate.sum()),
                                         "n_masked": int((~res.mask).sum())})
    _print_indices(res)
    return {"result": res, "moments": mom, "cost": cost}


def cmd_reduce(cfg: RunConfig, model=None) -> dict:
    """Fix non-influential parameters and compare moments with the full model."""
    model, out = _prepare(cfg, model)
    cost = CostReport()
    s = cfg.settings
    full = None
    if cfg.fixed is None:
        res, mom = _gsa(cfg, model, out, cost)
        fixed = select_noninfluential(res, cfg.threshold)
        threshold = cfg.threshold
        if s.method == "pce":
            # same seed and sample as the plain UQ run, so the moments can be reused
            full = mom
    else:
        fixed, threshold = list(cfg.fixed), None
    report = reduce_and_compare(cfg.space, fixed, model, s, threshold=threshold, full=full, cost=cost)
    write_json(out / "reduction.json", report.to_json())
    _write_cost(out, cost)
    _write_meta(out, "reduce", cfg, model, {"fixed_parameters": list(report.fixed_parameters)})
    names = ", ".join(report.fixed_parameters) or "(none)"
    thr = "-" if report.threshold is None else f"{report.threshold:g}"
    print(f"{'fixed parameters':<24}{'threshold':>10}{'MAE(mean)':>12}{'MAE(std)':>12}")
    print(f"{names:<24}{thr:>10}{report.mae_mean:>12.3g}{report.mae_std:>12.3g}")
    return {"report": report, "cost": cost}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="TOML or JSON run configuration")
    common.add_argument("-o", "--output", help="artifact directory (config key: output)")
    common.add_argument("--method", choices=["mc", "pce"], help="estimator (method.name)")
    common.add_argument("--seed", type=int, help="method.seed")
    common.add_argument("--n-samples", type=int, help="Monte Carlo sample size (method.n_samples)")
    common.add_argument("--degree", type=int, help="PCE total degree (method.degree)")
    common.add_argument("--oversampling", type=float, help="PCE oversampling coefficient (method.oversampling)")
    common.add_argument("--strategy", choices=["pseudo-random", "latin-hypercube"], help="method.strategy")
    common.add_argument("--threshold", type=float, help="reduction.threshold")
    common.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override any config key, e.g. --set model.I_max=0.25 (repeatable)",
    )
    common.add_argument("--workers", type=int, help=f"worker threads (default: ${WORKERS_ENV} or all cores)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="effgsa", description="Variance-based sensitivity analysis of PMSM efficiency maps and drive-cycle profiles.",
        epilog="exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("map", parents=[common], help="nominal efficiency map and torque envelope")
    uq = sub.add_parser("uq", parents=[common], help="mean and standard deviation fields")
    uq.add_argument("--compare", action="store_true", help="run both estimators and write |difference| fields")
    sub.add_parser("gsa", parents=[common], help="Sobol' and generalized sensitivity indices")
    sub.add_parser("reduce", parents=[common], help="fix non-influential parameters and validate by MAE")
    return parser


_FLAG_KEYS = {
    "output": "output",
    "method": "method.name",
    "seed": "method.seed",
    "n_samples": "method.n_samples",
    "degree": "method.degree",
    "oversampling": "method.oversampling",
    "strategy": "method.strategy",
    "threshold": "reduction.threshold",
}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    doc, base = {}, Path(".")
    if args.config:
        doc = load_config(args.config)
        base = Path(args.config).parent
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigurationError(f"--set {item!r}: expected KEY=VALUE")
        overrides[key.strip()] = parse_value(value.strip())
    for attr, key in _FLAG_KEYS.items():
        val = getattr(args, attr)
        if val is not None:
            overrides[key] = val
    return RunConfig.from_dict(apply_overrides(doc, overrides), base)


def set_workers(n: int | None) -> int:
    """Apply the worker-count knob; ``None`` or 0 falls back to the environment, then all cores."""
    import numba

    if not n:
        env = os.environ.get(WORKERS_ENV, "").strip()
        if env:
            try:
                n = int(env)
            except ValueError:
                raise ConfigurationError(f"{WORKERS_ENV}: expected an integer, got {env!r}") from None
    limit = numba.config.NUMBA_NUM_THREADS
    if not n or n < 0:
        n = limit
    n = min(int(n), limit)
    numba.set_num_threads(n)
    return n


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    logging.captureWarnings(True)
    warnings.simplefilter("always", IllConditionedWarning)
    try:
        cfg = config_from_args(args)
        set_workers(args.workers)
        if args.command == "map":
            cmd_map(cfg)
        elif args.command == "uq":
            cmd_uq(cfg, compare=args.compare)
        elif args.command == "gsa":
            cmd_gsa(cfg)
        else:
            cmd_reduce(cfg)
    except (ConfigurationError, ParseError) as exc:
        print(f"effgsa: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ContractError, DomainError, SolverError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"effgsa: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"effgsa: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
