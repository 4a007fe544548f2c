"""Batch runner: ``decohere run <config.json>``.

Loads an experiment description, runs the requested estimators and checks,
and writes ``report.json`` (plus ``trajectories.csv`` for sweeps).

Exit status: 0 when every requested check passes or is inapplicable, 1 when
a check fails, 2 for configuration errors.

Config (JSON)::

    {
      "initial": {"probs": [0.5, 0.5], "phases": [0.0, 0.0]},
      "observable": [0.0, 1.0],
      "model": {"variant": "dirichlet_martingale", "kappa": 4,
                "phase_coupling": {"kind": "none"}},
      "mode": {"kind": "monte_carlo", "trials": 100000, "seeds": [0, 1, 2]},
      "checks": ["mean_condition", "P1chain", "P3", "P4", "vN", "equality"],
      "sweep": {"kappa": [1, 4, 16, 64]},
      "output": {"report": "report.json", "trajectories": "trajectories.csv"}
    }

Model variants: ``projective_measurement``; ``partition_conditioning`` with
``weights``, ``x_assignment`` (one level per atom) and ``partition`` (list of
atom-index blocks); ``phase_only`` with ``phase_spec`` (one object or one
per index, ``kind`` in uniform_full / uniform_symmetric (``a``) /
degenerate (``value``)); ``dirichlet_martingale`` with ``kappa`` and
``phase_coupling`` (``none`` or ``linear`` with ``gamma``); ``uniform_stub``.

Sweeps: ``{"kappa": [...]}`` re-runs a Dirichlet model per concentration;
``{"partitions": [[[...], ...], ...]}`` re-runs a partition model per
partition. The CSV has the header
``setting,offdiag_l1,expected_shannon,expected_variance,vn_entropy``.
Monte Carlo sweeps use the first seed.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .modes import Exact, Statistical
from .prob_space import build_space, make_partition, random_variable
from .quantum_state import (
    Observable,
    PureState,
    density_of,
    offdiag_l1,
    shannon_entropy,
    variance,
    vn_entropy,
)
from .unravelling import (
    DirichletMartingale,
    NoFiniteSupportError,
    PartitionConditioning,
    PhaseDistribution,
    PhaseOnly,
    ProjectiveMeasurement,
    UniformStub,
    check_model,
)
from . import verifier

ALL_CHECKS = ("mean_condition", "P1chain", "P3", "P4", "vN", "equality")
EXTRA_CHECKS = ("refinement",)
MIN_MC_TRIALS = 1000
DEFAULT_TRIALS = 100_000
DEFAULT_SEEDS = (0, 1, 2)
CSV_COLUMNS = ("setting", "offdiag_l1", "expected_shannon", "expected_variance", "vn_entropy")


class ConfigError(ValueError):
    pass


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing {key!r}")
    return d[key]


def parse_model(spec: dict):
    variant = _require(spec, "variant", "model")
    if variant == "projective_measurement":
        return ProjectiveMeasurement()
    if variant == "partition_conditioning":
        w = _require(spec, "weights", "model")
        space = build_space(len(w), w)
        x = random_variable(space, np.asarray(_require(spec, "x_assignment", "model"), dtype=float))
        return PartitionConditioning(space, x, make_partition(space, _require(spec, "partition", "model")))
    if variant == "phase_only":
        raw = _require(spec, "phase_spec", "model")
        raw = [raw] if isinstance(raw, dict) else raw
        return PhaseOnly(tuple(PhaseDistribution(**d) for d in raw))
    if variant == "dirichlet_martingale":
        coupling = spec.get("phase_coupling", {"kind": "none"})
        kind = coupling.get("kind", "none")
        return DirichletMartingale(
            float(spec.get("kappa", 4.0)), kind, float(coupling.get("gamma", 0.0))
        )
    if variant == "uniform_stub":
        return UniformStub()
    raise ConfigError(f"unknown model variant {variant!r}")


def parse_mode(spec: dict):
    kind = spec.get("kind", "exact")
    if kind == "exact":
        return Exact()
    if kind == "monte_carlo":
        trials = int(spec.get("trials", DEFAULT_TRIALS))
        if trials < MIN_MC_TRIALS:
            raise ConfigError(f"monte_carlo needs at least {MIN_MC_TRIALS} trials")
        return Statistical(trials, tuple(spec.get("seeds", DEFAULT_SEEDS)))
    raise ConfigError(f"unknown mode {kind!r}")


def apply_overrides(config: dict, args) -> dict:
    config = copy.deepcopy(config)
    mode = config.setdefault("mode", {"kind": "exact"})
    if args.mode == "exact":
        config["mode"] = mode = {"kind": "exact"}
    elif args.mode == "mc" and mode.get("kind") != "monte_carlo":
        config["mode"] = mode = {"kind": "monte_carlo"}
    if args.trials is not None:
        if mode.get("kind") != "monte_carlo":
            raise ConfigError("--trials needs monte_carlo mode")
        mode["trials"] = args.trials
    if args.seed_override is not None:
        if not 0 <= args.seed_override < 2**64:
            raise ConfigError("--seed-override must be an unsigned 64-bit integer")
        if mode.get("kind") == "monte_carlo":
            mode["seeds"] = [args.seed_override]
    if mode.get("kind") == "monte_carlo":
        mode.setdefault("trials", DEFAULT_TRIALS)
        mode.setdefault("seeds", list(DEFAULT_SEEDS))
    return config


def _pairs(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(a)]


def _estimate_json(s) -> dict:
    d, c = s.density, s.cross_terms
    out = {
        "average_density": {
            "value": _pairs(d.value),
            "std_err": _pairs(d.std_err),
            "exact": d.exact,
            "trials": d.trials,
        },
        "cross_term_matrix": {
            "value": np.asarray(c.value).tolist(),
            "std_err": np.asarray(c.std_err).tolist(),
        },
        "expected_shannon": {"value": s.shannon.value, "std_err": s.shannon.std_err},
        "vn_entropy": vn_entropy(d.value),
        "offdiag_l1": offdiag_l1(d.value),
    }
    if s.variance is not None:
        out["expected_variance"] = {"value": s.variance.value, "std_err": s.variance.std_err}
    return out


def _sweep_rows(sweep: dict, model, initial, obs, mode) -> list[dict]:
    run = Exact() if isinstance(mode, Exact) else mode.runs()[0]
    rows = []
    if "kappa" in sweep:
        if not isinstance(model, DirichletMartingale):
            raise ConfigError("a kappa sweep needs a dirichlet_martingale model")
        settings = [
            (f"kappa={k:g}", DirichletMartingale(float(k), model.phase_coupling, model.gamma))
            for k in sweep["kappa"]
        ]
    elif "partitions" in sweep:
        if not isinstance(model, PartitionConditioning):
            raise ConfigError("a partition sweep needs a partition_conditioning model")
        settings = []
        for k, blocks in enumerate(sweep["partitions"]):
            part = make_partition(model.space, blocks)
            settings.append((f"partition[{k}]", PartitionConditioning(model.space, model.x_assignment, part)))
    else:
        raise ConfigError("sweep needs 'kappa' or 'partitions'")
    for label, m in settings:
        s = verifier.cached_summary(m, initial, run, obs)
        rows.append(
            {
                "setting": label,
                "offdiag_l1": offdiag_l1(s.density.value),
                "expected_shannon": s.shannon.value,
                "expected_variance": s.variance.value,
                "vn_entropy": vn_entropy(s.density.value),
            }
        )
    return rows


def build(config: dict):
    """Validate a config dict into library objects."""
    init = _require(config, "initial", "config")
    probs = _require(init, "probs", "initial")
    initial = PureState(probs, init.get("phases", [0.0] * len(probs)))
    obs = Observable(config.get("observable", list(range(initial.n))))
    if obs.eigenvalues.size != initial.n:
        raise ConfigError(f"observable has {obs.eigenvalues.size} levels for n = {initial.n}")
    model = parse_model(_require(config, "model", "config"))
    check_model(model, initial)
    mode = parse_mode(config.get("mode", {"kind": "exact"}))
    checks = config.get("checks", list(ALL_CHECKS))
    unknown = set(checks) - set(ALL_CHECKS) - set(EXTRA_CHECKS)
    if unknown:
        raise ConfigError(f"unknown checks {sorted(unknown)}")
    return initial, obs, model, mode, checks


def _run_checks(checks, model, initial, obs, mode, sweep) -> list:
    reports = []
    for name in checks:
        if name == "mean_condition":
            reports.append(verifier.check_mean_condition(model, initial, mode))
        elif name == "P1chain":
            reports.append(verifier.check_decoherence_chain(model, initial, mode))
        elif name == "P3":
            reports.append(verifier.check_uncertainty_reduction(model, initial, obs, mode))
        elif name == "P4":
            reports.append(verifier.check_entropy_gain(model, initial, mode))
        elif name == "vN":
            reports.append(verifier.check_vn_entropy_increase(model, initial, mode))
        elif name == "equality":
            if isinstance(model, PartitionConditioning):
                reports.extend(verifier.check_equality_cases(initial, model.space, model.x_assignment))
            else:
                reports.extend(verifier.check_equality_cases(initial))
        elif name == "refinement":
            if not (isinstance(model, PartitionConditioning) and sweep and "partitions" in sweep):
                raise ConfigError("the refinement check needs a partition sweep")
            chain = [make_partition(model.space, b) for b in sweep["partitions"]]
            reports.append(
                verifier.check_refinement_chain(initial, model.space, model.x_assignment, chain)
            )
    return reports


def run_experiment(config: dict, output_dir: Path, quiet: bool = False) -> int:
    t0 = time.perf_counter()
    try:
        initial, obs, model, mode, checks = build(config)
        sweep = config.get("sweep")
        runs = [Exact()] if isinstance(mode, Exact) else mode.runs()
        estimates = []
        for run in runs:
            s = verifier.cached_summary(model, initial, run, obs)
            estimates.append({"seed": getattr(run, "seed", None), **_estimate_json(s)})
        reports = _run_checks(checks, model, initial, obs, mode, sweep)
        rows = _sweep_rows(sweep, model, initial, obs, mode) if sweep else None
    except (ConfigError, NoFiniteSupportError, ValueError, TypeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    status = 1 if any(r.verdict == "fail" for r in reports) else 0
    r0 = density_of(initial)
    report = {
        "library_version": __version__,
        "config": config,
        "mode": mode.describe(),
        "seeds": [] if isinstance(mode, Exact) else list(mode.seeds),
        "initial": {
            "density_matrix": _pairs(r0.entries),
            "shannon_entropy": shannon_entropy(initial.probs),
            "variance": variance(initial.probs, obs),
            "vn_entropy": vn_entropy(r0),
            "offdiag_l1": offdiag_l1(r0),
        },
        "estimates": estimates,
        "reports": [r.to_dict() for r in reports],
        "exit_status": status,
    }
    if rows is not None:
        report["sweep"] = rows
    out = config.get("output", {})
    output_dir.mkdir(parents=True, exist_ok=True)
    report["wall_clock_seconds"] = time.perf_counter() - t0
    (output_dir / out.get("report", "report.json")).write_text(
        json.dumps(report, indent=2, allow_nan=False) + "\n"
    )
    if rows is not None:
        with open(output_dir / out.get("trajectories", "trajectories.csv"), "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            w.writeheader()
            for row in rows:
                w.writerow({k: (v if isinstance(v, str) else repr(float(v))) for k, v in row.items()})
    if not quiet:
        for r in reports:
            extra = f" ({r.note})" if r.note else ""
            print(f"{r.proposition:<24} {r.verdict}{extra}")
        print(f"exit status {status}")
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="decohere", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", type=Path)
    run.add_argument("--output-dir", type=Path, default=Path("."))
    run.add_argument("--seed-override", type=int, default=None)
    run.add_argument("--mode", choices=("exact", "mc"), default=None)
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    try:
        config = json.loads(args.config.read_text())
        if not isinstance(config, dict):
            raise ConfigError("config must be a JSON object")
        config = apply_overrides(config, args)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run_experiment(config, args.output_dir, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
