"""Config-driven experiment runner.

Runs an embedding experiment over a sweep of sample sizes with repeated
trials, writing per-trial embeddings and metrics plus deterministic
aggregate CSVs. Identical configs produce byte-identical aggregate and
trials CSVs (timing columns excepted) regardless of the --jobs setting:
every trial derives its RNG stream from (seed, m, trial) alone, and
aggregation sorts records before writing.
"""

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ._kernels import BACKEND
from .embedding import SolverConfig, lot_wassmap, wassmap
from .evaluation import procrustes_align
from .measures import (
    generate_circle_translation,
    generate_dilation,
    generate_grid_translation,
    generate_rotation,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "main",
    "parse_config",
    "run_experiment",
    "serialize_config",
]

EXPERIMENTS = (
    "circle-translation",
    "rotation",
    "grid-translation",
    "dilation",
    "timing",
)
SOLVERS = ("exact", "sinkhorn")

_COMMON_DEFAULTS = {
    "solver": "exact",
    "beta": 1.0,
    "dim": 2,
    "m_sweep": [125, 250, 500, 1000, 2000],
    "trials": 10,
    "seed": 0,
    "output_dir": "runs",
    "jobs": 1,
    "n_measures": 10,
    "radius": 8.0,
    "grid_side": 5,
    "domain": [-10.0, 10.0],
    "dilation_domain": [1.0, 4.0],
    "base_cov": [[1.0, -0.5], [-0.5, 1.0]],
    "noise_scale": 0.5,
    "k": None,
    "sinkhorn_tol": 1e-9,
    "sinkhorn_max_iter": 10000,
}
_EXPERIMENT_DEFAULTS = {
    "circle-translation": {},
    "rotation": {"base_cov": [[2.0, 0.0], [0.0, 0.5]]},
    "grid-translation": {"beta": 10.0},
    "dilation": {"beta": 100.0, "grid_side": 3, "k": 2500},
    "timing": {},
}


class ConfigError(ValueError):
    """Invalid experiment config; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    solver: str
    beta: float
    dim: int
    m_sweep: tuple
    trials: int
    seed: int
    output_dir: str
    jobs: int
    n_measures: int
    radius: float
    grid_side: int
    domain: tuple
    dilation_domain: tuple
    base_cov: tuple
    noise_scale: float
    k: int | None
    sinkhorn_tol: float
    sinkhorn_max_iter: int


@dataclass(frozen=True)
class TrialRecord:
    m: int
    trial: int
    algorithm: str
    relative_error: float
    ot_solves: int
    sinkhorn_iterations: int
    seconds: float


@dataclass(frozen=True)
class AggregateRecord:
    m: int
    algorithm: str
    trials: int
    mean_relative_error: float
    std_relative_error: float
    ot_solves_per_trial: int


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    records: list
    aggregates: list
    failures: list
    output_dir: str


def _as_int(value, key, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigError(f"config key {key!r} must be an integer", key)
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"config key {key!r} must be >= {minimum}", key)
    return value


def _as_float(value, key, minimum=None, exclusive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating)):
        raise ConfigError(f"config key {key!r} must be a number", key)
    value = float(value)
    if minimum is not None:
        if exclusive and value <= minimum:
            raise ConfigError(f"config key {key!r} must be > {minimum}", key)
        if not exclusive and value < minimum:
            raise ConfigError(f"config key {key!r} must be >= {minimum}", key)
    return value


def _as_interval(value, key, minimum=None):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"config key {key!r} must be a [lo, hi] pair", key)
    lo = _as_float(value[0], f"{key}[0]", minimum=minimum)
    hi = _as_float(value[1], f"{key}[1]")
    if hi <= lo:
        raise ConfigError(f"config key {key!r} needs lo < hi", key)
    return (lo, hi)


def _as_cov(value, key):
    try:
        arr = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} must be a 2x2 matrix", key) from None
    if arr.shape != (2, 2):
        raise ConfigError(f"config key {key!r} must be a 2x2 matrix", key)
    return tuple(tuple(float(x) for x in row) for row in arr)


def _as_m_sweep(value, key):
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        raise ConfigError(f"config key {key!r} must be a nonempty list", key)
    out = []
    for idx, entry in enumerate(value):
        out.append(_as_int(entry, f"{key}[{idx}]", minimum=1))
    for prev, cur in zip(out, out[1:]):
        if cur <= prev:
            raise ConfigError(
                f"config key {key!r} must be strictly ascending", key
            )
    return tuple(out)


def parse_config(source):
    """Parse and validate an experiment config.

    Parameters
    ----------
    source : dict or str
        Config mapping or its JSON text. ``experiment`` is required;
        every other key gets an experiment-specific default. Unknown
        keys are rejected by name.

    Returns
    -------
    ExperimentConfig
    """
    if isinstance(source, str):
        try:
            source = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(source, dict):
        raise ConfigError("config must be a JSON object")

    known = set(_COMMON_DEFAULTS) | {"experiment"}
    for key in source:
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}", key)

    experiment = source.get("experiment")
    if experiment is None:
        raise ConfigError("config key 'experiment' is required", "experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"config key 'experiment' must be one of {list(EXPERIMENTS)}, "
            f"got {experiment!r}",
            "experiment",
        )

    merged = dict(_COMMON_DEFAULTS)
    merged.update(_EXPERIMENT_DEFAULTS[experiment])
    merged.update({k: v for k, v in source.items() if k != "experiment"})

    solver = merged["solver"]
    if solver not in SOLVERS:
        raise ConfigError(
            f"config key 'solver' must be one of {list(SOLVERS)}, "
            f"got {solver!r}",
            "solver",
        )
    beta = _as_float(merged["beta"], "beta")
    if solver == "sinkhorn" and beta <= 0:
        raise ConfigError(
            "config key 'beta' must be > 0 for the sinkhorn solver", "beta"
        )
    k = merged["k"]
    if k is not None:
        k = _as_int(k, "k", minimum=1)

    return ExperimentConfig(
        experiment=experiment,
        solver=solver,
        beta=beta,
        dim=_as_int(merged["dim"], "dim", minimum=1),
        m_sweep=_as_m_sweep(merged["m_sweep"], "m_sweep"),
        trials=_as_int(merged["trials"], "trials", minimum=1),
        seed=_as_int(merged["seed"], "seed", minimum=0),
        output_dir=str(merged["output_dir"]),
        jobs=_as_int(merged["jobs"], "jobs", minimum=1),
        n_measures=_as_int(merged["n_measures"], "n_measures", minimum=2),
        radius=_as_float(merged["radius"], "radius", minimum=0.0),
        grid_side=_as_int(merged["grid_side"], "grid_side", minimum=1),
        domain=_as_interval(merged["domain"], "domain"),
        dilation_domain=_as_interval(
            merged["dilation_domain"], "dilation_domain", minimum=0.0
        ),
        base_cov=_as_cov(merged["base_cov"], "base_cov"),
        noise_scale=_as_float(merged["noise_scale"], "noise_scale", minimum=0.0),
        k=k,
        sinkhorn_tol=_as_float(
            merged["sinkhorn_tol"], "sinkhorn_tol", minimum=0.0, exclusive=True
        ),
        sinkhorn_max_iter=_as_int(
            merged["sinkhorn_max_iter"], "sinkhorn_max_iter", minimum=1
        ),
    )


def serialize_config(config):
    """Canonical JSON form of a config; parse-stable."""
    doc = asdict(config)
    for key in ("m_sweep", "domain", "dilation_domain"):
        doc[key] = list(doc[key])
    doc["base_cov"] = [list(row) for row in doc["base_cov"]]
    return json.dumps(doc, sort_keys=True, indent=2)


def _algorithms(config):
    if config.experiment == "timing":
        return ("lot-wassmap", "wassmap")
    return ("lot-wassmap",)


def _solver_tag(config):
    if config.solver == "sinkhorn":
        return f"sinkhorn-beta{config.beta:g}"
    return "exact"


def _build_dataset(config, k, m, seed):
    base_cov = np.asarray(config.base_cov)
    if config.experiment == "circle-translation":
        return generate_circle_translation(
            config.n_measures, config.radius, base_cov, config.noise_scale,
            k, m, seed,
        )
    if config.experiment == "rotation":
        return generate_rotation(
            config.n_measures, config.radius, base_cov, config.noise_scale,
            k, m, seed,
        )
    if config.experiment in ("grid-translation", "timing"):
        return generate_grid_translation(
            config.grid_side, config.domain, base_cov, config.noise_scale,
            k, m, seed,
        )
    return generate_dilation(
        config.grid_side, config.dilation_domain, k, m, seed,
        noise_scale=config.noise_scale,
    )


def _write_matrix_csv(path, matrix):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.atleast_2d(matrix):
            writer.writerow([repr(float(x)) for x in row])


def _run_trial(config, m, trial, run_root):
    seed = np.random.SeedSequence((config.seed, m, trial))
    k = config.k if config.k is not None else m
    solver = SolverConfig(
        kind=config.solver,
        beta=config.beta,
        tol=config.sinkhorn_tol,
        max_iter=config.sinkhorn_max_iter,
    )
    trial_dir = run_root / f"m{m}_t{trial}"
    trial_dir.mkdir(parents=True, exist_ok=True)

    records = []
    failures = []
    metrics_doc = {
        "m": m,
        "trial": trial,
        "seed": [config.seed, m, trial],
        "k": k,
        "algorithms": {},
    }
    try:
        dataset = _build_dataset(config, k, m, seed)
    except (RuntimeError, ValueError) as exc:
        for algorithm in _algorithms(config):
            failures.append(
                {"m": m, "trial": trial, "algorithm": algorithm,
                 "error": str(exc)}
            )
        metrics_doc["error"] = str(exc)
        with open(trial_dir / "metrics.json", "w") as fh:
            json.dump(metrics_doc, fh, indent=2, sort_keys=True)
        return records, failures
    truth = dataset.truth - dataset.truth.mean(axis=0)

    for algorithm in _algorithms(config):
        pipeline = lot_wassmap if algorithm == "lot-wassmap" else wassmap
        try:
            result = pipeline(dataset, solver, config.dim)
        except (RuntimeError, ValueError) as exc:
            failures.append(
                {"m": m, "trial": trial, "algorithm": algorithm,
                 "error": str(exc)}
            )
            metrics_doc["algorithms"][algorithm] = {"error": str(exc)}
            continue
        align = procrustes_align(result.coordinates, truth)
        name = (
            "embedding.csv" if algorithm == "lot-wassmap"
            else "wassmap_embedding.csv"
        )
        _write_matrix_csv(trial_dir / name, result.coordinates)
        metrics_doc["algorithms"][algorithm] = {
            "relative_error": align.relative_error,
            "absolute_error": align.absolute_error,
            "ot_solve_count": result.metrics.ot_solve_count,
            "sinkhorn_iterations": result.metrics.sinkhorn_iterations,
            "singular_values": [float(s) for s in result.singular_values],
            "negative_eigenvalue_mass": result.negative_eigenvalue_mass,
            "stage_seconds": result.metrics.stage_seconds,
            "total_seconds": result.metrics.total_seconds,
        }
        records.append(
            TrialRecord(
                m=m,
                trial=trial,
                algorithm=algorithm,
                relative_error=align.relative_error,
                ot_solves=result.metrics.ot_solve_count,
                sinkhorn_iterations=result.metrics.sinkhorn_iterations,
                seconds=result.metrics.total_seconds,
            )
        )
    with open(trial_dir / "metrics.json", "w") as fh:
        json.dump(metrics_doc, fh, indent=2, sort_keys=True)
    return records, failures


def _aggregate(records):
    keys = sorted({(r.m, r.algorithm) for r in records})
    out = []
    for m, algorithm in keys:
        group = [r for r in records if r.m == m and r.algorithm == algorithm]
        errors = np.array([r.relative_error for r in group])
        solves = {r.ot_solves for r in group}
        out.append(
            AggregateRecord(
                m=m,
                algorithm=algorithm,
                trials=len(group),
                mean_relative_error=float(errors.mean()),
                std_relative_error=float(errors.std()),
                ot_solves_per_trial=max(solves),
            )
        )
    return out


def run_experiment(config):
    """Run every (m, trial) task and write the output tree.

    Layout: ``<output_dir>/<experiment>/<solver>/m<m>_t<trial>/`` holds
    embedding.csv and metrics.json per trial; trials.csv,
    aggregate.csv, and report.json sit at the experiment root.
    aggregate.csv carries only deterministic columns.

    Returns
    -------
    ExperimentReport
    """
    if config.experiment in ("grid-translation", "timing", "dilation"):
        n_measures = config.grid_side ** 2
    else:
        n_measures = config.n_measures
    if config.dim >= n_measures:
        raise ConfigError(
            f"dim must be < number of measures ({n_measures})", "dim"
        )

    exp_root = Path(config.output_dir) / config.experiment
    run_root = exp_root / _solver_tag(config)
    run_root.mkdir(parents=True, exist_ok=True)

    tasks = [(m, t) for m in config.m_sweep for t in range(config.trials)]
    if config.jobs == 1:
        results = [_run_trial(config, m, t, run_root) for m, t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(
                pool.map(lambda mt: _run_trial(config, *mt, run_root), tasks)
            )
    records = sorted(
        (r for batch, _ in results for r in batch),
        key=lambda r: (r.m, r.trial, r.algorithm),
    )
    failures = sorted(
        (f for _, batch in results for f in batch),
        key=lambda f: (f["m"], f["trial"], f["algorithm"]),
    )
    aggregates = _aggregate(records)

    with open(exp_root / "trials.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["m", "trial", "algorithm", "solver", "relative_error",
             "ot_solves", "sinkhorn_iterations", "seconds"]
        )
        for r in records:
            writer.writerow(
                [r.m, r.trial, r.algorithm, _solver_tag(config),
                 repr(r.relative_error), r.ot_solves,
                 r.sinkhorn_iterations, repr(r.seconds)]
            )
    with open(exp_root / "aggregate.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["m", "algorithm", "solver", "trials", "mean_relative_error",
             "std_relative_error", "ot_solves_per_trial"]
        )
        for a in aggregates:
            writer.writerow(
                [a.m, a.algorithm, _solver_tag(config), a.trials,
                 repr(a.mean_relative_error), repr(a.std_relative_error),
                 a.ot_solves_per_trial]
            )
    with open(exp_root / "report.json", "w") as fh:
        json.dump(
            {
                "config": json.loads(serialize_config(config)),
                "backend": BACKEND,
                "aggregates": [asdict(a) for a in aggregates],
                "records": [asdict(r) for r in records],
                "failures": failures,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
    return ExperimentReport(config, records, aggregates, failures, str(exp_root))


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="lotmap",
        description="Embed datasets of empirical measures and sweep "
        "sample sizes over repeated trials.",
    )
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--experiment", choices=EXPERIMENTS)
    parser.add_argument("--solver", choices=SOLVERS)
    parser.add_argument("--beta", type=float, help="entropic regularization")
    parser.add_argument(
        "--m", action="append", type=int, metavar="M",
        help="sample size; repeat the flag for a sweep",
    )
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--dim", type=int, help="embedding dimension")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--jobs", type=int, help="concurrent trials")
    return parser


def main(argv=None):
    """CLI entry point; returns the process exit code."""
    args = _build_parser().parse_args(argv)
    doc = {}
    try:
        if args.config is not None:
            try:
                doc = json.loads(args.config.read_text())
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}") from None
            if not isinstance(doc, dict):
                raise ConfigError("config file must hold a JSON object")
        for key, flag in (
            ("experiment", args.experiment),
            ("solver", args.solver),
            ("beta", args.beta),
            ("m_sweep", args.m),
            ("trials", args.trials),
            ("seed", args.seed),
            ("dim", args.dim),
            ("output_dir", args.out),
            ("jobs", args.jobs),
        ):
            if flag is not None:
                doc[key] = flag
        config = parse_config(doc)
    except ConfigError as exc:
        json.dump({"error": str(exc), "key": exc.key}, sys.stderr)
        sys.stderr.write("\n")
        return 2

    try:
        report = run_experiment(config)
    except ConfigError as exc:
        json.dump({"error": str(exc), "key": exc.key}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except (ValueError, RuntimeError) as exc:
        json.dump({"error": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1

    for a in report.aggregates:
        print(
            f"m={a.m} {a.algorithm}: relative error "
            f"{a.mean_relative_error:.4f} +/- {a.std_relative_error:.4f} "
            f"({a.trials} trials, {a.ot_solves_per_trial} solves each)"
        )
    print(f"outputs in {report.output_dir}")
    if report.failures:
        json.dump(
            {"error": f"{len(report.failures)} trial(s) failed",
             "failures": report.failures},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
