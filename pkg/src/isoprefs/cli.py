#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Command line for isoprefs.

Subcommands:
    * ``generate`` - write a seeded synthetic dataset, range image or stream
    * ``score`` - score a dataset with one engine and write a scores CSV
    * ``eval`` - ROC AUC of a scores file, or of repeated seeded runs
    * ``bench`` - per-phase wall times over a branching-factor or size sweep

Every command is deterministic for a fixed ``--seed``. ``score`` and
``bench`` append a JSON record to ``--manifest`` when given.

Example::

    isoprefs generate --kind star5 --seed 7 -o star5.csv
    isoprefs score --input star5.csv --engine vifor --family line -o scores.csv
    isoprefs eval --scores scores.csv --labels star5.csv
"""
import argparse
import json
import sys
import time
from dataclasses import asdict, replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from isoprefs.config import (
    ENGINES,
    ForestConfig,
    OnlineConfig,
    PIFConfig,
    RunConfig,
    SlidingConfig,
    resolve_threads,
)
from isoprefs.datasets import (
    PRIMITIVE_KINDS,
    SURFACE_SHAPES,
    generate_primitive_2d,
    generate_stream,
    generate_surface_grid,
    two_gaussian_stream_spec,
)
from isoprefs.evaluation import (
    baseline_iforest,
    roc_auc,
    score_map_auc,
    summarize_runs,
)
from isoprefs.exceptions import (
    EXIT_OK,
    EXIT_USAGE,
    DataFileError,
    IsoPrefsError,
    ValidationError,
    exit_code_for,
)
from isoprefs.geometry import LabeledDataset, family_by_name, sample_models, spawn_generators
from isoprefs.iso_logs import add_log, format_duration, seed_context
from isoprefs.iterators import Batches
from isoprefs.online import OnlineForest
from isoprefs.pif import preference_isolation_forest
from isoprefs.preference import METRICS, PreferenceConfig, embed
from isoprefs.sliding import sliding_pif
from isoprefs.streaming import (
    CsvExporter,
    append_manifest,
    fmt,
    iter_dataset_rows,
    read_dataset_csv,
    read_rimg,
    read_scores_csv,
    write_dataset_csv,
    write_preference_csv,
    write_rimg,
    write_score_map_csv,
    write_scores_csv,
)

PHASES = ("embed", "build", "score", "process")
DEFAULT_B_SWEEP = (2, 4, 8, 16, 32, 64, 128, 256)
DEFAULT_N_SWEEP = (100000, 200000)
DEFAULT_NOISE_SIGMA = 0.02


def _optional_b(value: str) -> Optional[int]:
    if value.lower() == "none":
        return None
    return int(value)


def _engine_arguments() -> argparse.ArgumentParser:
    """Flags shared by score, eval and bench."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--input", "-i", dest="input_path", help="Dataset CSV or RIMG file")
    parser.add_argument("--engine", default="vifor", help=f"One of {', '.join(ENGINES)}")
    parser.add_argument("--metric", default="tanimoto", help=f"One of {', '.join(METRICS)}")
    parser.add_argument("--family", default="line", help="Model family (line, circle, plane, ...)")
    parser.add_argument("--t", type=int, default=100, help="Number of trees")
    parser.add_argument("--psi", type=int, default=256, help="Subsample size")
    parser.add_argument(
        "--b", type=_optional_b, default=2, help="Branching factor, 'none' for plain RuzHash trees"
    )
    parser.add_argument("--m-factor", type=float, default=10.0, help="Models per point")
    parser.add_argument("--sigma", type=float, default=None, help="Noise scale")
    parser.add_argument("--sigma-k", type=float, default=3.0, help="Inlier threshold multiple")
    parser.add_argument("--binary", action="store_true", help="Binary preferences")
    parser.add_argument("--ambient", action="store_true", help="Isolate in ambient space")
    parser.add_argument("--tau", type=int, default=32, help="Online trees")
    parser.add_argument("--omega", type=int, default=2048, help="Online buffer length")
    parser.add_argument("--eta", type=int, default=32, help="Online max leaf samples")
    parser.add_argument("--batch", type=int, default=100, help="Online rows per step")
    parser.add_argument("--window", type=int, default=None, help="Sliding window side")
    parser.add_argument("--budget", dest="budget_bytes", type=int, default=2**30, help="Bytes")
    parser.add_argument("--seed", type=int, default=0, help="Random seed")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads")
    parser.add_argument("--manifest", dest="manifest_path", help="JSON-lines manifest to append to")
    return parser


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser of the ``isoprefs`` command."""
    parser = argparse.ArgumentParser(
        prog="isoprefs", description="Structure- and density-based isolation forests"
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True
    shared = _engine_arguments()

    generate = commands.add_parser("generate", help="Write a synthetic dataset")
    generate.add_argument(
        "--kind",
        required=True,
        choices=PRIMITIVE_KINDS + ("surface", "stream"),
        help="Dataset kind",
    )
    generate.add_argument("--shape", default="paraboloid", choices=SURFACE_SHAPES)
    generate.add_argument("--side", type=int, default=200, help="Surface side in pixels")
    generate.add_argument(
        "--pit",
        nargs=4,
        type=float,
        metavar=("ROW", "COL", "RADIUS", "DEPTH"),
        help="Surface defect: centre pixel, radius in pixels, depth in sigmas",
    )
    generate.add_argument("--sigma", type=float, default=None, help="Noise standard deviation")
    generate.add_argument("--n", type=int, default=10000, help="Stream length")
    generate.add_argument("--d", type=int, default=4, help="Stream dimension")
    generate.add_argument("--anomaly-rate", type=float, default=0.02, help="Stream anomaly rate")
    generate.add_argument("--seed", type=int, default=0, help="Random seed")
    generate.add_argument("--output", "-o", required=True, help="Output file")
    generate.set_defaults(handler=cmd_generate)

    score = commands.add_parser("score", parents=[shared], help="Score a dataset")
    score.add_argument("--output", "-o", dest="output_path", required=True, help="Scores CSV")
    score.add_argument("--dump-preferences", help="Write the preference matrix to this CSV")
    score.set_defaults(handler=cmd_score)

    evaluate = commands.add_parser("eval", parents=[shared], help="ROC AUC of scores")
    evaluate.add_argument("--scores", help="Scores CSV")
    evaluate.add_argument("--labels", help="Dataset CSV or RIMG holding the ground truth")
    evaluate.add_argument("--runs", type=int, default=1, help="Seeded repetitions of --input")
    evaluate.add_argument("--json", action="store_true", help="Machine-readable output")
    evaluate.set_defaults(handler=cmd_eval)

    bench = commands.add_parser("bench", parents=[shared], help="Time the engine phases")
    bench.add_argument("--sweep", choices=("b", "n"), default="b", help="Sweep axis")
    bench.add_argument("--values", type=int, nargs="+", help="Sweep values")
    bench.add_argument(
        "--phases", default=",".join(PHASES), help="Comma-separated phases to time"
    )
    bench.add_argument("--output", "-o", dest="output_path", required=True, help="Timings CSV")
    bench.set_defaults(handler=cmd_bench)
    return parser


def run_config_from(args: argparse.Namespace) -> RunConfig:
    """Collect the engine flags of ``args`` into a :class:`RunConfig`."""
    return RunConfig(
        engine=args.engine,
        metric=args.metric,
        family=args.family,
        t=args.t,
        psi=args.psi,
        b=args.b,
        m_factor=args.m_factor,
        sigma=args.sigma,
        sigma_k=args.sigma_k,
        binary=args.binary,
        ambient=args.ambient,
        tau=args.tau,
        omega=args.omega,
        eta=args.eta,
        batch=args.batch,
        window=args.window,
        budget_bytes=args.budget_bytes,
        seed=args.seed,
        threads=resolve_threads(args.threads),
        input_path=args.input_path,
        output_path=getattr(args, "output_path", None),
        manifest_path=args.manifest_path,
        dump_preferences=getattr(args, "dump_preferences", None),
    )


def _check(config: RunConfig) -> None:
    problems = config.validate()
    if config.engine not in ("online", "baseline"):
        try:
            family_by_name(config.family)
        except ValidationError as e:
            problems.append(e)
    if problems:
        for problem in problems:
            flag = (problem.field or "config").replace("_", "-")
            print(f"error: {problem.messages} (--{flag})", file=sys.stderr)
        raise ValidationError(f"{len(problems)} invalid parameter(s)", field="config")


def pif_config_for(config: RunConfig) -> PIFConfig:
    """Map a run configuration onto the preference isolation forest."""
    return PIFConfig(
        forest=ForestConfig(
            engine=config.engine,
            t=config.t,
            psi=config.psi,
            b=config.b,
            metric=config.metric,
            n_jobs=config.threads,
        ),
        sigma=config.sigma,
        k_multiplier=config.sigma_k,
        binary=config.binary,
        m_factor=config.m_factor,
        ambient=config.ambient,
    )


def _read_dataset(config: RunConfig) -> LabeledDataset:
    sigma = config.sigma
    if sigma is None:
        sigma = DEFAULT_NOISE_SIGMA
        if config.engine in ("vifor", "rzhash") and not config.ambient:
            add_log(
                f"No --sigma given for {config.input_path}; assuming noise sigma {sigma}",
                "warning",
            )
    return read_dataset_csv(config.input_path, noise_sigma=sigma)


def score_dataset(config: RunConfig, data: LabeledDataset) -> Dict[str, Any]:
    """Run a batch engine on ``data``.

    :return: Dict with ``scores``, ``timings``, ``depth_histogram`` and,
        for preference runs, ``preferences``
    """
    if config.engine == "baseline":
        start = time.perf_counter()
        scores = baseline_iforest(data.points, t=config.t, psi=config.psi, seed=config.seed)
        return {
            "scores": scores,
            "timings": {"build": time.perf_counter() - start},
            "depth_histogram": {},
            "preferences": None,
        }
    result = preference_isolation_forest(
        data, config.family, pif_config_for(config), rng=config.seed
    )
    return {
        "scores": result.scores,
        "timings": result.timings,
        "depth_histogram": result.forest.depth_histogram(),
        "preferences": result.preferences,
    }


def score_stream(config: RunConfig) -> Dict[str, Any]:
    """Feed a dataset CSV row by row to an online forest, ``batch`` rows at a time."""
    forest = OnlineForest.from_config(
        OnlineConfig(n_trees=config.tau, omega=config.omega, eta=config.eta), rng=config.seed
    )
    scores: List[float] = []
    labels: List[int] = []
    start = time.perf_counter()
    for batch in Batches(iter_dataset_rows(config.input_path), config.batch):
        scores.extend(forest.process_batch(np.array([row.point for row in batch])))
        labels.extend(row.label for row in batch)
    return {
        "scores": np.asarray(scores),
        "labels": np.asarray(labels),
        "timings": {"process": time.perf_counter() - start},
        "depth_histogram": forest.depth_histogram(),
    }


def _sliding_config(config: RunConfig) -> SlidingConfig:
    return SlidingConfig(
        omega=config.window,
        forest=ForestConfig(
            engine="rzhash", t=config.t, psi=config.psi, b=config.b, n_jobs=config.threads
        ),
        budget_bytes=config.budget_bytes,
        sigma=config.sigma,
        k_multiplier=config.sigma_k,
    )


def _manifest(command: str, config: RunConfig, wall: float, **extra: Any) -> None:
    if not config.manifest_path:
        return
    record = {
        "command": command,
        "config": asdict(config),
        "seed": config.seed,
        "wall_seconds": round(wall, 6),
    }
    record.update(extra)
    append_manifest(config.manifest_path, record)


def cmd_generate(args: argparse.Namespace) -> int:
    """Write a synthetic dataset and print ``n``, ``d`` and the anomaly fraction."""
    if args.kind == "surface":
        defect = None
        if args.pit:
            row, col, radius, depth = args.pit
            defect = ((int(row), int(col)), radius, depth)
        image = generate_surface_grid(
            args.shape, args.side, sigma=args.sigma or 0.001, defect=defect, seed=args.seed
        )
        write_rimg(args.output, image)
        n = int(image.valid.sum())
        fraction = float(image.gt_mask.sum()) / image.gt_mask.size
        print(f"n={n} d=3 anomaly_fraction={fraction:.4f}")
        return EXIT_OK

    if args.kind == "stream":
        data = generate_stream(
            two_gaussian_stream_spec(n=args.n, d=args.d, anomaly_rate=args.anomaly_rate),
            seed=args.seed,
        )
    else:
        data = generate_primitive_2d(args.kind, seed=args.seed, sigma=args.sigma or 0.02)
    write_dataset_csv(args.output, data)
    print(f"n={len(data)} d={data.dim} anomaly_fraction={data.anomaly_fraction:.4f}")
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    """Score the input with the chosen engine and write the scores file."""
    config = run_config_from(args)
    _check(config)
    start = time.perf_counter()

    if config.engine == "online":
        result = score_stream(config)
        write_scores_csv(config.output_path, result["scores"], labels=result["labels"])
        n = len(result["scores"])
    elif config.engine == "sliding":
        image = read_rimg(config.input_path)
        outcome = sliding_pif(image, config.family, _sliding_config(config), rng=config.seed)
        write_score_map_csv(config.output_path, outcome.score_map)
        n = int(image.valid.sum())
        result = {
            "timings": {},
            "depth_histogram": {},
            "windows_scored": outcome.windows_scored,
            "windows_skipped": outcome.windows_skipped,
            "peak_matrix_bytes": outcome.peak_matrix_bytes,
        }
    else:
        data = _read_dataset(config)
        result = score_dataset(config, data)
        write_scores_csv(config.output_path, result["scores"])
        if config.dump_preferences:
            if result["preferences"] is None:
                add_log("No preference matrix to dump for this engine", "warning")
            else:
                write_preference_csv(config.dump_preferences, result["preferences"].values)
        n = len(data)

    wall = time.perf_counter() - start
    extra = {
        k: v for k, v in result.items() if k not in ("scores", "labels", "preferences")
    }
    _manifest("score", config, wall, n=n, **extra)
    add_log(f"Scored {n} points with {config.engine} in {format_duration(wall)}", "info")
    print(f"scored {n} points in {format_duration(wall)} -> {config.output_path}")
    return EXIT_OK


def _labels_for(path: str, n: int) -> np.ndarray:
    if path.lower().endswith(".rimg"):
        image = read_rimg(path)
        if image.gt_mask is None:
            raise DataFileError(message="range image has no ground truth", filename=path, operation="read")
        labels = image.gt_mask.reshape(-1).astype(np.int64)
    else:
        labels = np.array([row.label for row in iter_dataset_rows(path)], dtype=np.int64)
    if len(labels) != n:
        raise DataFileError(
            message=f"{n} scores but {len(labels)} labels", filename=path, operation="parse"
        )
    return labels


def _read_score_map(path: str) -> Optional[np.ndarray]:
    """Read a ``row,col,score`` file back into a map, None for other files."""
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip()
    if header != "row,col,score":
        return None
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as e:
        raise DataFileError(message=str(e), filename=path, operation="parse")
    rows, cols = table[:, 0].astype(np.int64), table[:, 1].astype(np.int64)
    score_map = np.full((rows.max() + 1, cols.max() + 1), np.nan)
    score_map[rows, cols] = table[:, 2]
    return score_map


def evaluate_scores(scores_path: str, labels_path: Optional[str]) -> float:
    """ROC AUC of a scores file against its labels."""
    try:
        score_map = _read_score_map(scores_path)
    except OSError as e:
        raise DataFileError(message=str(e), filename=scores_path, operation="read")
    if score_map is not None:
        if not labels_path:
            raise ValidationError("a score map needs --labels", field="labels")
        image = read_rimg(labels_path)
        if image.gt_mask is None or image.gt_mask.shape != score_map.shape:
            raise DataFileError(
                message="ground truth does not match the score map",
                filename=labels_path,
                operation="parse",
            )
        return score_map_auc(score_map, image.gt_mask)

    _, scores, labels = read_scores_csv(scores_path)
    if labels_path:
        labels = _labels_for(labels_path, len(scores))
    if labels is None:
        raise ValidationError("scores have no labels, pass --labels", field="labels")
    return roc_auc(scores, labels)


def cmd_eval(args: argparse.Namespace) -> int:
    """Print the ROC AUC of a scores file or of ``--runs`` seeded runs."""
    if args.scores:
        aucs = [evaluate_scores(args.scores, args.labels)]
    else:
        config = run_config_from(args)
        _check(config)
        if args.runs < 1:
            raise ValidationError("runs must be >= 1", field="runs", value=args.runs)
        aucs = []
        data = None if config.engine in ("online", "sliding") else _read_dataset(config)
        for seed in range(config.seed, config.seed + args.runs):
            run = replace(config, seed=seed)
            with seed_context(seed):
                if run.engine == "online":
                    result = score_stream(run)
                    aucs.append(roc_auc(result["scores"], result["labels"]))
                elif run.engine == "sliding":
                    image = read_rimg(run.input_path)
                    if image.gt_mask is None:
                        raise DataFileError(
                            message="range image has no ground truth",
                            filename=run.input_path,
                            operation="read",
                        )
                    outcome = sliding_pif(image, run.family, _sliding_config(run), rng=seed)
                    aucs.append(score_map_auc(outcome.score_map, image.gt_mask))
                else:
                    aucs.append(roc_auc(score_dataset(run, data)["scores"], data.labels))
            add_log(f"Run with seed {seed}: AUC {aucs[-1]:.4f}", "info")

    summary = summarize_runs(aucs)
    if args.json:
        print(json.dumps({"auc": aucs, "mean": summary.mean, "std": summary.std, "runs": summary.runs}))
    elif summary.runs == 1:
        print(f"AUC {summary.mean:.4f}")
    else:
        print(f"AUC {summary}")
    return EXIT_OK


def _resample(data: LabeledDataset, n: int, rng: np.random.Generator) -> LabeledDataset:
    idx = rng.choice(len(data), size=n, replace=n > len(data))
    return LabeledDataset(points=data.points[idx], labels=data.labels[idx], noise_sigma=data.noise_sigma)


def _bench_one(config: RunConfig, data: LabeledDataset, phases: Sequence[str]) -> Dict[str, float]:
    if config.engine == "online":
        forest = OnlineForest(n_trees=config.tau, omega=config.omega, eta=config.eta, rng=config.seed)
        start = time.perf_counter()
        for batch in Batches(data.points, config.batch):
            forest.process_batch(batch)
        return {"process": time.perf_counter() - start}
    if list(phases) == ["embed"] and config.engine != "baseline" and not config.ambient:
        pif = pif_config_for(config)
        sigma = config.sigma or data.noise_sigma
        start = time.perf_counter()
        models = sample_models(
            data.points, family_by_name(config.family), pif.models_for(len(data)), rng_seed=config.seed
        )
        embed(data.points, models, PreferenceConfig(sigma=sigma, k_multiplier=config.sigma_k))
        return {"embed": time.perf_counter() - start}
    return score_dataset(config, data)["timings"]


def cmd_bench(args: argparse.Namespace) -> int:
    """Write ``engine,axis,value,phase,seconds`` rows for a parameter sweep."""
    config = run_config_from(args)
    _check(config)
    phases = [p.strip() for p in args.phases.split(",") if p.strip()]
    unknown = [p for p in phases if p not in PHASES]
    if unknown or not phases:
        raise ValidationError(f"phases must be among {', '.join(PHASES)}", field="phases", value=unknown)
    if config.engine == "sliding":
        raise ValidationError("bench does not sweep the sliding engine", field="engine")
    values = args.values or (DEFAULT_B_SWEEP if args.sweep == "b" else DEFAULT_N_SWEEP)

    data = _read_dataset(config)
    resample_rng = spawn_generators(config.seed, 1)[0]
    start = time.perf_counter()
    with CsvExporter(config.output_path, headers=["engine", "axis", "value", "phase", "seconds"]) as exporter:
        for value in values:
            if args.sweep == "b":
                run = replace(config, b=value, psi=max(config.psi, value))
                sample = data
            else:
                run = config
                sample = _resample(data, value, resample_rng)
            problems = run.validate()
            if problems:
                raise problems[0]
            timings = _bench_one(run, sample, phases)
            for phase in phases:
                if phase in timings:
                    exporter.write_row([run.engine, args.sweep, value, phase, fmt(timings[phase])])
            add_log(f"bench {run.engine} {args.sweep}={value}: {timings}", "debug")

    wall = time.perf_counter() - start
    _manifest("bench", config, wall, sweep=args.sweep, values=list(values), phases=phases)
    print(f"benchmarked {len(values)} settings in {format_duration(wall)} -> {config.output_path}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the ``isoprefs`` command.

    :param argv: Arguments, defaults to ``sys.argv[1:]``

    :return: Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    with seed_context(getattr(args, "seed", None)):
        try:
            return args.handler(args)
        except (IsoPrefsError, OSError) as e:
            code = exit_code_for(e)
            add_log(f"{args.command} failed: {e}", "error")
            print(f"error: {e}", file=sys.stderr)
            return code


if __name__ == "__main__":
    sys.exit(main())
