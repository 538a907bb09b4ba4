"""Command line entry points.

Subcommands: train, evaluate, serve, generate-synthetic, topsis-report.
Every subcommand accepts --seed and --config for interface uniformity;
commands that are already deterministic simply ignore an unused seed.
Machine-readable JSON goes to stdout, progress notes to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .evaluation import (
    CriteriaMatrix,
    MetricError,
    MetricReport,
    SplitError,
    accuracy,
    auc,
    binary_accuracy,
    chronological_split,
    mae,
    pcc,
    topsis_rank,
    wape,
)
from .forecasting import (
    ForecastConfig,
    TrainingSchedule,
    assemble_dataset,
    load_model,
    predict_dataset,
    save_model,
    train_model,
)
from .taxonomy import load_taxonomy
from .trends import WindowSpec, ingest_records


def _say(message: str) -> None:
    print(message, file=sys.stderr)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _load_config(path: str | None, command: str) -> dict:
    if path is None:
        raise SystemExit(f"{command} requires --config, a JSON job file")
    return json.loads(Path(path).read_text())


def _window_for(config: ForecastConfig) -> WindowSpec:
    if config.qar is not None:
        return WindowSpec(n=config.qar.n, k=config.k, a_max=config.qar.a_max)
    return WindowSpec(n=1, k=config.k, a_max=8)


def _ingest(job: dict):
    taxonomy = load_taxonomy(job["taxonomy"])
    store, report = ingest_records(job["records"], taxonomy)
    if report.errors:
        _say(f"skipped {len(report.errors)} bad rows "
             f"(first: line {report.errors[0][0]}: {report.errors[0][1]})")
    return taxonomy, store


def _split_records(store, job: dict) -> tuple[list, list, list]:
    if not job.get("split", True):
        return list(store.records), [], []
    split = chronological_split(store.records)
    return split.train, split.validation, split.test


# ---- train -------------------------------------------------------------------------


def cmd_train(args) -> int:
    job = _load_config(args.config, "train")
    taxonomy, store = _ingest(job)
    config = ForecastConfig.from_dict(job["model"])
    window = _window_for(config)
    train_recs, val_recs, _ = _split_records(store, job)
    dataset, skipped = assemble_dataset(train_recs, store, taxonomy, config, window)
    validation = None
    if val_recs:
        try:
            validation, _ = assemble_dataset(val_recs, store, taxonomy, config, window)
        except ValueError:
            _say("validation records had no usable samples; training without")
    schedule_fields = dict(job.get("schedule", {}))
    if args.seed is not None:
        schedule_fields["seed"] = args.seed
    schedule = TrainingSchedule(**schedule_fields)
    _say(f"training {config.architecture} on {len(dataset)} samples "
         f"({skipped} skipped), seed {schedule.seed}")
    model, result = train_model(dataset, config, schedule, validation)
    model.version = job.get("version", model.version)
    out = Path(job["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    _emit({
        "out": str(out),
        "model_version": model.version,
        "architecture": config.architecture,
        "samples": len(dataset),
        "skipped": skipped,
        "epochs_run": result.stopped_epoch + 1,
        "final_loss": result.loss_curve[-1],
        "best_val_mae": result.best_val_mae,
    })
    return 0


# ---- evaluate ----------------------------------------------------------------------


def _safe(fn, *fn_args):
    try:
        return fn(*fn_args)
    except MetricError:
        return None


def cmd_evaluate(args) -> int:
    job = _load_config(args.config, "evaluate")
    taxonomy, store = _ingest(job)
    model = load_model(job["model"], taxonomy)
    window = _window_for(model.config)
    part = job.get("part", "test")
    if job.get("split", True):
        split = chronological_split(store.records)
        records = getattr(split, part)
    else:
        records = list(store.records)
    if not records:
        raise SystemExit(f"no records in split part {part!r}")
    dataset, skipped = assemble_dataset(records, store, taxonomy, model.config, window)
    preds = predict_dataset(model, dataset)[:, 0]
    truth = dataset.targets[:, 0]
    labels = (truth >= 0.5).astype(np.float64)
    report = MetricReport(
        sample_count=len(truth),
        dataset_id=job.get("dataset_id", Path(job["records"]).name),
        model_version=model.version,
        mae=_safe(mae, preds, truth),
        wape=_safe(wape, preds, truth),
        pcc=_safe(pcc, preds, truth),
        binary_accuracy=_safe(binary_accuracy, preds, truth),
        accuracy=_safe(accuracy, preds, labels),
        auc=_safe(auc, preds, labels),
    )
    if skipped:
        _say(f"{skipped} samples skipped for missing history")
    _emit(report.to_dict())
    return 0


# ---- serve -------------------------------------------------------------------------


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, build_state, create_app
    config = ServiceConfig.load(args.config)
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    app = create_app(build_state(config))
    _say(f"serving on {config.host}:{config.port}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


# ---- generate-synthetic ------------------------------------------------------------


def cmd_generate_synthetic(args) -> int:
    from .synthetic import WorldSpec, generate_dataset
    if args.config:
        spec = WorldSpec.load(args.config)
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
    else:
        spec = WorldSpec.default(
            seed=args.seed if args.seed is not None else 0,
            n_garments=args.garments, n_weeks=args.weeks)
    paths = generate_dataset(spec, args.out, fmt=args.format)
    _emit({name: str(path) for name, path in paths.items()})
    return 0


# ---- topsis-report -----------------------------------------------------------------


def cmd_topsis_report(args) -> int:
    raw = _load_config(args.config, "topsis-report")
    matrix = CriteriaMatrix(
        models=list(raw["models"]),
        criteria=[tuple(c) for c in raw["criteria"]],
        values=np.asarray(raw["values"], dtype=np.float64),
        weights=(np.asarray(raw["weights"], dtype=np.float64)
                 if raw.get("weights") is not None else None))
    result = topsis_rank(matrix)
    if args.pretty:
        order = sorted(range(len(matrix.models)),
                       key=lambda i: result.rank_of(matrix.models[i]))
        width = max(len(m) for m in matrix.models)
        _say(f"{'rank':>4}  {'model':<{width}}  closeness")
        for i in order:
            _say(f"{result.rank_of(matrix.models[i]):>4}  "
                 f"{matrix.models[i]:<{width}}  {result.closeness[i]:.4f}")
    _emit(result.to_dict())
    return 0


# ---- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="garmentcast",
        description="Popularity forecasting for new garment designs")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="override the run seed")
        p.add_argument("--config", default=None,
                       help="JSON config file for this subcommand")

    p = sub.add_parser("train", help="fit a forecast model from records")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on held-out records")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the forecast HTTP service")
    common(p)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("generate-synthetic",
                       help="write a synthetic world's records, taxonomy, and spec")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--garments", type=int, default=200)
    p.add_argument("--weeks", type=int, default=104)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.set_defaults(func=cmd_generate_synthetic)

    p = sub.add_parser("topsis-report",
                       help="rank models from a criteria matrix JSON")
    common(p)
    p.add_argument("--pretty", action="store_true",
                   help="print an aligned table to stderr as well")
    p.set_defaults(func=cmd_topsis_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SplitError, MetricError, ValueError, FileNotFoundError, KeyError) as exc:
        _say(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
