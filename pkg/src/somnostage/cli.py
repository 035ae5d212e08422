"""Command-line front end for the sleep staging pipeline.

Subcommands: info, features, train, crossval, score, report, evaluate,
synth. Exit status 0 on success, 1 on usage errors, 2 on data errors.
Every run is deterministic given its --seed; human-readable outputs end
with a provenance footer (tool version and configuration, never a
timestamp) so published numbers stay re-derivable.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, dataset, edf, metrics, mlp, spectral, synth


class _UsageError(Exception):
    """Bad invocation detected after argument parsing (exit status 1)."""


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors by default; this tool reserves 2
    for data errors, so usage errors exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _footer(command: str, seed=None, **config) -> str:
    parts = [f"somnostage {__version__}", command]
    if seed is not None:
        parts.append(f"seed {seed}")
    parts.extend(f"{key} {value}" for key, value in config.items())
    return "[" + " | ".join(parts) + "]"


def _selector(text: str):
    """Signal labels that look like integers address signals by position."""
    stripped = text.lstrip("+-")
    return int(text) if stripped.isdigit() else text


def _train_config(args) -> mlp.TrainConfig:
    return mlp.TrainConfig(
        learning_rate=args.learning_rate,
        max_epochs=args.max_epochs,
        patience=args.patience,
        seed=args.seed,
    )


def _config_summary(args) -> dict:
    return {
        "lr": args.learning_rate,
        "max-epochs": args.max_epochs,
        "patience": args.patience,
    }


def _extract_features(args) -> np.ndarray:
    if not 1 <= len(args.signals) <= 2:
        raise _UsageError("--signals takes one label (5 features) or two (10 features)")
    raw = Path(args.recording).read_bytes()
    blocks = []
    for label in args.signals:
        series = edf.read_signal(raw, _selector(label))
        blocks.append(spectral.extract_features(series, args.epoch_seconds))
    if len(blocks) == 2 and blocks[0].shape[0] != blocks[1].shape[0]:
        raise ValueError(
            f"signals yield different epoch counts: {blocks[0].shape[0]} vs {blocks[1].shape[0]}"
        )
    return np.hstack(blocks)


def _load_corpus(args):
    features = spectral.read_features(args.features)
    hypnogram = dataset.read_hypnogram(args.hypnogram)
    return dataset.build_dataset(features, hypnogram)


def _format_class_counts(data: dataset.LabeledDataset) -> str:
    counts = data.class_counts()
    return ", ".join(
        f"{stage.display} {counts.get(stage, 0)}" for stage in dataset.CLASSIFIER_STAGES
    )


def cmd_info(args) -> None:
    header = edf.parse_header(Path(args.recording).read_bytes())
    lines = [
        f"version    {header.version}",
        f"patient    {header.patient_id}",
        f"recording  {header.recording_id}",
        f"start      {header.start_date} {header.start_time}",
        f"records    {header.num_records} x {header.record_duration_s:g} s"
        f" = {header.duration_s:g} s",
        f"signals    {header.num_signals}",
    ]
    for i, spec in enumerate(header.signals):
        rate = spec.samples_per_record / header.record_duration_s
        lines.append(
            f"  [{i}] {spec.label}  {spec.physical_dimension or '-'}"
            f"  phys [{spec.physical_min:g}, {spec.physical_max:g}]"
            f"  dig [{spec.digital_min}, {spec.digital_max}]"
            f"  {spec.samples_per_record} samples/record  {rate:g} Hz"
        )
    print("\n".join(lines))
    print(_footer("info"))


def cmd_features(args) -> None:
    features = _extract_features(args)
    spectral.write_features(args.out, features)
    unclassifiable = int(np.sum(~np.isfinite(features).all(axis=1)))
    print(f"wrote {features.shape[0]} epochs x {features.shape[1]} features to {args.out}")
    if unclassifiable:
        print(f"{unclassifiable} epoch(s) unclassifiable (nan rows)")
    print(_footer("features", signals=",".join(args.signals), epoch_s=args.epoch_seconds))


def cmd_train(args) -> None:
    data = _load_corpus(args)
    train_rows, val_rows = dataset.stratified_split_indices(
        data.stages, 1.0 - args.validation_fraction, args.seed
    )
    sizes = (data.feature_width, *args.hidden, len(dataset.CLASSIFIER_STAGES))
    model, report = mlp.fit(
        data.subset(train_rows), data.subset(val_rows), sizes, _train_config(args)
    )
    mlp.write_model(args.out_model, model)
    print(f"dataset: {len(data)} rows x {data.feature_width} features")
    print(f"classes: {_format_class_counts(data)}")
    print(f"split: {train_rows.size} train / {val_rows.size} validation")
    print(f"epochs run: {report.epochs_run} (best epoch index {report.best_epoch})")
    print(f"validation error at best epoch: {report.best_validation_error:.6f}")
    print(f"wrote model to {args.out_model}")
    print(
        _footer(
            "train",
            seed=args.seed,
            layers="-".join(str(s) for s in sizes),
            **_config_summary(args),
        )
    )


def _print_cv_report(report: mlp.CvReport) -> None:
    print("repetition accuracies:")
    for r, accuracy in enumerate(report.accuracies, start=1):
        print(f"  {r:2d}: {accuracy:.4f}")
    print(f"mean accuracy: {report.mean_accuracy:.4f}")
    print()
    print(metrics.render_confusion(report.confusion), end="")


def cmd_crossval(args) -> None:
    data = _load_corpus(args)
    config = _train_config(args)
    n_out = len(dataset.CLASSIFIER_STAGES)
    if args.hidden_sweep:
        results = []
        for size in args.hidden_sweep:
            report = mlp.cross_validate(
                data, (data.feature_width, size, n_out), config,
                repetitions=args.repetitions, train_fraction=args.train_fraction,
            )
            results.append((size, report))
            print(f"hidden size {size}: mean accuracy {report.mean_accuracy:.4f}")
        best_size, best_report = max(results, key=lambda pair: pair[1].mean_accuracy)
        # max() keeps the earliest candidate on exact ties
        print(f"selected hidden size: {best_size}")
        print()
        _print_cv_report(best_report)
        sizes_note = ",".join(str(s) for s in args.hidden_sweep)
        footer = _footer(
            "crossval", seed=args.seed, sweep=sizes_note,
            repetitions=args.repetitions, **_config_summary(args),
        )
        report = best_report
    else:
        sizes = (data.feature_width, *args.hidden, n_out)
        report = mlp.cross_validate(
            data, sizes, config,
            repetitions=args.repetitions, train_fraction=args.train_fraction,
        )
        _print_cv_report(report)
        footer = _footer(
            "crossval", seed=args.seed,
            layers="-".join(str(s) for s in sizes),
            repetitions=args.repetitions, **_config_summary(args),
        )
    if args.confusion_csv:
        Path(args.confusion_csv).write_text(metrics.confusion_csv(report.confusion))
        print(f"wrote confusion matrix to {args.confusion_csv}")
    print(footer)


def cmd_score(args) -> None:
    model = mlp.read_model(args.model)
    features = _extract_features(args)
    if features.shape[1] != model.input_size:
        raise ValueError(
            f"model expects {model.input_size} features, recording yields {features.shape[1]} "
            "(signal count mismatch?)"
        )
    stages = []
    for row in features:
        if np.isfinite(row).all():
            stages.append(dataset.SleepStage(mlp.predict(model, row)))
        else:
            # No spectral content to stage; mark the epoch as artifact.
            stages.append(dataset.SleepStage.MOVEMENT)
    hypnogram = dataset.Hypnogram(tuple(stages), args.epoch_seconds)
    footer = _footer(
        "score", model=Path(args.model).name, signals=",".join(args.signals),
        epoch_s=args.epoch_seconds,
    )
    dataset.write_hypnogram(args.out, hypnogram, comments=(footer,))
    print(f"scored {len(hypnogram)} epochs to {args.out}")
    print(footer)


def cmd_report(args) -> None:
    hypnogram = dataset.read_hypnogram(args.hypnogram, args.epoch_seconds)
    report = metrics.architecture_report(hypnogram)
    print(metrics.render_architecture(report), end="")
    if args.csv:
        Path(args.csv).write_text(metrics.architecture_csv(report))
        print(f"wrote report to {args.csv}")
    print(_footer("report", epoch_s=args.epoch_seconds))


def cmd_evaluate(args) -> None:
    reference = dataset.read_hypnogram(args.reference)
    predicted = dataset.read_hypnogram(args.predicted)
    if len(reference) != len(predicted):
        raise ValueError(
            f"hypnogram lengths differ: {len(reference)} reference vs {len(predicted)} predicted"
        )
    movement = dataset.SleepStage.MOVEMENT
    pairs = [
        (int(a), int(p))
        for a, p in zip(reference.stages, predicted.stages)
        if a != movement and p != movement
    ]
    if not pairs:
        raise ValueError("no comparable epochs (every pair contains Movement)")
    actual, guessed = zip(*pairs)
    cm = metrics.confusion_matrix(actual, guessed)
    dropped = len(reference) - len(pairs)
    print(metrics.render_confusion(cm), end="")
    if dropped:
        print(f"{dropped} epoch pair(s) skipped (Movement on either side)")
    if args.csv:
        Path(args.csv).write_text(metrics.confusion_csv(cm))
        print(f"wrote confusion matrix to {args.csv}")
    print(_footer("evaluate"))


def _synth_pairs(args):
    if args.profiles:
        profiles = synth.read_profiles(args.profiles)
        if args.noise is not None:
            profiles = tuple(
                synth.StageProfile(p.stage, p.band_weights, args.noise) for p in profiles
            )
        if not args.counts:
            raise _UsageError("--counts is required with --profiles")
    elif args.preset == "night":
        pairs = synth.demo_night(args.noise if args.noise is not None else 0.1)
        if not args.counts:
            return pairs
        profiles = tuple(p for p, _ in pairs)
    else:  # bands
        profiles = synth.separable_profiles(args.noise if args.noise is not None else 0.05)
        if not args.counts:
            return [(p, 100) for p in profiles]
    if len(args.counts) != len(profiles):
        raise ValueError(
            f"--counts has {len(args.counts)} entries for {len(profiles)} profiles"
        )
    return list(zip(profiles, args.counts))


def cmd_synth(args) -> None:
    pairs = _synth_pairs(args)
    stream, hypnogram = synth.synth_recording(
        pairs,
        sampling_rate=args.rate,
        duration_s=args.epoch_seconds,
        seed=args.seed,
        amplitude_uv=args.amplitude,
    )
    Path(args.out_edf).write_bytes(stream)
    footer = _footer(
        "synth", seed=args.seed,
        source=Path(args.profiles).name if args.profiles else f"preset {args.preset}",
        rate=args.rate, epoch_s=args.epoch_seconds, amplitude=args.amplitude,
        noise="default" if args.noise is None else args.noise,
    )
    dataset.write_hypnogram(args.out_hypnogram, hypnogram, comments=(footer,))
    counts = ", ".join(f"{p.stage.display} {c}" for p, c in pairs)
    print(f"wrote {len(hypnogram)} epochs to {args.out_edf} and {args.out_hypnogram}")
    print(f"composition: {counts}")
    print(footer)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="somnostage",
        description="EEG sleep staging: spectral features, MLP training, and reports.",
    )
    parser.add_argument("--version", action="version", version=f"somnostage {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("info", help="dump an EDF recording's header")
    p.add_argument("recording", help="EDF file")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("features", help="extract per-epoch band powers from an EDF recording")
    p.add_argument("recording", help="EDF file")
    p.add_argument("--signals", nargs="+", required=True, metavar="LABEL",
                   help="one or two signal labels (or 0-based indices)")
    p.add_argument("--epoch-seconds", type=float, default=30.0)
    p.add_argument("--out", required=True, help="feature file to write")
    p.set_defaults(func=cmd_features)

    def add_corpus_flags(p):
        p.add_argument("--features", required=True, help="feature file")
        p.add_argument("--hypnogram", required=True, help="expert hypnogram file")

    def add_train_flags(p):
        p.add_argument("--learning-rate", type=float, default=0.2)
        p.add_argument("--max-epochs", type=int, default=300)
        p.add_argument("--patience", type=int, default=50)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train a stage classifier with early stopping")
    add_corpus_flags(p)
    p.add_argument("--hidden", type=_int_list, default=(6,),
                   help="comma-separated hidden layer sizes (default 6)")
    p.add_argument("--validation-fraction", type=float, default=0.2)
    add_train_flags(p)
    p.add_argument("--out-model", required=True, help="model file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("crossval", help="repeated stratified cross-validation")
    add_corpus_flags(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--hidden", type=_int_list, default=(6,),
                       help="comma-separated hidden layer sizes (default 6)")
    group.add_argument("--hidden-sweep", type=_int_list, metavar="SIZES",
                       help="try each single-hidden-layer size, report the best")
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--train-fraction", type=float, default=0.8)
    add_train_flags(p)
    p.add_argument("--confusion-csv", help="also write the pooled confusion matrix as CSV")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("score", help="stage an EDF recording with a trained model")
    p.add_argument("model", help="model file")
    p.add_argument("recording", help="EDF file")
    p.add_argument("--signals", nargs="+", required=True, metavar="LABEL")
    p.add_argument("--epoch-seconds", type=float, default=30.0)
    p.add_argument("--out", required=True, help="hypnogram file to write")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="sleep architecture report from a hypnogram")
    p.add_argument("hypnogram")
    p.add_argument("--epoch-seconds", type=float, default=30.0)
    p.add_argument("--csv", help="also write the report as CSV")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("evaluate", help="confusion matrix between two hypnograms")
    p.add_argument("reference", help="expert hypnogram")
    p.add_argument("predicted", help="predicted hypnogram")
    p.add_argument("--csv", help="also write the matrix as CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic labeled recording")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--profiles", help="profile file (stage,bands...,noise rows)")
    source.add_argument("--preset", choices=("night", "bands"), default="night",
                        help="night: imbalanced confusable composition; "
                             "bands: balanced separable classes")
    p.add_argument("--counts", type=_int_list,
                   help="epochs per profile, comma-separated (presets have defaults)")
    p.add_argument("--noise", type=float, default=None,
                   help="override every profile's noise fraction")
    p.add_argument("--rate", type=float, default=256.0, help="sampling rate in Hz")
    p.add_argument("--epoch-seconds", type=float, default=30.0)
    p.add_argument("--amplitude", type=float, default=synth.DEFAULT_AMPLITUDE_UV,
                   help="tone amplitude scale in µV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-edf", required=True)
    p.add_argument("--out-hypnogram", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except _UsageError as exc:
        parser.exit(1, f"{parser.prog}: error: {exc}\n")
    except (ValueError, OSError) as exc:
        print(f"somnostage: error: {exc}", file=sys.stderr)
        return 2
    return 0


def console_main() -> None:
    sys.exit(run())
