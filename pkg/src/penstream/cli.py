"""Batch command-line driver: reports in, metrics/items/models/plots out.

One configuration file (JSON) plus flag overrides drives every
subcommand; flags win over the file.  All artifact writes go through a
temp-file-and-rename step so an interrupted run never leaves a
half-written report, and trials are processed in sorted order with an
order-preserving worker map, so output bytes do not depend on the
parallelism degree.

Exit codes: 0 success, 1 data error (bad rows, unreadable reports,
missing inputs), 2 configuration error (bad config file or flags).
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import bundle as bundle_mod
from . import cleaning, ingest, segmentation, stats, synth, viz
from . import metrics as metrics_mod
from .model import TabletSpec

EXIT_OK = 0
EXIT_DATA = 1
EXIT_CONFIG = 2

REPORT_SUFFIXES = (".txt", ".tsv", ".csv")


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


DEFAULT_CONFIG = {
    "input": None,
    "out": "out",
    "units": "ms",
    "lpmm": 10.0,
    "jobs": 1,
    "segments": None,
    "lexical": None,
    "coding": None,
    "exclusions": {},
    "models": [],
    "plots": True,
}


def load_config(path: str | None, args: argparse.Namespace) -> dict:
    config = dict(DEFAULT_CONFIG)
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not valid JSON: {e}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULT_CONFIG)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config.update(loaded)
    for flag in ("input", "out", "lpmm", "jobs", "units", "segments", "lexical"):
        value = getattr(args, flag.replace("-", "_"), None)
        if value is not None:
            config[flag] = value
    if config["units"] not in ("ms", "s"):
        raise ConfigError(f"units must be 'ms' or 's', got {config['units']!r}")
    if not isinstance(config["lpmm"], (int, float)) or config["lpmm"] <= 0:
        raise ConfigError(f"lpmm must be a positive number, got {config['lpmm']!r}")
    if not isinstance(config["jobs"], int) or config["jobs"] < 1:
        raise ConfigError(f"jobs must be a positive integer, got {config['jobs']!r}")
    return config


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _log(message: str) -> None:
    print(f"[penstream] {message}", file=sys.stderr)


def read_report_trials(input_path: str, units: str):
    """All trials from one report file or every report in a directory."""
    path = Path(input_path)
    if path.is_file():
        files = [path]
    elif path.is_dir():
        # Segment and bundle files live next to the raw reports; only the
        # raw reports are pen-sample input.
        files = sorted(
            p
            for p in path.iterdir()
            if p.is_file()
            and p.suffix in REPORT_SUFFIXES
            and ".segments." not in p.name
            and ".trials." not in p.name
        )
    else:
        raise DataError(f"input not found: {input_path}")
    if not files:
        raise DataError(f"no reports found in {input_path}")
    trials = []
    for file in files:
        session = ingest.parse_pen_sample_report(
            file.read_text(encoding="utf-8"), units=units
        )
        _log(f"{file.name}: {len(session)} trials")
        trials.extend(session)
    trials.sort(key=lambda t: (t.subject_id, t.trial_id))
    return trials


def _load_segments(config: dict) -> ingest.SegmentsReport | None:
    path = config.get("segments")
    if not path:
        return None
    file = Path(path)
    if not file.is_file():
        raise DataError(f"segments report not found: {path}")
    if file.name.endswith(bundle_mod.SEGMENTS_SUFFIX):
        return bundle_mod.import_annotations(file.read_text(encoding="utf-8"))
    return ingest.parse_segments_report(file.read_text(encoding="utf-8"))


def _segment_one(task):
    """Worker: (trial, radical spans, lpmm) -> (tree, metric rows) or None."""
    trial, spans, lpmm = task
    strokes = segmentation.detect_strokes(trial)
    if not strokes:
        return None
    tree = segmentation.build_segment_tree(trial, strokes, list(spans) or None)
    rows = metrics_mod.compute_metrics(trial, tree, TabletSpec(lpmm=lpmm))
    return tree, rows


def compute_all_metrics(trials, segments, lpmm: float, jobs: int):
    """Trees and metric rows for every trial, order-stable at any parallelism."""
    tasks = []
    for trial in trials:
        spans = (
            segments.for_trial(trial.subject_id, trial.trial_id, "radical")
            if segments
            else ()
        )
        tasks.append((trial, tuple(spans), lpmm))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_segment_one, tasks))
    else:
        results = [_segment_one(task) for task in tasks]
    out = []
    for trial, result in zip(trials, results):
        if result is None:
            _log(f"trial {trial.subject_id}/{trial.trial_id}: no pressed samples, skipped")
            continue
        out.append((trial, result[0], result[1]))
    if not out:
        raise DataError("no trial produced any strokes")
    return out


def _load_coding(config: dict, trials) -> dict:
    path = config.get("coding")
    if not path:
        return cleaning.coding_from_trials(trials)
    file = Path(path)
    if not file.is_file():
        raise DataError(f"coding file not found: {path}")
    lines = [l for l in file.read_text(encoding="utf-8").splitlines() if l.strip()]
    delimiter = ingest.detect_delimiter(lines[0])
    header = [h.strip().lower() for h in lines[0].split(delimiter)]
    for name in ("subject", "dv_trial_id", "code"):
        if name not in header:
            raise ingest.MissingColumn(name if name != "dv_trial_id" else "DV_TRIAL_ID")
    idx = {name: header.index(name) for name in ("subject", "dv_trial_id", "code")}
    coding = {}
    for number, line in enumerate(lines[1:], start=2):
        fields = line.split(delimiter)
        code = fields[idx["code"]].strip().lower()
        if code not in cleaning.CODING_LABELS:
            raise ingest.MalformedRow(number, f"unknown coding label {code!r}")
        coding[(fields[idx["subject"]].strip(), int(fields[idx["dv_trial_id"]]))] = code
    return coding


def _exclusion_policy(config: dict) -> cleaning.ExclusionPolicy:
    overrides = config.get("exclusions") or {}
    valid = {f.name for f in cleaning.ExclusionPolicy.__dataclass_fields__.values()}
    unknown = set(overrides) - valid
    if unknown:
        raise ConfigError(f"unknown exclusion policy keys: {sorted(unknown)}")
    try:
        return cleaning.ExclusionPolicy(**overrides)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _column_as_floats(items: cleaning.ItemTable, measure: str) -> dict:
    return items.column(measure)


def _fit_single_model(items: cleaning.ItemTable, model: dict) -> str:
    response_name = model["response"]
    predictors = model.get("predictors") or list(cleaning.LEXICAL_PREDICTORS)
    covariates = model.get("covariates") or []
    y_by_char = _column_as_floats(items, response_name)
    chars = sorted(items.column("amnesia_rate"))

    names = list(predictors) + list(covariates)
    columns = {name: _column_as_floats(items, name) for name in names}
    rows, y = [], []
    for c in chars:
        values = [columns[name].get(c) for name in names]
        if y_by_char.get(c) is None or any(v is None for v in values):
            continue
        rows.append(values)
        y.append(y_by_char[c])
    if len(rows) < len(names) + 2:
        raise DataError(f"model {model.get('name')}: not enough complete items")

    import numpy as np

    X = np.array(rows, dtype=float)
    Z = np.column_stack([stats.z_transform(X[:, j]) for j in range(X.shape[1])])
    design = stats.DesignMatrix(names=tuple(names), X=Z)

    kept = tuple(names)
    if model.get("vif_threshold"):
        kept, _ = stats.vif_stepwise(design, float(model["vif_threshold"]))
        keep_idx = [names.index(n) for n in kept]
        Z = Z[:, keep_idx]
    full = stats.DesignMatrix(
        names=("(Intercept)",) + kept,
        X=np.column_stack([np.ones(len(y)), Z]),
    )
    fit = stats.ols_fit(full, np.array(y))
    return stats.serialize_fit(fit)


def _fit_level_model(items: cleaning.ItemTable, model: dict) -> str:
    response = model["response"]
    levels = sorted(response, key=lambda l: stats.LEVEL_RANK[l])
    if len(levels) != 2:
        raise ConfigError(f"model {model.get('name')}: need exactly 2 levels")
    covariates = model.get("covariates") or {}
    covariate_names = tuple(covariates.get(levels[0], {}).keys())
    sides = []
    for level in levels:
        sides.append(
            stats.LevelItems(
                level=level,
                response=_column_as_floats(items, response[level]),
                covariates={
                    name: _column_as_floats(items, measure)
                    for name, measure in (covariates.get(level) or {}).items()
                },
            )
        )
    predictors = {
        name: _column_as_floats(items, name)
        for name in (model.get("predictors") or cleaning.LEXICAL_PREDICTORS)
    }
    design, y = stats.build_level_design(
        sides[1], sides[0], predictors, covariate_names=covariate_names
    )
    fit = stats.ols_fit(design, y)
    return stats.serialize_fit(fit)


def _run_models(items: cleaning.ItemTable, config: dict, out_dir: Path) -> None:
    for model in config.get("models") or []:
        if "name" not in model or "response" not in model:
            raise ConfigError("each model needs 'name' and 'response'")
        if isinstance(model["response"], dict):
            table = _fit_level_model(items, model)
        else:
            table = _fit_single_model(items, model)
        write_atomic(out_dir / "models" / f"{model['name']}.tsv", table)
        _log(f"model {model['name']} written")


def _write_plots(processed, lpmm: float, out_dir: Path) -> None:
    for trial, tree, _rows in processed:
        name = viz.character_plot_name(trial)
        write_atomic(
            out_dir / viz.PLOTS_CHAR_DIR / f"{name}.svg",
            viz.render_character(trial, tree),
        )
        tm = metrics_mod.compute_trial_metrics(trial, tree, TabletSpec(lpmm=lpmm))
        write_atomic(
            out_dir / viz.PLOTS_BY_STROKE_DIR / f"{name}.svg",
            viz.render_stroke_panels(trial, tree, tm),
        )


def cmd_run(config: dict) -> int:
    if not config.get("input"):
        raise ConfigError("run needs --input (or 'input' in the config file)")
    out_dir = Path(config["out"])
    trials = read_report_trials(config["input"], config["units"])
    segments = _load_segments(config)
    processed = compute_all_metrics(trials, segments, config["lpmm"], config["jobs"])

    all_rows = [row for _, _, rows in processed for row in rows]
    write_atomic(out_dir / "metrics.tsv", metrics_mod.serialize_metric_rows(all_rows))
    _log(f"metrics.tsv: {len(all_rows)} rows")

    coding = _load_coding(config, trials)
    retained, excl = cleaning.apply_exclusions(all_rows, coding, _exclusion_policy(config))
    write_atomic(out_dir / "exclusions.tsv", cleaning.serialize_exclusion_stats(excl))

    if config.get("lexical"):
        lex_path = Path(config["lexical"])
        if not lex_path.is_file():
            raise DataError(f"lexical table not found: {config['lexical']}")
        lexical = cleaning.parse_lexical_table(lex_path.read_text(encoding="utf-8"))
        reports = [
            (t.subject_id, t.trial_id, t.target, t.self_report)
            for t in trials
            if (t.subject_id, t.trial_id) in coding
        ]
        items = cleaning.aggregate_items(retained, reports, lexical)
        write_atomic(out_dir / "items.tsv", cleaning.serialize_item_table(items))
        _log(f"items.tsv: {len(items.rows)} characters")
        _run_models(items, config, out_dir)
    elif config.get("models"):
        raise ConfigError("models require a lexical table ('lexical' in config)")

    if config.get("plots", True):
        _write_plots(processed, config["lpmm"], out_dir)
        _log(f"plots written for {len(processed)} trials")
    return EXIT_OK


def cmd_metrics(config: dict) -> int:
    if not config.get("input"):
        raise ConfigError("metrics needs --input")
    trials = read_report_trials(config["input"], config["units"])
    segments = _load_segments(config)
    processed = compute_all_metrics(trials, segments, config["lpmm"], config["jobs"])
    all_rows = [row for _, _, rows in processed for row in rows]
    write_atomic(Path(config["out"]) / "metrics.tsv", metrics_mod.serialize_metric_rows(all_rows))
    return EXIT_OK


def cmd_clean(config: dict) -> int:
    if not config.get("input"):
        raise ConfigError("clean needs --input (a metrics.tsv)")
    path = Path(config["input"])
    if not path.is_file():
        raise DataError(f"input not found: {config['input']}")
    rows = metrics_mod.parse_metric_rows(path.read_text(encoding="utf-8"))
    coding = {}
    reports = []
    seen = set()
    for row in rows:
        key = (row.subject, row.dv_trial_id)
        if key in seen:
            continue
        seen.add(key)
        coding[key] = "correct" if row.self_report == 0 else "incorrect"
        reports.append((row.subject, row.dv_trial_id, row.target, row.self_report))
    retained, excl = cleaning.apply_exclusions(rows, coding, _exclusion_policy(config))
    out_dir = Path(config["out"])
    write_atomic(out_dir / "exclusions.tsv", cleaning.serialize_exclusion_stats(excl))
    if config.get("lexical"):
        lexical = cleaning.parse_lexical_table(
            Path(config["lexical"]).read_text(encoding="utf-8")
        )
        items = cleaning.aggregate_items(retained, reports, lexical)
        write_atomic(out_dir / "items.tsv", cleaning.serialize_item_table(items))
    return EXIT_OK


def cmd_stats(config: dict) -> int:
    if not config.get("input"):
        raise ConfigError("stats needs --input (an items.tsv)")
    path = Path(config["input"])
    if not path.is_file():
        raise DataError(f"input not found: {config['input']}")
    items = cleaning.parse_item_table(path.read_text(encoding="utf-8"))
    if not config.get("models"):
        raise ConfigError("stats needs 'models' in the config file")
    _run_models(items, config, Path(config["out"]))
    return EXIT_OK


def cmd_plot(config: dict) -> int:
    if not config.get("input"):
        raise ConfigError("plot needs --input")
    trials = read_report_trials(config["input"], config["units"])
    segments = _load_segments(config)
    processed = compute_all_metrics(trials, segments, config["lpmm"], config["jobs"])
    _write_plots(processed, config["lpmm"], Path(config["out"]))
    return EXIT_OK


def cmd_validate_conditions(config: dict) -> int:
    if not config.get("input"):
        raise ConfigError("validate-conditions needs --input")
    path = Path(config["input"])
    if not path.is_file():
        raise DataError(f"input not found: {config['input']}")
    table = ingest.parse_condition_file(path.read_text(encoding="utf-8"))
    violations = ingest.validate_condition_file(table)
    for violation in violations:
        print(violation)
    if violations:
        return EXIT_DATA
    print("condition file ok")
    return EXIT_OK


def cmd_synth(config: dict, seed: int, sessions: int, trials: int, bundles: bool) -> int:
    out_dir = Path(config["out"])
    rng = random.Random(seed)
    for k in range(1, sessions + 1):
        subject = str(k)
        results = [
            synth.generate_trial(synth.random_spec(rng, trial_id=i, subject=subject))
            for i in range(1, trials + 1)
        ]
        write_atomic(
            out_dir / f"session_{k}.txt",
            ingest.serialize_pen_sample_report([r.trial for r in results]),
        )
        spans = [span for r in results for span in r.radical_spans]
        write_atomic(
            out_dir / f"session_{k}.segments.txt",
            ingest.serialize_segments_report(ingest.SegmentsReport(spans=tuple(spans))),
        )
        if bundles:
            items = []
            for r in results:
                strokes = segmentation.detect_strokes(r.trial)
                tree = segmentation.build_segment_tree(
                    r.trial, strokes, list(r.radical_spans)
                )
                items.append((r.trial, tree))
            write_atomic(
                out_dir / f"session_{k}{bundle_mod.TRIALS_SUFFIX}",
                bundle_mod.export_bundles(items, config["lpmm"]),
            )
        _log(f"session_{k}: {trials} trials written")
    return EXIT_OK


def cmd_bundle(config: dict, from_annotations: str | None) -> int:
    out_dir = Path(config["out"])
    if from_annotations:
        path = Path(from_annotations)
        if not path.is_file():
            raise DataError(f"annotations not found: {from_annotations}")
        report = bundle_mod.import_annotations(path.read_text(encoding="utf-8"))
        write_atomic(out_dir / "segments.tsv", ingest.serialize_segments_report(report))
        return EXIT_OK
    if not config.get("input"):
        raise ConfigError("bundle needs --input (or --from-annotations)")
    trials = read_report_trials(config["input"], config["units"])
    segments = _load_segments(config)
    processed = compute_all_metrics(trials, segments, config["lpmm"], config["jobs"])
    items = [(trial, tree) for trial, tree, _ in processed]
    write_atomic(
        out_dir / f"trials{bundle_mod.TRIALS_SUFFIX}",
        bundle_mod.export_bundles(items, config["lpmm"]),
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="penstream",
        description="Pen-sample reports to handwriting metrics, item tables, models, and plots.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--input", help="input report file or directory")
        p.add_argument("--out", help="output directory")
        p.add_argument("--lpmm", type=float, help="tablet resolution, lines per mm")
        p.add_argument("--jobs", type=int, help="parallel worker count")
        p.add_argument("--units", choices=("s", "ms"), help="time units in input reports")
        p.add_argument("--segments", help="segments report or .segments.jsonl path")
        p.add_argument("--lexical", help="lexical predictor table path")

    for name in ("run", "metrics", "clean", "stats", "plot", "validate-conditions"):
        common(sub.add_parser(name))
    synth_p = sub.add_parser("synth")
    common(synth_p)
    synth_p.add_argument("--seed", type=int, default=0)
    synth_p.add_argument("--sessions", type=int, default=1)
    synth_p.add_argument("--trials", type=int, default=10)
    synth_p.add_argument("--bundles", action="store_true", help="also write .trials.jsonl")
    bundle_p = sub.add_parser("bundle")
    common(bundle_p)
    bundle_p.add_argument(
        "--from-annotations", help="convert a .segments.jsonl back to a segments report"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args)
        if args.command == "run":
            return cmd_run(config)
        if args.command == "metrics":
            return cmd_metrics(config)
        if args.command == "clean":
            return cmd_clean(config)
        if args.command == "stats":
            return cmd_stats(config)
        if args.command == "plot":
            return cmd_plot(config)
        if args.command == "validate-conditions":
            return cmd_validate_conditions(config)
        if args.command == "synth":
            return cmd_synth(config, args.seed, args.sessions, args.trials, args.bundles)
        if args.command == "bundle":
            return cmd_bundle(config, args.from_annotations)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as e:
        print(f"penstream: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as e:
        print(f"penstream: error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
