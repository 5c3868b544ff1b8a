"""qs: stage-by-stage command line over the same library the API serves.

Every subcommand reads/writes plain artifacts (CSV/JSONL/JSON) so a full run
works offline with no service process; `qs serve` starts the HTTP API.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import RunConfig, data_dir, load_config
from .eval import classification_metrics, cohort_reports, metrics_to_json, roc_auc
from .explain import (kernel_shap, stratified_background,
                      write_explanations_jsonl)
from .features import read_features_jsonl, samples_to_matrix, write_features_jsonl
from .ingest import (join_attempt_events, parse_log_table, parse_quiz_table,
                     write_log_table, write_quiz_table)
from .intervene import (DEFAULT_CATALOG, PlanStore, catalog_to_json,
                        recommend_interventions, write_decisions_jsonl)
from .models import (ModelSpec, grid_search_cv, load_model_file,
                     save_model_file, split_by_semester, train_model)
from .pipeline import build_sample_set, resolve_model_kind
from .risk import assess, cohort_risk_summary, read_risk_jsonl, \
    risk_summary_to_json, write_risk_jsonl
from .semesters import SemesterCalendar
from .synth import (DEFAULT_MIX, CohortSpec, generate_cohort,
                    normalize_mix, write_cohort)


def _fail(stage: str, exc: BaseException) -> "click.ClickException":
    return click.ClickException(f"[stage {stage}] {exc}")


def _config(path: str | None) -> RunConfig:
    try:
        return load_config(path)
    except ValueError as exc:
        raise _fail("config", exc)


def _fmt(path: str) -> str:
    return "jsonl" if Path(path).suffix.lower() in {".jsonl", ".ndjson"} else "csv"


def _parse_inputs(quiz: str, logs: str):
    try:
        quiz_result = parse_quiz_table(Path(quiz).read_bytes(), format=_fmt(quiz))
        log_result = parse_log_table(Path(logs).read_bytes(), format=_fmt(logs))
        streams, report = join_attempt_events(quiz_result.records,
                                              log_result.records)
    except Exception as exc:
        raise _fail("ingest", exc)
    return quiz_result, log_result, streams, report


def _out_dir(out_dir: str | None) -> Path:
    target = data_dir(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    return target


config_option = click.option("--config", "config_path", default=None,
                             type=click.Path(), help="TOML/JSON run config.")
out_dir_option = click.option("--out-dir", default=None, type=click.Path(),
                              help="Artifact directory (default $QS_DATA_DIR or ./qs-data).")


@click.group()
def main() -> None:
    """Engagement analytics over LMS quiz logs."""


@main.command()
@click.option("--quiz", required=True, type=click.Path())
@click.option("--logs", required=True, type=click.Path())
@config_option
@out_dir_option
def ingest(quiz: str, logs: str, config_path: str | None, out_dir: str | None) -> None:
    """Parse and join the raw tables; write normalized copies plus a join report."""
    _config(config_path)
    quiz_result, log_result, _streams, report = _parse_inputs(quiz, logs)
    target = _out_dir(out_dir)
    (target / "quiz.csv").write_bytes(write_quiz_table(quiz_result.records))
    (target / "logs.csv").write_bytes(write_log_table(log_result.records))
    doc = {
        "attempts": len(quiz_result.records),
        "events": len(log_result.records),
        "matched_events": report.matched_events,
        "dangling_events": report.dangling_events,
        "attempts_without_events": report.attempts_without_events,
        "course_mismatches": report.course_mismatches,
        "early_events": report.early_events,
        "quiz_issues": [str(i) for i in quiz_result.issues],
        "log_issues": [str(i) for i in log_result.issues],
    }
    (target / "join_report.json").write_text(json.dumps(doc, indent=2) + "\n")
    click.echo(f"wrote {target}/quiz.csv, logs.csv, join_report.json "
               f"({report.matched_events} matched events)")


@main.command()
@click.option("--quiz", required=True, type=click.Path())
@click.option("--logs", required=True, type=click.Path())
@config_option
@out_dir_option
def preprocess(quiz: str, logs: str, config_path: str | None,
               out_dir: str | None) -> None:
    """Build per-day activity records (daily.jsonl)."""
    cfg = _config(config_path)
    quiz_result, _logs, streams, _report = _parse_inputs(quiz, logs)
    try:
        daily, _samples = build_sample_set(quiz_result.records,
                                                     streams, cfg)
    except Exception as exc:
        raise _fail("preprocess", exc)
    from .preprocess import write_daily_jsonl
    target = _out_dir(out_dir)
    (target / "daily.jsonl").write_bytes(write_daily_jsonl(daily))
    click.echo(f"wrote {target}/daily.jsonl ({len(daily)} records)")


@main.command()
@click.option("--quiz", required=True, type=click.Path())
@click.option("--logs", required=True, type=click.Path())
@config_option
@out_dir_option
def featurize(quiz: str, logs: str, config_path: str | None,
              out_dir: str | None) -> None:
    """Build labeled per-attempt-day feature vectors (features.jsonl)."""
    cfg = _config(config_path)
    quiz_result, _logs, streams, _report = _parse_inputs(quiz, logs)
    try:
        _daily, samples = build_sample_set(quiz_result.records,
                                                     streams, cfg)
        if not samples:
            raise ValueError("no labeled samples produced")
    except Exception as exc:
        raise _fail("features", exc)
    target = _out_dir(out_dir)
    (target / "features.jsonl").write_bytes(write_features_jsonl(samples))
    engaged = sum(1 for s in samples if s.engaged)
    click.echo(f"wrote {target}/features.jsonl "
               f"({len(samples)} samples, {engaged} engaged)")


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path())
@click.option("--kind", default=None, help="Model kind (default from config, nn).")
@click.option("--grid", default=None,
              type=click.Choice(["default", "none"]))
@click.option("--folds", default=None, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--quiz", default=None, type=click.Path(),
              help="Quiz table; required with --calendar for a semester split.")
@click.option("--calendar", "calendar_path", default=None, type=click.Path())
@click.option("--train-tags", default="", help="Comma-separated semester tags.")
@click.option("--test-tag", default="", help="Held-out semester tag.")
@config_option
@out_dir_option
def train(features_path: str, kind: str | None, grid: str | None,
          folds: int | None, seed: int | None, quiz: str | None,
          calendar_path: str | None, train_tags: str, test_tag: str,
          config_path: str | None, out_dir: str | None) -> None:
    """Grid-search and fit a model; write model.qsm plus metrics.

    Flags override the config file; the config file overrides built-in
    defaults.
    """
    cfg = _config(config_path)
    seed = cfg.seed if seed is None else seed
    grid = cfg.grid if grid is None else grid
    folds = cfg.folds if folds is None else folds
    test_tag = test_tag or cfg.test_tag
    train_tags = train_tags or ",".join(cfg.train_tags)
    try:
        samples = read_features_jsonl(Path(features_path).read_bytes())
        model_kind = resolve_model_kind(kind or cfg.model_kind)

        train_samples, test_samples = samples, []
        if test_tag and calendar_path and quiz:
            calendar = SemesterCalendar.from_json(Path(calendar_path).read_bytes())
            quiz_result = parse_quiz_table(Path(quiz).read_bytes(),
                                           format=_fmt(quiz))
            start_time_of = {a.attempt_id: a.start_time
                             for a in quiz_result.records}
            tags = tuple(t for t in train_tags.split(",") if t) or tuple(
                t for t in calendar.tags if t != test_tag)
            split = split_by_semester(samples, start_time_of, calendar,
                                      train_tags=tags, test_tag=test_tag)
            train_samples, test_samples = split.train, split.test

        grid_table = None
        if grid == "none":
            spec = ModelSpec(kind=model_kind, hyperparams={}, seed=seed)
        else:
            result = grid_search_cv(model_kind, None, train_samples,
                                    folds=folds, seed=seed)
            spec = result.best_spec
            grid_table = result.table
        model = train_model(spec, train_samples)
    except click.ClickException:
        raise
    except Exception as exc:
        raise _fail("train", exc)

    target = _out_dir(out_dir)
    save_model_file(model, target / "model.qsm")
    if grid_table is not None:
        (target / "grid.json").write_text(json.dumps(grid_table, indent=2) + "\n")

    eval_samples = test_samples or train_samples
    X, y = samples_to_matrix(eval_samples)
    labels = y.astype(int)
    if len(set(labels.tolist())) == 2:
        probs = model.predict_proba(X)
        counts, report = classification_metrics(labels,
                                                (probs >= 0.5).astype(int))
        doc = json.loads(metrics_to_json(report, counts))
        doc["AUC"] = roc_auc(labels, probs)
        doc["in_sample"] = not test_samples
        doc["model_kind"] = model_kind.value
        (target / "metrics.json").write_text(json.dumps(doc, indent=2) + "\n")
        click.echo(f"wrote {target}/model.qsm  BA={report.ba:.4f} "
                   f"AUC={doc['AUC']:.4f} (held_out={bool(test_samples)})")
    else:
        click.echo(f"wrote {target}/model.qsm (single-class data, no metrics)")


@main.command("eval")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--features", "features_path", required=True, type=click.Path())
@out_dir_option
def eval_cmd(model_path: str, features_path: str, out_dir: str | None) -> None:
    """Score a feature file against a stored model."""
    try:
        model = load_model_file(model_path)
        samples = read_features_jsonl(Path(features_path).read_bytes())
        X, y = samples_to_matrix(samples)
        probs = model.predict_proba(X)
        counts, report = classification_metrics(y.astype(int),
                                                (probs >= 0.5).astype(int))
        doc = json.loads(metrics_to_json(report, counts))
        doc["AUC"] = roc_auc(y.astype(int), probs)
    except Exception as exc:
        raise _fail("eval", exc)
    target = _out_dir(out_dir)
    (target / "metrics.json").write_text(json.dumps(doc, indent=2) + "\n")
    click.echo(json.dumps(doc, indent=2))


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--features", "features_path", required=True, type=click.Path())
@click.option("--background", default=64, show_default=True)
@click.option("--budget", default=64, show_default=True,
              help="Coalition budget per explanation.")
@click.option("--seed", default=0, show_default=True)
@out_dir_option
def explain(model_path: str, features_path: str, background: int,
            budget: int, seed: int, out_dir: str | None) -> None:
    """Attribute every sample's prediction to its features (explanations.jsonl)."""
    try:
        model = load_model_file(model_path)
        samples = read_features_jsonl(Path(features_path).read_bytes())
        bg = stratified_background(samples, size=background, seed=seed)
        X, _ = samples_to_matrix(samples)
        explanations = []
        for i, sample in enumerate(samples):
            e = kernel_shap(model, X[i], bg, coalition_budget=budget, seed=seed)
            e.attempt_id = sample.attempt_id
            e.date_rel = sample.date_rel
            explanations.append(e)
    except Exception as exc:
        raise _fail("explain", exc)
    target = _out_dir(out_dir)
    (target / "explanations.jsonl").write_bytes(
        write_explanations_jsonl(explanations))
    click.echo(f"wrote {target}/explanations.jsonl ({len(explanations)} rows)")


@main.command()
@click.option("--explanations", "explanations_path", required=True,
              type=click.Path())
@out_dir_option
def risk(explanations_path: str, out_dir: str | None) -> None:
    """Derive behavior flags and risk tiers from stored attributions."""
    from .explain import read_explanations_jsonl
    try:
        explanations = read_explanations_jsonl(
            Path(explanations_path).read_bytes())
        assessments = [assess(e) for e in explanations]
    except Exception as exc:
        raise _fail("risk", exc)
    target = _out_dir(out_dir)
    (target / "risk.jsonl").write_bytes(write_risk_jsonl(assessments))
    summary = cohort_risk_summary(assessments)
    (target / "risk_summary.json").write_bytes(risk_summary_to_json(summary))
    click.echo(json.dumps(summary, indent=2))


@main.command()
@click.option("--risk", "risk_path", required=True, type=click.Path())
@click.option("--features", "features_path", default=None, type=click.Path(),
              help="Used to attach student ids to plans.")
@out_dir_option
def recommend(risk_path: str, features_path: str | None,
              out_dir: str | None) -> None:
    """Emit intervention plans for every assessed sample (plans.jsonl)."""
    try:
        assessments = read_risk_jsonl(Path(risk_path).read_bytes())
        student_of: dict[str, str | None] = {}
        if features_path:
            for s in read_features_jsonl(Path(features_path).read_bytes()):
                student_of.setdefault(s.attempt_id, s.student_id)
        plan_store = PlanStore(DEFAULT_CATALOG)
        for a in assessments:
            plan = recommend_interventions(
                a, student_id=student_of.get(a.attempt_id))
            plan_store.add_plan(plan)
    except Exception as exc:
        raise _fail("intervene", exc)
    target = _out_dir(out_dir)
    (target / "catalog.json").write_bytes(catalog_to_json(DEFAULT_CATALOG))
    (target / "plans.jsonl").write_bytes(write_decisions_jsonl(plan_store))
    click.echo(f"wrote {target}/catalog.json, plans.jsonl "
               f"({len(plan_store)} plans)")


@main.command()
@click.option("--students", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--mix", "mix_json", default=None,
              help='JSON mix, e.g. \'{"EngagedRegular":0.6,...}\'.')
@out_dir_option
def synth(students: int, seed: int, mix_json: str | None,
          out_dir: str | None) -> None:
    """Generate a seeded synthetic cohort (quiz/logs/truth/grades/calendar)."""
    try:
        mix = json.loads(mix_json) if mix_json else dict(DEFAULT_MIX)
        normalize_mix(mix)
        cohort = generate_cohort(CohortSpec(student_count=students,
                                            mix=mix, seed=seed))
    except Exception as exc:
        raise _fail("synth", exc)
    target = _out_dir(out_dir)
    paths = write_cohort(cohort, target)
    click.echo("wrote " + ", ".join(str(p) for p in paths.values()))


@main.command()
@click.option("--quiz", required=True, type=click.Path())
@click.option("--logs", required=True, type=click.Path())
@click.option("--grades", "grades_path", default=None, type=click.Path())
@click.option("--calendar", "calendar_path", default=None, type=click.Path())
@config_option
@out_dir_option
def report(quiz: str, logs: str, grades_path: str | None,
           calendar_path: str | None, config_path: str | None,
           out_dir: str | None) -> None:
    """Cohort activity/grade series (report.json)."""
    cfg = _config(config_path)
    quiz_result, _logs, streams, _join = _parse_inputs(quiz, logs)
    try:
        calendar = (SemesterCalendar.from_json(Path(calendar_path).read_bytes())
                    if calendar_path else None)
        grades = None
        if grades_path:
            from .synth import grades_from_csv
            grades = grades_from_csv(Path(grades_path).read_bytes())
        doc = cohort_reports(streams, quiz_result.records, grades=grades,
                             calendar=calendar, tz=cfg.tz)
    except Exception as exc:
        raise _fail("report", exc)
    target = _out_dir(out_dir)
    (target / "report.json").write_bytes(doc.to_json())
    click.echo(f"wrote {target}/report.json")


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--store", "store_dir", default=None, type=click.Path())
@click.option("--token", default="", help="Static bearer token; empty disables auth.")
@click.option("--static", "static_dir", default=None, type=click.Path(),
              help="Directory of built dashboard assets to serve at /.")
@config_option
def serve(port: int, host: str, store_dir: str | None, token: str,
          static_dir: str | None, config_path: str | None) -> None:
    """Start the /v1 HTTP API (and optionally the dashboard) with uvicorn."""
    import uvicorn

    from .api import create_app
    cfg = _config(config_path)
    app = create_app(data_dir(store_dir), token=token or cfg.api_token,
                     static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
