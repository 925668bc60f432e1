"""Command-line entry point.

Analysis subcommands are batch: read documents, run one module, write
report files. ``serve`` starts the HTTP service for the naming UI. Exit
status: 0 ok, 1 validation/analysis failure, 2 usage error.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from collections import defaultdict
from pathlib import Path

import click

from . import linguistics, matching, metrics, reporting, synth
from .errors import NamingLabError
from .model import (
    DEFAULT_MIN_CLUSTER_SIZE,
    DEFAULT_UNLABELED_TOKEN,
    clean_naming,
    serialize_naming,
    serialize_testset,
    validate_naming,
    validate_testset,
)
from .significance import significant_sets

DATA_DIR_ENV = "NAMING_LAB_DATA"


def _load_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _write_outputs(out_dir: str, documents: dict[str, str]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(documents.items()):
        (out / name).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out / name}")


def _write_json(out_dir: str, name: str, document) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(
        json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    click.echo(f"wrote {path}")
    return path


def _fail_on_error(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NamingLabError as exc:
            click.echo(f"error: {exc}", err=True)
            for violation in getattr(exc, "violations", []):
                click.echo(f"  - {violation}", err=True)
            sys.exit(1)

    return wrapper


def _load_cleaned_namings(paths, min_cluster_size):
    return [
        clean_naming(validate_naming(_load_json(p)), min_cluster_size) for p in paths
    ]


@click.group()
def main():
    """Audit a classifier's X-feature activations via named visual concepts."""


@main.command()
@click.option("--testset", "testset_path", required=True, type=click.Path(exists=True))
@_fail_on_error
def validate(testset_path):
    """Validate a dataset document against the schema and invariants."""
    ts = validate_testset(_load_json(testset_path))
    click.echo(
        f"ok: {len(ts.records)} records, {len(ts.categories)} categories, "
        f"{ts.feature_count} X-features, threshold {ts.significance_threshold}"
    )


@main.command()
@click.option("--testset", "testset_path", required=True, type=click.Path(exists=True))
@click.option("--class", "class_id", required=True)
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False))
@_fail_on_error
def significance(testset_path, class_id, out_dir):
    """Extract significant activations for one class, with count statistics."""
    ts = validate_testset(_load_json(testset_path))
    sig = significant_sets(ts, class_id)
    document = {
        "class_id": class_id,
        "image_count": sig.image_count,
        "total_significant": sig.total,
        "average_per_image": sig.average,
        "empty": sig.empty,
        "sets": [
            {
                "image_id": s.image_id,
                "features": list(s.features),
                "positive_total": s.positive_total,
                "covered_fraction": s.covered_fraction,
            }
            for s in sig.sets
        ],
    }
    _write_json(out_dir, f"significance_{class_id}.json", document)
    tables = reporting.emit_tables(
        reporting.StudyResults(significance={class_id: sig}), scope=class_id
    )
    _write_outputs(out_dir, tables)
    if sig.empty:
        click.echo(f"warning: class '{class_id}' has no images", err=True)
    click.echo(
        f"class {class_id}: {sig.total} significant activations over "
        f"{sig.image_count} images (avg {reporting.fmt(sig.average, 2)})"
    )


@main.command()
@click.option("--testset", "testset_path", required=True, type=click.Path(exists=True))
@click.option("--class", "class_id", required=True)
@click.option("--naming", "naming_paths", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--min-cluster-size", default=DEFAULT_MIN_CLUSTER_SIZE, show_default=True)
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False))
@_fail_on_error
def coverage(testset_path, class_id, naming_paths, min_cluster_size, out_dir):
    """Activation/explanation coverage and the named-by-exactly-n histogram."""
    ts = validate_testset(_load_json(testset_path))
    sig = significant_sets(ts, class_id)
    namings = _load_cleaned_namings(naming_paths, min_cluster_size)
    report = metrics.coverage_report(namings, sig.sets, class_id)
    tables = reporting.emit_tables(
        reporting.StudyResults(coverage={class_id: report}), scope=class_id
    )
    _write_outputs(out_dir, tables)


@main.command()
@click.option("--naming", "naming_paths", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--min-cluster-size", default=DEFAULT_MIN_CLUSTER_SIZE, show_default=True)
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False))
@_fail_on_error
def purity(naming_paths, min_cluster_size, out_dir):
    """CX and XC purity for every (class, annotator) naming given."""
    namings = _load_cleaned_namings(naming_paths, min_cluster_size)
    section: dict[str, dict[str, tuple[float, float]]] = defaultdict(dict)
    for naming in namings:
        section[naming.class_id][naming.annotator_id] = (
            metrics.cx_purity(naming),
            metrics.xc_purity(naming),
        )
    tables = reporting.emit_tables(reporting.StudyResults(purity=dict(section)))
    _write_outputs(out_dir, tables)


@main.command()
@click.option("--naming", "naming_paths", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--d", "d", default=1, show_default=True)
@click.option("--budget", default=matching.DEFAULT_EXACT_BUDGET, show_default=True,
              help="Max node count for the exact D=2 search.")
@click.option("--min-cluster-size", default=DEFAULT_MIN_CLUSTER_SIZE, show_default=True)
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False))
@_fail_on_error
def match(naming_paths, d, budget, min_cluster_size, out_dir):
    """D-family matching between exactly two namings of the same class."""
    if len(naming_paths) != 2:
        raise click.UsageError("match needs exactly two --naming documents")
    naming_i, naming_j = _load_cleaned_namings(naming_paths, min_cluster_size)
    graph = matching.build_intersection_graph(naming_i, naming_j)
    partition = matching.d_family_matching(graph, d, budget)
    document = matching.partition_document(graph, partition)
    name = (
        f"match_{naming_i.class_id}_{naming_i.annotator_id}_"
        f"{naming_j.annotator_id}_d{d}.json"
    )
    _write_json(out_dir, name, document)
    click.echo(f"score {partition.score} (exact={partition.exact})")
    try:
        agreement = matching.agreement_score(partition, naming_i, naming_j)
        click.echo(f"agreement {agreement:.4f}")
    except NamingLabError as exc:
        click.echo(f"agreement undefined: {exc}", err=True)


@main.command()
@click.option("--naming", "naming_paths", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--d", "d", default=1, show_default=True)
@click.option("--mode", type=click.Choice(["exact", "subset"]), default="subset",
              show_default=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True))
@click.option("--budget", default=matching.DEFAULT_EXACT_BUDGET, show_default=True)
@click.option("--min-cluster-size", default=DEFAULT_MIN_CLUSTER_SIZE, show_default=True)
@_fail_on_error
def compat(naming_paths, d, mode, lexicon_path, budget, min_cluster_size):
    """Linguistic compatibility of matched concepts between two namings."""
    if len(naming_paths) != 2:
        raise click.UsageError("compat needs exactly two --naming documents")
    naming_i, naming_j = _load_cleaned_namings(naming_paths, min_cluster_size)
    lexicon = (
        linguistics.parse_lexicon(Path(lexicon_path).read_text(encoding="utf-8"))
        if lexicon_path
        else linguistics.Lexicon()
    )
    graph = matching.build_intersection_graph(naming_i, naming_j)
    partition = matching.d_family_matching(graph, d, budget)
    score = linguistics.compatibility_score(partition, naming_i, naming_j, mode, lexicon)
    click.echo(f"{mode} compatibility (D={d}): {score:.4f}")


@main.command()
@click.option("--testset", "testset_path", required=True, type=click.Path(exists=True))
@click.option("--class", "class_id", required=True)
@click.option("--naming", "naming_path", required=True, type=click.Path(exists=True))
@click.option("--min-cluster-size", default=DEFAULT_MIN_CLUSTER_SIZE, show_default=True)
@click.option("--unlabeled-token", default=DEFAULT_UNLABELED_TOKEN, show_default=True)
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False))
@_fail_on_error
def summary(testset_path, class_id, naming_path, min_cluster_size, unlabeled_token, out_dir):
    """Test-set explanation summary for one annotator and class."""
    ts = validate_testset(_load_json(testset_path))
    naming = clean_naming(validate_naming(_load_json(naming_path)), min_cluster_size)
    rows = reporting.explanation_summary(ts, class_id, naming, unlabeled_token)
    tables = reporting.emit_tables(reporting.StudyResults(summaries={class_id: rows}))
    _write_outputs(out_dir, tables)
    click.echo(reporting.render_summary_text(rows), nl=False)


@main.command("synth")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--image-count", type=int)
@click.option("--feature-count", type=int)
@click.option("--concept-count", type=int)
@click.option("--annotator-count", type=int)
@click.option("--noise-rate", type=float)
@click.option("--unnamed-rate", type=float)
@click.option("--seed", type=int)
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False))
@_fail_on_error
def synth_cmd(config_path, image_count, feature_count, concept_count,
              annotator_count, noise_rate, unnamed_rate, seed, out_dir):
    """Generate a synthetic test set and namings with planted ground truth."""
    text = Path(config_path).read_text(encoding="utf-8") if config_path else ""
    config = synth.parse_synth_config(
        text,
        image_count=image_count,
        feature_count=feature_count,
        concept_count=concept_count,
        annotator_count=annotator_count,
        noise_rate=noise_rate,
        unnamed_rate=unnamed_rate,
        seed=seed,
    )
    testset, truth, namings = synth.generate(config)
    _write_json(out_dir, "testset.json", serialize_testset(testset))
    for naming in namings:
        _write_json(
            out_dir, f"naming_{naming.annotator_id}.json", serialize_naming(naming)
        )
    truth_doc = [
        {**ref.to_dict(), "concept": concept} for ref, concept in sorted(truth.items())
    ]
    _write_json(out_dir, "ground_truth.json", truth_doc)
    click.echo(
        f"generated {len(truth)} planted activations across "
        f"{config.concept_count} concepts for {config.annotator_count} annotators"
    )


@main.command()
@click.option("--testset", "testset_path", required=True, type=click.Path(exists=True))
@click.option("--naming-dir", default=None, type=click.Path(file_okay=False),
              help=f"Defaults to ${DATA_DIR_ENV} or ./namings.")
@click.option("--heatmap-root", default=None, type=click.Path(file_okay=False),
              help="Directory the dataset's heatmap paths are relative to "
                   "(defaults to the test set's directory).")
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False, exists=True),
              help="Built browser UI to serve under /ui (e.g. frontend/dist's parent).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8321, show_default=True)
@_fail_on_error
def serve(testset_path, naming_dir, heatmap_root, ui_dir, host, port):
    """Serve activations and namings to the interactive naming UI."""
    import uvicorn

    from .service import create_app

    ts = validate_testset(_load_json(testset_path))
    if naming_dir is None:
        naming_dir = os.environ.get(DATA_DIR_ENV, "namings")
    if heatmap_root is None:
        heatmap_root = Path(testset_path).resolve().parent
    app = create_app(
        ts,
        Path(naming_dir),
        Path(heatmap_root),
        ui_dir=Path(ui_dir) if ui_dir else None,
    )
    click.echo(f"serving on http://{host}:{port} (namings in {naming_dir})")
    if ui_dir:
        click.echo(f"ui at http://{host}:{port}/ui/")
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
