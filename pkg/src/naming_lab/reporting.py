"""Deterministic table rendering: explanation summaries plus the CSV and
Markdown report families for significance counts, coverage, purity,
pairwise agreement, and linguistic compatibility.

All numeric rendering is fixed-width decimal with round-half-up, so
identical inputs always produce byte-identical documents.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .metrics import CoverageReport
from .model import DEFAULT_UNLABELED_TOKEN, Naming, TestSet
from .significance import ClassSignificance, explain, significant_sets


def round_half_up(value: float, places: int) -> Decimal:
    q = Decimal(1).scaleb(-places)
    return Decimal(value).quantize(q, rounding=ROUND_HALF_UP)


def fmt(value: float, places: int) -> str:
    return str(round_half_up(value, places))


def percent_string(count: int, total: int) -> str:
    """count/total as a percentage with 4 decimals, round-half-up, exact."""
    exact = Decimal(count * 100) / Decimal(total)
    return str(exact.quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class SummaryRow:
    """One explanation shape: its sorted name set, image count, and share."""

    name_set: tuple[str, ...]
    count: int
    total: int

    @property
    def percent(self) -> float:
        return self.count / self.total * 100.0

    def names_text(self) -> str:
        return "(" + ", ".join(f"'{n}'" for n in self.name_set) + ")"


def explanation_summary(
    testset: TestSet,
    class_id: str,
    naming: Naming,
    unlabeled_token: str = DEFAULT_UNLABELED_TOKEN,
) -> list[SummaryRow]:
    """Group the class's images by explanation name set.

    Rows are sorted by descending share, ties by name set; counts sum to
    the number of images with at least one significant activation.
    """
    sig = significant_sets(testset, class_id)
    counts: dict[tuple[str, ...], int] = {}
    for sigset in sig.sets:
        expl = explain(sigset.image_id, class_id, naming, sigset, unlabeled_token)
        key = tuple(sorted(expl.names))
        counts[key] = counts.get(key, 0) + 1
    total = len(sig.sets)
    rows = [SummaryRow(name_set=k, count=v, total=total) for k, v in counts.items()]
    rows.sort(key=lambda r: (-r.count, r.name_set))
    return rows


def render_summary_text(rows: list[SummaryRow]) -> str:
    """Inline text rendering, one ``('name', ...) NN.NNNN%`` line per row."""
    lines = [f"{r.names_text()} {percent_string(r.count, r.total)}%" for r in rows]
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Aggregation


@dataclass(frozen=True)
class Stats:
    minimum: float
    average: float
    std: float
    maximum: float


def aggregate(values: list[float], population: bool = True) -> Stats:
    """Min / mean / std / max; population std by default (N), sample (N-1)
    when ``population`` is false."""
    if not values:
        raise ValueError("cannot aggregate zero values")
    n = len(values)
    mean = sum(values) / n
    if n == 1 and not population:
        var = 0.0
    else:
        var = sum((v - mean) ** 2 for v in values) / (n if population else n - 1)
    return Stats(
        minimum=min(values), average=mean, std=math.sqrt(var), maximum=max(values)
    )


@dataclass(frozen=True)
class PairwiseAgreement:
    """Per-pair agreement and Jaccard values for one category."""

    d1: tuple[float, ...]
    d2: tuple[float, ...]
    jaccard: tuple[float, ...]


@dataclass(frozen=True)
class PairwiseCompatibility:
    """Per-pair compatibility scores for one category."""

    exact_d1: tuple[float, ...]
    exact_d2: tuple[float, ...]
    subset_d1: tuple[float, ...]
    subset_d2: tuple[float, ...]


@dataclass
class StudyResults:
    """Everything :func:`emit_tables` knows how to render. Sections left as
    ``None`` are skipped; empty sections render headers-only documents."""

    significance: dict[str, ClassSignificance] | None = None
    coverage: dict[str, CoverageReport] | None = None
    purity: dict[str, dict[str, tuple[float, float]]] | None = None
    agreement: dict[str, PairwiseAgreement] | None = None
    compatibility: dict[str, PairwiseCompatibility] | None = None
    summaries: dict[str, list[SummaryRow]] | None = None


def _csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _md(rows: list[list[str]]) -> str:
    header, *body = rows
    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    lines += ["| " + " | ".join(r) + " |" for r in body]
    return "\n".join(lines) + "\n"


def _emit(out: dict[str, str], table: str, scope: str, rows: list[list[str]]) -> None:
    out[f"{table}_{scope}.csv"] = _csv(rows)
    out[f"{table}_{scope}.md"] = _md(rows)


def _significance_rows(section: dict[str, ClassSignificance]) -> list[list[str]]:
    rows = [["category", "images", "total_significant", "average_per_image", "empty"]]
    for class_id in sorted(section):
        s = section[class_id]
        rows.append(
            [
                class_id,
                str(s.image_count),
                str(s.total),
                fmt(s.average, 2),
                "yes" if s.empty else "no",
            ]
        )
    return rows


def _coverage_rows(section: dict[str, CoverageReport]) -> list[list[str]]:
    rows = [
        ["category", "annotator", "activation_coverage", "partial_coverage", "complete_coverage"]
    ]
    for class_id in sorted(section):
        report = section[class_id]
        for annotator in sorted(report.per_annotator):
            t = report.per_annotator[annotator]
            rows.append(
                [
                    class_id,
                    annotator,
                    fmt(t.activation_coverage, 4),
                    fmt(t.partial_coverage, 4),
                    fmt(t.complete_coverage, 4),
                ]
            )
        t = report.any_annotator
        rows.append(
            [
                class_id,
                "any",
                fmt(t.activation_coverage, 4),
                fmt(t.partial_coverage, 4),
                fmt(t.complete_coverage, 4),
            ]
        )
    return rows


def _histogram_rows(section: dict[str, CoverageReport]) -> list[list[str]]:
    rows = [["category", "named_by_exactly_n", "fraction"]]
    for class_id in sorted(section):
        for n, fraction in enumerate(section[class_id].exactly_n_histogram):
            rows.append([class_id, str(n), fmt(fraction, 4)])
    return rows


def _purity_rows(
    section: dict[str, dict[str, tuple[float, float]]], which: int
) -> list[list[str]]:
    annotators = sorted({a for per in section.values() for a in per})
    rows = [["category", *annotators, "average"]]
    for class_id in sorted(section):
        per = section[class_id]
        values = [per[a][which] for a in annotators if a in per]
        cells = [fmt(per[a][which], 2) if a in per else "" for a in annotators]
        avg = fmt(sum(values) / len(values), 2) if values else ""
        rows.append([class_id, *cells, avg])
    if section and annotators:
        col_avgs = []
        for a in annotators:
            vals = [per[a][which] for per in section.values() if a in per]
            col_avgs.append(fmt(sum(vals) / len(vals), 2) if vals else "")
        rows.append(["average", *col_avgs, ""])
    return rows


def _stats_cells(values: tuple[float, ...], population: bool) -> tuple[str, str, str]:
    stats = aggregate(list(values), population=population)
    return (
        fmt(stats.minimum, 2),
        f"{fmt(stats.average, 2)}±{fmt(stats.std, 2)}",
        fmt(stats.maximum, 2),
    )


def _pairwise_rows(
    section: dict, columns: list[tuple[str, str]], population: bool
) -> list[list[str]]:
    rows = [["category", "stat", *[label for label, _ in columns]]]
    for class_id in sorted(section):
        entry = section[class_id]
        per_column = [
            _stats_cells(getattr(entry, attr), population) for _, attr in columns
        ]
        for stat_index, stat_name in enumerate(("min", "average", "max")):
            rows.append(
                [class_id, stat_name, *[cells[stat_index] for cells in per_column]]
            )
    return rows


def _summary_rows(rows_in: list[SummaryRow]) -> list[list[str]]:
    rows = [["names", "count", "percent"]]
    for r in rows_in:
        rows.append([r.names_text(), str(r.count), percent_string(r.count, r.total)])
    return rows


def emit_tables(
    results: StudyResults, population_std: bool = True, scope: str = "all"
) -> dict[str, str]:
    """Render every present section to its CSV and Markdown documents.

    Returns {filename: content} with names ``<table>_<scope>.<ext>``
    (summaries scope by their class_id); identical inputs give
    byte-identical content. ``population_std`` switches the ±std
    aggregation between population (N) and sample (N-1).
    """
    out: dict[str, str] = {}
    if results.significance is not None:
        _emit(out, "significance", scope, _significance_rows(results.significance))
    if results.coverage is not None:
        _emit(out, "coverage", scope, _coverage_rows(results.coverage))
        _emit(out, "named_by_exactly_n", scope, _histogram_rows(results.coverage))
    if results.purity is not None:
        _emit(out, "purity_cx", scope, _purity_rows(results.purity, 0))
        _emit(out, "purity_xc", scope, _purity_rows(results.purity, 1))
    if results.agreement is not None:
        _emit(
            out,
            "agreement",
            scope,
            _pairwise_rows(
                results.agreement,
                [("agreement_d1", "d1"), ("agreement_d2", "d2"), ("jaccard", "jaccard")],
                population_std,
            ),
        )
    if results.compatibility is not None:
        _emit(
            out,
            "compatibility",
            scope,
            _pairwise_rows(
                results.compatibility,
                [
                    ("exact_d1", "exact_d1"),
                    ("exact_d2", "exact_d2"),
                    ("subset_d1", "subset_d1"),
                    ("subset_d2", "subset_d2"),
                ],
                population_std,
            ),
        )
    if results.summaries is not None:
        for class_id in sorted(results.summaries):
            rows = results.summaries[class_id]
            _emit(out, "summary", class_id, _summary_rows(rows))
            out[f"summary_{class_id}.txt"] = render_summary_text(rows)
    return out
