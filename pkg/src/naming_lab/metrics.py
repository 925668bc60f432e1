"""Coverage, purity, and named-set overlap statistics.

All functions are pure and operate on cleaned namings plus the class's
significant sets; outputs are fractions in [0, 1].
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    BothEmpty,
    DuplicateAnnotator,
    EmptyNaming,
    EmptySignificantSet,
    MismatchedKeys,
)
from .model import ActivationRef, Naming
from .significance import SignificantSet


def significant_refs(sigsets: Sequence[SignificantSet]) -> frozenset[ActivationRef]:
    out: set[ActivationRef] = set()
    for s in sigsets:
        out.update(s.refs())
    return frozenset(out)


def _require_significant(sigsets: Sequence[SignificantSet]) -> frozenset[ActivationRef]:
    sig = significant_refs(sigsets)
    if not sig:
        raise EmptySignificantSet("class has zero significant activations")
    return sig


@dataclass(frozen=True)
class CoverageTriple:
    """Activation / partial-explanation / complete-explanation coverage."""

    activation_coverage: float
    partial_coverage: float
    complete_coverage: float


@dataclass(frozen=True)
class CoverageReport:
    """Per-annotator coverage, union-of-annotators coverage, and the
    named-by-exactly-n histogram for one category."""

    class_id: str
    per_annotator: dict[str, CoverageTriple]
    any_annotator: CoverageTriple
    exactly_n_histogram: tuple[float, ...]


def _coverage_triple(
    named: frozenset[ActivationRef], sigsets: Sequence[SignificantSet]
) -> CoverageTriple:
    sig = _require_significant(sigsets)
    covered = len(named & sig)
    partial = complete = 0
    for s in sigsets:
        named_count = sum(1 for r in s.refs() if r in named)
        if named_count >= 1:
            partial += 1
        if named_count == len(s.features):
            complete += 1
    n_images = len(sigsets)
    return CoverageTriple(
        activation_coverage=covered / len(sig),
        partial_coverage=partial / n_images,
        complete_coverage=complete / n_images,
    )


def activation_coverage(naming: Naming, sigsets: Sequence[SignificantSet]) -> float:
    """Fraction of the class's significant activations the annotator named."""
    sig = _require_significant(sigsets)
    return len(naming.named_set() & sig) / len(sig)


def explanation_coverage(
    naming: Naming, sigsets: Sequence[SignificantSet]
) -> tuple[float, float]:
    """(partial, complete): fraction of images with at least one / with all
    significant activations named."""
    triple = _coverage_triple(naming.named_set(), sigsets)
    return triple.partial_coverage, triple.complete_coverage


def exactly_n_histogram(
    namings: Sequence[Naming], sigsets: Sequence[SignificantSet]
) -> tuple[float, ...]:
    """Entry n: fraction of significant activations named by exactly n annotators."""
    ids = [n.annotator_id for n in namings]
    if len(set(ids)) != len(ids):
        raise DuplicateAnnotator(f"duplicate annotator ids in {sorted(ids)}")
    classes = {n.class_id for n in namings}
    if len(classes) > 1:
        raise MismatchedKeys(f"namings span multiple classes: {sorted(classes)}")
    sig = _require_significant(sigsets)
    named_sets = [n.named_set() for n in namings]
    counts = Counter(sum(1 for named in named_sets if ref in named) for ref in sig)
    return tuple(counts.get(n, 0) / len(sig) for n in range(len(namings) + 1))


def coverage_report(
    namings: Sequence[Naming], sigsets: Sequence[SignificantSet], class_id: str
) -> CoverageReport:
    """Assemble the full coverage picture for one category."""
    per = {
        n.annotator_id: _coverage_triple(n.named_set(), sigsets) for n in namings
    }
    union: set[ActivationRef] = set()
    for n in namings:
        union |= n.named_set()
    return CoverageReport(
        class_id=class_id,
        per_annotator=per,
        any_annotator=_coverage_triple(frozenset(union), sigsets),
        exactly_n_histogram=exactly_n_histogram(namings, sigsets),
    )


def _plurality_sum(groups: Iterable[Counter]) -> int:
    return sum(max(c.values()) for c in groups)


def concept_majority_features(naming: Naming) -> dict[str, int]:
    """Plurality feature_id per concept; ties break toward the lower feature_id."""
    out = {}
    for c in naming.concepts:
        if not c.members:
            continue
        counts = Counter(ref.feature_id for ref in c.members)
        best = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
        out[c.concept_id] = best[0]
    return out


def feature_majority_concepts(naming: Naming) -> dict[int, str]:
    """Plurality concept per used feature; ties break toward the least concept_id."""
    by_feature: dict[int, Counter] = {}
    for c in naming.concepts:
        for ref in c.members:
            by_feature.setdefault(ref.feature_id, Counter())[c.concept_id] += 1
    out = {}
    for feature_id, counts in by_feature.items():
        best = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        out[feature_id] = best[0]
    return out


def cx_purity(naming: Naming) -> float:
    """Fraction of named activations that belong to the plurality X-feature
    of their concept."""
    total = len(naming.named_set())
    if total == 0:
        raise EmptyNaming(f"naming by '{naming.annotator_id}' has no named activations")
    per_concept = (
        Counter(ref.feature_id for ref in c.members)
        for c in naming.concepts
        if c.members
    )
    return _plurality_sum(per_concept) / total


def xc_purity(naming: Naming) -> float:
    """Fraction of named activations that belong to the plurality concept of
    their X-feature; features with no named activations are excluded."""
    total = len(naming.named_set())
    if total == 0:
        raise EmptyNaming(f"naming by '{naming.annotator_id}' has no named activations")
    by_feature: dict[int, Counter] = {}
    for c in naming.concepts:
        for ref in c.members:
            by_feature.setdefault(ref.feature_id, Counter())[c.concept_id] += 1
    return _plurality_sum(by_feature.values()) / total


def jaccard(naming_i: Naming, naming_j: Naming) -> float:
    """Intersection-over-union of the two annotators' named activation sets."""
    if naming_i.class_id != naming_j.class_id:
        raise MismatchedKeys(
            f"namings compare classes '{naming_i.class_id}' and '{naming_j.class_id}'"
        )
    a, b = naming_i.named_set(), naming_j.named_set()
    union = a | b
    if not union:
        raise BothEmpty("both named sets are empty; Jaccard is undefined")
    return len(a & b) / len(union)
