"""Significant-activation extraction and per-image explanations.

An X-feature is significant for (image, class) when it belongs to the
minimum-cardinality subset of positive contributions whose sum reaches the
test set's threshold fraction of the total positive score. For a sum
threshold this minimum is always achieved by the greedy descending prefix,
which is what :func:`significant_features` selects.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MismatchedKeys, NoPositiveEvidence, UnknownClass
from .model import (
    DEFAULT_UNLABELED_TOKEN,
    ActivationRef,
    Explanation,
    Naming,
    TestSet,
    XFeatureRecord,
)


@dataclass(frozen=True)
class SignificantSet:
    """The significant X-features of one (image, class), strongest first."""

    image_id: str
    class_id: str
    features: tuple[int, ...]
    positive_total: float
    covered_fraction: float

    def refs(self) -> tuple[ActivationRef, ...]:
        return tuple(
            ActivationRef(self.image_id, self.class_id, f) for f in self.features
        )


@dataclass(frozen=True)
class ClassSignificance:
    """All significant sets of one class, with the headline count statistics."""

    class_id: str
    sets: tuple[SignificantSet, ...]
    image_count: int
    total: int
    average: float
    empty: bool  # True when the class has no images; average reported as 0

    def refs(self) -> frozenset[ActivationRef]:
        out: set[ActivationRef] = set()
        for s in self.sets:
            out.update(s.refs())
        return frozenset(out)


def significant_features(record: XFeatureRecord, threshold: float) -> SignificantSet:
    """Select the minimal positive-contribution subset covering ``threshold``.

    Ties between equal contributions break toward the lower feature_id, so
    the result is deterministic. Negative and zero contributions are never
    selected. Raises :class:`NoPositiveEvidence` when no contribution is
    strictly positive.
    """
    positives = [
        (f, c) for f, c in enumerate(record.contributions) if c > 0.0
    ]
    if not positives:
        raise NoPositiveEvidence(
            f"record ({record.image_id}, {record.class_id}) has no positive contribution"
        )
    positives.sort(key=lambda fc: (-fc[1], fc[0]))
    positive_total = sum(c for _, c in positives)
    target = threshold * positive_total
    chosen: list[int] = []
    acc = 0.0
    for f, c in positives:
        chosen.append(f)
        acc += c
        if acc >= target:
            break
    return SignificantSet(
        image_id=record.image_id,
        class_id=record.class_id,
        features=tuple(chosen),
        positive_total=positive_total,
        covered_fraction=acc / positive_total,
    )


def significant_sets(testset: TestSet, class_id: str) -> ClassSignificance:
    """Significant sets for every image of ``class_id`` that has positive evidence.

    Images without positive evidence are skipped (they still count toward
    the per-image average's denominator). An empty class yields total 0 and
    an ``empty`` warning flag instead of an error.
    """
    if class_id not in testset.categories:
        raise UnknownClass(f"class '{class_id}' is not in the test set's categories")
    records = testset.records_for_class(class_id)
    sets = []
    for rec in records:
        try:
            sets.append(significant_features(rec, testset.significance_threshold))
        except NoPositiveEvidence:
            continue
    total = sum(len(s.features) for s in sets)
    image_count = len(records)
    average = total / image_count if image_count else 0.0
    return ClassSignificance(
        class_id=class_id,
        sets=tuple(sets),
        image_count=image_count,
        total=total,
        average=average,
        empty=image_count == 0,
    )


def explain(
    image_id: str,
    class_id: str,
    naming: Naming,
    sigset: SignificantSet,
    unlabeled_token: str = DEFAULT_UNLABELED_TOKEN,
) -> Explanation:
    """Explanation for one image: the concept names covering its significant
    activations, plus the reserved token once if any of them is unnamed or
    discarded.

    Concepts the annotator left without a name contribute their concept_id
    so the explanation stays meaningful.
    """
    if sigset.image_id != image_id or sigset.class_id != class_id:
        raise MismatchedKeys(
            f"significant set belongs to ({sigset.image_id}, {sigset.class_id}), "
            f"not ({image_id}, {class_id})"
        )
    if naming.class_id != class_id:
        raise MismatchedKeys(
            f"naming is for class '{naming.class_id}', not '{class_id}'"
        )
    names: set[str] = set()
    any_unnamed = False
    for ref in sigset.refs():
        concept = naming.concept_of(ref)
        if concept is None:
            any_unnamed = True
        else:
            names.add(concept.name if concept.name else concept.concept_id)
    if any_unnamed:
        names.add(unlabeled_token)
    return Explanation(image_id=image_id, class_id=class_id, names=frozenset(names))
