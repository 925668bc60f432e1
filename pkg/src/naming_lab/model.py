"""Domain model: activation identities, test sets, namings, and their JSON schemas.

A test-set document carries the per-image signed X-feature contributions
exported by the upstream classifier; a naming document carries one
annotator's clustering of significant activations into named visual
concepts. Everything downstream of this module treats both as immutable
values.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ConsistencyError, SchemaError

DEFAULT_SIGNIFICANCE_THRESHOLD = 0.9
DEFAULT_MIN_CLUSTER_SIZE = 3
DEFAULT_UNLABELED_TOKEN = "unlabeled"


@dataclass(frozen=True, order=True)
class ActivationRef:
    """Identity of one significant activation within a test set."""

    image_id: str
    class_id: str
    feature_id: int

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "class_id": self.class_id,
            "feature_id": self.feature_id,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ActivationRef":
        return cls(
            image_id=str(doc["image_id"]),
            class_id=str(doc["class_id"]),
            feature_id=int(doc["feature_id"]),
        )


@dataclass(frozen=True)
class XFeatureRecord:
    """Per (image, class): one signed score term per X-feature, plus optional heatmaps."""

    image_id: str
    class_id: str
    contributions: tuple[float, ...]
    heatmap_paths: tuple[str, ...] | None = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.image_id, self.class_id)


@dataclass(frozen=True)
class TestSet:
    """A validated test-set export: categories, feature count, and records."""

    categories: tuple[str, ...]
    feature_count: int
    records: dict[tuple[str, str], XFeatureRecord]
    significance_threshold: float = DEFAULT_SIGNIFICANCE_THRESHOLD

    def records_for_class(self, class_id: str) -> list[XFeatureRecord]:
        """Records of one class, ordered by image_id for determinism."""
        recs = [r for r in self.records.values() if r.class_id == class_id]
        recs.sort(key=lambda r: r.image_id)
        return recs


@dataclass(frozen=True)
class VisualConcept:
    """An annotator-created cluster of activations, optionally named."""

    concept_id: str
    name: str
    members: frozenset[ActivationRef]


@dataclass(frozen=True)
class Naming:
    """One annotator's clustering for one category.

    The named set is the union of all concept members. Significant
    activations that are neither named nor discarded are "unnamed".
    """

    annotator_id: str
    class_id: str
    concepts: tuple[VisualConcept, ...]
    discarded: frozenset[ActivationRef] = frozenset()
    version: int = 0

    def named_set(self) -> frozenset[ActivationRef]:
        out: set[ActivationRef] = set()
        for c in self.concepts:
            out |= c.members
        return frozenset(out)

    def concept_of(self, ref: ActivationRef) -> VisualConcept | None:
        for c in self.concepts:
            if ref in c.members:
                return c
        return None


@dataclass(frozen=True)
class Explanation:
    """The set of concept names attached to one image's significant activations."""

    image_id: str
    class_id: str
    names: frozenset[str]


# ---------------------------------------------------------------------------
# Test-set documents


def _require(doc: dict, key: str, kind, context: str, problems: list) -> object:
    if key not in doc:
        problems.append(f"{context}: missing key '{key}'")
        return None
    value = doc[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            problems.append(f"{context}: '{key}' must be a number")
            return None
        return float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        problems.append(f"{context}: '{key}' must be {kind.__name__}")
        return None
    return value


def validate_testset(doc: dict) -> TestSet:
    """Parse and validate a raw dataset document into a :class:`TestSet`.

    Raises :class:`SchemaError` when the document is structurally malformed
    and :class:`ConsistencyError` when invariants fail; the exceptions carry
    every violation found, each with (image_id, class_id) context.
    """
    schema_problems: list[str] = []
    if not isinstance(doc, dict):
        raise SchemaError("dataset document must be a JSON object", ["not an object"])

    feature_count = _require(doc, "feature_count", int, "dataset", schema_problems)
    categories = _require(doc, "categories", list, "dataset", schema_problems)
    records_raw = _require(doc, "records", list, "dataset", schema_problems)
    threshold = doc.get("significance_threshold", DEFAULT_SIGNIFICANCE_THRESHOLD)
    if not isinstance(threshold, (int, float)) or isinstance(threshold, bool):
        schema_problems.append("dataset: 'significance_threshold' must be a number")
    elif not (0.0 < float(threshold) <= 1.0):
        schema_problems.append(
            f"dataset: 'significance_threshold' must lie in (0, 1], got {threshold}"
        )
    if isinstance(feature_count, int) and feature_count <= 0:
        schema_problems.append("dataset: 'feature_count' must be positive")
    if isinstance(categories, list) and not all(isinstance(c, str) for c in categories):
        schema_problems.append("dataset: 'categories' must be a list of strings")

    parsed: list[XFeatureRecord] = []
    if isinstance(records_raw, list):
        for i, rec in enumerate(records_raw):
            ctx = f"records[{i}]"
            if not isinstance(rec, dict):
                schema_problems.append(f"{ctx}: must be an object")
                continue
            image_id = _require(rec, "image_id", str, ctx, schema_problems)
            class_id = _require(rec, "class_id", str, ctx, schema_problems)
            contribs = _require(rec, "contributions", list, ctx, schema_problems)
            if contribs is not None and not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in contribs
            ):
                schema_problems.append(f"{ctx}: 'contributions' must be numbers")
                contribs = None
            heatmaps = rec.get("heatmap_paths")
            if heatmaps is not None and (
                not isinstance(heatmaps, list)
                or not all(isinstance(p, str) for p in heatmaps)
            ):
                schema_problems.append(f"{ctx}: 'heatmap_paths' must be a list of paths")
                heatmaps = None
            if image_id is None or class_id is None or contribs is None:
                continue
            parsed.append(
                XFeatureRecord(
                    image_id=image_id,
                    class_id=class_id,
                    contributions=tuple(float(v) for v in contribs),
                    heatmap_paths=tuple(heatmaps) if heatmaps is not None else None,
                )
            )

    if schema_problems:
        raise SchemaError(
            f"dataset document is malformed ({len(schema_problems)} problems)",
            schema_problems,
        )

    violations: list[str] = []
    cat_set = set(categories)
    if len(cat_set) != len(categories):
        violations.append("dataset: duplicate entries in 'categories'")
    records: dict[tuple[str, str], XFeatureRecord] = {}
    for rec in parsed:
        ctx = f"record ({rec.image_id}, {rec.class_id})"
        if rec.class_id not in cat_set:
            violations.append(f"{ctx}: unknown class '{rec.class_id}'")
        if len(rec.contributions) != feature_count:
            violations.append(
                f"{ctx}: expected {feature_count} contributions, got {len(rec.contributions)}"
            )
        if rec.heatmap_paths is not None and len(rec.heatmap_paths) != feature_count:
            violations.append(
                f"{ctx}: expected {feature_count} heatmap paths, got {len(rec.heatmap_paths)}"
            )
        if rec.key in records:
            violations.append(f"{ctx}: duplicate (image_id, class_id) key")
        else:
            records[rec.key] = rec

    if violations:
        raise ConsistencyError(
            f"dataset document violates {len(violations)} invariant(s)", violations
        )

    return TestSet(
        categories=tuple(categories),
        feature_count=feature_count,
        records=records,
        significance_threshold=float(threshold),
    )


def serialize_testset(testset: TestSet) -> dict:
    """Inverse of :func:`validate_testset`; round-trips for all valid documents."""
    records = []
    for key in sorted(testset.records):
        rec = testset.records[key]
        entry = {
            "image_id": rec.image_id,
            "class_id": rec.class_id,
            "contributions": list(rec.contributions),
        }
        if rec.heatmap_paths is not None:
            entry["heatmap_paths"] = list(rec.heatmap_paths)
        records.append(entry)
    return {
        "feature_count": testset.feature_count,
        "significance_threshold": testset.significance_threshold,
        "categories": list(testset.categories),
        "records": records,
    }


# ---------------------------------------------------------------------------
# Naming documents


def naming_violations(naming: Naming) -> list[str]:
    """Structural invariant violations of a naming (empty when valid)."""
    violations: list[str] = []
    seen_ids: set[str] = set()
    seen_members: dict[ActivationRef, str] = {}
    for c in naming.concepts:
        if c.concept_id in seen_ids:
            violations.append(f"duplicate concept_id '{c.concept_id}'")
        seen_ids.add(c.concept_id)
        for ref in c.members:
            if ref.class_id != naming.class_id:
                violations.append(
                    f"concept '{c.concept_id}': member ({ref.image_id}, {ref.class_id}, "
                    f"{ref.feature_id}) is not in class '{naming.class_id}'"
                )
            if ref in seen_members:
                violations.append(
                    f"activation ({ref.image_id}, {ref.class_id}, {ref.feature_id}) "
                    f"appears in concepts '{seen_members[ref]}' and '{c.concept_id}'"
                )
            else:
                seen_members[ref] = c.concept_id
    for ref in naming.discarded:
        if ref.class_id != naming.class_id:
            violations.append(
                f"discarded ({ref.image_id}, {ref.class_id}, {ref.feature_id}) "
                f"is not in class '{naming.class_id}'"
            )
        if ref in seen_members:
            violations.append(
                f"activation ({ref.image_id}, {ref.class_id}, {ref.feature_id}) "
                f"is both discarded and in concept '{seen_members[ref]}'"
            )
    if naming.version < 0:
        violations.append(f"version must be non-negative, got {naming.version}")
    return violations


def validate_naming(doc: dict) -> Naming:
    """Parse and validate a raw naming document."""
    problems: list[str] = []
    if not isinstance(doc, dict):
        raise SchemaError("naming document must be a JSON object", ["not an object"])
    annotator_id = _require(doc, "annotator_id", str, "naming", problems)
    class_id = _require(doc, "class_id", str, "naming", problems)
    version = _require(doc, "version", int, "naming", problems)
    concepts_raw = _require(doc, "concepts", list, "naming", problems)
    discarded_raw = doc.get("discarded", [])
    if not isinstance(discarded_raw, list):
        problems.append("naming: 'discarded' must be a list")
        discarded_raw = []

    def parse_refs(items, ctx):
        refs = []
        for j, item in enumerate(items):
            try:
                refs.append(ActivationRef.from_dict(item))
            except (KeyError, TypeError, ValueError):
                problems.append(f"{ctx}[{j}]: malformed activation reference")
        return refs

    concepts: list[VisualConcept] = []
    if isinstance(concepts_raw, list):
        for i, c in enumerate(concepts_raw):
            ctx = f"concepts[{i}]"
            if not isinstance(c, dict):
                problems.append(f"{ctx}: must be an object")
                continue
            concept_id = _require(c, "concept_id", str, ctx, problems)
            name = c.get("name", "")
            if not isinstance(name, str):
                problems.append(f"{ctx}: 'name' must be a string")
                name = ""
            members_raw = _require(c, "members", list, ctx, problems)
            if concept_id is None or members_raw is None:
                continue
            concepts.append(
                VisualConcept(
                    concept_id=concept_id,
                    name=name,
                    members=frozenset(parse_refs(members_raw, f"{ctx}.members")),
                )
            )
    discarded = frozenset(parse_refs(discarded_raw, "discarded"))

    if problems:
        raise SchemaError(
            f"naming document is malformed ({len(problems)} problems)", problems
        )

    naming = Naming(
        annotator_id=annotator_id,
        class_id=class_id,
        concepts=tuple(concepts),
        discarded=discarded,
        version=version,
    )
    violations = naming_violations(naming)
    if violations:
        raise ConsistencyError(
            f"naming document violates {len(violations)} invariant(s)", violations
        )
    return naming


def serialize_naming(naming: Naming) -> dict:
    """Inverse of :func:`validate_naming`, with members in sorted order."""
    return {
        "annotator_id": naming.annotator_id,
        "class_id": naming.class_id,
        "version": naming.version,
        "concepts": [
            {
                "concept_id": c.concept_id,
                "name": c.name,
                "members": [r.to_dict() for r in sorted(c.members)],
            }
            for c in naming.concepts
        ],
        "discarded": [r.to_dict() for r in sorted(naming.discarded)],
    }


def check_naming_against_testset(
    naming: Naming, significant: frozenset[ActivationRef]
) -> list[str]:
    """Violations of the rule that every named/discarded activation is significant."""
    violations = []
    for ref in sorted(naming.named_set() | naming.discarded):
        if ref not in significant:
            violations.append(
                f"activation ({ref.image_id}, {ref.class_id}, {ref.feature_id}) "
                "is not a significant activation of the test set"
            )
    return violations


def clean_naming(naming: Naming, min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE) -> Naming:
    """Drop concepts with fewer than ``min_cluster_size`` members.

    Removed members return to the unnamed pool (they are not discarded);
    the version is incremented so downstream consumers can tell the cleaned
    naming from the annotator's own save.
    """
    if min_cluster_size < 1:
        raise ValueError("min_cluster_size must be a positive integer")
    kept = tuple(c for c in naming.concepts if len(c.members) >= min_cluster_size)
    return replace(naming, concepts=kept, version=naming.version + 1)
