from collections import defaultdict

import pytest

from naming_lab.model import ActivationRef, Naming, TestSet, VisualConcept, XFeatureRecord


def ref(image_id, class_id, feature_id):
    return ActivationRef(image_id, class_id, feature_id)


def record_doc(image_id, class_id, contributions, heatmap_paths=None):
    doc = {
        "image_id": image_id,
        "class_id": class_id,
        "contributions": list(contributions),
    }
    if heatmap_paths is not None:
        doc["heatmap_paths"] = list(heatmap_paths)
    return doc


def dataset_doc(feature_count, categories, records, threshold=0.9):
    return {
        "feature_count": feature_count,
        "significance_threshold": threshold,
        "categories": list(categories),
        "records": records,
    }


def make_naming(annotator_id, class_id, concepts, discarded=(), version=1):
    """concepts: {concept_id: (name, [refs])} or {concept_id: [refs]}."""
    built = []
    for concept_id, value in concepts.items():
        if isinstance(value, tuple):
            name, members = value
        else:
            name, members = concept_id, value
        built.append(VisualConcept(concept_id, name, frozenset(members)))
    return Naming(
        annotator_id=annotator_id,
        class_id=class_id,
        concepts=tuple(built),
        discarded=frozenset(discarded),
        version=version,
    )


def counts_testset(class_id, per_image_counts, feature_count=5, threshold=0.9):
    """Test set where image i has exactly per_image_counts[i] significant
    activations: the first k features score 10 each, the rest -1."""
    records = {}
    for i, k in enumerate(per_image_counts):
        assert 0 < k <= feature_count
        image_id = f"{class_id}-img{i:04d}"
        contributions = tuple([10.0] * k + [-1.0] * (feature_count - k))
        records[(image_id, class_id)] = XFeatureRecord(image_id, class_id, contributions)
    return TestSet(
        categories=(class_id,),
        feature_count=feature_count,
        records=records,
        significance_threshold=threshold,
    )


def explained_class(class_id, image_groups, feature_count=5):
    """(records, concept members) for a class built from explanation shapes.

    image_groups: list of (image_count, assignments) where assignments give
    one concept name (or None for unnamed) per significant activation of
    each image in the group.
    """
    records = {}
    members = defaultdict(set)
    index = 0
    for count, assignments in image_groups:
        k = len(assignments)
        assert 0 < k <= feature_count
        for _ in range(count):
            image_id = f"{class_id}-img{index:04d}"
            index += 1
            contributions = tuple([10.0] * k + [-1.0] * (feature_count - k))
            records[(image_id, class_id)] = XFeatureRecord(
                image_id, class_id, contributions
            )
            for feature_id, name in enumerate(assignments):
                if name is not None:
                    members[name].add(ref(image_id, class_id, feature_id))
    return records, members


def explained_testset_and_naming(class_id, image_groups, annotator_id="ann-1",
                                 feature_count=5):
    records, members = explained_class(class_id, image_groups, feature_count)
    testset = TestSet(
        categories=(class_id,),
        feature_count=feature_count,
        records=records,
        significance_threshold=0.9,
    )
    naming = make_naming(
        annotator_id,
        class_id,
        {name: (name, refs) for name, refs in sorted(members.items())},
    )
    return testset, naming


@pytest.fixture
def small_dataset_doc():
    return dataset_doc(
        feature_count=5,
        categories=["a", "b"],
        records=[
            record_doc("img1", "a", [5.0, 3.0, 1.0, -2.0, 0.0]),
            record_doc("img2", "a", [0.0, 0.0, 7.0, -1.0, 0.0]),
        ],
    )
