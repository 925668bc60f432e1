"""Audit a classifier's exported X-feature activations through
human-named visual concepts: significance extraction, interactive naming,
and coverage/purity/agreement/compatibility analyses."""

from .model import (
    ActivationRef,
    Explanation,
    Naming,
    TestSet,
    VisualConcept,
    XFeatureRecord,
    clean_naming,
    validate_naming,
    validate_testset,
)
from .significance import SignificantSet, explain, significant_features, significant_sets

__all__ = [
    "ActivationRef",
    "Explanation",
    "Naming",
    "TestSet",
    "VisualConcept",
    "XFeatureRecord",
    "SignificantSet",
    "clean_naming",
    "explain",
    "significant_features",
    "significant_sets",
    "validate_naming",
    "validate_testset",
]

__version__ = "0.1.0"
