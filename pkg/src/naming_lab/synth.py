"""Synthetic test sets and namings with planted ground truth.

Every image gets 1-3 planted significant features; contributions are drawn
so the planted features are exactly the significant set under the 90% rule
(planted features score ~10, the rest are negative), and the result is
re-checked through the significance module. The planted concept of an
activation is its feature index, so zero-noise namings are perfectly
feature-aligned. Annotators copy the planted clustering, then each
activation is independently reassigned to a random other concept with
probability ``noise_rate`` or dropped to unnamed with probability
``unnamed_rate``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import InfeasibleConfig
from .model import ActivationRef, Naming, TestSet, VisualConcept, XFeatureRecord
from .significance import significant_sets

CLASS_ID = "a"
GUARANTEED_CLUSTER_SIZE = 3  # planted concepts never fall below this


@dataclass(frozen=True)
class SynthConfig:
    image_count: int
    feature_count: int
    concept_count: int
    annotator_count: int
    noise_rate: float = 0.0
    unnamed_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.concept_count < 1:
            raise InfeasibleConfig("concept_count must be at least 1")
        if not (0.0 <= self.noise_rate < 1.0) or not (0.0 <= self.unnamed_rate < 1.0):
            raise InfeasibleConfig("noise_rate and unnamed_rate must lie in [0, 1)")
        if self.noise_rate + self.unnamed_rate >= 1.0:
            raise InfeasibleConfig("noise_rate + unnamed_rate must stay below 1")
        if self.image_count < 1 or self.feature_count < 1 or self.annotator_count < 1:
            raise InfeasibleConfig("counts must be positive")


def generate(
    config: SynthConfig,
) -> tuple[TestSet, dict[ActivationRef, int], list[Naming]]:
    """Deterministic (test set, planted concept per activation, namings)."""
    if config.concept_count > config.feature_count:
        raise InfeasibleConfig(
            "feature-aligned planting needs concept_count <= feature_count"
        )
    if config.image_count < GUARANTEED_CLUSTER_SIZE * config.concept_count:
        raise InfeasibleConfig(
            f"need at least {GUARANTEED_CLUSTER_SIZE} images per planted concept"
        )
    rng = random.Random(config.seed)
    n_concepts = config.concept_count

    records = []
    truth: dict[ActivationRef, int] = {}
    for i in range(config.image_count):
        image_id = f"img{i:05d}"
        # round-robin base feature guarantees every concept enough members
        feats = {i % n_concepts}
        k = rng.randint(1, min(3, n_concepts))
        while len(feats) < k:
            feats.add(rng.randrange(n_concepts))
        contributions = tuple(
            10.0 * rng.uniform(0.9, 1.1) if f in feats else -rng.uniform(0.5, 2.0)
            for f in range(config.feature_count)
        )
        records.append(XFeatureRecord(image_id, CLASS_ID, contributions))
        for f in feats:
            truth[ActivationRef(image_id, CLASS_ID, f)] = f

    testset = TestSet(
        categories=(CLASS_ID,),
        feature_count=config.feature_count,
        records={r.key: r for r in records},
        significance_threshold=0.9,
    )
    if significant_sets(testset, CLASS_ID).refs() != frozenset(truth):
        raise InfeasibleConfig(
            "drawn contributions do not make exactly the planted features significant"
        )

    refs = sorted(truth)
    namings = []
    for a in range(config.annotator_count):
        members: list[set[ActivationRef]] = [set() for _ in range(n_concepts)]
        for ref in refs:
            planted = truth[ref]
            u = rng.random()
            if u < config.noise_rate and n_concepts > 1:
                other = rng.randrange(n_concepts - 1)
                members[other if other < planted else other + 1].add(ref)
            elif u < config.noise_rate + config.unnamed_rate:
                continue
            else:
                members[planted].add(ref)
        concepts = tuple(
            VisualConcept(f"c{k}", f"concept {k}", frozenset(members[k]))
            for k in range(n_concepts)
            if members[k]
        )
        namings.append(
            Naming(
                annotator_id=f"annotator-{a + 1}",
                class_id=CLASS_ID,
                concepts=concepts,
                discarded=frozenset(),
                version=1,
            )
        )
    return testset, truth, namings


def parse_synth_config(text: str, **overrides) -> SynthConfig:
    """Parse a key=value config file; keyword overrides win over file values."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InfeasibleConfig(f"config line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    kwargs: dict[str, object] = {}
    fields = {
        "image_count": int,
        "feature_count": int,
        "concept_count": int,
        "annotator_count": int,
        "noise_rate": float,
        "unnamed_rate": float,
        "seed": int,
    }
    for key, value in values.items():
        if key not in fields:
            raise InfeasibleConfig(f"unknown config key '{key}'")
        try:
            kwargs[key] = fields[key](value)
        except ValueError as exc:
            raise InfeasibleConfig(f"config key '{key}': {exc}") from exc
    for key, value in overrides.items():
        if value is not None:
            kwargs[key] = value
    missing = [k for k in fields if k not in kwargs and k != "seed"
               and k not in ("noise_rate", "unnamed_rate")]
    if missing:
        raise InfeasibleConfig(f"missing config keys: {', '.join(missing)}")
    return SynthConfig(**kwargs)
