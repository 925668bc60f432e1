"""Name normalization and linguistic compatibility of matched concepts.

Concept names are free text; comparisons happen on canonical term sets:
lowercase tokens minus stopwords, mapped through user-editable synonym
groups. Two matched concepts are exactly compatible when their term sets
are equal, and subset compatible when one contains the other.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ConsistencyError, EmptyAfterNormalization, ZeroTotalWeight
from .matching import DFamilyPartition, build_intersection_graph
from .model import Naming

DEFAULT_STOPWORDS = frozenset({"and", "of", "the", "at"})
DEFAULT_SYNONYM_GROUPS = (frozenset({"beak", "nose"}),)

_SPLIT = re.compile(r"[\s/,]+")


@dataclass(frozen=True)
class Lexicon:
    """Synonym groups plus stopwords; each group maps to its least member."""

    synonym_groups: tuple[frozenset[str], ...] = DEFAULT_SYNONYM_GROUPS
    stopwords: frozenset[str] = DEFAULT_STOPWORDS

    def __post_init__(self):
        seen: set[str] = set()
        for group in self.synonym_groups:
            overlap = seen & group
            if overlap:
                raise ConsistencyError(
                    f"synonym groups overlap on {sorted(overlap)}", sorted(overlap)
                )
            seen |= group

    def canonical(self, term: str) -> str:
        for group in self.synonym_groups:
            if term in group:
                return min(group)
        return term


def normalize_name(name: str, lexicon: Lexicon) -> frozenset[str]:
    """Canonical term set of a concept name.

    Lowercases, splits on whitespace / "/" / ",", drops stopwords, and maps
    every token through the lexicon's synonym groups. Raises
    :class:`EmptyAfterNormalization` when nothing survives.
    """
    tokens = [t for t in _SPLIT.split(name.lower()) if t]
    terms = frozenset(
        lexicon.canonical(t) for t in tokens if t not in lexicon.stopwords
    )
    if not terms:
        raise EmptyAfterNormalization(f"name {name!r} normalizes to nothing")
    return terms


def exact_compatible(a: frozenset[str], b: frozenset[str]) -> bool:
    return a == b


def subset_compatible(a: frozenset[str], b: frozenset[str]) -> bool:
    return a <= b or b <= a


def compatibility_score(
    partition: DFamilyPartition,
    naming_i: Naming,
    naming_j: Naming,
    mode: str,
    lexicon: Lexicon,
) -> float:
    """Weight fraction of intra-family edges whose concept names are compatible.

    Every edge joining two concepts of the same family is tested
    independently under ``mode`` ("exact" or "subset"); an edge touching a
    concept whose name normalizes to nothing counts as incompatible.
    """
    if mode not in ("exact", "subset"):
        raise ValueError(f"mode must be 'exact' or 'subset', got {mode!r}")
    test = exact_compatible if mode == "exact" else subset_compatible

    graph = build_intersection_graph(naming_i, naming_j)
    names_left = {c.concept_id: c.name for c in naming_i.concepts}
    names_right = {c.concept_id: c.name for c in naming_j.concepts}
    node_family = {}
    for fi, fam in enumerate(partition.families):
        for node in fam:
            node_family[node] = fi

    off = len(graph.left)
    total = 0
    compatible = 0
    for li, ri, w in graph.edges:
        if node_family.get(li) != node_family.get(off + ri):
            continue
        total += w
        try:
            a = normalize_name(names_left[graph.left[li]], lexicon)
            b = normalize_name(names_right[graph.right[ri]], lexicon)
        except EmptyAfterNormalization:
            continue
        if test(a, b):
            compatible += w
    if total == 0:
        raise ZeroTotalWeight("partition has no intra-family edges")
    return compatible / total


# ---------------------------------------------------------------------------
# Lexicon file format: a [synonyms] section with one comma-separated group
# per line and a [stopwords] section with comma-separated terms. Blank
# lines and '#' comments are ignored.


def parse_lexicon(text: str) -> Lexicon:
    groups: list[frozenset[str]] = []
    stopwords: set[str] = set()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("synonyms", "stopwords"):
                raise ConsistencyError(
                    f"lexicon line {lineno}: unknown section '{section}'",
                    [f"line {lineno}"],
                )
            continue
        terms = [t.strip().lower() for t in line.split(",") if t.strip()]
        if section == "synonyms":
            if len(terms) < 2:
                raise ConsistencyError(
                    f"lexicon line {lineno}: a synonym group needs at least 2 terms",
                    [f"line {lineno}"],
                )
            groups.append(frozenset(terms))
        elif section == "stopwords":
            stopwords.update(terms)
        else:
            raise ConsistencyError(
                f"lexicon line {lineno}: content before any section header",
                [f"line {lineno}"],
            )
    return Lexicon(
        synonym_groups=tuple(groups),
        stopwords=frozenset(stopwords) if stopwords else DEFAULT_STOPWORDS,
    )


def render_lexicon(lexicon: Lexicon) -> str:
    lines = ["[synonyms]"]
    for group in sorted(lexicon.synonym_groups, key=sorted):
        lines.append(", ".join(sorted(group)))
    lines.append("")
    lines.append("[stopwords]")
    lines.append(", ".join(sorted(lexicon.stopwords)))
    lines.append("")
    return "\n".join(lines)
