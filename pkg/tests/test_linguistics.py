import random

import pytest

from naming_lab.errors import ConsistencyError, EmptyAfterNormalization, ZeroTotalWeight
from naming_lab.linguistics import (
    Lexicon,
    compatibility_score,
    exact_compatible,
    normalize_name,
    parse_lexicon,
    render_lexicon,
    subset_compatible,
)
from naming_lab.matching import build_intersection_graph, d_family_matching


from conftest import make_naming, ref

LEX = Lexicon()  # default: {beak, nose} synonyms; and/of/the/at stopwords


def test_normalize_basic_tokenization():
    assert normalize_name("Wing and Eye", LEX) == frozenset({"wing", "eye"})
    assert normalize_name("Open Wing", LEX) == frozenset({"open", "wing"})
    assert normalize_name("middle body/Feathers", LEX) == frozenset(
        {"middle", "body", "feathers"}
    )
    assert normalize_name("eye, beak", LEX) == frozenset({"eye", "beak"})


def test_normalize_maps_synonyms_to_canonical():
    assert normalize_name("nose", LEX) == frozenset({"beak"})
    assert normalize_name("Beak", LEX) == frozenset({"beak"})


def test_normalize_drops_stopwords_and_errors_when_nothing_left():
    assert normalize_name("end of the white body", LEX) == frozenset(
        {"end", "white", "body"}
    )
    with pytest.raises(EmptyAfterNormalization):
        normalize_name("and the", LEX)
    with pytest.raises(EmptyAfterNormalization):
        normalize_name("  , / ", LEX)


def test_normalize_idempotent_on_rejoined_output():
    for name in ("Wing and Eye", "open wing", "nose", "Eye/Beak, tail"):
        terms = normalize_name(name, LEX)
        again = normalize_name(" ".join(sorted(terms)), LEX)
        assert again == terms


def test_reference_compatibility_judgments():
    assert exact_compatible(normalize_name("Eye", LEX), normalize_name("Eye", LEX))
    assert exact_compatible(normalize_name("beak", LEX), normalize_name("nose", LEX))
    assert not exact_compatible(normalize_name("Tail", LEX), normalize_name("Wing", LEX))

    assert subset_compatible(normalize_name("Open Wing", LEX), normalize_name("Wing", LEX))
    assert subset_compatible(normalize_name("Wing", LEX), normalize_name("Wing and Eye", LEX))
    assert not subset_compatible(
        normalize_name("Feet", LEX), normalize_name("wing shape", LEX)
    )
    # exact implies subset
    assert subset_compatible(normalize_name("nose", LEX), normalize_name("beak", LEX))


def _pair_of_namings(names_left, names_right, sizes):
    """Two namings whose concept k sides share sizes[k] activations."""
    concepts_l, concepts_r = {}, {}
    idx = 0
    for k, size in enumerate(sizes):
        shared = [ref(f"i{idx + j}", "a", 0) for j in range(size)]
        idx += size
        concepts_l[f"l{k}"] = (names_left[k], shared)
        concepts_r[f"r{k}"] = (names_right[k], shared)
    return (
        make_naming("ann-1", "a", concepts_l),
        make_naming("ann-2", "a", concepts_r),
    )


def test_compatibility_score_weighted_example():
    # weight 3 edge "open wing"-"wing" (subset), weight 1 edge "tail"-"wing"
    n1, n2 = _pair_of_namings(["open wing", "tail"], ["wing", "wing"], [3, 1])
    graph = build_intersection_graph(n1, n2)
    partition = d_family_matching(graph, 1)
    assert partition.score == 4
    assert compatibility_score(partition, n1, n2, "subset", LEX) == pytest.approx(0.75)
    assert compatibility_score(partition, n1, n2, "exact", LEX) == pytest.approx(0.0)


def test_compatibility_identical_names_everywhere():
    n1, n2 = _pair_of_namings(["eye", "wing"], ["eye", "wing"], [4, 2])
    graph = build_intersection_graph(n1, n2)
    partition = d_family_matching(graph, 1)
    assert compatibility_score(partition, n1, n2, "exact", LEX) == 1.0
    assert compatibility_score(partition, n1, n2, "subset", LEX) == 1.0


def test_compatibility_empty_name_counts_as_incompatible():
    n1, n2 = _pair_of_namings(["", "eye"], ["wing", "eye"], [2, 2])
    graph = build_intersection_graph(n1, n2)
    partition = d_family_matching(graph, 1)
    assert compatibility_score(partition, n1, n2, "exact", LEX) == pytest.approx(0.5)


def test_compatibility_zero_total_weight():
    n1 = make_naming("ann-1", "a", {"c1": ("x", [ref("i1", "a", 0)])})
    n2 = make_naming("ann-2", "a", {"c1": ("y", [ref("i2", "a", 0)])})
    graph = build_intersection_graph(n1, n2)
    partition = d_family_matching(graph, 1)
    with pytest.raises(ZeroTotalWeight):
        compatibility_score(partition, n1, n2, "exact", LEX)


def test_subset_score_dominates_exact_score_on_random_cases():
    rng = random.Random(99)
    vocab = ["eye", "wing", "tail", "head", "beak", "nose", "open", "close", "body"]
    for _ in range(30):
        k = rng.randint(1, 4)
        names_l = [" ".join(rng.sample(vocab, rng.randint(1, 3))) for _ in range(k)]
        names_r = [" ".join(rng.sample(vocab, rng.randint(1, 3))) for _ in range(k)]
        sizes = [rng.randint(1, 5) for _ in range(k)]
        n1, n2 = _pair_of_namings(names_l, names_r, sizes)
        graph = build_intersection_graph(n1, n2)
        for d in (1, 2):
            partition = d_family_matching(graph, d)
            subset = compatibility_score(partition, n1, n2, "subset", LEX)
            exact = compatibility_score(partition, n1, n2, "exact", LEX)
            assert 0.0 <= exact <= subset <= 1.0


def test_compatibility_symmetric_in_the_pair():
    n1, n2 = _pair_of_namings(["open wing", "eye"], ["wing", "eye"], [3, 2])
    g12 = build_intersection_graph(n1, n2)
    g21 = build_intersection_graph(n2, n1)
    s12 = compatibility_score(d_family_matching(g12, 1), n1, n2, "subset", LEX)
    s21 = compatibility_score(d_family_matching(g21, 1), n2, n1, "subset", LEX)
    assert s12 == s21


def test_lexicon_parse_and_render_roundtrip():
    text = """# study lexicon
[synonyms]
beak, nose
close wing, closed wing

[stopwords]
and, of, the, at
"""
    lexicon = parse_lexicon(text)
    assert frozenset({"beak", "nose"}) in lexicon.synonym_groups
    assert lexicon.canonical("nose") == "beak"
    assert lexicon.canonical("closed wing") == "close wing"
    assert parse_lexicon(render_lexicon(lexicon)) == lexicon


def test_lexicon_rejects_overlapping_groups_and_junk():
    with pytest.raises(ConsistencyError):
        Lexicon(synonym_groups=(frozenset({"a", "b"}), frozenset({"b", "c"})))
    with pytest.raises(ConsistencyError):
        parse_lexicon("[synonyms]\nonlyone\n")
    with pytest.raises(ConsistencyError):
        parse_lexicon("stray line\n")
    with pytest.raises(ConsistencyError):
        parse_lexicon("[wat]\n")
