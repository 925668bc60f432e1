
import threading

import pytest
from fastapi.testclient import TestClient

from naming_lab.metrics import activation_coverage, explanation_coverage
from naming_lab.model import clean_naming, validate_naming
from naming_lab.service import apply_op, create_app
from naming_lab.significance import significant_sets

from conftest import counts_testset, make_naming


@pytest.fixture
def testset():
    return counts_testset("a", [2] * 10)  # 20 significant activations


@pytest.fixture
def client(testset, tmp_path):
    app = create_app(testset, tmp_path / "namings")
    return TestClient(app)


def _refs(testset, n):
    sig = significant_sets(testset, "a")
    return [r.to_dict() for r in sorted(sig.refs())][:n]


def test_categories_listing(client):
    body = client.get("/categories").json()
    assert body == {
        "categories": [{"class_id": "a", "image_count": 10, "significant_total": 20}]
    }


def test_activations_listing_unknown_class_404(client):
    assert client.get("/categories/zzz/activations").status_code == 404
    body = client.get("/categories/a/activations").json()
    assert len(body["activations"]) == 20
    assert all(a["status"] == "unnamed" for a in body["activations"])


def test_get_naming_synthesizes_empty_version_zero(client):
    body = client.get("/namings/ann-1/a").json()
    assert body["version"] == 0
    assert body["concepts"] == [] and body["discarded"] == []


def test_put_roundtrip_and_version_conflict(client, testset):
    doc = {
        "annotator_id": "ann-1",
        "class_id": "a",
        "version": 0,
        "concepts": [{"concept_id": "c1", "name": "eye", "members": _refs(testset, 3)}],
        "discarded": [],
    }
    response = client.put("/namings/ann-1/a", json=doc)
    assert response.status_code == 200
    assert response.json() == {"version": 1}

    stale = client.put("/namings/ann-1/a", json=doc)  # still claims version 0
    assert stale.status_code == 409
    assert stale.json()["detail"]["current_version"] == 1

    stored = client.get("/namings/ann-1/a").json()
    assert stored["version"] == 1
    assert stored["concepts"][0]["name"] == "eye"


def test_put_rejects_invariant_violations(client, testset):
    shared = _refs(testset, 1)
    doc = {
        "annotator_id": "ann-1",
        "class_id": "a",
        "version": 0,
        "concepts": [
            {"concept_id": "c1", "name": "x", "members": shared},
            {"concept_id": "c2", "name": "y", "members": shared},
        ],
        "discarded": [],
    }
    response = client.put("/namings/ann-1/a", json=doc)
    assert response.status_code == 422
    assert response.json()["detail"]["violations"]


def test_put_rejects_non_significant_members(client):
    doc = {
        "annotator_id": "ann-1",
        "class_id": "a",
        "version": 0,
        "concepts": [
            {
                "concept_id": "c1",
                "name": "x",
                # feature 4 scores -1 in the fixture, so it is never significant
                "members": [{"image_id": "a-img0000", "class_id": "a", "feature_id": 4}],
            }
        ],
        "discarded": [],
    }
    response = client.put("/namings/ann-1/a", json=doc)
    assert response.status_code == 422
    assert any(
        "not a significant activation" in v
        for v in response.json()["detail"]["violations"]
    )


def test_put_rejects_path_mismatch(client, testset):
    doc = {
        "annotator_id": "someone-else",
        "class_id": "a",
        "version": 0,
        "concepts": [],
        "discarded": [],
    }
    assert client.put("/namings/ann-1/a", json=doc).status_code == 422


def _post_op(client, base_version, op):
    return client.post(
        "/namings/ann-1/a/ops", json={"base_version": base_version, "op": op}
    )


def test_op_sequence_create_move_merge(client, testset):
    refs = _refs(testset, 6)
    response = _post_op(
        client, 0, {"type": "create_concept", "name": "eye", "members": refs[:3]}
    )
    assert response.status_code == 200
    assert response.json()["version"] == 1

    response = _post_op(
        client, 1, {"type": "create_concept", "name": "wing", "members": refs[3:6]}
    )
    concept_ids = [c["concept_id"] for c in response.json()["concepts"]]
    assert concept_ids == ["c1", "c2"]

    response = _post_op(
        client, 2, {"type": "move_members", "members": refs[2:3], "to": "c2"}
    )
    body = response.json()
    sizes = {c["concept_id"]: len(c["members"]) for c in body["concepts"]}
    assert sizes == {"c1": 2, "c2": 4}

    response = _post_op(client, 3, {"type": "merge", "source": "c1", "into": "c2"})
    body = response.json()
    assert [c["concept_id"] for c in body["concepts"]] == ["c2"]
    assert len(body["concepts"][0]["members"]) == 6

    # merge preserved the named set, so coverage is unchanged
    stats = client.get("/stats/ann-1/a").json()
    assert stats["activation_coverage"] == pytest.approx(6 / 20)
    assert stats["concept_count"] == 1


def test_op_version_conflict_and_invalid_ops(client, testset):
    refs = _refs(testset, 2)
    assert _post_op(client, 5, {"type": "create_concept", "members": refs}).status_code == 409
    assert _post_op(client, 0, {"type": "bogus"}).status_code == 422
    assert _post_op(client, 0, {"type": "rename", "concept_id": "nope"}).status_code == 422
    assert (
        _post_op(client, 0, {"type": "move_members", "members": refs, "to": "nope"}).status_code
        == 422
    )
    response = client.post("/namings/ann-1/a/ops", json={"op": {"type": "rename"}})
    assert response.status_code == 422


def test_discard_restore_flow(client, testset):
    refs = _refs(testset, 2)
    assert _post_op(client, 0, {"type": "discard", "members": refs}).status_code == 200
    listing = client.get("/categories/a/activations", params={"annotator": "ann-1"}).json()
    discarded = [a for a in listing["activations"] if a["status"] == "discarded"]
    assert len(discarded) == 2

    # discarded members cannot be clustered until restored
    assert (
        _post_op(client, 1, {"type": "create_concept", "members": refs}).status_code
        == 422
    )
    assert _post_op(client, 1, {"type": "restore", "members": refs}).status_code == 200
    assert _post_op(client, 2, {"type": "create_concept", "members": refs}).status_code == 200


def test_stats_match_metrics_module(client, testset):
    refs = _refs(testset, 7)
    _post_op(client, 0, {"type": "create_concept", "name": "eye", "members": refs})
    stats = client.get("/stats/ann-1/a").json()

    naming = clean_naming(validate_naming(client.get("/namings/ann-1/a").json()), 1)
    sigsets = significant_sets(testset, "a").sets
    assert stats["activation_coverage"] == pytest.approx(
        activation_coverage(naming, sigsets), abs=1e-9
    )
    partial, complete = explanation_coverage(naming, sigsets)
    assert stats["partial_coverage"] == pytest.approx(partial, abs=1e-9)
    assert stats["complete_coverage"] == pytest.approx(complete, abs=1e-9)


def test_move_members_from_unnamed_raises_coverage(client, testset):
    refs = _refs(testset, 4)
    _post_op(client, 0, {"type": "create_concept", "name": "eye", "members": refs[:2]})
    before = client.get("/stats/ann-1/a").json()["activation_coverage"]
    _post_op(client, 1, {"type": "move_members", "members": refs[2:4], "to": "c1"})
    after = client.get("/stats/ann-1/a").json()["activation_coverage"]
    assert after - before == pytest.approx(2 / 20)


def test_exported_naming_round_trips_through_cleaning(client, testset):
    refs = _refs(testset, 8)
    _post_op(client, 0, {"type": "create_concept", "name": "eye", "members": refs[:4]})
    _post_op(client, 1, {"type": "create_concept", "name": "wing", "members": refs[4:8]})
    _post_op(client, 2, {"type": "rename", "concept_id": "c2", "name": "open wing"})
    exported = client.get("/namings/ann-1/a").json()
    naming = validate_naming(exported)  # schema + invariants
    cleaned = clean_naming(naming)
    assert {c.name for c in cleaned.concepts} == {"eye", "open wing"}


def test_concurrent_puts_exactly_one_wins(testset, tmp_path):
    app = create_app(testset, tmp_path / "namings")
    sig_refs = _refs(testset, 2)
    results = []
    barrier = threading.Barrier(2)

    def writer(name):
        with TestClient(app) as local:
            doc = {
                "annotator_id": "ann-1",
                "class_id": "a",
                "version": 0,
                "concepts": [{"concept_id": "c1", "name": name, "members": sig_refs}],
                "discarded": [],
            }
            barrier.wait()
            results.append(local.put("/namings/ann-1/a", json=doc).status_code)

    threads = [threading.Thread(target=writer, args=(n,)) for n in ("one", "two")]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(results) == [200, 409]
    with TestClient(app) as client:
        assert client.get("/namings/ann-1/a").json()["version"] == 1


def test_ui_static_mount(tmp_path, testset):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<!doctype html><title>naming</title>")
    app = create_app(testset, tmp_path / "namings", ui_dir=ui)
    with TestClient(app) as client:
        response = client.get("/ui/")
        assert response.status_code == 200
        assert "naming" in response.text
        assert client.get("/categories").status_code == 200


def test_heatmap_static_files(tmp_path):
    heatmaps = tmp_path / "maps"
    heatmaps.mkdir()
    (heatmaps / "img0_f0.png").write_bytes(b"fake png")
    from naming_lab.model import TestSet, XFeatureRecord

    records = {
        ("img0", "a"): XFeatureRecord(
            "img0", "a", (5.0, -1.0), heatmap_paths=("img0_f0.png", "img0_f1.png")
        )
    }
    ts = TestSet(categories=("a",), feature_count=2, records=records)
    app = create_app(ts, tmp_path / "namings", heatmap_root=heatmaps)
    with TestClient(app) as client:
        listing = client.get("/categories/a/activations").json()
        assert listing["activations"][0]["heatmap_url"] == "/heatmaps/img0_f0.png"
        assert client.get("/heatmaps/img0_f0.png").content == b"fake png"
        assert client.get("/heatmaps/missing.png").status_code == 404
        assert client.get("/heatmaps/../escape").status_code == 404


def test_apply_op_is_pure(testset):
    naming = make_naming("ann-1", "a", {})
    out = apply_op(
        naming,
        {"type": "create_concept", "name": "eye", "members": _refs(testset, 2)},
    )
    assert naming.concepts == () and len(out.concepts) == 1


def test_random_op_sequences_keep_invariants(client, testset):
    import random

    from naming_lab.model import naming_violations

    rng = random.Random(13)
    all_refs = _refs(testset, 20)
    version = 0
    for _ in range(60):
        naming = validate_naming(client.get("/namings/ann-1/a").json())
        concept_ids = [c.concept_id for c in naming.concepts]
        kind = rng.choice(
            ["create_concept", "move_members", "merge", "rename", "discard", "restore"]
        )
        sample = rng.sample(all_refs, rng.randint(1, 3))
        if kind == "create_concept":
            op = {"type": kind, "name": f"n{rng.randrange(9)}", "members": sample}
        elif kind == "move_members":
            target = rng.choice(concept_ids + [None])
            op = {"type": kind, "members": sample, "to": target}
        elif kind == "merge" and len(concept_ids) >= 2:
            source, into = rng.sample(concept_ids, 2)
            op = {"type": kind, "source": source, "into": into}
        elif kind == "rename" and concept_ids:
            op = {"type": kind, "concept_id": rng.choice(concept_ids), "name": "x"}
        elif kind == "discard":
            op = {"type": kind, "members": sample}
        elif kind == "restore":
            op = {"type": kind, "members": sample}
        else:
            continue
        response = _post_op(client, version, op)
        assert response.status_code in (200, 422), response.json()
        if response.status_code == 200:
            version = response.json()["version"]
            stored = validate_naming(client.get("/namings/ann-1/a").json())
            assert naming_violations(stored) == []
            assert stored.version == version
