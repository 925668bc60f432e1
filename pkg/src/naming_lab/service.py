"""HTTP service backing the interactive naming UI.

Serves the test set's significant activations read-only, persists namings
as one JSON file per (annotator, class), and guards every write with an
optimistic version check: a write is accepted only when the caller's base
version equals the stored version, and stored versions increase by one per
accepted write. Fine-grained ops (create/rename/move/merge/discard/
restore) give the UI low-latency edits; full-document PUT covers
import/export and undo.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import replace
from pathlib import Path
from urllib.parse import quote

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse

from .errors import EmptySignificantSet, NamingLabError
from .metrics import activation_coverage, explanation_coverage
from .model import (
    ActivationRef,
    Naming,
    TestSet,
    VisualConcept,
    check_naming_against_testset,
    naming_violations,
    serialize_naming,
    validate_naming,
)
from .significance import ClassSignificance, significant_sets


class VersionConflict(NamingLabError):
    def __init__(self, current_version: int):
        super().__init__(f"stale base version; current is {current_version}")
        self.current_version = current_version


class InvalidOp(NamingLabError):
    def __init__(self, message: str, violations=None):
        super().__init__(message)
        self.violations = list(violations or [message])


class NamingStore:
    """Naming files with per-key write locks and atomic replacement."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks: dict[tuple[str, str], threading.Lock] = {}
        self._registry = threading.Lock()

    def _lock(self, key: tuple[str, str]) -> threading.Lock:
        with self._registry:
            return self._locks.setdefault(key, threading.Lock())

    def path(self, annotator_id: str, class_id: str) -> Path:
        name = f"{quote(annotator_id, safe='')}__{quote(class_id, safe='')}.json"
        return self.directory / name

    def load(self, annotator_id: str, class_id: str) -> Naming:
        """Stored naming, or an empty version-0 naming when none exists yet."""
        path = self.path(annotator_id, class_id)
        if not path.exists():
            return Naming(
                annotator_id=annotator_id,
                class_id=class_id,
                concepts=(),
                discarded=frozenset(),
                version=0,
            )
        return validate_naming(json.loads(path.read_text(encoding="utf-8")))

    def _persist(self, naming: Naming) -> None:
        path = self.path(naming.annotator_id, naming.class_id)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps(serialize_naming(naming), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        tmp.replace(path)

    def replace_if_current(
        self, annotator_id: str, class_id: str, base_version: int, transform
    ) -> Naming:
        """Run ``transform(current)`` and persist the result at version+1.

        Raises :class:`VersionConflict` when ``base_version`` is stale.
        """
        key = (annotator_id, class_id)
        with self._lock(key):
            current = self.load(annotator_id, class_id)
            if current.version != base_version:
                raise VersionConflict(current.version)
            updated = transform(current)
            updated = replace(updated, version=base_version + 1)
            self._persist(updated)
            return updated


# ---------------------------------------------------------------------------
# Naming ops


def _parse_refs(items, class_id: str) -> list[ActivationRef]:
    refs = []
    for item in items:
        try:
            ref = ActivationRef.from_dict(item)
        except (KeyError, TypeError, ValueError):
            raise InvalidOp(f"malformed activation reference: {item!r}")
        if ref.class_id != class_id:
            raise InvalidOp(
                f"activation ({ref.image_id}, {ref.class_id}) is not in class '{class_id}'"
            )
        refs.append(ref)
    if not refs:
        raise InvalidOp("op requires at least one member")
    return refs


def _next_concept_id(naming: Naming) -> str:
    highest = 0
    for c in naming.concepts:
        m = re.fullmatch(r"c(\d+)", c.concept_id)
        if m:
            highest = max(highest, int(m.group(1)))
    return f"c{highest + 1}"


def _without_members(
    concepts: tuple[VisualConcept, ...], refs: set[ActivationRef]
) -> tuple[VisualConcept, ...]:
    return tuple(replace(c, members=c.members - refs) for c in concepts)


def apply_op(naming: Naming, op: dict) -> Naming:
    """Apply one fine-grained edit; raises :class:`InvalidOp` on bad input."""
    kind = op.get("type")
    if kind == "create_concept":
        refs = set(_parse_refs(op.get("members", []), naming.class_id))
        bad = refs & naming.discarded
        if bad:
            raise InvalidOp(
                "members are discarded; restore them first",
                [f"discarded: ({r.image_id}, {r.feature_id})" for r in sorted(bad)],
            )
        concept_id = op.get("concept_id") or _next_concept_id(naming)
        if any(c.concept_id == concept_id for c in naming.concepts):
            raise InvalidOp(f"concept '{concept_id}' already exists")
        concepts = _without_members(naming.concepts, refs)
        new = VisualConcept(concept_id, str(op.get("name", "")), frozenset(refs))
        return replace(naming, concepts=concepts + (new,))

    if kind == "rename":
        concept_id = op.get("concept_id")
        if not any(c.concept_id == concept_id for c in naming.concepts):
            raise InvalidOp(f"no concept '{concept_id}'")
        concepts = tuple(
            replace(c, name=str(op.get("name", ""))) if c.concept_id == concept_id else c
            for c in naming.concepts
        )
        return replace(naming, concepts=concepts)

    if kind == "move_members":
        refs = set(_parse_refs(op.get("members", []), naming.class_id))
        bad = refs & naming.discarded
        if bad:
            raise InvalidOp(
                "members are discarded; restore them first",
                [f"discarded: ({r.image_id}, {r.feature_id})" for r in sorted(bad)],
            )
        target = op.get("to")
        concepts = _without_members(naming.concepts, refs)
        if target is not None:
            if not any(c.concept_id == target for c in concepts):
                raise InvalidOp(f"no concept '{target}'")
            concepts = tuple(
                replace(c, members=c.members | refs) if c.concept_id == target else c
                for c in concepts
            )
        return replace(naming, concepts=concepts)

    if kind == "merge":
        source, into = op.get("source"), op.get("into")
        if source == into:
            raise InvalidOp("cannot merge a concept into itself")
        by_id = {c.concept_id: c for c in naming.concepts}
        if source not in by_id or into not in by_id:
            raise InvalidOp(f"merge needs existing concepts, got {source!r} -> {into!r}")
        merged = replace(by_id[into], members=by_id[into].members | by_id[source].members)
        concepts = tuple(
            merged if c.concept_id == into else c
            for c in naming.concepts
            if c.concept_id != source
        )
        return replace(naming, concepts=concepts)

    if kind == "discard":
        refs = set(_parse_refs(op.get("members", []), naming.class_id))
        concepts = _without_members(naming.concepts, refs)
        return replace(naming, concepts=concepts, discarded=naming.discarded | refs)

    if kind == "restore":
        refs = set(_parse_refs(op.get("members", []), naming.class_id))
        missing = refs - naming.discarded
        if missing:
            raise InvalidOp(
                "restore targets must be discarded",
                [f"not discarded: ({r.image_id}, {r.feature_id})" for r in sorted(missing)],
            )
        return replace(naming, discarded=naming.discarded - refs)

    raise InvalidOp(f"unknown op type {kind!r}")


# ---------------------------------------------------------------------------
# Application


def create_app(
    testset: TestSet,
    naming_dir: Path,
    heatmap_root: Path | None = None,
    ui_dir: Path | None = None,
) -> FastAPI:
    """Build the service over one test set and a naming directory.

    The test set is never mutated. ``heatmap_root`` anchors the relative
    heatmap paths from the dataset document; ``ui_dir`` optionally serves
    the built browser UI from the same origin under /ui.
    """
    app = FastAPI(title="naming-lab")
    store = NamingStore(Path(naming_dir))
    significance: dict[str, ClassSignificance] = {
        class_id: significant_sets(testset, class_id) for class_id in testset.categories
    }
    significant_by_class = {
        class_id: sig.refs() for class_id, sig in significance.items()
    }

    def _check_class(class_id: str) -> None:
        if class_id not in testset.categories:
            raise HTTPException(404, detail=f"unknown class '{class_id}'")

    def _validated(naming: Naming) -> Naming:
        violations = naming_violations(naming)
        violations += check_naming_against_testset(
            naming, significant_by_class[naming.class_id]
        )
        if violations:
            raise HTTPException(
                422, detail={"message": "naming violates invariants", "violations": violations}
            )
        return naming

    @app.get("/categories")
    def categories():
        return {
            "categories": [
                {
                    "class_id": class_id,
                    "image_count": significance[class_id].image_count,
                    "significant_total": significance[class_id].total,
                }
                for class_id in testset.categories
            ]
        }

    @app.get("/categories/{class_id}/activations")
    def activations(class_id: str, annotator: str | None = None):
        _check_class(class_id)
        naming = store.load(annotator, class_id) if annotator else None
        concept_of = {}
        if naming is not None:
            for c in naming.concepts:
                for ref in c.members:
                    concept_of[ref] = c.concept_id
        out = []
        for sigset in significance[class_id].sets:
            record = testset.records[(sigset.image_id, class_id)]
            for feature_id in sigset.features:
                ref = ActivationRef(sigset.image_id, class_id, feature_id)
                heatmap = None
                if record.heatmap_paths is not None:
                    heatmap = f"/heatmaps/{record.heatmap_paths[feature_id]}"
                if naming is None:
                    status = "unnamed"
                elif ref in concept_of:
                    status = "named"
                elif ref in naming.discarded:
                    status = "discarded"
                else:
                    status = "unnamed"
                out.append(
                    {
                        "image_id": sigset.image_id,
                        "class_id": class_id,
                        "feature_id": feature_id,
                        "contribution": record.contributions[feature_id],
                        "heatmap_url": heatmap,
                        "status": status,
                        "concept_id": concept_of.get(ref),
                    }
                )
        return {"class_id": class_id, "activations": out}

    @app.get("/namings/{annotator_id}/{class_id}")
    def get_naming(annotator_id: str, class_id: str):
        _check_class(class_id)
        return serialize_naming(store.load(annotator_id, class_id))

    @app.put("/namings/{annotator_id}/{class_id}")
    def put_naming(annotator_id: str, class_id: str, document: dict):
        _check_class(class_id)
        try:
            incoming = validate_naming(document)
        except NamingLabError as exc:
            raise HTTPException(
                422,
                detail={
                    "message": str(exc),
                    "violations": getattr(exc, "violations", [str(exc)]),
                },
            )
        if incoming.annotator_id != annotator_id or incoming.class_id != class_id:
            raise HTTPException(
                422,
                detail={
                    "message": "document ids do not match the resource path",
                    "violations": ["annotator_id/class_id mismatch"],
                },
            )
        _validated(incoming)
        try:
            stored = store.replace_if_current(
                annotator_id, class_id, incoming.version, lambda _: incoming
            )
        except VersionConflict as exc:
            raise HTTPException(
                409,
                detail={
                    "message": str(exc),
                    "current_version": exc.current_version,
                },
            )
        return {"version": stored.version}

    @app.post("/namings/{annotator_id}/{class_id}/ops")
    def post_op(annotator_id: str, class_id: str, body: dict):
        _check_class(class_id)
        if "base_version" not in body or "op" not in body:
            raise HTTPException(
                422,
                detail={
                    "message": "body must carry base_version and op",
                    "violations": ["missing base_version or op"],
                },
            )

        def transform(current: Naming) -> Naming:
            return _validated(apply_op(current, body["op"]))

        try:
            stored = store.replace_if_current(
                annotator_id, class_id, int(body["base_version"]), transform
            )
        except VersionConflict as exc:
            raise HTTPException(
                409,
                detail={"message": str(exc), "current_version": exc.current_version},
            )
        except InvalidOp as exc:
            raise HTTPException(
                422, detail={"message": str(exc), "violations": exc.violations}
            )
        return serialize_naming(stored)

    @app.get("/stats/{annotator_id}/{class_id}")
    def stats(annotator_id: str, class_id: str):
        _check_class(class_id)
        naming = store.load(annotator_id, class_id)
        sigsets = significance[class_id].sets
        try:
            activation = activation_coverage(naming, sigsets)
            partial, complete = explanation_coverage(naming, sigsets)
        except EmptySignificantSet as exc:
            raise HTTPException(422, detail=str(exc))
        return {
            "activation_coverage": activation,
            "partial_coverage": partial,
            "complete_coverage": complete,
            "named": len(naming.named_set()),
            "significant_total": significance[class_id].total,
            "concept_count": len(naming.concepts),
            "version": naming.version,
        }

    if heatmap_root is not None:
        root = Path(heatmap_root).resolve()

        @app.get("/heatmaps/{path:path}")
        def heatmap(path: str):
            target = (root / path).resolve()
            if root not in target.parents and target != root:
                raise HTTPException(404, detail="unknown heatmap")
            if not target.is_file():
                raise HTTPException(404, detail="unknown heatmap")
            return FileResponse(target)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=Path(ui_dir), html=True), name="ui")

    return app
