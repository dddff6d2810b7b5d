"""HTTP annotation backend.

Persists packs as canonical JSON snapshots plus an append-only per-pack
journal. Every mutation is journaled (and fsynced) before the snapshot is
rewritten, so a crash at any point is recoverable by replaying the journal
over the last snapshot; replay is idempotent.

Writers take a per-pack lock and bump a per-pack revision; clients send the
revision they read and get 409 on mismatch (optimistic concurrency). Reads
are served from the latest committed in-memory state.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pydantic as _pydantic

from .datapack import (
    DanglingReference,
    DataPack,
    Entry,
    MalformedJson,
    MultiPack,
    PackError,
    ReferencedEntry,
    UnknownEntry,
    ValidationFailed,
    _entry_obj,
    deserialize_multipack,
    deserialize_pack,
    serialize_multipack,
    serialize_pack,
)
from .ontology import LINK, UnknownType, Violation, builtins, load_ontologies
from .tensorize import EmbeddingConfig, span_embedding


def _bad_request(message: str) -> ValidationFailed:
    return ValidationFailed([Violation("BadRequest", message)])


class StoreError(Exception):
    pass


class UnknownProject(StoreError):
    pass


class UnknownPack(StoreError):
    pass


class UnknownMultiPack(StoreError):
    pass


class UnknownSuggestion(StoreError):
    pass


class RevisionConflict(StoreError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"pack is at revision {expected}, request was based on {got}")
        self.expected = expected
        self.got = got


class AlreadyDecided(StoreError):
    pass


class WrongPackCount(StoreError):
    pass


# -- machine-assisted suggestions --------------------------------------------


@dataclass
class Suggestion:
    """A proposed cross-document link awaiting a human decision."""

    id: str
    type_name: str
    left: tuple[str, int]
    right: tuple[str, int]
    attributes: dict[str, Any]
    score: float
    status: str = "pending"  # pending | accepted | rejected
    link_id: int | None = None

    def to_obj(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "type": self.type_name,
            "left": [self.left[0], self.left[1]],
            "right": [self.right[0], self.right[1]],
            "attributes": dict(self.attributes),
            "score": self.score,
            "status": self.status,
            "link_id": self.link_id,
        }

    @classmethod
    def from_obj(cls, obj: dict[str, Any]) -> "Suggestion":
        return cls(
            id=obj["id"],
            type_name=obj["type"],
            left=(obj["left"][0], obj["left"][1]),
            right=(obj["right"][0], obj["right"][1]),
            attributes=dict(obj.get("attributes", {})),
            score=obj["score"],
            status=obj.get("status", "pending"),
            link_id=obj.get("link_id"),
        )


def _suggestion_id(link_type: str, left: tuple[str, int], right: tuple[str, int]) -> str:
    key = f"{link_type}|{left[0]}:{left[1]}|{right[0]}:{right[1]}"
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:12]


def _linked_pairs(mp: MultiPack, link_type: str) -> set[frozenset[tuple[str, int]]]:
    return {
        frozenset((l.parent, l.child)) for l in mp.cross_links if l.type_name == link_type
    }


def suggest_cross_doc_links(
    mp: MultiPack,
    span_type: str,
    threshold: float,
    cfg: EmbeddingConfig,
    link_type: str = "CrossDocLink",
    exclude_pairs: set[frozenset[tuple[str, int]]] | None = None,
) -> list[Suggestion]:
    """Score every cross-pack pair of `span_type` entries by the cosine of
    their span embeddings; pairs at or above the threshold become pending
    `link_type` suggestions, best first. Pairs already linked in the
    multipack (either direction) or listed in `exclude_pairs` are skipped."""
    if len(mp.packs) != 2:
        raise WrongPackCount(f"need exactly two packs, multipack has {len(mp.packs)}")
    if span_type not in mp.ontology:
        raise UnknownType(span_type)
    if mp.ontology.root_of(link_type) != LINK:
        raise ValidationFailed([Violation("NotALink", f"{link_type} is not link-rooted")])
    skip = _linked_pairs(mp, link_type) | (exclude_pairs or set())
    (left_alias, left_pack), (right_alias, right_pack) = mp.packs.items()
    proposed: dict[str, Any] = {}
    if "rel_type" in mp.ontology.attributes_of(link_type):
        proposed["rel_type"] = "coref"
    out = []
    left_entries = left_pack.get_entries(span_type, include_subtypes=True)
    right_entries = right_pack.get_entries(span_type, include_subtypes=True)
    left_vecs = {e.id: span_embedding(left_pack, e, cfg).astype(np.float64) for e in left_entries}
    right_vecs = {e.id: span_embedding(right_pack, e, cfg).astype(np.float64) for e in right_entries}
    for le in left_entries:
        for re in right_entries:
            pair = frozenset(((left_alias, le.id), (right_alias, re.id)))
            if pair in skip:
                continue
            score = float(np.dot(left_vecs[le.id], right_vecs[re.id]))
            if score >= threshold:
                out.append(
                    Suggestion(
                        id=_suggestion_id(link_type, (left_alias, le.id), (right_alias, re.id)),
                        type_name=link_type,
                        left=(left_alias, le.id),
                        right=(right_alias, re.id),
                        attributes=dict(proposed),
                        score=score,
                    )
                )
    out.sort(key=lambda s: (-s.score, s.left[1], s.right[1]))
    return out


# -- the file-backed store ----------------------------------------------------


def _atomic_write(path: Path, payload: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class _PackState:
    pack: DataPack
    revision: int
    lock: threading.Lock = field(default_factory=threading.Lock)


class Project:
    def __init__(self, root: Path, name: str):
        self.root = root
        self.name = name
        ontology_file = root / "ontology.json"
        if ontology_file.is_file():
            self.ontology = load_ontologies([ontology_file.read_text(encoding="utf-8")])
        else:
            self.ontology = builtins()
        self.packs: dict[str, _PackState] = {}
        self.multipacks: dict[str, MultiPack] = {}
        self._suggestions: dict[str, dict[str, Suggestion]] = {}
        self._mp_lock = threading.Lock()
        self._load()

    # -- paths ------------------------------------------------------------

    def _pack_path(self, pack_id: str) -> Path:
        return self.root / "packs" / f"{pack_id}.json"

    def _journal_path(self, pack_id: str) -> Path:
        return self.root / "journal" / f"{pack_id}.jsonl"

    def _multipack_path(self, name: str) -> Path:
        return self.root / "multipacks" / f"{name}.json"

    def _suggestions_path(self, name: str) -> Path:
        return self.root / "suggestions" / f"{name}.json"

    # -- loading and recovery ----------------------------------------------

    def _load(self) -> None:
        packs_dir = self.root / "packs"
        if packs_dir.is_dir():
            for file in sorted(packs_dir.glob("*.json")):
                pack = deserialize_pack(file.read_text(encoding="utf-8"), self.ontology)
                revision = self._replay_journal(pack)
                self.packs[pack.pack_id] = _PackState(pack, revision)
        mp_dir = self.root / "multipacks"
        if mp_dir.is_dir():
            for file in sorted(mp_dir.glob("*.json")):
                mp = deserialize_multipack(file.read_text(encoding="utf-8"), self.ontology)
                self.multipacks[file.stem] = mp
        sugg_dir = self.root / "suggestions"
        if sugg_dir.is_dir():
            for file in sorted(sugg_dir.glob("*.json")):
                obj = json.loads(file.read_text(encoding="utf-8"))
                self._suggestions[file.stem] = {
                    s["id"]: Suggestion.from_obj(s) for s in obj.get("suggestions", [])
                }

    def _replay_journal(self, pack: DataPack) -> int:
        """Apply every journal record to the snapshot; a torn trailing line
        (crash mid-append) is ignored. Returns the latest revision."""
        path = self._journal_path(pack.pack_id)
        revision = 0
        if not path.is_file():
            return revision
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                break  # torn final append
            self._apply_record(pack, record)
            revision = max(revision, int(record.get("rev", 0)))
        return revision

    @staticmethod
    def _apply_record(pack: DataPack, record: dict[str, Any]) -> None:
        op = record.get("op")
        if op == "add_entry":
            obj = record["entry"]
            if obj["id"] in pack.entries:
                return
            span = (obj["begin"], obj["end"]) if "begin" in obj else None
            link = (obj["parent"], obj["child"]) if "parent" in obj else None
            pack.insert_raw(
                Entry(
                    id=obj["id"],
                    type_name=obj["type"],
                    span=span,
                    link=link,
                    members=obj.get("members"),
                    attributes=obj.get("attributes", {}),
                    embedding=obj.get("embedding"),
                )
            )
        elif op == "update_entry":
            if record["id"] not in pack.entries:
                return
            span = record.get("span")
            pack.update_entry(
                record["id"],
                attributes=record.get("attributes") or {},
                span=tuple(span) if span else None,
            )
        elif op == "delete_entry":
            if record["id"] not in pack.entries:
                return
            pack.delete_entry(record["id"], cascade=record.get("cascade", False))

    # -- reads -------------------------------------------------------------

    def pack_state(self, pack_id: str) -> _PackState:
        state = self.packs.get(pack_id)
        if state is None:
            raise UnknownPack(pack_id)
        return state

    def multipack(self, name: str) -> MultiPack:
        mp = self.multipacks.get(name)
        if mp is None:
            raise UnknownMultiPack(name)
        return mp

    # -- mutations -----------------------------------------------------------

    def _commit(self, state: _PackState, work: DataPack, record: dict[str, Any]) -> int:
        """Journal first (fsynced append), then swap the committed pack,
        then snapshot. Called under the pack lock."""
        record["rev"] = state.revision + 1
        path = self._journal_path(work.pack_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        state.pack = work
        state.revision += 1
        self._write_snapshot(work)
        return state.revision

    def _write_snapshot(self, pack: DataPack) -> None:
        _atomic_write(self._pack_path(pack.pack_id), serialize_pack(pack) + "\n")

    def _check_revision(self, state: _PackState, base_revision: int) -> None:
        if base_revision != state.revision:
            raise RevisionConflict(state.revision, base_revision)

    def _working_copy(self, state: _PackState) -> DataPack:
        # Mutations go to a copy; readers keep seeing the committed pack
        # until the new one is swapped in, so reads never need the lock.
        return deserialize_pack(serialize_pack(state.pack), self.ontology)

    def create_entry(self, pack_id: str, base_revision: int, entry: dict[str, Any]) -> tuple[int, int]:
        state = self.pack_state(pack_id)
        with state.lock:
            self._check_revision(state, base_revision)
            if not isinstance(entry, dict) or not isinstance(entry.get("type"), str):
                raise _bad_request("entry must be an object with a type")
            allowed = {"type", "begin", "end", "parent", "child", "members", "attributes", "embedding"}
            extra = set(entry) - allowed
            if extra:
                raise _bad_request(f"unknown entry keys {sorted(extra)}")
            work = self._working_copy(state)
            eid = work.add_entry(
                entry["type"],
                begin=entry.get("begin"),
                end=entry.get("end"),
                parent=entry.get("parent"),
                child=entry.get("child"),
                members=entry.get("members"),
                attributes=entry.get("attributes"),
                embedding=entry.get("embedding"),
            )
            revision = self._commit(
                state, work, {"op": "add_entry", "entry": _entry_obj(work.get(eid))}
            )
            return eid, revision

    def update_entry(
        self,
        pack_id: str,
        base_revision: int,
        entry_id: int,
        attributes: dict[str, Any] | None,
        span: tuple[int, int] | None,
    ) -> int:
        state = self.pack_state(pack_id)
        with state.lock:
            self._check_revision(state, base_revision)
            work = self._working_copy(state)
            work.update_entry(entry_id, attributes=attributes, span=span)
            record = {"op": "update_entry", "id": entry_id, "attributes": attributes or {}}
            if span is not None:
                record["span"] = [span[0], span[1]]
            return self._commit(state, work, record)

    def delete_entry(self, pack_id: str, base_revision: int, entry_id: int, cascade: bool) -> int:
        state = self.pack_state(pack_id)
        with state.lock:
            self._check_revision(state, base_revision)
            work = self._working_copy(state)
            work.delete_entry(entry_id, cascade=cascade)
            return self._commit(state, work, {"op": "delete_entry", "id": entry_id, "cascade": cascade})

    # -- suggestion queue ----------------------------------------------------

    def _save_suggestions(self, name: str) -> None:
        payload = json.dumps(
            {"suggestions": [s.to_obj() for s in self._suggestions.get(name, {}).values()]},
            ensure_ascii=False,
            sort_keys=True,
            indent=1,
        )
        _atomic_write(self._suggestions_path(name), payload + "\n")

    def _save_multipack(self, name: str) -> None:
        _atomic_write(self._multipack_path(name), serialize_multipack(self.multipack(name)) + "\n")

    def suggestions_for(
        self,
        name: str,
        link_type: str,
        span_type: str,
        threshold: float,
        cfg: EmbeddingConfig,
        regenerate: bool = False,
    ) -> list[Suggestion]:
        """Pending suggestions for a multipack, generating and persisting
        the queue on first request (or when regenerate is set). Decided
        suggestions never reappear; already-linked pairs are filtered."""
        mp = self.multipack(name)
        with self._mp_lock:
            queue = self._suggestions.get(name)
            if queue is None or regenerate:
                queue = dict(queue or {})
                decided_pairs = {
                    frozenset((s.left, s.right)) for s in queue.values() if s.status != "pending"
                }
                fresh = suggest_cross_doc_links(
                    mp, span_type, threshold, cfg, link_type=link_type, exclude_pairs=decided_pairs
                )
                for s in fresh:
                    if s.id not in queue:
                        queue[s.id] = s
                self._suggestions[name] = queue
                self._save_suggestions(name)
        pending = [
            s
            for s in queue.values()
            if s.status == "pending"
            and frozenset((s.left, s.right)) not in _linked_pairs(mp, s.type_name)
        ]
        pending.sort(key=lambda s: (-s.score, s.left[1], s.right[1]))
        return pending

    def decide_suggestion(self, name: str, suggestion_id: str, accept: bool) -> Suggestion:
        mp = self.multipack(name)
        with self._mp_lock:
            return self._decide_locked(mp, name, suggestion_id, accept)

    def _decide_locked(
        self, mp: MultiPack, name: str, suggestion_id: str, accept: bool
    ) -> Suggestion:
        queue = self._suggestions.get(name, {})
        suggestion = queue.get(suggestion_id)
        if suggestion is None:
            raise UnknownSuggestion(suggestion_id)
        if suggestion.status != "pending":
            raise AlreadyDecided(f"suggestion {suggestion_id} is already {suggestion.status}")
        if accept:
            existing = None
            pair = frozenset((suggestion.left, suggestion.right))
            for link in mp.cross_links:
                if link.type_name == suggestion.type_name and frozenset((link.parent, link.child)) == pair:
                    existing = link
                    break
            if existing is None:
                link_id = mp.add_cross_link(
                    suggestion.type_name, suggestion.left, suggestion.right, suggestion.attributes
                )
            else:
                link_id = existing.id
            suggestion.status = "accepted"
            suggestion.link_id = link_id
            self._save_multipack(name)
        else:
            suggestion.status = "rejected"
        self._save_suggestions(name)
        return suggestion


class ProjectStore:
    """All projects under one root directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.projects: dict[str, Project] = {}
        for entry in sorted(self.root.iterdir()):
            if entry.is_dir():
                self.projects[entry.name] = Project(entry, entry.name)

    def project(self, name: str) -> Project:
        project = self.projects.get(name)
        if project is None:
            raise UnknownProject(name)
        return project


# -- HTTP layer ----------------------------------------------------------------


_ERROR_CODES: list[tuple[type[Exception], int, str]] = [
    (UnknownProject, 404, "unknown_project"),
    (UnknownPack, 404, "unknown_pack"),
    (UnknownMultiPack, 404, "unknown_multipack"),
    (UnknownSuggestion, 404, "unknown_suggestion"),
    (UnknownEntry, 404, "unknown_entry"),
    (RevisionConflict, 409, "revision_conflict"),
    (AlreadyDecided, 409, "already_decided"),
    (ReferencedEntry, 422, "referenced_entry"),
    (ValidationFailed, 400, "validation_failed"),
    (DanglingReference, 400, "dangling_reference"),
    (UnknownType, 400, "unknown_type"),
    (WrongPackCount, 400, "wrong_pack_count"),
    (MalformedJson, 400, "malformed_json"),
    (PackError, 400, "pack_error"),
    (StoreError, 400, "store_error"),
]


class CreateEntryBody(_pydantic.BaseModel):
    revision: int
    entry: dict


class UpdateEntryBody(_pydantic.BaseModel):
    revision: int
    attributes: dict | None = None
    span: tuple[int, int] | None = None


def create_app(root: str | Path, cors_origins: list[str] | None = None, embedding: EmbeddingConfig | None = None):
    """Build the FastAPI app over a store root directory."""
    from fastapi import FastAPI, Request
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse, Response

    store = ProjectStore(root)
    cfg = embedding or EmbeddingConfig()
    app = FastAPI(title="annopack annotation service")
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Pack-Revision"],
    )

    async def handle_known(request: Request, exc: Exception) -> JSONResponse:
        for klass, status, code in _ERROR_CODES:
            if isinstance(exc, klass):
                return JSONResponse(
                    status_code=status, content={"error": code, "detail": str(exc)}
                )
        return JSONResponse(
            status_code=500, content={"error": "internal", "detail": str(exc)}
        )

    from .ontology import OntologyError

    for base in (StoreError, PackError, OntologyError):
        app.add_exception_handler(base, handle_known)

    @app.get("/projects")
    def list_projects():
        return {"projects": sorted(store.projects)}

    @app.get("/projects/{p}/ontology")
    def get_ontology(p: str):
        project = store.project(p)
        types = [
            {
                "name": spec.name,
                "parent": spec.parent,
                "attributes": [{"name": a.name, "type": a.kind.value} for a in spec.attributes],
            }
            for spec in sorted(project.ontology.types.values(), key=lambda s: s.name)
            if spec.parent is not None
        ]
        return {"types": types}

    @app.get("/projects/{p}/packs")
    def list_packs(p: str):
        return {"packs": sorted(store.project(p).packs)}

    @app.get("/projects/{p}/packs/{pack_id}")
    def get_pack(p: str, pack_id: str):
        state = store.project(p).pack_state(pack_id)
        return Response(
            content=serialize_pack(state.pack),
            media_type="application/json",
            headers={"X-Pack-Revision": str(state.revision)},
        )

    @app.post("/projects/{p}/packs/{pack_id}/entries")
    def create_entry(p: str, pack_id: str, body: CreateEntryBody):
        eid, revision = store.project(p).create_entry(pack_id, body.revision, body.entry)
        return {"id": eid, "revision": revision}

    @app.patch("/projects/{p}/packs/{pack_id}/entries/{entry_id}")
    def update_entry(p: str, pack_id: str, entry_id: int, body: UpdateEntryBody):
        revision = store.project(p).update_entry(
            pack_id, body.revision, entry_id, body.attributes, body.span
        )
        return {"revision": revision}

    @app.delete("/projects/{p}/packs/{pack_id}/entries/{entry_id}")
    def delete_entry(p: str, pack_id: str, entry_id: int, revision: int, cascade: bool = False):
        new_revision = store.project(p).delete_entry(pack_id, revision, entry_id, cascade)
        return {"revision": new_revision}

    @app.get("/projects/{p}/multipacks")
    def list_multipacks(p: str):
        return {"multipacks": sorted(store.project(p).multipacks)}

    @app.get("/projects/{p}/multipacks/{name}")
    def get_multipack(p: str, name: str):
        mp = store.project(p).multipack(name)
        return Response(content=serialize_multipack(mp), media_type="application/json")

    @app.get("/projects/{p}/multipacks/{name}/suggestions")
    def get_suggestions(
        p: str,
        name: str,
        type: str = "CrossDocLink",
        span_type: str = "EventMention",
        threshold: float = 0.5,
        regenerate: bool = False,
    ):
        pending = store.project(p).suggestions_for(
            name, type, span_type, threshold, cfg, regenerate
        )
        return {"suggestions": [s.to_obj() for s in pending]}

    @app.post("/projects/{p}/multipacks/{name}/suggestions/{sid}:accept")
    def accept_suggestion(p: str, name: str, sid: str):
        s = store.project(p).decide_suggestion(name, sid, accept=True)
        return {"id": s.id, "status": s.status, "link_id": s.link_id}

    @app.post("/projects/{p}/multipacks/{name}/suggestions/{sid}:reject")
    def reject_suggestion(p: str, name: str, sid: str):
        s = store.project(p).decide_suggestion(name, sid, accept=False)
        return {"id": s.id, "status": s.status, "link_id": s.link_id}

    return app
