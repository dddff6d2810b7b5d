"""Stand-off annotation packs.

A :class:`DataPack` holds one document's immutable text plus all entries
annotating it. Entries reference the text by character offsets counted in
Unicode scalar values (Python string indices), never bytes. Span entries
are kept in a sorted index ordered by (begin asc, end desc, id asc) so
containers sort before the entries they contain.

Serialization is canonical: entries in ascending id order, object keys
sorted, compact separators. Structurally equal packs serialize to
byte-identical JSON.
"""

from __future__ import annotations

import json
from bisect import bisect_left, insort
from dataclasses import dataclass, field
from typing import Any, Iterable

from .ontology import (
    GROUP,
    LINK,
    SPAN,
    AttributeKind,
    MalformedJson,
    TypeOntology,
    UnknownType,
    Violation,
    builtins,
)


class PackError(Exception):
    """Base class for pack-level errors."""


class ValidationFailed(PackError):
    def __init__(self, violations: list[Violation]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


class DanglingReference(PackError):
    pass


class UnknownEntry(PackError):
    pass


class ReferencedEntry(PackError):
    def __init__(self, ids: list[int]):
        super().__init__(f"entry is referenced by {ids}")
        self.ids = ids


class NotASpan(PackError):
    pass


class OutOfBounds(PackError):
    pass


class UnknownAlias(PackError):
    pass


@dataclass(eq=True)
class Entry:
    """One markup instance.

    Exactly the structural fields matching the entry's root are set:
    ``span`` for Span-rooted types, ``link`` for Link-rooted types,
    ``members`` for Group-rooted types, none of them for Generic.
    """

    id: int
    type_name: str
    span: tuple[int, int] | None = None
    link: tuple[int, int] | None = None
    members: list[int] | None = None
    attributes: dict[str, Any] = field(default_factory=dict)
    embedding: list[float] | None = None

    @property
    def begin(self) -> int:
        if self.span is None:
            raise NotASpan(f"entry {self.id} ({self.type_name}) has no span")
        return self.span[0]

    @property
    def end(self) -> int:
        if self.span is None:
            raise NotASpan(f"entry {self.id} ({self.type_name}) has no span")
        return self.span[1]


class DataPack:
    """One document's text and its stand-off entries."""

    def __init__(self, pack_id: str, text: str, ontology: TypeOntology | None = None):
        self.pack_id = pack_id
        self._text = text
        self.ontology = ontology if ontology is not None else builtins()
        self.entries: dict[int, Entry] = {}
        self.next_id = 0
        # (begin, -end, id) keys over span-rooted entries only.
        self._span_keys: list[tuple[int, int, int]] = []
        self._type_index: dict[str, set[int]] = {}

    @property
    def text(self) -> str:
        return self._text

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DataPack):
            return NotImplemented
        return (
            self.pack_id == other.pack_id
            and self._text == other._text
            and self.next_id == other.next_id
            and self.entries == other.entries
        )

    # -- queries -----------------------------------------------------------

    def get(self, entry_id: int) -> Entry:
        try:
            return self.entries[entry_id]
        except KeyError:
            raise UnknownEntry(f"no entry with id {entry_id}") from None

    def get_text(self, begin: int, end: int) -> str:
        if not (0 <= begin <= end <= len(self._text)):
            raise OutOfBounds(f"[{begin}, {end}) not within [0, {len(self._text)})")
        return self._text[begin:end]

    def text_of(self, entry: Entry | int) -> str:
        e = entry if isinstance(entry, Entry) else self.get(entry)
        return self.get_text(e.begin, e.end)

    def get_entries(self, type_name: str, include_subtypes: bool = False) -> list[Entry]:
        """Entries of a type; span-rooted types come back in span-index
        order, everything else in ascending id order."""
        wanted = self._type_set(type_name, include_subtypes)
        ids = set()
        for t in wanted:
            ids |= self._type_index.get(t, set())
        if self.ontology.root_of(type_name) == SPAN:
            return [self.entries[k[2]] for k in self._span_keys if k[2] in ids]
        return [self.entries[i] for i in sorted(ids)]

    def get_covered(
        self, container: Entry | int, type_name: str, include_subtypes: bool = False
    ) -> list[Entry]:
        """Entries of a type inside a span container.

        Span-rooted results satisfy container.begin <= begin and
        end <= container.end; link-rooted results are links whose parent and
        child are both span entries covered by the container. Ordering
        matches :meth:`get_entries`.
        """
        c = container if isinstance(container, Entry) else self.get(container)
        if c.span is None:
            raise NotASpan(f"entry {c.id} ({c.type_name}) is not span-rooted")
        cb, ce = c.span
        wanted = self._type_set(type_name, include_subtypes)
        ids = set()
        for t in wanted:
            ids |= self._type_index.get(t, set())
        root = self.ontology.root_of(type_name)
        if root == SPAN:
            out = []
            i = bisect_left(self._span_keys, (cb,))
            while i < len(self._span_keys):
                begin, neg_end, eid = self._span_keys[i]
                if begin > ce:
                    break
                if -neg_end <= ce and eid in ids:
                    out.append(self.entries[eid])
                i += 1
            return out
        if root == LINK:
            out = []
            for eid in sorted(ids):
                link = self.entries[eid].link
                assert link is not None
                if self._span_covered(link[0], cb, ce) and self._span_covered(link[1], cb, ce):
                    out.append(self.entries[eid])
            return out
        raise PackError(f"get_covered supports span- and link-rooted types, not {root}")

    def _span_covered(self, entry_id: int, cb: int, ce: int) -> bool:
        e = self.entries.get(entry_id)
        if e is None or e.span is None:
            return False
        return cb <= e.span[0] and e.span[1] <= ce

    def _type_set(self, type_name: str, include_subtypes: bool) -> list[str]:
        if type_name not in self.ontology:
            raise UnknownType(type_name)
        return self.ontology.subtypes_of(type_name) if include_subtypes else [type_name]

    # -- mutation ----------------------------------------------------------

    def add_entry(
        self,
        type_name: str,
        *,
        begin: int | None = None,
        end: int | None = None,
        parent: int | None = None,
        child: int | None = None,
        members: Iterable[int] | None = None,
        attributes: dict[str, Any] | None = None,
        embedding: Iterable[float] | None = None,
    ) -> int:
        entry = Entry(
            id=self.next_id,
            type_name=type_name,
            span=(begin, end) if begin is not None or end is not None else None,  # type: ignore[arg-type]
            link=(parent, child) if parent is not None or child is not None else None,  # type: ignore[arg-type]
            members=list(members) if members is not None else None,
            attributes=dict(attributes) if attributes else {},
            embedding=[float(x) for x in embedding] if embedding is not None else None,
        )
        self._check(entry)
        entry.attributes = self._normalize_attrs(type_name, entry.attributes)
        self.entries[entry.id] = entry
        self.next_id += 1
        self._index_add(entry)
        return entry.id

    def update_entry(
        self,
        entry_id: int,
        attributes: dict[str, Any] | None = None,
        span: tuple[int, int] | None = None,
    ) -> None:
        """Apply attribute changes (a value of None removes the attribute)
        and optionally move a span. Indexes stay consistent."""
        entry = self.get(entry_id)
        new_attrs = dict(entry.attributes)
        for key, value in (attributes or {}).items():
            if value is None:
                new_attrs.pop(key, None)
            else:
                new_attrs[key] = value
        candidate = Entry(
            id=entry.id,
            type_name=entry.type_name,
            span=tuple(span) if span is not None else entry.span,
            link=entry.link,
            members=entry.members,
            attributes=new_attrs,
            embedding=entry.embedding,
        )
        self._check(candidate)
        if candidate.span != entry.span:
            self._span_keys.remove((entry.span[0], -entry.span[1], entry.id))
            insort(self._span_keys, (candidate.span[0], -candidate.span[1], entry.id))
        entry.span = candidate.span
        entry.attributes = self._normalize_attrs(entry.type_name, new_attrs)

    def set_embedding(self, entry_id: int, vector: Iterable[float]) -> None:
        self.get(entry_id).embedding = [float(x) for x in vector]

    def insert_raw(self, entry: Entry) -> None:
        """Insert an already-validated entry with a fixed id (used by
        deserialization and journal replay). Bumps next_id past the id."""
        if entry.id in self.entries:
            raise PackError(f"entry id {entry.id} already present")
        self.entries[entry.id] = entry
        self.next_id = max(self.next_id, entry.id + 1)
        self._index_add(entry)

    def delete_entry(self, entry_id: int, cascade: bool = False) -> None:
        """Remove an entry. Without `cascade`, deletion fails while any
        other entry references it; with `cascade`, referencing links are
        deleted too (transitively) and group memberships and entry-ref
        attributes are scrubbed."""
        self.get(entry_id)
        refs = self._referencers({entry_id})
        if refs and not cascade:
            raise ReferencedEntry(sorted(refs))
        doomed = {entry_id}
        while True:
            extra = {
                e.id
                for e in self.entries.values()
                if e.id not in doomed
                and e.link is not None
                and (e.link[0] in doomed or e.link[1] in doomed)
            }
            if not extra:
                break
            doomed |= extra
        for eid in doomed:
            self._index_remove(self.entries[eid])
            del self.entries[eid]
        for e in self.entries.values():
            if e.members is not None:
                e.members[:] = [m for m in e.members if m not in doomed]
            for key in [k for k, v in e.attributes.items() if self._is_ref(e, k) and v in doomed]:
                del e.attributes[key]

    def _is_ref(self, entry: Entry, attr: str) -> bool:
        if entry.type_name not in self.ontology:
            return False
        spec = self.ontology.attributes_of(entry.type_name).get(attr)
        return spec is not None and spec.kind is AttributeKind.ENTRY_REF

    def _referencers(self, targets: set[int]) -> set[int]:
        out = set()
        for e in self.entries.values():
            if e.id in targets:
                continue
            if e.link is not None and (e.link[0] in targets or e.link[1] in targets):
                out.add(e.id)
            elif e.members is not None and any(m in targets for m in e.members):
                out.add(e.id)
            elif any(self._is_ref(e, k) and v in targets for k, v in e.attributes.items()):
                out.add(e.id)
        return out

    # -- validation --------------------------------------------------------

    def _check(self, entry: Entry) -> None:
        violations = self.ontology.validate_entry(entry)
        if violations:
            raise ValidationFailed(violations)
        if entry.span is not None and entry.span[1] > len(self._text):
            raise ValidationFailed(
                [Violation("SpanOutOfBounds", f"end={entry.span[1]} > text length {len(self._text)}")]
            )
        for target in self._targets_of(entry):
            if target not in self.entries:
                raise DanglingReference(f"entry references missing id {target}")

    def _targets_of(self, entry: Entry) -> list[int]:
        # Only well-typed reference values; type errors are reported by
        # ontology validation, not here.
        out: list[int] = []
        if entry.link is not None:
            out.extend(x for x in entry.link if isinstance(x, int) and not isinstance(x, bool))
        if entry.members is not None:
            out.extend(x for x in entry.members if isinstance(x, int) and not isinstance(x, bool))
        for key, value in entry.attributes.items():
            if self._is_ref(entry, key) and isinstance(value, int) and not isinstance(value, bool):
                out.append(value)
        return out

    def _normalize_attrs(self, type_name: str, attrs: dict[str, Any]) -> dict[str, Any]:
        # Float-kinded values are stored as floats so that structurally
        # equal packs serialize to identical bytes (1 vs 1.0).
        declared = self.ontology.attributes_of(type_name)
        out = dict(attrs)
        for key, value in out.items():
            spec = declared.get(key)
            if spec is None:
                continue
            if spec.kind is AttributeKind.FLOAT:
                out[key] = float(value)
            elif spec.kind is AttributeKind.FLOAT_LIST:
                out[key] = [float(x) for x in value]
        return out

    def validate(self) -> list[tuple[int, Violation]]:
        """Validate every entry; returns (entry id, violation) pairs."""
        out: list[tuple[int, Violation]] = []
        for eid in sorted(self.entries):
            entry = self.entries[eid]
            for v in self.ontology.validate_entry(entry):
                out.append((eid, v))
            if (
                entry.span is not None
                and isinstance(entry.span[1], int)
                and not isinstance(entry.span[1], bool)
                and entry.span[1] > len(self._text)
            ):
                out.append((eid, Violation("SpanOutOfBounds", f"end={entry.span[1]}")))
            for target in self._targets_of(entry):
                if target not in self.entries:
                    out.append((eid, Violation("DanglingReference", f"missing id {target}")))
        if self.entries and self.next_id <= max(self.entries):
            out.append((-1, Violation("BadNextId", f"next_id={self.next_id} already assigned")))
        return out

    # -- indexes -----------------------------------------------------------

    def _index_add(self, entry: Entry) -> None:
        self._type_index.setdefault(entry.type_name, set()).add(entry.id)
        if entry.span is not None:
            insort(self._span_keys, (entry.span[0], -entry.span[1], entry.id))

    def _index_remove(self, entry: Entry) -> None:
        self._type_index[entry.type_name].discard(entry.id)
        if entry.span is not None:
            self._span_keys.remove((entry.span[0], -entry.span[1], entry.id))


def new_pack(pack_id: str, text: str, ontology: TypeOntology | None = None) -> DataPack:
    return DataPack(pack_id, text, ontology)


# -- serialization ---------------------------------------------------------


def _entry_obj(e: Entry) -> dict[str, Any]:
    obj: dict[str, Any] = {"attributes": {k: e.attributes[k] for k in sorted(e.attributes)}}
    if e.span is not None:
        obj["begin"] = e.span[0]
    if e.link is not None:
        obj["child"] = e.link[1]
    if e.embedding is not None:
        obj["embedding"] = e.embedding
    if e.span is not None:
        obj["end"] = e.span[1]
    obj["id"] = e.id
    if e.members is not None:
        obj["members"] = list(e.members)
    if e.link is not None:
        obj["parent"] = e.link[0]
    obj["type"] = e.type_name
    return obj


def _pack_obj(pack: DataPack) -> dict[str, Any]:
    return {
        "entries": [_entry_obj(pack.entries[i]) for i in sorted(pack.entries)],
        "next_id": pack.next_id,
        "pack_id": pack.pack_id,
        "text": pack.text,
    }


def _dumps(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, allow_nan=False, separators=(",", ":"))


def serialize_pack(pack: DataPack) -> str:
    """Canonical JSON for a pack; equal packs give byte-identical output."""
    return _dumps(_pack_obj(pack))


_ENTRY_KEYS = {"id", "type", "begin", "end", "parent", "child", "members", "attributes", "embedding"}


def _entry_from_obj(obj: Any) -> Entry:
    if not isinstance(obj, dict):
        raise MalformedJson("entry must be an object")
    extra = set(obj) - _ENTRY_KEYS
    if extra:
        raise MalformedJson(f"unknown entry keys {sorted(extra)}")
    if not isinstance(obj.get("id"), int) or isinstance(obj.get("id"), bool) or obj["id"] < 0:
        raise MalformedJson("entry id must be a non-negative integer")
    if not isinstance(obj.get("type"), str):
        raise MalformedJson("entry type must be a string")
    span = None
    if "begin" in obj or "end" in obj:
        span = (obj.get("begin"), obj.get("end"))
    link = None
    if "parent" in obj or "child" in obj:
        link = (obj.get("parent"), obj.get("child"))
    attributes = obj.get("attributes", {})
    if not isinstance(attributes, dict):
        raise MalformedJson("entry attributes must be an object")
    embedding = obj.get("embedding")
    if embedding is not None and not isinstance(embedding, list):
        raise MalformedJson("entry embedding must be a list")
    members = obj.get("members")
    if members is not None and not isinstance(members, list):
        raise MalformedJson("entry members must be a list")
    return Entry(
        id=obj["id"],
        type_name=obj["type"],
        span=span,
        link=link,
        members=members,
        attributes=attributes,
        embedding=embedding,
    )


def _pack_from_obj(obj: Any, ontology: TypeOntology | None) -> DataPack:
    if not isinstance(obj, dict):
        raise MalformedJson("pack must be an object")
    pack_id = obj.get("pack_id")
    text = obj.get("text")
    next_id = obj.get("next_id")
    entries = obj.get("entries")
    if not isinstance(pack_id, str) or not isinstance(text, str):
        raise MalformedJson("pack_id and text must be strings")
    if not isinstance(next_id, int) or isinstance(next_id, bool) or next_id < 0:
        raise MalformedJson("next_id must be a non-negative integer")
    if not isinstance(entries, list):
        raise MalformedJson("entries must be a list")
    pack = DataPack(pack_id, text, ontology)
    seen: set[int] = set()
    for raw in entries:
        entry = _entry_from_obj(raw)
        if entry.id in seen:
            raise ValidationFailed([Violation("DuplicateId", f"entry id {entry.id} repeats")])
        seen.add(entry.id)
        pack.entries[entry.id] = entry
    pack.next_id = next_id
    violations = pack.validate()
    if violations:
        raise ValidationFailed([v for _, v in violations])
    for entry in pack.entries.values():
        entry.attributes = pack._normalize_attrs(entry.type_name, entry.attributes)
        if entry.embedding is not None:
            entry.embedding = [float(x) for x in entry.embedding]
        pack._index_add(entry)
    return pack


def deserialize_pack(text: str, ontology: TypeOntology | None = None) -> DataPack:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"invalid JSON: {exc}") from exc
    return _pack_from_obj(obj, ontology)


# -- multipacks ------------------------------------------------------------


@dataclass(eq=True)
class CrossLink:
    """A link whose endpoints are (pack alias, entry id) pairs."""

    id: int
    type_name: str
    parent: tuple[str, int]
    child: tuple[str, int]
    attributes: dict[str, Any] = field(default_factory=dict)


class MultiPack:
    """A named, ordered collection of packs plus cross-pack links."""

    def __init__(self, name: str, ontology: TypeOntology | None = None):
        self.name = name
        self.ontology = ontology if ontology is not None else builtins()
        self.packs: dict[str, DataPack] = {}
        self.cross_links: list[CrossLink] = []
        self.next_id = 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultiPack):
            return NotImplemented
        return (
            self.name == other.name
            and list(self.packs) == list(other.packs)
            and self.packs == other.packs
            and self.cross_links == other.cross_links
            and self.next_id == other.next_id
        )

    def add_pack(self, alias: str, pack: DataPack) -> None:
        if not alias:
            raise PackError("alias must be non-empty")
        if alias in self.packs:
            raise PackError(f"alias {alias!r} already present")
        self.packs[alias] = pack

    def get_pack(self, alias: str) -> DataPack:
        try:
            return self.packs[alias]
        except KeyError:
            raise UnknownAlias(f"no pack with alias {alias!r}") from None

    def _validate_cross_link(
        self,
        type_name: str,
        parent: tuple[str, int],
        child: tuple[str, int],
        attributes: dict[str, Any],
    ) -> dict[str, Any]:
        if type_name not in self.ontology:
            raise UnknownType(type_name)
        if self.ontology.root_of(type_name) != LINK:
            raise ValidationFailed([Violation("NotALink", f"{type_name} is not link-rooted")])
        for alias, eid in (parent, child):
            pack = self.get_pack(alias)
            if eid not in pack.entries:
                raise DanglingReference(f"no entry {eid} in pack {alias!r}")
        probe = Entry(id=0, type_name=type_name, link=(0, 0), attributes=attributes)
        violations = self.ontology.validate_entry(probe)
        if violations:
            raise ValidationFailed(violations)
        # Entry-ref attributes are ambiguous across packs; kind checking
        # happens above, target checking is not attempted.
        declared = self.ontology.attributes_of(type_name)
        out = dict(attributes)
        for key, value in out.items():
            if declared[key].kind is AttributeKind.FLOAT:
                out[key] = float(value)
            elif declared[key].kind is AttributeKind.FLOAT_LIST:
                out[key] = [float(x) for x in value]
        return out

    def add_cross_link(
        self,
        type_name: str,
        parent: tuple[str, int],
        child: tuple[str, int],
        attributes: dict[str, Any] | None = None,
    ) -> int:
        attrs = self._validate_cross_link(type_name, parent, child, dict(attributes or {}))
        link = CrossLink(self.next_id, type_name, (parent[0], parent[1]), (child[0], child[1]), attrs)
        self.cross_links.append(link)
        self.next_id += 1
        return link.id

    def find_cross_link(self, link_id: int) -> CrossLink:
        for link in self.cross_links:
            if link.id == link_id:
                return link
        raise UnknownEntry(f"no cross link with id {link_id}")


def new_multipack(name: str, ontology: TypeOntology | None = None) -> MultiPack:
    return MultiPack(name, ontology)


def serialize_multipack(mp: MultiPack) -> str:
    """Canonical multipack JSON. Keys are sorted except the alias map,
    which preserves pack insertion order."""
    obj = {
        "cross_links": [
            {
                "attributes": {k: l.attributes[k] for k in sorted(l.attributes)},
                "child": [l.child[0], l.child[1]],
                "id": l.id,
                "parent": [l.parent[0], l.parent[1]],
                "type": l.type_name,
            }
            for l in sorted(mp.cross_links, key=lambda l: l.id)
        ],
        "name": mp.name,
        "next_id": mp.next_id,
        "packs": {alias: _pack_obj(pack) for alias, pack in mp.packs.items()},
    }
    return _dumps(obj)


def deserialize_multipack(text: str, ontology: TypeOntology | None = None) -> MultiPack:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or not isinstance(obj.get("name"), str):
        raise MalformedJson("multipack must be an object with a name")
    if not isinstance(obj.get("packs"), dict) or not isinstance(obj.get("cross_links"), list):
        raise MalformedJson("multipack needs packs and cross_links")
    mp = MultiPack(obj["name"], ontology)
    for alias, raw in obj["packs"].items():
        mp.add_pack(alias, _pack_from_obj(raw, ontology))
    next_id = obj.get("next_id", 0)
    if not isinstance(next_id, int) or isinstance(next_id, bool) or next_id < 0:
        raise MalformedJson("next_id must be a non-negative integer")
    seen_ids: set[int] = set()
    for raw in obj["cross_links"]:
        if not isinstance(raw, dict):
            raise MalformedJson("cross link must be an object")
        for key in ("id", "type", "parent", "child"):
            if key not in raw:
                raise MalformedJson(f"cross link missing {key!r}")
        link_id = raw["id"]
        if not isinstance(link_id, int) or isinstance(link_id, bool) or link_id < 0:
            raise MalformedJson("cross link id must be a non-negative integer")
        if link_id in seen_ids:
            raise ValidationFailed([Violation("DuplicateId", f"cross link id {link_id} repeats")])
        seen_ids.add(link_id)
        parent, child = raw["parent"], raw["child"]
        for endpoint in (parent, child):
            if (
                not isinstance(endpoint, list)
                or len(endpoint) != 2
                or not isinstance(endpoint[0], str)
                or not isinstance(endpoint[1], int)
            ):
                raise MalformedJson("cross link endpoints must be [alias, id]")
        attrs = raw.get("attributes") or {}
        if not isinstance(attrs, dict):
            raise MalformedJson("cross link attributes must be an object")
        attrs = mp._validate_cross_link(raw["type"], (parent[0], parent[1]), (child[0], child[1]), attrs)
        mp.cross_links.append(
            CrossLink(link_id, raw["type"], (parent[0], parent[1]), (child[0], child[1]), attrs)
        )
    if seen_ids and next_id <= max(seen_ids):
        raise ValidationFailed([Violation("BadNextId", f"next_id={next_id} already assigned")])
    mp.next_id = next_id
    return mp
