"""Extensible annotation type system.

Annotation types form a forest rooted at four built-in roots: ``Generic``
(no structural fields), ``Span`` (begin/end offsets), ``Link``
(parent/child references), and ``Group`` (a member collection). User types
are declared in JSON files and extend either a root or another named type,
adding typed attributes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable

GENERIC = "Generic"
SPAN = "Span"
LINK = "Link"
GROUP = "Group"
ROOTS = (GENERIC, SPAN, LINK, GROUP)

# Structural fields owned by each root; these are not attributes and their
# names are reserved on the respective inheritance branch.
TEMPLATE_FIELDS = {
    GENERIC: (),
    SPAN: ("begin", "end"),
    LINK: ("parent", "child"),
    GROUP: ("members",),
}

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_QUALIFIED = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")


class OntologyError(Exception):
    """Base class for type-system errors."""


class MalformedJson(OntologyError):
    pass


class UnknownParent(OntologyError):
    pass


class CycleDetected(OntologyError):
    pass


class DuplicateAttribute(OntologyError):
    pass


class ReservedName(OntologyError):
    pass


class UnknownType(OntologyError):
    pass


class AttributeKind(Enum):
    INT = "Int"
    FLOAT = "Float"
    STR = "Str"
    BOOL = "Bool"
    STR_LIST = "StrList"
    FLOAT_LIST = "FloatList"
    ENTRY_REF = "EntryRef"

    @classmethod
    def parse(cls, text: str) -> "AttributeKind":
        for kind in cls:
            if kind.value == text:
                return kind
        raise MalformedJson(f"unknown attribute kind {text!r}")


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    kind: AttributeKind

    def __post_init__(self) -> None:
        if not _IDENT.match(self.name):
            raise MalformedJson(f"invalid attribute name {self.name!r}")


@dataclass(frozen=True)
class TypeSpec:
    """One named type: its parent and the attributes it declares itself."""

    name: str
    parent: str | None  # None only for the four roots
    attributes: tuple[AttributeSpec, ...] = ()


@dataclass(frozen=True)
class Violation:
    """A single entry-validation failure."""

    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


def _standard_types() -> list[TypeSpec]:
    s = AttributeKind.STR
    f = AttributeKind.FLOAT
    return [
        TypeSpec("Token", SPAN),
        # `sentiment` backs the bundled sentence-polarity processor.
        TypeSpec("Sentence", SPAN, (AttributeSpec("sentiment", f),)),
        TypeSpec("Document", SPAN),
        TypeSpec("EntityMention", SPAN, (AttributeSpec("ner_type", s),)),
        TypeSpec("PredicateMention", SPAN),
        TypeSpec("EventMention", SPAN),
        TypeSpec("Utterance", SPAN),
        TypeSpec("Relation", LINK, (AttributeSpec("rel_type", s),)),
        TypeSpec("Dependency", LINK, (AttributeSpec("dep_type", s),)),
        TypeSpec("CrossDocLink", LINK, (AttributeSpec("rel_type", s),)),
    ]


class TypeOntology:
    """Immutable registry of annotation types.

    Construct via :func:`builtins` or :func:`parse_ontology`; instances are
    safe to share across threads.
    """

    def __init__(self, types: dict[str, TypeSpec], user_order: tuple[str, ...]):
        self._types = dict(types)
        self._user_order = user_order
        self._root_cache: dict[str, str] = {}
        self._children: dict[str, list[str]] = {}
        for spec in self._types.values():
            if spec.parent is not None:
                self._children.setdefault(spec.parent, []).append(spec.name)
        for name in self._types:
            self._root_cache[name] = self._resolve_root(name)

    # -- lookups ---------------------------------------------------------

    def __contains__(self, name: str) -> bool:
        return name in self._types

    def get(self, name: str) -> TypeSpec:
        try:
            return self._types[name]
        except KeyError:
            raise UnknownType(name) from None

    @property
    def types(self) -> dict[str, TypeSpec]:
        return dict(self._types)

    @property
    def user_types(self) -> list[TypeSpec]:
        """Types loaded from ontology files, in load order."""
        return [self._types[n] for n in self._user_order]

    def _resolve_root(self, name: str) -> str:
        seen = []
        cur = name
        while True:
            if cur in ROOTS:
                return cur
            seen.append(cur)
            cur = self._types[cur].parent  # type: ignore[assignment]

    def root_of(self, name: str) -> str:
        if name not in self._types:
            raise UnknownType(name)
        return self._root_cache[name]

    def is_subtype(self, child: str, ancestor: str) -> bool:
        """True iff `ancestor` is on `child`'s parent chain (reflexive)."""
        if child not in self._types:
            raise UnknownType(child)
        if ancestor not in self._types:
            raise UnknownType(ancestor)
        cur: str | None = child
        while cur is not None:
            if cur == ancestor:
                return True
            cur = self._types[cur].parent
        return False

    def subtypes_of(self, name: str) -> list[str]:
        """All types with `name` on their parent chain, `name` included."""
        if name not in self._types:
            raise UnknownType(name)
        out = []
        stack = [name]
        while stack:
            t = stack.pop()
            out.append(t)
            stack.extend(self._children.get(t, ()))
        return out

    def attributes_of(self, name: str) -> dict[str, AttributeSpec]:
        """Declared plus inherited attributes for a type."""
        if name not in self._types:
            raise UnknownType(name)
        chain = []
        cur: str | None = name
        while cur is not None:
            chain.append(cur)
            cur = self._types[cur].parent
        out: dict[str, AttributeSpec] = {}
        for t in reversed(chain):
            for spec in self._types[t].attributes:
                out[spec.name] = spec
        return out

    # -- entry validation --------------------------------------------------

    def validate_entry(self, entry: Any) -> list[Violation]:
        """Check an entry against the type system.

        Returns a list of violations (empty means valid). Never raises on a
        malformed entry. Pack-level concerns (offset upper bounds, reference
        targets) are checked by the pack, not here.
        """
        out: list[Violation] = []
        type_name = getattr(entry, "type_name", None)
        if type_name not in self._types:
            return [Violation("UnknownType", f"type {type_name!r} is not defined")]
        root = self._root_cache[type_name]

        span = getattr(entry, "span", None)
        link = getattr(entry, "link", None)
        members = getattr(entry, "members", None)
        if root == SPAN:
            if span is None:
                out.append(Violation("MissingSpan", f"{type_name} requires begin/end"))
            else:
                begin, end = span
                if not _is_int(begin) or not _is_int(end):
                    out.append(Violation("BadOffsetType", "begin/end must be integers"))
                elif begin < 0:
                    out.append(Violation("NegativeOffset", f"begin={begin}"))
                elif begin > end:
                    out.append(Violation("InvertedSpan", f"begin={begin} > end={end}"))
        elif span is not None:
            out.append(Violation("UnexpectedSpan", f"{type_name} is not span-rooted"))
        if root == LINK:
            if link is None or link[0] is None or link[1] is None:
                out.append(Violation("MissingLinkEndpoints", f"{type_name} requires parent and child"))
            elif not _is_int(link[0]) or not _is_int(link[1]):
                out.append(Violation("BadLinkType", "parent/child must be entry ids"))
        elif link is not None:
            out.append(Violation("UnexpectedLink", f"{type_name} is not link-rooted"))
        if root == GROUP:
            if members is None or not isinstance(members, (list, tuple)):
                out.append(Violation("MissingMembers", f"{type_name} requires a members list"))
            elif not all(_is_int(m) for m in members):
                out.append(Violation("BadMemberType", "members must be entry ids"))
        elif members is not None:
            out.append(Violation("UnexpectedMembers", f"{type_name} is not group-rooted"))

        declared = self.attributes_of(type_name)
        attributes = getattr(entry, "attributes", None) or {}
        for key, value in attributes.items():
            spec = declared.get(key)
            if spec is None:
                out.append(Violation("UnknownAttribute", f"{type_name} declares no attribute {key!r}"))
            elif not _kind_matches(spec.kind, value):
                out.append(
                    Violation(
                        "AttributeKindMismatch",
                        f"{type_name}.{key} expects {spec.kind.value}, got {value!r}",
                    )
                )

        embedding = getattr(entry, "embedding", None)
        if embedding is not None:
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in embedding):
                out.append(Violation("BadEmbedding", "embedding must be a vector of floats"))
        return out


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_finite_number(value: Any) -> bool:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return False
    return value == value and value not in (float("inf"), float("-inf"))


def _kind_matches(kind: AttributeKind, value: Any) -> bool:
    if kind is AttributeKind.INT:
        return _is_int(value)
    if kind is AttributeKind.FLOAT:
        return _is_finite_number(value)
    if kind is AttributeKind.STR:
        return isinstance(value, str)
    if kind is AttributeKind.BOOL:
        return isinstance(value, bool)
    if kind is AttributeKind.STR_LIST:
        return isinstance(value, list) and all(isinstance(x, str) for x in value)
    if kind is AttributeKind.FLOAT_LIST:
        return isinstance(value, list) and all(_is_finite_number(x) for x in value)
    if kind is AttributeKind.ENTRY_REF:
        return _is_int(value) and value >= 0
    return False


def builtins() -> TypeOntology:
    """The default ontology: the four roots plus the bundled standard types."""
    types: dict[str, TypeSpec] = {name: TypeSpec(name, None) for name in ROOTS}
    for spec in _standard_types():
        types[spec.name] = spec
    return TypeOntology(types, ())


_BUILTIN_NAMES = frozenset(ROOTS) | {t.name for t in _standard_types()}


def parse_ontology(source: str, base: TypeOntology | None = None) -> TypeOntology:
    """Parse an ontology JSON document into a new ontology.

    The result contains the four roots, the standard types, everything from
    `base` (which defaults to :func:`builtins`), and every type declared in
    `source`. Any invalid declaration rejects the whole document.

    Unqualified parent references resolve against built-ins and `base`
    first, then against types declared in the same document.
    """
    if base is None:
        base = builtins()
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("types"), list):
        raise MalformedJson('ontology document must be {"types": [...]}')

    declared: dict[str, dict] = {}
    for raw in doc["types"]:
        if not isinstance(raw, dict):
            raise MalformedJson("each type declaration must be an object")
        name = raw.get("name")
        if not isinstance(name, str) or not _QUALIFIED.match(name):
            raise MalformedJson(f"invalid type name {name!r}")
        if name in _BUILTIN_NAMES:
            raise ReservedName(f"{name} redefines a built-in type")
        if name in base or name in declared:
            raise ReservedName(f"{name} is already defined")
        if not isinstance(raw.get("parent"), str):
            raise MalformedJson(f"type {name} is missing a parent")
        declared[name] = raw

    def resolve_parent(ref: str) -> str | None:
        if ref in base:
            return ref
        if ref in declared:
            return ref
        return None

    # Reject cycles among the document's own types before building specs.
    for name in declared:
        seen: list[str] = []
        cur = name
        while cur in declared:
            if cur in seen:
                path = seen[seen.index(cur):] + [cur]
                raise CycleDetected(" -> ".join(path))
            seen.append(cur)
            cur = declared[cur]["parent"]

    types = dict(base.types)

    def build(name: str) -> None:
        if name in types:
            return
        raw = declared[name]
        parent = resolve_parent(raw["parent"])
        if parent is None:
            raise UnknownParent(f"type {name}: parent {raw['parent']!r} is not defined")
        if parent in declared:
            build(parent)
        attrs = []
        raw_attrs = raw.get("attributes", [])
        if not isinstance(raw_attrs, list):
            raise MalformedJson(f"type {name}: attributes must be a list")
        for raw_attr in raw_attrs:
            if not isinstance(raw_attr, dict) or not isinstance(raw_attr.get("name"), str):
                raise MalformedJson(f"type {name}: bad attribute declaration")
            kind = raw_attr.get("type")
            if not isinstance(kind, str):
                raise MalformedJson(f"type {name}: attribute {raw_attr['name']} has no type")
            attrs.append(AttributeSpec(raw_attr["name"], AttributeKind.parse(kind)))
        spec = TypeSpec(name, parent, tuple(attrs))

        # Attribute names must be unique here and not shadow inherited
        # attributes or the root's structural fields.
        inherited: dict[str, str] = {}
        cur: str | None = parent
        while cur is not None:
            for a in types[cur].attributes:
                inherited.setdefault(a.name, cur)
            cur = types[cur].parent
        probe = TypeOntology({**types, name: spec}, ())
        root = probe.root_of(name)
        seen_names: set[str] = set()
        for a in attrs:
            if a.name in seen_names:
                raise DuplicateAttribute(f"{name}.{a.name} declared twice")
            seen_names.add(a.name)
            if a.name in TEMPLATE_FIELDS[root]:
                raise DuplicateAttribute(f"{name}.{a.name} shadows a {root} template field")
            if a.name in inherited:
                raise DuplicateAttribute(f"{name}.{a.name} shadows attribute of {inherited[a.name]}")
        types[name] = spec

    for name in declared:
        build(name)

    # User types keep declaration order, after anything from `base`.
    user_order = tuple(base._user_order) + tuple(n for n in declared)
    return TypeOntology(types, user_order)


def load_ontologies(sources: Iterable[str]) -> TypeOntology:
    """Load several ontology documents in order; later documents may
    reference earlier types but not redefine them."""
    ont = builtins()
    for source in sources:
        ont = parse_ontology(source, base=ont)
    return ont


def serialize_ontology(ont: TypeOntology) -> str:
    """Serialize the user-defined types (not roots or standard types) back
    to the ontology JSON format. Parsing the result recovers the same type
    set."""
    out = {
        "types": [
            {
                "name": spec.name,
                "parent": spec.parent,
                "attributes": [
                    {"name": a.name, "type": a.kind.value} for a in spec.attributes
                ],
            }
            for spec in ont.user_types
        ]
    }
    return json.dumps(out, indent=2, ensure_ascii=False, sort_keys=True)
