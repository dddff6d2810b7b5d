"""Shared test tooling: random pack generation and independent oracles.

The oracles here deliberately avoid the library's indexes: containment is
checked by linear scan over raw entries, subtyping by walking parent
pointers in the type table. They are the reference implementations the
indexed paths are compared against.
"""

from __future__ import annotations

import random

from annopack.datapack import DataPack, Entry
from annopack.ontology import LINK, SPAN, TypeOntology, parse_ontology

RICH_ONTOLOGY_JSON = """
{
  "types": [
    {"name": "x.Anchor", "parent": "Generic",
     "attributes": [{"name": "target", "type": "EntryRef"},
                    {"name": "note", "type": "Str"}]},
    {"name": "x.Score", "parent": "Generic",
     "attributes": [{"name": "values", "type": "FloatList"},
                    {"name": "flag", "type": "Bool"},
                    {"name": "count", "type": "Int"}]},
    {"name": "clin.MedicalEntity", "parent": "EntityMention",
     "attributes": [{"name": "patient_id", "type": "Str"}]}
  ]
}
"""


def rich_ontology() -> TypeOntology:
    return parse_ontology(RICH_ONTOLOGY_JSON)


_WORDS = ["alpha", "beta", "gamma", "delta", "naïve", "Ωmega", "x1", "jet", "core", "flux"]


def random_text(rng: random.Random, max_words: int = 30) -> str:
    n = rng.randint(0, max_words)
    parts = []
    for i in range(n):
        parts.append(rng.choice(_WORDS))
        if rng.random() < 0.2:
            parts[-1] += rng.choice([".", "!", "?", ","])
    return " ".join(parts)


def chain_to_root(ont: TypeOntology, name: str) -> list[str]:
    """Parent chain computed straight off the type table."""
    chain = [name]
    while ont.types[chain[-1]].parent is not None:
        chain.append(ont.types[chain[-1]].parent)
    return chain


def is_subtype_oracle(ont: TypeOntology, child: str, ancestor: str) -> bool:
    return ancestor in chain_to_root(ont, child)


def root_oracle(ont: TypeOntology, name: str) -> str:
    return chain_to_root(ont, name)[-1]


def build_random_pack(
    rng: random.Random, ontology: TypeOntology, max_entries: int = 50, pack_id: str = "p"
) -> DataPack:
    """A structurally valid pack with a mix of span, link, group, generic
    and entry-ref-attribute entries, random embeddings included."""
    pack = DataPack(pack_id, random_text(rng), ontology)
    n = len(pack.text)
    target = rng.randint(0, max_entries)
    span_types = ["Token", "Sentence", "EntityMention", "EventMention", "clin.MedicalEntity"]
    while len(pack.entries) < target:
        kind = rng.random()
        ids = list(pack.entries)
        if kind < 0.55:
            begin = rng.randint(0, n)
            end = rng.randint(begin, n)
            type_name = rng.choice(span_types)
            attrs = {}
            if type_name in ("EntityMention", "clin.MedicalEntity"):
                attrs["ner_type"] = rng.choice(["PER", "LOC", "ORG"])
            if type_name == "clin.MedicalEntity":
                attrs["patient_id"] = f"pt{rng.randint(1, 9)}"
            pack.add_entry(type_name, begin=begin, end=end, attributes=attrs)
        elif kind < 0.75 and len(ids) >= 2:
            type_name = rng.choice(["Dependency", "Relation"])
            attr = "dep_type" if type_name == "Dependency" else "rel_type"
            pack.add_entry(
                type_name,
                parent=rng.choice(ids),
                child=rng.choice(ids),
                attributes={attr: rng.choice(["a", "b"])},
            )
        elif kind < 0.85 and ids:
            members = rng.sample(ids, k=rng.randint(0, min(4, len(ids))))
            pack.add_entry("Group", members=members)
        elif kind < 0.95 and ids:
            pack.add_entry(
                "x.Anchor",
                attributes={"target": rng.choice(ids), "note": rng.choice(_WORDS)},
            )
        else:
            pack.add_entry(
                "x.Score",
                attributes={
                    "values": [rng.uniform(-2, 2) for _ in range(rng.randint(0, 3))],
                    "flag": rng.random() < 0.5,
                    "count": rng.randint(0, 99),
                },
            )
        if rng.random() < 0.15:
            eid = rng.choice(list(pack.entries))
            pack.set_embedding(eid, [rng.uniform(-1, 1) for _ in range(4)])
    return pack


def covered_oracle(
    pack: DataPack, container: Entry, type_name: str, include_subtypes: bool
) -> list[int]:
    """Linear-scan containment over raw entries, sorted by the documented
    ordering rule."""
    ont = pack.ontology
    cb, ce = container.span
    wanted = [
        e
        for e in pack.entries.values()
        if (
            e.type_name == type_name
            or (include_subtypes and is_subtype_oracle(ont, e.type_name, type_name))
        )
    ]
    root = root_oracle(ont, type_name)
    if root == SPAN:
        hits = [e for e in wanted if cb <= e.span[0] and e.span[1] <= ce]
        hits.sort(key=lambda e: (e.span[0], -e.span[1], e.id))
        return [e.id for e in hits]
    if root == LINK:

        def covered_span(eid: int) -> bool:
            e = pack.entries.get(eid)
            return (
                e is not None
                and e.span is not None
                and cb <= e.span[0]
                and e.span[1] <= ce
            )

        hits = [e for e in wanted if covered_span(e.link[0]) and covered_span(e.link[1])]
        return sorted(e.id for e in hits)
    raise AssertionError(f"oracle does not cover root {root}")


def referential_integrity_violations(pack: DataPack) -> list[str]:
    """Direct scan for references to missing ids."""
    problems = []
    for e in pack.entries.values():
        targets = []
        if e.link is not None:
            targets += list(e.link)
        if e.members is not None:
            targets += list(e.members)
        for key, value in e.attributes.items():
            spec = pack.ontology.attributes_of(e.type_name).get(key)
            if spec is not None and spec.kind.value == "EntryRef":
                targets.append(value)
        for t in targets:
            if t not in pack.entries:
                problems.append(f"entry {e.id} references missing {t}")
    return problems
