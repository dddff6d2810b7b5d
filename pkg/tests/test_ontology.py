import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annopack.datapack import Entry
from annopack.ontology import (
    ROOTS,
    CycleDetected,
    DuplicateAttribute,
    MalformedJson,
    ReservedName,
    UnknownParent,
    UnknownType,
    builtins,
    load_ontologies,
    parse_ontology,
    serialize_ontology,
)

from helpers import chain_to_root, is_subtype_oracle

DEP_JSON = json.dumps(
    {
        "types": [
            {
                "name": "ud.DepArc",
                "parent": "Link",
                "attributes": [{"name": "dep_type", "type": "Str"}],
            }
        ]
    }
)


def test_builtins_contains_roots_and_standard_types():
    ont = builtins()
    for root in ROOTS:
        assert root in ont
    for name in [
        "Token",
        "Sentence",
        "Document",
        "EntityMention",
        "PredicateMention",
        "Relation",
        "Dependency",
        "CrossDocLink",
        "EventMention",
        "Utterance",
    ]:
        assert name in ont
    assert ont.attributes_of("EntityMention")["ner_type"].kind.value == "Str"
    assert ont.attributes_of("Dependency")["dep_type"].kind.value == "Str"
    assert ont.attributes_of("Relation")["rel_type"].kind.value == "Str"


def test_parse_dependency_style_type_inherits_link():
    ont = parse_ontology(DEP_JSON)
    assert "ud.DepArc" in ont
    assert ont.is_subtype("ud.DepArc", "Link")
    assert ont.root_of("ud.DepArc") == "Link"
    assert "dep_type" in ont.attributes_of("ud.DepArc")


def test_parse_empty_extension_is_noop():
    ont = parse_ontology('{"types": []}')
    assert ont.user_types == []
    assert set(ont.types) == set(builtins().types)


def test_two_cycle_rejected():
    doc = json.dumps(
        {
            "types": [
                {"name": "a.A", "parent": "a.B", "attributes": []},
                {"name": "a.B", "parent": "a.A", "attributes": []},
            ]
        }
    )
    with pytest.raises(CycleDetected):
        parse_ontology(doc)


def test_self_cycle_rejected():
    doc = json.dumps({"types": [{"name": "a.A", "parent": "a.A"}]})
    with pytest.raises(CycleDetected):
        parse_ontology(doc)


def test_unknown_parent_rejected():
    doc = json.dumps({"types": [{"name": "a.A", "parent": "NoSuchThing"}]})
    with pytest.raises(UnknownParent):
        parse_ontology(doc)


def test_redefining_builtin_rejected():
    for name in ("Span", "Token"):
        doc = json.dumps({"types": [{"name": name, "parent": "Span"}]})
        with pytest.raises(ReservedName):
            parse_ontology(doc)


def test_duplicate_attribute_within_type_rejected():
    doc = json.dumps(
        {
            "types": [
                {
                    "name": "a.A",
                    "parent": "Span",
                    "attributes": [
                        {"name": "x", "type": "Int"},
                        {"name": "x", "type": "Str"},
                    ],
                }
            ]
        }
    )
    with pytest.raises(DuplicateAttribute):
        parse_ontology(doc)


def test_attribute_shadowing_inherited_rejected():
    doc = json.dumps(
        {
            "types": [
                {
                    "name": "a.A",
                    "parent": "EntityMention",
                    "attributes": [{"name": "ner_type", "type": "Str"}],
                }
            ]
        }
    )
    with pytest.raises(DuplicateAttribute):
        parse_ontology(doc)


def test_attribute_shadowing_template_field_rejected():
    doc = json.dumps(
        {"types": [{"name": "a.A", "parent": "Span", "attributes": [{"name": "begin", "type": "Int"}]}]}
    )
    with pytest.raises(DuplicateAttribute):
        parse_ontology(doc)


def test_malformed_json_rejected():
    with pytest.raises(MalformedJson):
        parse_ontology("{not json")
    with pytest.raises(MalformedJson):
        parse_ontology('{"no_types": 1}')
    with pytest.raises(MalformedJson):
        parse_ontology('{"types": [{"name": "a.A", "parent": "Span", "attributes": [{"name": "x", "type": "Complex"}]}]}')


def test_forward_reference_within_one_document():
    doc = json.dumps(
        {
            "types": [
                {"name": "a.Child", "parent": "a.Base", "attributes": []},
                {"name": "a.Base", "parent": "Span", "attributes": []},
            ]
        }
    )
    ont = parse_ontology(doc)
    assert ont.is_subtype("a.Child", "Span")


def test_later_files_may_reference_but_not_redefine():
    first = json.dumps({"types": [{"name": "a.Base", "parent": "Span"}]})
    second = json.dumps({"types": [{"name": "b.Sub", "parent": "a.Base"}]})
    ont = load_ontologies([first, second])
    assert ont.is_subtype("b.Sub", "Span")
    with pytest.raises(ReservedName):
        load_ontologies([first, first])


def test_is_subtype_examples():
    ont = parse_ontology(DEP_JSON)
    assert ont.is_subtype("ud.DepArc", "Link") is True
    assert ont.is_subtype("Link", "Link") is True
    assert ont.is_subtype("Span", "Link") is False
    with pytest.raises(UnknownType):
        ont.is_subtype("Nope", "Link")


def test_validate_entry_span_cases():
    ont = builtins()
    ok = Entry(id=0, type_name="Token", span=(0, 5))
    assert ont.validate_entry(ok) == []
    inverted = Entry(id=1, type_name="Token", span=(7, 3))
    assert any(v.code == "InvertedSpan" for v in ont.validate_entry(inverted))
    negative = Entry(id=2, type_name="Token", span=(-1, 3))
    assert any(v.code == "NegativeOffset" for v in ont.validate_entry(negative))
    missing = Entry(id=3, type_name="Token")
    assert any(v.code == "MissingSpan" for v in ont.validate_entry(missing))


def test_validate_entry_attribute_kind_mismatch():
    ont = builtins()
    bad = Entry(id=0, type_name="EntityMention", span=(0, 2), attributes={"ner_type": 42})
    codes = [v.code for v in ont.validate_entry(bad)]
    assert "AttributeKindMismatch" in codes
    unknown = Entry(id=1, type_name="Token", span=(0, 2), attributes={"nope": 1})
    assert any(v.code == "UnknownAttribute" for v in ont.validate_entry(unknown))


def test_validate_entry_never_raises_on_junk():
    ont = builtins()
    junk = Entry(id=0, type_name="NoSuch", span=("a", None))
    assert any(v.code == "UnknownType" for v in ont.validate_entry(junk))
    mixed = Entry(id=1, type_name="Dependency", span=(0, 1), link=(None, None))
    codes = [v.code for v in ont.validate_entry(mixed)]
    assert "UnexpectedSpan" in codes and "MissingLinkEndpoints" in codes


def test_roundtrip_serialize_parse_identity_on_type_set():
    ont = load_ontologies(
        [
            DEP_JSON,
            json.dumps(
                {
                    "types": [
                        {
                            "name": "clin.MedicalEntity",
                            "parent": "EntityMention",
                            "attributes": [{"name": "patient_id", "type": "Str"}],
                        }
                    ]
                }
            ),
        ]
    )
    again = parse_ontology(serialize_ontology(ont))
    assert set(again.types) == set(ont.types)
    assert {t.name: t for t in again.user_types} == {t.name: t for t in ont.user_types}


# -- randomized forest properties ---------------------------------------------


def _random_forest_doc(rng: random.Random, n_types: int) -> str:
    names = [f"t.T{i}" for i in range(n_types)]
    types = []
    for i, name in enumerate(names):
        pool = list(ROOTS) + ["Token", "EntityMention", "Relation"] + names[:i]
        types.append({"name": name, "parent": rng.choice(pool), "attributes": []})
    rng.shuffle(types)
    return json.dumps({"types": types})


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=60), st.randoms(use_true_random=False))
def test_random_forests_subtype_laws(n_types, rng):
    ont = parse_ontology(_random_forest_doc(rng, n_types))
    names = list(ont.types)
    for name in names:
        assert ont.is_subtype(name, name)  # reflexive
        chain = chain_to_root(ont, name)
        assert chain[-1] in ROOTS  # exactly one root, no loop
        for ancestor in chain:
            assert ont.is_subtype(name, ancestor)
    for _ in range(200):
        a, b = rng.choice(names), rng.choice(names)
        assert ont.is_subtype(a, b) == is_subtype_oracle(ont, a, b)
        if a != b and ont.is_subtype(a, b):
            assert not ont.is_subtype(b, a)  # antisymmetric on distinct names
    for _ in range(100):
        a = rng.choice(names)
        b = rng.choice(chain_to_root(ont, a))
        c = rng.choice(chain_to_root(ont, b))
        assert ont.is_subtype(a, c)  # transitive


@settings(max_examples=25, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(min_value=2, max_value=8))
def test_generated_cycles_always_rejected(rng, cycle_len):
    names = [f"c.C{i}" for i in range(cycle_len)]
    types = [
        {"name": names[i], "parent": names[(i + 1) % cycle_len], "attributes": []}
        for i in range(cycle_len)
    ]
    extra = [{"name": f"c.X{i}", "parent": rng.choice(list(ROOTS)), "attributes": []} for i in range(3)]
    doc = types + extra
    rng.shuffle(doc)
    with pytest.raises(CycleDetected):
        parse_ontology(json.dumps({"types": doc}))
