"""annopack: stand-off annotation packs, composable processors, hybrid
retrieval, and an HTTP annotation service."""

from .datapack import (
    DataPack,
    Entry,
    MultiPack,
    deserialize_multipack,
    deserialize_pack,
    new_multipack,
    new_pack,
    serialize_multipack,
    serialize_pack,
)
from .ontology import TypeOntology, builtins, load_ontologies, parse_ontology, serialize_ontology
from .pipeline import Pipeline, Workflow, assemble, directory_reader, jsonl_reader, load_workflow
from .tensorize import Batch, EmbeddingConfig, auto_batch, embed_span, embed_text, hashed_embedding

__version__ = "0.1.0"

__all__ = [
    "Batch",
    "DataPack",
    "EmbeddingConfig",
    "Entry",
    "MultiPack",
    "Pipeline",
    "TypeOntology",
    "Workflow",
    "assemble",
    "auto_batch",
    "builtins",
    "deserialize_multipack",
    "deserialize_pack",
    "directory_reader",
    "embed_span",
    "embed_text",
    "hashed_embedding",
    "jsonl_reader",
    "load_ontologies",
    "load_workflow",
    "new_multipack",
    "new_pack",
    "parse_ontology",
    "serialize_multipack",
    "serialize_ontology",
    "serialize_pack",
]
