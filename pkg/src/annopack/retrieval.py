"""Symbolic and vector retrieval.

The inverted index scores with smoothed TF-IDF cosine:
idf(t) = ln((1+N)/(1+df(t))) + 1, weight(t, d) = tf(t, d) * idf(t).
The vector index is an exact brute-force cosine scan. Hybrid search takes
the symbolic top-k as a coarse candidate set and re-ranks exactly those
candidates by embedding cosine.

Index tokenization (lowercased alphanumeric runs) is deliberately fixed and
independent of the pipeline's token processor, so index behavior cannot
drift with workflow configuration.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .datapack import DataPack, MalformedJson
from .tensorize import EmbeddingConfig, embed_text, span_embedding

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def index_tokens(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


class RetrievalError(Exception):
    pass


class DuplicateDoc(RetrievalError):
    pass


class DimMismatch(RetrievalError):
    pass


class UnknownDoc(RetrievalError):
    pass


@dataclass(frozen=True)
class ScoredHit:
    doc_id: str
    score: float


def _ranked(hits: Iterable[ScoredHit], k: int) -> list[ScoredHit]:
    return sorted(hits, key=lambda h: (-h.score, h.doc_id))[:k]


class InvertedIndex:
    def __init__(self) -> None:
        self.postings: dict[str, list[tuple[str, int]]] = {}
        self.doc_ids: list[str] = []
        self._doc_set: set[str] = set()
        self._norms: dict[str, float] | None = None

    @property
    def doc_count(self) -> int:
        return len(self.doc_ids)

    def add(self, doc_id: str, text: str) -> None:
        if doc_id in self._doc_set:
            raise DuplicateDoc(doc_id)
        counts = Counter(index_tokens(text))
        for term in sorted(counts):
            self.postings.setdefault(term, []).append((doc_id, counts[term]))
        self.doc_ids.append(doc_id)
        self._doc_set.add(doc_id)
        self._norms = None  # idf shifts with every added document

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log((1 + self.doc_count) / (1 + df)) + 1.0

    def doc_norms(self) -> dict[str, float]:
        if self._norms is None:
            acc = {doc_id: 0.0 for doc_id in self.doc_ids}
            # sorted term order keeps the accumulated floats identical no
            # matter how the postings dict was populated (fresh vs loaded)
            for term in sorted(self.postings):
                idf = self.idf(term)
                for doc_id, tf in self.postings[term]:
                    acc[doc_id] += (tf * idf) ** 2
            self._norms = {doc_id: math.sqrt(v) for doc_id, v in acc.items()}
        return self._norms

    def search(self, query: str, k: int) -> list[ScoredHit]:
        """Top-k by cosine between the query's TF-IDF vector (every query
        term, including out-of-vocabulary ones, contributes to its norm)
        and document TF-IDF vectors. Zero-score documents are omitted."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.doc_ids:
            return []
        query_counts = Counter(index_tokens(query))
        if not query_counts:
            return []
        weights = {term: tf * self.idf(term) for term, tf in query_counts.items()}
        query_norm = math.sqrt(sum(w * w for w in weights.values()))
        if query_norm == 0.0:
            return []
        norms = self.doc_norms()
        dots: dict[str, float] = {}
        for term, weight in weights.items():
            idf = self.idf(term)
            for doc_id, tf in self.postings.get(term, ()):
                dots[doc_id] = dots.get(doc_id, 0.0) + weight * tf * idf
        hits = [
            ScoredHit(doc_id, dot / (query_norm * norms[doc_id]))
            for doc_id, dot in dots.items()
            if dot > 0.0 and norms[doc_id] > 0.0
        ]
        return _ranked(hits, k)

    def to_obj(self) -> dict:
        return {
            "doc_count": self.doc_count,
            "doc_ids": list(self.doc_ids),
            "doc_norms": self.doc_norms(),
            "postings": {t: [[d, tf] for d, tf in plist] for t, plist in self.postings.items()},
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "InvertedIndex":
        if not isinstance(obj, dict) or not isinstance(obj.get("postings"), dict):
            raise MalformedJson("bad inverted index object")
        idx = cls()
        idx.doc_ids = list(obj.get("doc_ids", []))
        idx._doc_set = set(idx.doc_ids)
        idx.postings = {
            term: [(d, tf) for d, tf in plist] for term, plist in obj["postings"].items()
        }
        return idx


class VectorIndex:
    """Exact cosine search over stored unit vectors."""

    def __init__(self, dim: int) -> None:
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.doc_ids: list[str] = []
        self.vectors: list[np.ndarray] = []  # float32, normalized (or zero)
        self._doc_set: set[str] = set()

    def __len__(self) -> int:
        return len(self.doc_ids)

    def add(self, doc_id: str, vector) -> None:
        if doc_id in self._doc_set:
            raise DuplicateDoc(doc_id)
        v = np.asarray(vector, dtype=np.float64)
        if v.shape != (self.dim,):
            raise DimMismatch(f"expected dim {self.dim}, got shape {v.shape}")
        norm = float(np.linalg.norm(v))
        if norm > 0.0:
            v = v / norm
        self.doc_ids.append(doc_id)
        self.vectors.append(v.astype(np.float32))
        self._doc_set.add(doc_id)

    def vector_of(self, doc_id: str) -> np.ndarray:
        try:
            return self.vectors[self.doc_ids.index(doc_id)]
        except ValueError:
            raise UnknownDoc(doc_id) from None

    def search(self, query, k: int) -> list[ScoredHit]:
        if k < 1:
            raise ValueError("k must be >= 1")
        q = np.asarray(query, dtype=np.float64)
        if q.shape != (self.dim,):
            raise DimMismatch(f"expected dim {self.dim}, got shape {q.shape}")
        norm = float(np.linalg.norm(q))
        if norm > 0.0:
            q = q / norm
        hits = [
            ScoredHit(doc_id, float(np.dot(vec.astype(np.float64), q)))
            for doc_id, vec in zip(self.doc_ids, self.vectors)
        ]
        return _ranked(hits, k)

    def to_obj(self) -> dict:
        return {
            "dim": self.dim,
            "entries": [[d, [float(x) for x in v]] for d, v in zip(self.doc_ids, self.vectors)],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "VectorIndex":
        if not isinstance(obj, dict) or not isinstance(obj.get("dim"), int):
            raise MalformedJson("bad vector index object")
        idx = cls(obj["dim"])
        for entry in obj.get("entries", []):
            doc_id, values = entry
            idx.doc_ids.append(doc_id)
            idx.vectors.append(np.asarray(values, dtype=np.float32))
            idx._doc_set.add(doc_id)
        return idx


def hybrid_search(
    inv: InvertedIndex,
    vec: VectorIndex,
    query: str,
    k_coarse: int,
    k_final: int,
    cfg: EmbeddingConfig,
) -> list[ScoredHit]:
    """Coarse symbolic candidates, then exact embedding re-ranking.

    The result is always a subset of the symbolic top-k_coarse; stage-2
    scores fully replace stage-1 scores.
    """
    if k_final > k_coarse:
        raise ValueError("k_final must be <= k_coarse")
    candidates = inv.search(query, k_coarse)
    q = embed_text(query, cfg).astype(np.float64)
    rescored = [
        ScoredHit(hit.doc_id, float(np.dot(vec.vector_of(hit.doc_id).astype(np.float64), q)))
        for hit in candidates
    ]
    return _ranked(rescored, k_final)


def index_packs(
    packs: Iterable[DataPack],
    field: str | None = None,
    cfg: EmbeddingConfig | None = None,
) -> tuple[InvertedIndex, VectorIndex]:
    """Build paired symbolic and vector indexes over packs.

    With `field` unset, each pack's whole text is one document (doc id =
    pack id); with a span type name, each entry of that type (subtypes
    included) is one document with doc id "<pack_id>#<entry_id>".
    """
    cfg = cfg or EmbeddingConfig()
    inv = InvertedIndex()
    vec = VectorIndex(cfg.dim)
    for pack in packs:
        if field is None:
            inv.add(pack.pack_id, pack.text)
            vec.add(pack.pack_id, embed_text(pack.text, cfg))
        else:
            for entry in pack.get_entries(field, include_subtypes=True):
                doc_id = f"{pack.pack_id}#{entry.id}"
                inv.add(doc_id, pack.text_of(entry))
                vec.add(doc_id, span_embedding(pack, entry, cfg))
    return inv, vec


# -- persistence -------------------------------------------------------------


def save_bundle(path, inv: InvertedIndex, vec: VectorIndex, cfg: EmbeddingConfig) -> None:
    obj = {
        "embedding": {"dim": cfg.dim, "seed": cfg.seed},
        "inverted": inv.to_obj(),
        "vector": vec.to_obj(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_bundle(path) -> tuple[InvertedIndex, VectorIndex, EmbeddingConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedJson(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "inverted" not in obj or "vector" not in obj:
        raise MalformedJson("bad index bundle")
    emb = obj.get("embedding", {})
    cfg = EmbeddingConfig(dim=emb.get("dim", 32), seed=emb.get("seed", 0))
    return InvertedIndex.from_obj(obj["inverted"]), VectorIndex.from_obj(obj["vector"]), cfg
