"""Bridging symbolic entries and dense numeric form.

Embeddings here are deterministic hash embeddings: reproducible bit-for-bit
across runs and platforms, with no model weights involved. Real neural
embeddings can be attached to entries through the same ``embedding`` field.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .datapack import DataPack, Entry, NotASpan

_M64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


class RaggedFeatureDim(Exception):
    pass


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")


@dataclass
class Batch:
    """Fixed-shape aggregation of variable-length instances.

    ``data`` is (n, max_len) for scalar features or (n, max_len, d) for
    vector features; ``mask[i, j] == 1`` iff j < lengths[i]; padded cells
    are exactly zero.
    """

    data: np.ndarray
    mask: np.ndarray
    lengths: list[int]


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _M64
    return h


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    z ^= z >> 31
    return state, z


def hashed_embedding(text: str, cfg: EmbeddingConfig) -> np.ndarray:
    """Deterministic unit vector for a piece of text.

    The stream seed is the FNV-1a 64-bit hash of the lowercased UTF-8 text
    XORed with the config seed; values come from a splitmix64 stream, each
    mapped to [-1, 1) by (top 53 bits / 2^52) - 1, then L2-normalized.
    """
    state = _fnv1a64(text.lower().encode("utf-8")) ^ (cfg.seed & _M64)
    values = np.empty(cfg.dim, dtype=np.float64)
    for i in range(cfg.dim):
        state, z = _splitmix64(state)
        values[i] = (z >> 11) / float(1 << 52) - 1.0
    norm = float(np.linalg.norm(values))
    if norm > 0.0:
        values /= norm
    return values.astype(np.float32)


def _pool(tokens: Sequence[str], cfg: EmbeddingConfig) -> np.ndarray:
    if not tokens:
        return np.zeros(cfg.dim, dtype=np.float32)
    acc = np.zeros(cfg.dim, dtype=np.float64)
    for tok in tokens:
        acc += hashed_embedding(tok, cfg).astype(np.float64)
    acc /= len(tokens)
    norm = float(np.linalg.norm(acc))
    if norm > 0.0:
        acc /= norm
    return acc.astype(np.float32)


def embed_text(text: str, cfg: EmbeddingConfig) -> np.ndarray:
    """Normalized mean of hashed embeddings over whitespace-split tokens;
    all-zero for empty or whitespace-only text."""
    return _pool(text.split(), cfg)


def span_embedding(pack: DataPack, entry: Entry | int, cfg: EmbeddingConfig) -> np.ndarray:
    """The embedding `embed_span` would store, computed without mutating
    the entry."""
    e = entry if isinstance(entry, Entry) else pack.get(entry)
    if e.span is None:
        raise NotASpan(f"entry {e.id} ({e.type_name}) is not span-rooted")
    return embed_text(pack.text_of(e), cfg)


def embed_span(pack: DataPack, entry_id: int, cfg: EmbeddingConfig) -> np.ndarray:
    """Compute the span's embedding and store it on the entry."""
    vec = span_embedding(pack, entry_id, cfg)
    pack.set_embedding(entry_id, vec)
    return vec


def _feature_dim(feature: Any) -> int | None:
    """None for scalars, length for vectors."""
    if isinstance(feature, (int, float)) and not isinstance(feature, bool):
        return None
    if np.isscalar(feature):
        return None
    return len(feature)


def auto_batch(instances: Sequence[Sequence[Any]]) -> Batch:
    """Pad variable-length feature sequences into one array plus mask.

    All features across all instances must agree on feature dimension
    (scalars count as dimensionless); otherwise RaggedFeatureDim.
    """
    dims = {_feature_dim(f) for inst in instances for f in inst}
    if len(dims) > 1:
        raise RaggedFeatureDim(f"mixed feature dims {sorted(map(str, dims))}")
    dim = dims.pop() if dims else None
    lengths = [len(inst) for inst in instances]
    n = len(instances)
    max_len = max(lengths, default=0)
    shape = (n, max_len) if dim is None else (n, max_len, dim)
    data = np.zeros(shape, dtype=np.float64)
    mask = np.zeros((n, max_len), dtype=np.int64)
    for i, inst in enumerate(instances):
        for j, feature in enumerate(inst):
            data[i, j] = feature
        mask[i, : lengths[i]] = 1
    return Batch(data=data, mask=mask, lengths=lengths)


Featurizer = Callable[[DataPack, Entry], Any]


def extract_context_features(
    pack: DataPack,
    context_type: str,
    inner_type: str,
    featurizer: Featurizer,
) -> list[list[Any]]:
    """One feature sequence per context entry: the featurizer applied to
    every covered inner entry, in span order. Feed the result to
    :func:`auto_batch`."""
    out = []
    for context in pack.get_entries(context_type, include_subtypes=True):
        inner = pack.get_covered(context, inner_type, include_subtypes=True)
        out.append([featurizer(pack, e) for e in inner])
    return out
