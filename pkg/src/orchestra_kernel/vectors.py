"""Deterministic lexical vectors used by both registries.

Term-frequency vectors over lowercase alphanumeric tokens, L2-normalized.
A stand-in for learned embeddings; swap via the embedder protocol.
"""
from __future__ import annotations

import math
import re
from typing import Callable, Iterable

_TOKEN = re.compile(r"[a-z0-9]+")

Embedder = Callable[[str], dict]


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def lexical_vector(text: str) -> dict:
    """L2-normalized term-frequency vector (empty text -> empty vector)."""
    counts: dict[str, float] = {}
    for token in tokenize(text):
        counts[token] = counts.get(token, 0.0) + 1.0
    norm = math.sqrt(sum(v * v for v in counts.values()))
    if norm == 0.0:
        return {}
    return {t: v / norm for t, v in counts.items()}


def cosine(a: dict, b: dict) -> float:
    if len(b) < len(a):
        a, b = b, a
    return sum(v * b.get(t, 0.0) for t, v in a.items())


def rank_by_cosine(query: str, items: Iterable, vector_of, key_of,
                   k: int, embedder: Embedder = lexical_vector) -> list:
    """Descending cosine, deterministic tie-break by key. Returns (item, score)."""
    qvec = embedder(query)
    scored = [(item, cosine(qvec, vector_of(item))) for item in items]
    scored.sort(key=lambda pair: (-pair[1], key_of(pair[0])))
    return scored[:k]
