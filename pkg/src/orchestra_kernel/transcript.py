"""Transcript dump, normalization, and structural verification.

Normalization spec: drop every ``ts`` field and zero every ``latency_ms``
field (wall-clock measurements vary run to run); all other identifiers
are deterministic by construction. Comparison is per-stream: streams
sorted by id, messages by seq.
"""
from __future__ import annotations

import json
from pathlib import Path

from .streams import _stream_sort_key

_DROP_KEYS = {"ts"}
_ZERO_KEYS = {"latency_ms"}


def scrub(value):
    if isinstance(value, dict):
        cleaned = {}
        for key, item in value.items():
            if key in _DROP_KEYS:
                continue
            if key in _ZERO_KEYS:
                cleaned[key] = 0
            else:
                cleaned[key] = scrub(item)
        return cleaned
    if isinstance(value, list):
        return [scrub(item) for item in value]
    return value


def normalize(records: list) -> dict:
    """Map stream id -> list of normalized records in seq order."""
    streams: dict = {}
    for record in records:
        streams.setdefault(record["stream"], []).append(scrub(record))
    for messages in streams.values():
        messages.sort(key=lambda r: r["seq"])
    return streams


def diff(records_a: list, records_b: list) -> list:
    """Structural differences after normalization; empty means verify-equal."""
    norm_a, norm_b = normalize(records_a), normalize(records_b)
    problems = []
    for stream in sorted(set(norm_a) - set(norm_b), key=_stream_sort_key):
        problems.append(f"stream only in left: {stream}")
    for stream in sorted(set(norm_b) - set(norm_a), key=_stream_sort_key):
        problems.append(f"stream only in right: {stream}")
    for stream in sorted(set(norm_a) & set(norm_b), key=_stream_sort_key):
        left, right = norm_a[stream], norm_b[stream]
        if len(left) != len(right):
            problems.append(f"{stream}: {len(left)} vs {len(right)} messages")
        for msg_a, msg_b in zip(left, right):
            if msg_a != msg_b:
                problems.append(
                    f"{stream}@{msg_a['seq']}: "
                    f"{json.dumps(msg_a, sort_keys=True, ensure_ascii=False)} "
                    f"!= {json.dumps(msg_b, sort_keys=True, ensure_ascii=False)}")
                break
    return problems


def dump_lines(records: list) -> str:
    ordered = sorted(records,
                     key=lambda r: (_stream_sort_key(r["stream"]), r["seq"]))
    return "".join(json.dumps(record, ensure_ascii=False) + "\n"
                   for record in ordered)


def load_jsonl(path) -> list:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            records.append(json.loads(line))
    return records


def write_jsonl(path, records: list) -> None:
    Path(path).write_text(dump_lines(records), encoding="utf-8")
