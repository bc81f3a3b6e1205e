"""Data registry: hierarchical catalog of multi-modal sources.

Paths descend REGISTRY -> SOURCE -> DATABASE -> COLLECTION (e.g.
``/hr/HR/Jobs``). Records carry schema, connection, cost hints, and a
lexical vector for discovery; relational collections additionally get a
sampled value index used for grounding and cardinality estimates.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional

from .errors import DuplicatePath, OrphanPath, UnknownPath
from .relstore import RelStore, load_csv
from .vectors import cosine, lexical_vector

MODALITIES = ("RELATIONAL", "DOCUMENT", "GRAPH", "KEYVALUE", "MODEL")
LEVELS = ("REGISTRY", "SOURCE", "DATABASE", "COLLECTION")

_CREDENTIAL_KEYS = {"password", "secret", "api_key", "token"}

VALUE_SAMPLE_CAP = 200  # distinct values kept per column in the index


@dataclass(frozen=True)
class SourcePath:
    segments: tuple

    @staticmethod
    def parse(text) -> "SourcePath":
        if isinstance(text, SourcePath):
            return text
        segments = tuple(s for s in str(text).split("/") if s)
        if not segments:
            raise ValueError("empty source path")
        if len(segments) > len(LEVELS) - 1:
            raise ValueError(f"path too deep (max {len(LEVELS) - 1} levels): {text}")
        return SourcePath(segments)

    @property
    def level(self) -> str:
        return LEVELS[len(self.segments)]

    @property
    def parent(self) -> Optional["SourcePath"]:
        if len(self.segments) <= 1:
            return None
        return SourcePath(self.segments[:-1])

    @property
    def name(self) -> str:
        return self.segments[-1]

    def __str__(self) -> str:
        return "/" + "/".join(self.segments)


@dataclass
class CostHints:
    per_call_cost: float = 0.0
    latency_ms: float = 0.0
    quality: float = 1.0

    def to_dict(self) -> dict:
        return {"per_call_cost": self.per_call_cost,
                "latency_ms": self.latency_ms, "quality": self.quality}

    @staticmethod
    def from_dict(data: dict) -> "CostHints":
        return CostHints(per_call_cost=float(data.get("per_call_cost", 0.0)),
                         latency_ms=float(data.get("latency_ms", 0.0)),
                         quality=float(data.get("quality", 1.0)))


@dataclass
class DataSourceRecord:
    path: SourcePath
    modality: str
    description: str = ""
    schema: dict = field(default_factory=dict)
    connection: dict = field(default_factory=dict)
    indices: list = field(default_factory=list)
    cost_hints: CostHints = field(default_factory=CostHints)
    vector: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")
        hints = self.cost_hints
        if hints.per_call_cost < 0 or hints.latency_ms < 0:
            raise ValueError("cost hints must be nonnegative")
        if not 0.0 <= hints.quality <= 1.0:
            raise ValueError("quality must be within [0, 1]")
        if self.modality == "MODEL" and not (
                self.description or self.schema.get("capability")):
            raise ValueError("MODEL records need a capability description")
        leaked = _CREDENTIAL_KEYS & {k.lower() for k in self.connection}
        if leaked:
            raise ValueError(
                f"connection must reference credentials by name, not carry "
                f"{sorted(leaked)}; use 'credentials_ref'")

    def text(self) -> str:
        parts = [self.path.name, self.description]
        for key, value in sorted(self.schema.items()):
            parts.append(str(key))
            parts.append(str(value))
        return " ".join(parts)

    def to_dict(self) -> dict:
        return {"path": str(self.path), "modality": self.modality,
                "description": self.description, "schema": dict(self.schema),
                "connection": dict(self.connection),
                "indices": list(self.indices),
                "cost_hints": self.cost_hints.to_dict()}

    @staticmethod
    def from_dict(data: dict) -> "DataSourceRecord":
        return DataSourceRecord(
            path=SourcePath.parse(data["path"]),
            modality=data["modality"],
            description=data.get("description", ""),
            schema=dict(data.get("schema", {})),
            connection=dict(data.get("connection", {})),
            indices=list(data.get("indices", ())),
            cost_hints=CostHints.from_dict(data.get("cost_hints", {})))


@dataclass
class ColumnStats:
    distinct: list            # sampled distinct values (insertion order)
    distinct_count: int
    total: int


class DataRegistry:
    def __init__(self, embedder=lexical_vector):
        self._records: dict[str, DataSourceRecord] = {}
        self._lock = threading.Lock()
        self._embedder = embedder
        self._value_index: dict[str, dict] = {}  # path -> column -> ColumnStats

    def register_source(self, record: DataSourceRecord) -> SourcePath:
        record.validate()
        key = str(record.path)
        parent = record.path.parent
        with self._lock:
            if key in self._records:
                raise DuplicatePath(f"source already registered: {key}")
            if parent is not None and str(parent) not in self._records:
                raise OrphanPath(f"parent {parent} not registered for {key}")
            record.vector = self._embedder(record.text())
            self._records[key] = record
        return record.path

    def get(self, path) -> DataSourceRecord:
        key = str(SourcePath.parse(path))
        with self._lock:
            record = self._records.get(key)
        if record is None:
            raise UnknownPath(f"unknown source path: {key}")
        return record

    def records(self) -> list:
        with self._lock:
            return sorted(self._records.values(), key=lambda r: str(r.path))

    def discover(self, query: str, modality_filter: Optional[str] = None,
                 k: int = 5) -> list:
        """Cosine-ranked records (record, score), optionally modality-filtered."""
        qvec = self._embedder(query)
        candidates = self.records()
        if modality_filter is not None:
            candidates = [r for r in candidates if r.modality == modality_filter]
        scored = [(record, cosine(qvec, record.vector)) for record in candidates]
        scored.sort(key=lambda pair: (-pair[1], str(pair[0].path)))
        return scored[:k]

    def resolve(self, path) -> dict:
        """Connection descriptor; credentials stay a reference name."""
        return dict(self.get(path).connection)

    def list_children(self, path) -> list:
        parsed = SourcePath.parse(path)
        self.get(parsed)  # raises UnknownPath
        prefix = parsed.segments
        with self._lock:
            children = [r.path for r in self._records.values()
                        if len(r.path.segments) == len(prefix) + 1
                        and r.path.segments[:len(prefix)] == prefix]
        return sorted(children, key=str)

    # -- value index / statistics -------------------------------------------------

    def build_value_index(self, store: RelStore) -> None:
        """Sample distinct values per column of every attached relational
        collection; feeds grounding and cardinality estimation."""
        for record in self.records():
            if record.modality != "RELATIONAL":
                continue
            table_name = record.connection.get("table", record.path.name.lower())
            if not store.has_table(table_name):
                continue
            table = store.table(table_name)
            columns = {}
            for column in table.columns:
                seen: dict = {}
                for row in table.rows:
                    value = row.get(column)
                    if value is None:
                        continue
                    seen.setdefault(value, None)
                    # multi-valued columns are semicolon-delimited; index
                    # the elements so they ground individually
                    if isinstance(value, str) and ";" in value:
                        for part in value.split(";"):
                            if part:
                                seen.setdefault(part, None)
                distinct = list(seen)
                columns[column] = ColumnStats(
                    distinct=distinct[:VALUE_SAMPLE_CAP],
                    distinct_count=len(distinct),
                    total=len(table.rows))
            with self._lock:
                self._value_index[str(record.path)] = columns

    def column_stats(self, path, column: str) -> Optional[ColumnStats]:
        with self._lock:
            return self._value_index.get(str(SourcePath.parse(path)), {}).get(column)

    def grounds(self, path, phrase: str) -> bool:
        """A phrase grounds iff it exact- or prefix-matches a schema field
        name, or exact-matches a sampled distinct value."""
        record = self.get(path)
        needle = phrase.strip().lower()
        if not needle:
            return False
        for column in record.schema:
            name = str(column).lower()
            if name == needle or name.startswith(needle):
                return True
        with self._lock:
            columns = self._value_index.get(str(record.path), {})
        for stats in columns.values():
            for value in stats.distinct:
                if isinstance(value, str) and value.strip().lower() == needle:
                    return True
                if str(value).lower() == needle:
                    return True
        return False

    def load_file(self, path) -> int:
        from .seedio import read_structured
        items = read_structured(path)
        if isinstance(items, dict):
            items = items.get("sources", [])
        count = 0
        for item in items:
            self.register_source(DataSourceRecord.from_dict(item))
            count += 1
        return count
