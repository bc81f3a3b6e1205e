"""Model backends: the scripted mock used by tests and an HTTP client.

Every LLM touchpoint in the kernel goes through the `ModelBackend`
protocol so the mock and a live endpoint are interchangeable.

HTTP wire format: POST <locator> with body ``{"prompt": str, "config": {}}``,
response ``{"text": str, "cost": number?, "latency_ms": number?}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol

from .errors import ConfigError, SourceUnavailable


@dataclass(frozen=True)
class Completion:
    text: str
    cost: float = 0.0
    latency_ms: float = 0.0


class ModelBackend(Protocol):
    def complete(self, prompt: str, config: Optional[dict] = None) -> Completion:
        ...


@dataclass
class ScriptEntry:
    match: str  # case-insensitive substring; "" matches everything
    response: str
    cost: float = 1.0
    latency_ms: float = 50.0


class MockLLM:
    """Deterministic scripted backend: first matching entry wins.

    The script must end in a fallback entry (empty matcher) so every
    prompt gets a response.
    """

    def __init__(self, entries: list):
        if not any(e.match == "" for e in entries):
            raise ConfigError("mock LLM script requires a fallback entry "
                              "(empty matcher)")
        self.entries = list(entries)

    @staticmethod
    def from_config(items: list) -> "MockLLM":
        entries = [ScriptEntry(match=item.get("match", ""),
                               response=item["response"],
                               cost=float(item.get("cost", 1.0)),
                               latency_ms=float(item.get("latency_ms", 50.0)))
                   for item in items]
        return MockLLM(entries)

    def complete(self, prompt: str, config: Optional[dict] = None) -> Completion:
        lowered = prompt.lower()
        for entry in self.entries:
            if entry.match == "" or entry.match.lower() in lowered:
                return Completion(entry.response, entry.cost, entry.latency_ms)
        raise SourceUnavailable("mock script exhausted")  # unreachable with fallback


class HTTPModelBackend:
    """Client for a live completion endpoint."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout

    def complete(self, prompt: str, config: Optional[dict] = None) -> Completion:
        import httpx

        try:
            response = httpx.post(self.url,
                                  json={"prompt": prompt, "config": config or {}},
                                  timeout=self.timeout)
            response.raise_for_status()
        except Exception as exc:  # connection refused, HTTP error, timeout
            raise SourceUnavailable(f"model backend at {self.url}: {exc}") from exc
        body = response.json()
        return Completion(text=body["text"], cost=float(body.get("cost", 0.0)),
                          latency_ms=float(body.get("latency_ms", 0.0)))
