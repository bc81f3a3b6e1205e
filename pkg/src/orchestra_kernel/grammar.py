"""Template grammar for natural-language query fragments.

Ordered pattern table turning a question into a parsed shape (count or
select) plus role-tagged phrases the planner grounds against catalog
values. Shared by the NL2Q agent and the data planner.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class QueryFragment:
    role: str   # title | location | company | skill | value
    phrase: str


@dataclass
class ParsedQuery:
    kind: str                 # count | select
    table_hint: str
    fragments: list = field(default_factory=list)
    question: str = ""


_TEMPLATES = (
    ("count_skill",
     re.compile(r"^how many (?P<table>\w+) (?:have|with) (?P<value>.+?)"
                r" skills?\??$", re.IGNORECASE),
     lambda m: ParsedQuery(kind="count", table_hint=m.group("table"),
                           fragments=[QueryFragment("skill", m.group("value"))])),
    ("count_plain",
     re.compile(r"^how many (?P<table>\w+)\??$", re.IGNORECASE),
     lambda m: ParsedQuery(kind="count", table_hint=m.group("table"))),
    ("title_location",
     re.compile(r"^(?:.*?\bfor\s+(?:an?\s+)?)?(?P<title>[a-z][a-z ]*?)\s+"
                r"positions?\s+in\s+(?:the\s+)?(?P<loc>.+?)[.?]?$",
                re.IGNORECASE),
     lambda m: ParsedQuery(kind="select", table_hint="jobs",
                           fragments=[QueryFragment("title", m.group("title").strip()),
                                      QueryFragment("location", m.group("loc").strip())])),
    ("company",
     re.compile(r"^(?:list |show |find )?jobs at (?P<company>.+?)[.?]?$",
                re.IGNORECASE),
     lambda m: ParsedQuery(kind="select", table_hint="jobs",
                           fragments=[QueryFragment("company", m.group("company").strip())])),
    ("table_value",
     re.compile(r"^(?:list|show|find) (?:all )?(?P<table>\w+) (?:in|at|from) "
                r"(?P<value>.+?)[.?]?$", re.IGNORECASE),
     lambda m: ParsedQuery(kind="select", table_hint=m.group("table"),
                           fragments=[QueryFragment("value", m.group("value").strip())])),
)

# Role -> candidate column names, tried in order against the source schema.
ROLE_COLUMNS = {
    "title": ("title",),
    "location": ("city", "location"),
    "company": ("company",),
    "skill": ("skills",),
    "value": ("city", "company", "title", "name"),
}


def parse_query(text: str) -> Optional[ParsedQuery]:
    cleaned = " ".join((text or "").split())
    for _name, pattern, build in _TEMPLATES:
        match = pattern.match(cleaned)
        if match:
            parsed = build(match)
            parsed.question = cleaned
            return parsed
    return None


def role_column(role: str, schema: dict) -> Optional[str]:
    for candidate in ROLE_COLUMNS.get(role, ()):
        if candidate in schema:
            return candidate
    return None


def sql_quote(value: str) -> str:
    return "'" + str(value).replace("'", "''") + "'"


def build_sql(parsed: ParsedQuery, table: str, schema: dict) -> Optional[str]:
    """Render the parsed query to the supported SQL subset, or None when a
    fragment has no column to land on."""
    where = []
    for fragment in parsed.fragments:
        column = role_column(fragment.role, schema)
        if column is None:
            return None
        value = fragment.phrase.lower()
        if fragment.role == "skill":
            where.append(f"{column} LIKE {sql_quote('%' + value + '%')}")
        else:
            where.append(f"lower({column}) = {sql_quote(value)}")
    clause = (" WHERE " + " AND ".join(where)) if where else ""
    if parsed.kind == "count":
        return f"SELECT COUNT(*) AS count FROM {table}{clause}"
    return f"SELECT * FROM {table}{clause}"


# Leading intent phrases stripped by the rule-based criteria extractor.
INTENT_PREFIXES = (
    "i am looking for a ",
    "i am looking for an ",
    "i am looking for ",
    "i'm looking for a ",
    "i'm looking for an ",
    "i'm looking for ",
    "i am searching for ",
    "i want to find ",
    "i want ",
    "find me a ",
    "find me ",
    "show me ",
    "please find ",
)


def strip_intent_prefix(text: str) -> Optional[str]:
    """Remove the longest matching leading intent phrase, preserving the
    remainder's original casing. None when no rule applies."""
    lowered = text.lower()
    best = None
    for prefix in INTENT_PREFIXES:
        if lowered.startswith(prefix):
            if best is None or len(prefix) > len(best):
                best = prefix
    if best is None:
        return None
    return text[len(best):]
