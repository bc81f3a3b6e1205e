"""Embedded relational store and the NL query grammar."""
import pytest

from orchestra_kernel.errors import ParseError, UnknownTable
from orchestra_kernel.grammar import (
    build_sql,
    parse_query,
    strip_intent_prefix,
)
from orchestra_kernel.relstore import RelStore, TableData, load_csv

JOB_SEARCH_UTTERANCE = "I am looking for a data scientist position in SF bay area."


@pytest.fixture
def store():
    rel = RelStore()
    rel.attach(TableData("jobs", ["id", "title", "city"], [
        {"id": 1, "title": "data scientist", "city": "San Francisco"},
        {"id": 2, "title": "recruiter", "city": "Austin"},
        {"id": 3, "title": "data analyst", "city": "Oakland"},
    ]))
    rel.attach(TableData("applicants", ["id", "name", "skills"], [
        {"id": 1, "name": "A", "skills": "python;sql"},
        {"id": 2, "name": "B", "skills": "java"},
        {"id": 3, "name": "C", "skills": "python;ml"},
    ]))
    return rel


def test_query_select_rows(store):
    result = store.query("SELECT * FROM jobs WHERE city = 'Austin'")
    assert [r["id"] for r in result.rows] == [2]


def test_query_count_like_matches_scan_oracle(store):
    result = store.query(
        "SELECT COUNT(*) AS count FROM applicants "
        "WHERE skills LIKE '%python%'")
    oracle = sum(1 for row in store.table("applicants").rows
                 if "python" in row["skills"])
    assert result.rows[0]["count"] == oracle == 2


def test_query_empty_result(store):
    result = store.query("SELECT * FROM jobs WHERE city = 'Nowhere'")
    assert result.rows == []
    assert result.columns == ["id", "title", "city"]


def test_query_in_and_single_join(store):
    result = store.query(
        "SELECT * FROM jobs WHERE city IN ('Austin', 'Oakland')")
    assert sorted(r["id"] for r in result.rows) == [2, 3]
    joined = store.query(
        "SELECT jobs.title, applicants.name FROM jobs "
        "JOIN applicants ON applicants.id = jobs.id "
        "WHERE applicants.skills LIKE '%python%'")
    oracle = []
    for job in store.table("jobs").rows:
        for applicant in store.table("applicants").rows:
            if applicant["id"] == job["id"] and "python" in applicant["skills"]:
                oracle.append((job["title"], applicant["name"]))
    assert sorted((r["title"], r["name"]) for r in joined.rows) \
        == sorted(oracle)


def test_query_errors(store):
    with pytest.raises(UnknownTable):
        store.query("SELECT * FROM nonexistent")
    with pytest.raises(ParseError):
        store.query("SELEC garbage")
    with pytest.raises(ParseError):
        store.query("DROP TABLE jobs")


def test_load_csv_coerces_numerics(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("id,name,score\n1,a,1.5\n2,b,2.0\n")
    table = load_csv(path)
    assert table.rows[0] == {"id": 1, "name": "a", "score": 1.5}
    payload = table.to_payload()
    assert payload["columns"] == ["id", "name", "score"]
    assert TableData.from_payload(payload, "t").rows == table.rows


# -- grammar -----------------------------------------------------------------


def test_parse_count_skill():
    parsed = parse_query("how many applicants have python skills")
    assert parsed.kind == "count"
    assert parsed.table_hint == "applicants"
    assert [(f.role, f.phrase) for f in parsed.fragments] == [
        ("skill", "python")]


def test_parse_title_location():
    parsed = parse_query("data scientist position in sf bay area")
    assert parsed.kind == "select"
    assert [(f.role, f.phrase) for f in parsed.fragments] == [
        ("title", "data scientist"), ("location", "sf bay area")]
    # the full running-example criteria phrase parses the same way
    parsed2 = parse_query("data scientist position in SF bay area.")
    assert [f.phrase for f in parsed2.fragments] == ["data scientist",
                                                     "SF bay area"]


def test_parse_company():
    parsed = parse_query("jobs at Globex")
    assert [(f.role, f.phrase) for f in parsed.fragments] == [
        ("company", "Globex")]


def test_parse_unknown_returns_none():
    assert parse_query("tell me a joke") is None


def test_build_sql_count():
    parsed = parse_query("how many applicants have python skills")
    sql = build_sql(parsed, "applicants", {"id": "int", "skills": "str"})
    assert sql == ("SELECT COUNT(*) AS count FROM applicants "
                   "WHERE skills LIKE '%python%'")


def test_build_sql_quotes_values():
    parsed = parse_query("jobs at O'Brien and Sons")
    sql = build_sql(parsed, "jobs", {"company": "str"})
    assert "''" in sql  # single quotes doubled


def test_strip_intent_prefix_job_search_conversation():
    assert (strip_intent_prefix(JOB_SEARCH_UTTERANCE)
            == "data scientist position in SF bay area.")
    assert strip_intent_prefix("hello there") is None
    assert strip_intent_prefix("Find me a quiet cafe") == "quiet cafe"
