"""Data registry: hierarchy, discovery oracle, resolution, grounding."""
import pytest

from orchestra_kernel.catalog import (
    CostHints,
    DataRegistry,
    DataSourceRecord,
    SourcePath,
)
from orchestra_kernel.errors import DuplicatePath, OrphanPath, UnknownPath
from orchestra_kernel.relstore import RelStore, TableData
from orchestra_kernel.vectors import cosine, lexical_vector


def record(path, modality="RELATIONAL", description="", schema=None,
           connection=None, cost=None):
    return DataSourceRecord(
        path=SourcePath.parse(path), modality=modality,
        description=description, schema=schema or {},
        connection=connection or {"credentials_ref": "ref"},
        cost_hints=cost or CostHints(0.01, 5.0, 1.0))


@pytest.fixture
def catalog():
    reg = DataRegistry()
    reg.register_source(record("/hr", description="Enterprise HR data"))
    reg.register_source(record("/hr/HR", description="HR database"))
    reg.register_source(record(
        "/hr/HR/Jobs",
        description="Open job postings with titles companies and cities",
        schema={"id": "int", "title": "str", "company": "str", "city": "str",
                "skills": "str"},
        connection={"driver": "csv", "locator": "jobs.csv", "table": "jobs",
                    "credentials_ref": "hr-readonly"}))
    reg.register_source(record(
        "/hr/Docs", modality="DOCUMENT", description="Document stores"))
    reg.register_source(record(
        "/hr/Docs/Profiles", modality="DOCUMENT",
        description="Job seeker profiles stored in a document collection",
        schema={"title": "str", "location": "str"}))
    reg.register_source(record(
        "/hr/Graph", modality="GRAPH", description="Graph stores"))
    reg.register_source(record(
        "/hr/Graph/Titles", modality="GRAPH",
        description="Title taxonomy graph",
        schema={"nodes": "job titles", "edges": "specialization relations"}))
    reg.register_source(record(
        "/models", modality="MODEL", description="Hosted models"))
    reg.register_source(record(
        "/models/gpt", modality="MODEL",
        description="General knowledge language model as a data source",
        schema={"capability": "text completion"},
        connection={"driver": "mock", "locator": "MOCK",
                    "credentials_ref": "openai-key"}))
    return reg


def test_paths_descend_levels():
    assert SourcePath.parse("/hr/HR/Jobs").level == "COLLECTION"
    assert SourcePath.parse("/hr/HR").level == "DATABASE"
    assert SourcePath.parse("/hr").level == "SOURCE"
    with pytest.raises(ValueError):
        SourcePath.parse("/a/b/c/d")
    with pytest.raises(ValueError):
        SourcePath.parse("/")


def test_register_duplicate_and_orphan(catalog):
    with pytest.raises(DuplicatePath):
        catalog.register_source(record("/hr/HR/Jobs"))
    with pytest.raises(OrphanPath):
        catalog.register_source(record("/hr/Missing/Child"))


def test_register_rejects_inline_credentials():
    reg = DataRegistry()
    bad = record("/x", connection={"password": "hunter2"})
    with pytest.raises(ValueError):
        reg.register_source(bad)


def test_model_record_requires_capability():
    reg = DataRegistry()
    blank = DataSourceRecord(path=SourcePath.parse("/m"), modality="MODEL")
    with pytest.raises(ValueError):
        reg.register_source(blank)


def test_discover_ranks_jobs_first(catalog):
    hits = catalog.discover("job postings with titles and cities", k=3)
    assert str(hits[0][0].path) == "/hr/HR/Jobs"
    # oracle: exhaustive cosine over the whole catalog
    qvec = lexical_vector("job postings with titles and cities")
    expected = sorted(((cosine(qvec, r.vector), str(r.path))
                       for r in catalog.records()),
                      key=lambda pair: (-pair[0], pair[1]))
    assert [str(r.path) for r, _s in hits] == [p for _s, p in expected[:3]]


def test_discover_modality_filter(catalog):
    hits = catalog.discover("title taxonomy", modality_filter="GRAPH", k=5)
    assert [str(r.path) for r, _s in hits
            if _s > 0] == ["/hr/Graph/Titles"]


def test_discover_unknown_vocabulary(catalog):
    hits = catalog.discover("zzzz qqqq", k=3)
    assert all(score == 0.0 for _r, score in hits)


def test_resolve_returns_reference_not_secret(catalog):
    connection = catalog.resolve("/hr/HR/Jobs")
    assert connection["credentials_ref"] == "hr-readonly"
    assert "password" not in connection
    assert catalog.resolve("/models/gpt")["locator"] == "MOCK"
    with pytest.raises(UnknownPath):
        catalog.resolve("/hr/HR/Nope")


def test_list_children_sorted(catalog):
    children = [str(p) for p in catalog.list_children("/hr")]
    assert children == ["/hr/Docs", "/hr/Graph", "/hr/HR"]
    assert catalog.list_children("/hr/HR/Jobs") == []
    with pytest.raises(UnknownPath):
        catalog.list_children("/nope")


def test_hierarchy_integrity(catalog):
    for rec in catalog.records():
        parent = rec.path.parent
        if parent is not None:
            assert catalog.get(parent)
            assert rec.path in catalog.list_children(parent)


def test_value_index_grounding(catalog):
    store = RelStore()
    store.attach(TableData("jobs", ["id", "title", "city", "skills"], [
        {"id": 1, "title": "data scientist", "city": "San Francisco",
         "skills": "python;sql"},
        {"id": 2, "title": "recruiter", "city": "Austin",
         "skills": "communication"},
    ]))
    catalog.build_value_index(store)
    assert catalog.grounds("/hr/HR/Jobs", "data scientist")
    assert catalog.grounds("/hr/HR/Jobs", "austin")
    assert catalog.grounds("/hr/HR/Jobs", "title")       # schema field
    assert catalog.grounds("/hr/HR/Jobs", "tit")         # field prefix
    assert not catalog.grounds("/hr/HR/Jobs", "sf bay area")
    assert catalog.grounds("/hr/HR/Jobs", "python")  # list-element grounding
    stats = catalog.column_stats("/hr/HR/Jobs", "city")
    assert stats.distinct_count == 2 and stats.total == 2
