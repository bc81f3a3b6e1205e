"""Deterministic seed corpus generator for the HR scenario.

Writes the agent/catalog/template/script seed files plus the synthetic
data (jobs, applicants, profiles, title taxonomy, city regions) and the
shipped scenario scripts. Fixed RNG seed: regenerating into a clean
directory reproduces every byte.
"""
from __future__ import annotations

import csv
import json
import random
from pathlib import Path

import yaml

RNG_SEED = 20240

BAY_AREA_CITIES = [
    "San Francisco", "San Jose", "Oakland", "Berkeley", "Palo Alto",
    "Mountain View", "Sunnyvale", "Santa Clara", "Fremont", "Redwood City",
]

REGIONS = {
    "sf bay area": BAY_AREA_CITIES,
    "new york metro": ["New York", "Brooklyn", "Jersey City"],
    "pacific northwest": ["Seattle", "Portland"],
}

OTHER_CITIES = [
    "Austin", "Chicago", "Boston", "Denver", "Los Angeles", "San Diego",
    "Atlanta", "Miami", "Dallas", "Phoenix", "Seattle", "Portland",
    "New York", "Brooklyn", "Jersey City",
]

COMPANIES = [
    "Acme Analytics", "BlueSky Software", "CloudNine Systems", "DataForge",
    "Evergreen Tech", "FineGrain Labs", "Globex", "Helios Computing",
    "Initech", "Juniper Works", "Kite Metrics", "Lumen Data",
    "Mosaic Platforms", "Northwind Digital", "Orbit Services", "Pinnacle AI",
    "Quantbase", "Riverstone", "Summit Cloud", "Vertex Solutions",
]

SKILL_POOL = [
    "python", "sql", "spark", "ml", "pytorch", "tensorflow", "java", "go",
    "react", "kubernetes", "aws", "statistics", "excel", "communication",
]

# parent -> children; undirected edges at query time
TAXONOMY_TREE = {
    "technology professional": [
        "software engineer", "data specialist", "product professional",
        "quality engineer", "security specialist",
        "infrastructure specialist", "sales professional",
        "hr professional", "research scientist",
    ],
    "software engineer": [
        "senior software engineer", "junior software engineer",
        "backend engineer", "frontend engineer", "full stack engineer",
        "mobile engineer", "devops engineer", "engineering manager",
    ],
    "data specialist": [
        "data scientist", "data engineer", "data analyst",
        "machine learning engineer", "business intelligence analyst",
    ],
    "data scientist": [
        "senior data scientist", "junior data scientist",
        "staff data scientist", "nlp scientist",
    ],
    "product professional": [
        "product manager", "product designer", "ux designer", "ui designer",
        "technical program manager",
    ],
    "quality engineer": ["qa analyst", "test automation engineer"],
    "security specialist": ["security engineer", "security analyst"],
    "infrastructure specialist": [
        "site reliability engineer", "cloud engineer", "network engineer",
        "database administrator",
    ],
    "sales professional": [
        "account executive", "sales engineer", "customer success manager",
    ],
    "hr professional": ["recruiter", "talent sourcer", "hr generalist"],
    "research scientist": ["applied scientist", "research engineer"],
}

FIRST_NAMES = [
    "Alex", "Bailey", "Casey", "Devon", "Emerson", "Finley", "Gray",
    "Harper", "Indigo", "Jules", "Kendall", "Logan", "Morgan", "Noel",
    "Oakley", "Parker", "Quinn", "Riley", "Sage", "Taylor",
]

LAST_NAMES = [
    "Adams", "Brooks", "Chen", "Diaz", "Ellis", "Flores", "Garcia",
    "Hughes", "Ito", "Jensen", "Khan", "Lopez", "Murphy", "Nguyen",
    "Ortiz", "Patel", "Quintero", "Rivera", "Singh", "Tran",
]

JOB_COUNT = 200
APPLICANT_COUNT = 1000
PROFILE_COUNT = 50


def taxonomy_nodes() -> list:
    nodes = set(TAXONOMY_TREE)
    for children in TAXONOMY_TREE.values():
        nodes.update(children)
    return sorted(nodes)


def taxonomy_edges() -> list:
    return sorted([parent, child] for parent, children in TAXONOMY_TREE.items()
                  for child in children)


def titles_within_hops(seed: str, hops: int) -> set:
    """Undirected BFS over the taxonomy (excludes the seed itself)."""
    adjacent: dict = {}
    for a, b in taxonomy_edges():
        adjacent.setdefault(a, set()).add(b)
        adjacent.setdefault(b, set()).add(a)
    frontier = {seed}
    seen = {seed}
    for _ in range(hops):
        frontier = {n for cur in frontier for n in adjacent.get(cur, ())} - seen
        seen |= frontier
    return seen - {seed}


def _job_rows() -> list:
    rng = random.Random(RNG_SEED)
    near_titles = sorted(titles_within_hops("data scientist", 2))
    job_titles = [t for t in taxonomy_nodes()
                  if t not in TAXONOMY_TREE or t == "data scientist"]
    all_cities = sorted(set(OTHER_CITIES) | set(BAY_AREA_CITIES))
    rows = []
    # pinned rows: exact-title matches in and out of the bay area, taxonomy
    # neighbours in the bay area, and decoys
    pinned = [
        ("data scientist", "Globex", "San Francisco"),
        ("data scientist", "Acme Analytics", "Palo Alto"),
        ("data scientist", "Quantbase", "Oakland"),
        ("data scientist", "Initech", "Austin"),
        ("data scientist", "Lumen Data", "New York"),
        ("senior data scientist", "Pinnacle AI", "San Jose"),
        ("junior data scientist", "DataForge", "Mountain View"),
        ("staff data scientist", "Kite Metrics", "Berkeley"),
        ("machine learning engineer", "BlueSky Software", "Sunnyvale"),
        ("data analyst", "Riverstone", "Santa Clara"),
        ("data engineer", "Summit Cloud", "Fremont"),
        ("nlp scientist", "Helios Computing", "Redwood City"),
        ("senior data scientist", "Globex", "Chicago"),
        ("frontend engineer", "Initech", "San Francisco"),
        ("recruiter", "Northwind Digital", "Palo Alto"),
    ]
    for index, (title, company, city) in enumerate(pinned, start=1):
        skills = sorted(rng.sample(SKILL_POOL, k=rng.randint(2, 5)))
        rows.append({"id": index, "title": title, "company": company,
                     "city": city, "skills": ";".join(skills)})
    for index in range(len(pinned) + 1, JOB_COUNT + 1):
        bucket = rng.random()
        if bucket < 0.25:
            title = rng.choice(near_titles)
        else:
            title = rng.choice(job_titles)
        city = rng.choice(all_cities)
        company = rng.choice(COMPANIES)
        skills = sorted(rng.sample(SKILL_POOL, k=rng.randint(2, 5)))
        rows.append({"id": index, "title": title, "company": company,
                     "city": city, "skills": ";".join(skills)})
    return rows


def _applicant_rows(jobs: list) -> list:
    rng = random.Random(RNG_SEED + 1)
    rows = []
    for index in range(1, APPLICANT_COUNT + 1):
        name = f"{rng.choice(FIRST_NAMES)} {rng.choice(LAST_NAMES)}"
        job = rng.choice(jobs)
        skills = set(rng.sample(SKILL_POOL, k=rng.randint(2, 5)))
        if rng.random() < 0.4:
            skills.add("python")
        rows.append({"id": index, "name": name, "job_id": job["id"],
                     "skills": ";".join(sorted(skills)),
                     "years": rng.randint(0, 15)})
    return rows


def _profile_docs() -> list:
    rng = random.Random(RNG_SEED + 2)
    titles = sorted(titles_within_hops("data specialist", 2) |
                    {"software engineer", "product manager"})
    locations = sorted(set(BAY_AREA_CITIES) | {"Austin", "Seattle", "Boston"})
    docs = []
    for index in range(1, PROFILE_COUNT + 1):
        docs.append({
            "id": index,
            "name": f"{rng.choice(FIRST_NAMES)} {rng.choice(LAST_NAMES)}",
            "title": rng.choice(titles),
            "location": rng.choice(locations),
            "years": rng.randint(0, 20),
            "skills": sorted(rng.sample(SKILL_POOL, k=rng.randint(2, 6))),
        })
    return docs


def agent_descriptors() -> list:
    """Seed agent registry: the case-study cast plus the model-as-agent."""
    return [
        {
            "name": "IntentClassifier",
            "description": "Classify a user utterance into an intent label: "
                           "job search, summarize, open query, list edit, or "
                           "smalltalk.",
            "inputs": [{"name": "Utterance", "semantic_type": "TEXT",
                        "description": "raw user utterance text",
                        "route_tags": ["UTTERANCE"]}],
            "outputs": [{"name": "Intent", "semantic_type": "RECORD",
                         "description": "intent label with the original text",
                         "tags": ["INTENT"]}],
            "listen_rules": {"include": ["UTTERANCE"], "exclude": []},
            "qos": {"cost": 0.1, "latency_ms": 5, "quality": 0.99},
            "processor_ref": "builtin:intent_classifier",
        },
        {
            "name": "AgenticEmployer",
            "description": "Conversation driver for the employer experience: "
                           "route classified intents and interface events to "
                           "query streams and task plans.",
            "inputs": [
                {"name": "Intent", "semantic_type": "RECORD",
                 "description": "classified intent record",
                 "required": False, "route_tags": ["INTENT"]},
                {"name": "Event", "semantic_type": "EVENT",
                 "description": "user interface event object",
                 "required": False, "route_tags": ["EVENT"]},
            ],
            "outputs": [
                {"name": "Query", "semantic_type": "TEXT",
                 "description": "open query text for translation",
                 "tags": ["NLQ"]},
                {"name": "Job Id", "semantic_type": "NUMBER",
                 "description": "selected job identifier", "tags": ["JOBID"]},
            ],
            "listen_rules": {"include": ["INTENT", "EVENT"], "exclude": []},
            "qos": {"cost": 0.2, "latency_ms": 5, "quality": 0.95},
            "processor_ref": "builtin:agentic_employer",
        },
        {
            "name": "Profiler",
            "description": "Gather job seeker background information with a "
                           "profile form: desired title, location, years of "
                           "experience.",
            "inputs": [
                {"name": "Criteria", "semantic_type": "TEXT",
                 "description": "search criteria text seeding the form",
                 "required": False, "route_tags": ["CRITERIA"]},
                {"name": "Form Event", "semantic_type": "EVENT",
                 "description": "form submission event",
                 "required": False, "route_tags": ["EVENT"]},
            ],
            "outputs": [
                {"name": "Form", "semantic_type": "FORM",
                 "description": "profile form specification",
                 "tags": ["FORM"]},
                {"name": "Profile", "semantic_type": "RECORD",
                 "description": "job seeker profile record",
                 "tags": ["PROFILE"]},
            ],
            "listen_rules": {"include": ["EVENT"], "exclude": []},
            "qos": {"cost": 1.0, "latency_ms": 50, "quality": 0.9},
            "processor_ref": "builtin:profiler",
        },
        {
            "name": "JobMatcher",
            "description": "Match a job seeker profile with available job "
                           "listings, scoring title, location, and skill fit.",
            "inputs": [
                {"name": "Job Seeker Data", "semantic_type": "RECORD",
                 "description": "job seeker profile record"},
                {"name": "Jobs", "semantic_type": "TABLE",
                 "description": "table of job listings"},
                {"name": "Criteria", "semantic_type": "TEXT",
                 "description": "optional extra matching criteria",
                 "required": False, "default": ""},
            ],
            "outputs": [{"name": "Matches", "semantic_type": "TABLE",
                         "description": "scored matching jobs",
                         "tags": ["MATCHES"]}],
            "listen_rules": None,
            "deployment": {"image": "agents/job-matcher:1.4",
                           "config": {"replicas": 2, "cpu": "500m"}},
            "qos": {"cost": 2.0, "latency_ms": 120, "quality": 0.85},
            "processor_ref": "builtin:job_matcher",
        },
        {
            "name": "Presenter",
            "description": "Present matched results to the end user as a "
                           "rendered list.",
            "inputs": [{"name": "Items", "semantic_type": "TABLE",
                        "description": "result items to render"}],
            "outputs": [{"name": "Rendering", "semantic_type": "RECORD",
                         "description": "list render payload",
                         "tags": ["RESULT", "RENDER"]}],
            "listen_rules": None,
            "qos": {"cost": 0.2, "latency_ms": 10, "quality": 0.99},
            "processor_ref": "builtin:presenter",
        },
        {
            "name": "NL2Q",
            "description": "Translate a natural language question into a "
                           "database query over a discovered collection.",
            "inputs": [{"name": "Question", "semantic_type": "TEXT",
                        "description": "natural language question",
                        "route_tags": ["NLQ"]}],
            "outputs": [{"name": "Query", "semantic_type": "TEXT",
                         "description": "generated database query",
                         "tags": ["SQL"]}],
            "listen_rules": {"include": ["NLQ"], "exclude": []},
            "qos": {"cost": 1.0, "latency_ms": 40, "quality": 0.9},
            "processor_ref": "builtin:nl2q",
        },
        {
            "name": "QueryExecutor",
            "description": "Execute a database query against the embedded "
                           "relational store and return the result table.",
            "inputs": [{"name": "Query", "semantic_type": "TEXT",
                        "description": "query text to execute",
                        "route_tags": ["SQL"]}],
            "outputs": [{"name": "Result", "semantic_type": "TABLE",
                         "description": "query result table",
                         "tags": ["QRESULT"]}],
            "listen_rules": {"include": ["SQL"], "exclude": []},
            "qos": {"cost": 1.5, "latency_ms": 80, "quality": 0.95},
            "processor_ref": "builtin:query_executor",
        },
        {
            "name": "QuerySummarizer",
            "description": "Explain query result tables in plain language for "
                           "the conversation.",
            "inputs": [
                {"name": "Result", "semantic_type": "TABLE",
                 "description": "query result table",
                 "route_tags": ["QRESULT"]},
                {"name": "Question", "semantic_type": "TEXT",
                 "description": "the originating question",
                 "required": False, "default": "", "route_tags": ["NLQ"]},
            ],
            "outputs": [{"name": "Summary", "semantic_type": "TEXT",
                         "description": "plain language explanation",
                         "tags": ["RESULT"]}],
            "listen_rules": {"include": ["QRESULT", "NLQ"], "exclude": []},
            "qos": {"cost": 1.0, "latency_ms": 60, "quality": 0.9},
            "processor_ref": "builtin:query_summarizer",
        },
        {
            "name": "Summarizer",
            "description": "Summarize the applicants for a selected job "
                           "posting.",
            "inputs": [{"name": "Job Id", "semantic_type": "NUMBER",
                        "description": "job posting identifier",
                        "route_tags": ["JOBID"]}],
            "outputs": [{"name": "Summary", "semantic_type": "TEXT",
                         "description": "applicant summary text",
                         "tags": ["RESULT"]}],
            "listen_rules": None,
            "qos": {"cost": 2.0, "latency_ms": 100, "quality": 0.9},
            "processor_ref": "builtin:summarizer",
        },
        {
            "name": "Responder",
            "description": "Reply to smalltalk greetings in conversation.",
            "inputs": [{"name": "Text", "semantic_type": "TEXT",
                        "description": "smalltalk text"}],
            "outputs": [{"name": "Reply", "semantic_type": "TEXT",
                         "description": "conversational reply",
                         "tags": ["RESULT"]}],
            "listen_rules": None,
            "qos": {"cost": 0.1, "latency_ms": 5, "quality": 0.99},
            "processor_ref": "builtin:responder",
        },
        {
            "name": "ListEditor",
            "description": "Add or remove applicants from a working list "
                           "using query instructions.",
            "inputs": [{"name": "Instruction", "semantic_type": "TEXT",
                        "description": "list mutation instruction"}],
            "outputs": [{"name": "Items", "semantic_type": "TABLE",
                         "description": "updated working list",
                         "tags": ["RESULT", "LIST"]}],
            "listen_rules": None,
            "qos": {"cost": 1.0, "latency_ms": 60, "quality": 0.9},
            "processor_ref": "builtin:list_editor",
        },
        {
            "name": "LLM",
            "description": "General knowledge language model completion used "
                           "as an agent.",
            "inputs": [{"name": "Prompt", "semantic_type": "TEXT",
                        "description": "completion prompt",
                        "route_tags": ["PROMPT"]}],
            "outputs": [{"name": "Completion", "semantic_type": "TEXT",
                         "description": "model completion text",
                         "tags": ["LLMOUT"]}],
            "listen_rules": {"include": ["PROMPT"], "exclude": []},
            "deployment": {"image": "models/completion-proxy:2.1",
                           "config": {"replicas": 1, "gpu": "a10"}},
            "qos": {"cost": 2.0, "latency_ms": 400, "quality": 0.8},
            "processor_ref": "builtin:llm",
        },
    ]


def catalog_sources() -> list:
    return [
        {"path": "/hr", "modality": "RELATIONAL",
         "description": "Enterprise HR data estate"},
        {"path": "/hr/HR", "modality": "RELATIONAL",
         "description": "HR relational database with jobs and applicants "
                        "tables"},
        {"path": "/hr/HR/Jobs", "modality": "RELATIONAL",
         "description": "Open job postings with titles, companies, cities, "
                        "and required skills",
         "schema": {"id": "int", "title": "str", "company": "str",
                    "city": "str", "skills": "str"},
         "connection": {"driver": "csv", "locator": "jobs.csv",
                        "table": "jobs", "credentials_ref": "hr-readonly"},
         "indices": ["jobs_by_city"],
         "cost_hints": {"per_call_cost": 0.01, "latency_ms": 5,
                        "quality": 1.0}},
        {"path": "/hr/HR/Applicants", "modality": "RELATIONAL",
         "description": "Applicants to job postings with names, skills, and "
                        "years of experience",
         "schema": {"id": "int", "name": "str", "job_id": "int",
                    "skills": "str", "years": "int"},
         "connection": {"driver": "csv", "locator": "applicants.csv",
                        "table": "applicants",
                        "credentials_ref": "hr-readonly"},
         "indices": ["applicants_by_job"],
         "cost_hints": {"per_call_cost": 0.01, "latency_ms": 5,
                        "quality": 1.0}},
        {"path": "/hr/Docs", "modality": "DOCUMENT",
         "description": "Document store databases"},
        {"path": "/hr/Docs/Profiles", "modality": "DOCUMENT",
         "description": "Job seeker profiles stored as documents with titles "
                        "locations and skills",
         "schema": {"id": "int", "name": "str", "title": "str",
                    "location": "str", "years": "int", "skills": "list"},
         "connection": {"driver": "jsondoc", "locator": "profiles.json",
                        "credentials_ref": "hr-readonly"},
         "cost_hints": {"per_call_cost": 0.02, "latency_ms": 8,
                        "quality": 0.95}},
        {"path": "/hr/Graph", "modality": "GRAPH",
         "description": "Graph databases"},
        {"path": "/hr/Graph/Titles", "modality": "GRAPH",
         "description": "Title taxonomy graph relating each job title to "
                        "its specializations",
         "schema": {"nodes": "title nodes",
                    "edges": "parent-child specialization relations"},
         "connection": {"driver": "jsongraph",
                        "locator": "titles_graph.json",
                        "credentials_ref": "hr-readonly"},
         "cost_hints": {"per_call_cost": 0.05, "latency_ms": 10,
                        "quality": 0.9}},
        {"path": "/models", "modality": "MODEL",
         "description": "Hosted generative models"},
        {"path": "/models/gpt", "modality": "MODEL",
         "description": "General knowledge language model queried as a data "
                        "source",
         "schema": {"capability": "general knowledge text completion"},
         "connection": {"driver": "mock", "locator": "MOCK",
                        "credentials_ref": "openai-key"},
         "cost_hints": {"per_call_cost": 2.0, "latency_ms": 400,
                        "quality": 0.8}},
    ]


def plan_templates() -> list:
    return [
        {"intent": "JOB_SEARCH",
         "nodes": [
             {"id": "profile",
              "capability": "gather job seeker background information with a "
                            "profile form",
              "bindings": {"Criteria": {"source": "USER.TEXT",
                                        "needs_transform": True}}},
             {"id": "match",
              "capability": "match a job seeker profile with available job "
                            "listings",
              "bindings": {"Job Seeker Data": {"edge": "profile.Profile"},
                           "Jobs": {"literal_source": "/hr/HR/Jobs"}}},
             {"id": "present",
              "capability": "present matched results to the end user",
              "bindings": {"Items": {"edge": "match.Matches"}}},
         ]},
        {"intent": "SUMMARIZE",
         "nodes": [
             {"id": "summarize",
              "capability": "summarize the applicants for a selected job "
                            "posting",
              "bindings": {"Job Id": {"source": "USER.EVENT",
                                      "needs_transform": True}}},
         ]},
        {"intent": "OPEN_QUERY",
         "nodes": [
             {"id": "translate",
              "capability": "translate a natural language question into a "
                            "database query",
              "bindings": {"Question": {"source": "USER.TEXT"}}},
             {"id": "execute",
              "capability": "execute a database query against the relational "
                            "store",
              "bindings": {"Query": {"edge": "translate.Query"}}},
             {"id": "explain",
              "capability": "explain query result tables in plain language",
              "bindings": {"Result": {"edge": "execute.Result"}}},
         ]},
        {"intent": "LIST_EDIT",
         "nodes": [
             {"id": "edit",
              "capability": "add or remove applicants from a working list",
              "bindings": {"Instruction": {"source": "USER.TEXT"}}},
         ]},
        {"intent": "SMALLTALK",
         "nodes": [
             {"id": "reply",
              "capability": "reply to smalltalk greetings in conversation",
              "bindings": {"Text": {"source": "USER.TEXT"}}},
         ]},
    ]


def mock_llm_script() -> list:
    return [
        {"match": "cities in the sf bay area",
         "response": ", ".join(BAY_AREA_CITIES),
         "cost": 2.0, "latency_ms": 400},
        {"match": "job titles equivalent to",
         "response": ", ".join(sorted(
             titles_within_hops("data scientist", 2) | {"data scientist"})),
         "cost": 2.0, "latency_ms": 400},
        {"match": "", "response": "I can help with that.",
         "cost": 1.0, "latency_ms": 100},
    ]


def scenario_scripts() -> dict:
    base_budget = {"cost": 100.0, "latency_ms": 600000.0, "min_quality": 0.0,
                   "policy": "ABORT"}
    return {
        "ui_select_summary": {
            "name": "ui_select_summary",
            "session": {"agents": ["AgenticEmployer", "Summarizer"],
                        "plan_mode": "AUTO", "budget": dict(base_budget)},
            "steps": [
                {"actor": "user", "action": "event",
                 "payload": {"type": "select", "entity": "job", "id": 7},
                 "expect": ["EVENT", "JOBID", "PLAN", "EXEC", "RESULT"]},
            ],
        },
        "conversation_query": {
            "name": "conversation_query",
            "session": {"agents": ["IntentClassifier", "AgenticEmployer",
                                   "NL2Q", "QueryExecutor",
                                   "QuerySummarizer"],
                        "plan_mode": "AUTO", "budget": dict(base_budget)},
            "steps": [
                {"actor": "user", "action": "utterance",
                 "payload": "how many applicants have python skills",
                 "expect": ["UTTERANCE", "INTENT", "NLQ", "SQL", "QRESULT",
                            "RESULT"]},
            ],
        },
        "job_search_conversation": {
            "name": "job_search_conversation",
            "session": {"agents": ["IntentClassifier", "AgenticEmployer",
                                   "Profiler", "JobMatcher", "Presenter"],
                        "plan_mode": "AUTO", "budget": dict(base_budget)},
            "steps": [
                {"actor": "user", "action": "utterance",
                 "payload": "I am looking for a data scientist position in "
                            "SF bay area.",
                 "expect": ["UTTERANCE", "INTENT", "PLAN", "EXEC", "FORM"]},
                {"actor": "user", "action": "event",
                 "payload": {"type": "form_submit", "form_id": "form-S1-1",
                             "values": {}},
                 "expect": ["EVENT", "PROFILE", "EXEC", "RESULT"]},
            ],
        },
        "budget_abort": {
            "name": "budget_abort",
            "session": {"agents": ["AgenticEmployer", "Summarizer"],
                        "plan_mode": "AUTO",
                        "budget": {"cost": 0.5, "latency_ms": 600000.0,
                                   "min_quality": 0.0, "policy": "ABORT"}},
            "steps": [
                {"actor": "user", "action": "event",
                 "payload": {"type": "select", "entity": "job", "id": 7},
                 "expect": ["EVENT", "PLAN", "ABORT"],
                 "forbid": ["EXEC"]},
            ],
        },
        "budget_confirm": {
            "name": "budget_confirm",
            "session": {"agents": ["AgenticEmployer", "Summarizer"],
                        "plan_mode": "AUTO",
                        "budget": {"cost": 0.5, "latency_ms": 600000.0,
                                   "min_quality": 0.0, "policy": "CONFIRM"}},
            "steps": [
                {"actor": "user", "action": "event",
                 "payload": {"type": "select", "entity": "job", "id": 7},
                 "expect": ["EVENT", "PLAN", "CONFIRM"],
                 "forbid": ["EXEC"]},
                {"actor": "user", "action": "confirm_budget",
                 "payload": {"decision": "approve"},
                 "expect": ["DECISION", "EXEC", "RESULT"]},
            ],
        },
        "budget_replan": {
            "name": "budget_replan",
            "session": {"agents": ["AgenticEmployer", "Summarizer"],
                        "plan_mode": "AUTO",
                        "budget": {"cost": 0.5, "latency_ms": 600000.0,
                                   "min_quality": 0.0, "policy": "REPLAN"}},
            "steps": [
                {"actor": "user", "action": "event",
                 "payload": {"type": "select", "entity": "job", "id": 7},
                 "expect": ["EVENT", "PLAN", "REPLAN", "PLAN"],
                 "forbid": ["EXEC"]},
            ],
        },
        "smalltalk": {
            "name": "smalltalk",
            "session": {"agents": ["IntentClassifier", "AgenticEmployer",
                                   "Responder"],
                        "plan_mode": "AUTO", "budget": dict(base_budget)},
            "steps": [
                {"actor": "user", "action": "utterance",
                 "payload": "hello there",
                 "expect": ["UTTERANCE", "INTENT", "PLAN", "EXEC", "RESULT"]},
            ],
        },
        "list_edit": {
            "name": "list_edit",
            "session": {"agents": ["IntentClassifier", "AgenticEmployer",
                                   "ListEditor"],
                        "plan_mode": "AUTO", "budget": dict(base_budget)},
            "steps": [
                {"actor": "user", "action": "utterance",
                 "payload": "add applicants with python skills to my list",
                 "expect": ["UTTERANCE", "INTENT", "PLAN", "EXEC", "RESULT"]},
            ],
        },
    }


def generate(out_dir, force: bool = False) -> dict:
    """Materialize the full seed tree; returns file/row counts."""
    out = Path(out_dir)
    data_dir = out / "data"
    scenario_dir = out / "scenarios"
    for directory in (out, data_dir, scenario_dir):
        directory.mkdir(parents=True, exist_ok=True)
    counts = {}

    jobs = _job_rows()
    _write_csv(data_dir / "jobs.csv",
               ["id", "title", "company", "city", "skills"], jobs, force)
    counts["jobs"] = len(jobs)

    applicants = _applicant_rows(jobs)
    _write_csv(data_dir / "applicants.csv",
               ["id", "name", "job_id", "skills", "years"], applicants, force)
    counts["applicants"] = len(applicants)

    profiles = _profile_docs()
    _write_json(data_dir / "profiles.json", profiles, force)
    counts["profiles"] = len(profiles)

    graph = {"nodes": taxonomy_nodes(), "edges": taxonomy_edges(),
             "description": "title taxonomy"}
    _write_json(data_dir / "titles_graph.json", graph, force)
    counts["taxonomy_nodes"] = len(graph["nodes"])

    _write_json(data_dir / "regions.json", REGIONS, force)
    counts["regions"] = len(REGIONS)

    _write_yaml(out / "agents.yaml", agent_descriptors(), force)
    counts["agents"] = len(agent_descriptors())
    _write_yaml(out / "catalog.yaml", catalog_sources(), force)
    counts["sources"] = len(catalog_sources())
    _write_yaml(out / "templates.yaml", plan_templates(), force)
    counts["templates"] = len(plan_templates())
    _write_yaml(out / "mockllm.yaml", mock_llm_script(), force)
    counts["script_entries"] = len(mock_llm_script())

    for name, script in scenario_scripts().items():
        _write_yaml(scenario_dir / f"{name}.yaml", script, force)
    counts["scenarios"] = len(scenario_scripts())
    return counts


def _write_csv(path: Path, columns: list, rows: list, force: bool) -> None:
    if path.exists() and not force:
        return
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


def _write_json(path: Path, payload, force: bool) -> None:
    if path.exists() and not force:
        return
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
                    encoding="utf-8")


def _write_yaml(path: Path, payload, force: bool) -> None:
    if path.exists() and not force:
        return
    path.write_text(yaml.safe_dump(payload, sort_keys=False,
                                   allow_unicode=True),
                    encoding="utf-8")
