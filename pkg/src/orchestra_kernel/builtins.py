"""Built-in deterministic agents for the HR scenario.

Each processor follows the runtime contract: ``fn(inputs, ctx) ->
iterable of (param, value, tags)``. Registered under ``builtin:<key>``
processor refs; descriptors ship in the generated agent seed file.
"""
from __future__ import annotations

import re
from typing import Optional

from . import grammar
from .dataplan import summarize_table
from .errors import NoTemplateMatch, SchemaMismatch, UnknownJob, UnknownTable

INTENTS_ORDERED = (
    ("JOB_SEARCH", ("looking for", "find me a job", "job search",
                    "position in", "find a job")),
    ("SUMMARIZE", ("summarize", "summary of", "sum up")),
    ("OPEN_QUERY", ("how many", "which ", "what ", "who ", "count ",
                    "average ", "top ")),
)


def classify_intent(text: str) -> str:
    """Ordered keyword rules; SMALLTALK is the fallback."""
    lowered = f" {text.lower().strip()} "
    for intent, keywords in INTENTS_ORDERED:
        if any(keyword in lowered for keyword in keywords):
            return intent
    if ("list" in lowered
            and any(verb in lowered for verb in (" add ", " remove "))):
        return "LIST_EDIT"
    return "SMALLTALK"


def intent_classifier(inputs: dict, ctx):
    text = inputs["Utterance"]
    label = classify_intent(text)
    return [("Intent", {"intent": label, "text": text}, ("INTENT",))]


def agentic_employer(inputs: dict, ctx):
    """Conversation driver: UI events become summarize plans, classified
    intents route to the NLQ stream or the task planner."""
    outputs = []
    event = inputs.get("Event")
    if event and event.get("type") == "select" and event.get("entity") == "job":
        # job id first, then the plan proposal (the planner emits it)
        ctx.emit("Job Id", int(event["id"]), ("JOBID",))
        ctx.kernel.task_planner.plan("", "SUMMARIZE", ctx.session, event=event)
        return outputs
    record = inputs.get("Intent")
    if not record:
        return outputs
    intent = record.get("intent", "SMALLTALK")
    text = record.get("text", "")
    if intent == "OPEN_QUERY":
        outputs.append(("Query", text, ("NLQ",)))
        return outputs
    event = None
    if intent == "SUMMARIZE":
        match = re.search(r"\d+", text)
        if match:
            event = {"type": "select", "entity": "job",
                     "id": int(match.group(0))}
    ctx.kernel.task_planner.plan(text, intent, ctx.session, event=event)
    return outputs


_CRITERIA = re.compile(r"^(?P<title>.+?)\s+positions?\s+in\s+(?:the\s+)?"
                       r"(?P<loc>.+?)[.?]?$", re.IGNORECASE)


def profiler(inputs: dict, ctx):
    """Emits a prefilled profile form; a later form-submit event yields the
    Profile record. Pending forms are the one piece of instance state."""
    outputs = []
    criteria = inputs.get("Criteria")
    if criteria:
        pending = ctx.state.setdefault("pending", {})
        seq = ctx.state.get("form_seq", 0) + 1
        ctx.state["form_seq"] = seq
        form_id = f"form-{ctx.session}-{seq}"
        prefill = {"title": "", "location": ""}
        match = _CRITERIA.match(criteria.strip())
        if match:
            prefill["title"] = match.group("title").strip().lower()
            prefill["location"] = match.group("loc").strip()
        pending[form_id] = {"criteria": criteria, "prefill": prefill,
                            "attribution": ctx.attribution}
        form = {
            "form_id": form_id,
            "fields": [
                {"name": "title", "label": "Desired title", "type": "text",
                 "value": prefill["title"]},
                {"name": "location", "label": "Location", "type": "text",
                 "value": prefill["location"]},
                {"name": "years", "label": "Years of experience",
                 "type": "number", "value": None},
            ],
            "submit_event": "form_submit",
        }
        outputs.append(("Form", form, ("FORM",)))
    event = inputs.get("Form Event")
    if event and event.get("type") == "form_submit":
        pending = ctx.state.setdefault("pending", {})
        entry = pending.pop(event.get("form_id"), None)
        if entry is not None:
            values = event.get("values") or {}
            profile = {
                "title": values.get("title") or entry["prefill"]["title"],
                "location": values.get("location") or entry["prefill"]["location"],
                "years": values.get("years") if values.get("years") is not None else 0,
                "skills": values.get("skills") or [],
            }
            ctx.emit("Profile", profile, ("PROFILE",),
                     attribution=entry["attribution"])
    return outputs


REQUIRED_JOB_COLUMNS = ("id", "title", "company", "city", "skills")
MATCH_WEIGHTS = (0.5, 0.3, 0.2)  # title, location, skills
MATCH_THRESHOLD = 0.5
TAXONOMY_MAX_HOPS = 2


def _tokens(text: str) -> set:
    return set(re.findall(r"[a-z0-9]+", str(text).lower()))


def title_similarity(a: str, b: str, taxonomy=None) -> float:
    """Token overlap, upgraded by taxonomy proximity (0.5 per hop)."""
    tokens_a, tokens_b = _tokens(a), _tokens(b)
    if not tokens_a or not tokens_b:
        return 0.0
    overlap = len(tokens_a & tokens_b) / len(tokens_a | tokens_b)
    credit = 0.0
    if taxonomy is not None:
        na, nb = str(a).strip().lower(), str(b).strip().lower()
        if na == nb:
            credit = 1.0
        else:
            reachable = {na}
            frontier = {na}
            for hop in range(1, TAXONOMY_MAX_HOPS + 1):
                frontier = {n for cur in frontier
                            for n in taxonomy.adjacent.get(cur, ())} - reachable
                reachable |= frontier
                if nb in frontier:
                    credit = 0.5 ** hop
                    break
    return max(overlap, credit)


def job_matcher(inputs: dict, ctx):
    profile = inputs["Job Seeker Data"]
    jobs = inputs["Jobs"]
    columns = list(jobs.get("columns", ()))
    missing = [c for c in REQUIRED_JOB_COLUMNS if c not in columns]
    if missing:
        raise SchemaMismatch(f"jobs table missing columns: {missing}")
    taxonomy = getattr(ctx.kernel, "taxonomy", None)
    regions = getattr(ctx.kernel, "regions", {}) or {}
    location = str(profile.get("location", "")).strip()
    region_cities = {c.lower() for c in regions.get(location.lower(), ())}
    wanted = {s.strip().lower() for s in _iter_skills(profile.get("skills"))}
    w_title, w_location, w_skills = MATCH_WEIGHTS
    scored = []
    for row in jobs["rows"]:
        record = dict(zip(columns, row))
        t_sim = title_similarity(profile.get("title", ""), record["title"],
                                 taxonomy)
        city = str(record.get("city", "")).strip().lower()
        l_sim = 1.0 if (city and (city == location.lower()
                                  or city in region_cities)) else 0.0
        job_skills = {s.strip().lower()
                      for s in _iter_skills(record.get("skills"))}
        s_sim = (len(wanted & job_skills) / len(wanted)) if wanted else 0.0
        score = w_title * t_sim + w_location * l_sim + w_skills * s_sim
        if score >= MATCH_THRESHOLD:
            scored.append((round(score, 6), record))
    scored.sort(key=lambda pair: (-pair[0], pair[1]["id"]))
    out_columns = list(REQUIRED_JOB_COLUMNS) + ["score"]
    rows = [[record[c] for c in REQUIRED_JOB_COLUMNS] + [score]
            for score, record in scored]
    return [("Matches", {"columns": out_columns, "rows": rows}, ())]


def _iter_skills(value):
    if value is None:
        return []
    if isinstance(value, str):
        return [s for s in value.split(";") if s]
    return list(value)


def presenter(inputs: dict, ctx):
    items = inputs["Items"]
    columns = items.get("columns", [])
    rows = items.get("rows", [])
    entries = [dict(zip(columns, row)) for row in rows]
    if entries:
        text = f"Found {len(entries)} matching jobs."
    else:
        text = "No matching jobs found."
    payload = {"kind": "list", "count": len(entries), "items": entries,
               "text": text}
    return [("Rendering", payload, ("RESULT", "RENDER"))]


def nl2q(inputs: dict, ctx):
    question = inputs["Question"]
    parsed = grammar.parse_query(question)
    if parsed is None:
        raise NoTemplateMatch(f"no query template matches: {question!r}")
    hits = ctx.kernel.data_registry.discover(parsed.table_hint, "RELATIONAL",
                                             k=1)
    if not hits or hits[0][1] <= 0.0:
        raise UnknownTable(f"no relational source for {parsed.table_hint!r}")
    record = hits[0][0]
    table = record.connection.get("table", record.path.name.lower())
    sql = grammar.build_sql(parsed, table, record.schema)
    if sql is None:
        raise NoTemplateMatch(f"fragments do not map onto {record.path}")
    return [("Query", sql, ("SQL",))]


def query_executor(inputs: dict, ctx):
    table = ctx.kernel.store.query(inputs["Query"])
    return [("Result", table.to_payload(), ("QRESULT",))]


def query_summarizer(inputs: dict, ctx):
    result = inputs["Result"]
    question = inputs.get("Question") or ""
    if ctx.kernel.config.get("summarizer_llm"):
        backend = ctx.kernel.mock_llm
        if backend is not None:
            prompt = f"Explain this query result for: {question}\n{result}"
            completion = backend.complete(prompt)
            ctx.charge(cost=completion.cost,
                       latency_ms=completion.latency_ms)
            return [("Summary", completion.text, ("RESULT",))]
    return [("Summary", summarize_table(result, question), ("RESULT",))]


def summarizer(inputs: dict, ctx):
    job_id = int(inputs["Job Id"])
    jobs = ctx.kernel.store.table("jobs")
    job = next((row for row in jobs.rows if row.get("id") == job_id), None)
    if job is None:
        raise UnknownJob(f"no job with id {job_id}")
    applicants = ctx.kernel.store.table("applicants")
    hits = [row for row in applicants.rows if row.get("job_id") == job_id]
    header = (f"Job {job_id} ({job['title']} at {job['company']}, "
              f"{job['city']})")
    if not hits:
        text = f"{header} has no applicants."
    else:
        counts: dict = {}
        for row in hits:
            for skill in _iter_skills(row.get("skills")):
                key = skill.strip().lower()
                counts[key] = counts.get(key, 0) + 1
        top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:3]
        text = (f"{header}: {len(hits)} applicant(s). "
                f"Top skills: {', '.join(skill for skill, _ in top)}.")
    return [("Summary", text, ("RESULT",))]


def responder(inputs: dict, ctx):
    return [("Reply",
             "Hello! I can help you search jobs, query applicants, or "
             "summarize postings.",
             ("RESULT",))]


_LIST_EDIT = re.compile(r"^(?P<verb>add|remove)\s+(?:the\s+)?applicants?\s+"
                        r"with\s+(?P<skill>.+?)\s+skills?\s+(?:to|from)\s+"
                        r"(?:my\s+|the\s+)?list[.!]?$", re.IGNORECASE)


def list_editor(inputs: dict, ctx):
    """Two list mutations: add matching applicants, or remove them (which
    empties the fresh working list)."""
    instruction = " ".join(inputs["Instruction"].split())
    match = _LIST_EDIT.match(instruction)
    if match is None:
        raise NoTemplateMatch(f"unsupported list edit: {instruction!r}")
    applicants = ctx.kernel.store.table("applicants")
    columns = list(applicants.columns)
    if match.group("verb").lower() == "add":
        skill = match.group("skill").strip().lower()
        rows = [[row.get(c) for c in columns] for row in applicants.rows
                if skill in str(row.get("skills", "")).lower()]
    else:
        rows = []
    return [("Items", {"columns": columns, "rows": rows},
             ("RESULT", "LIST"))]


def llm_completion(inputs: dict, ctx):
    backend = ctx.kernel.default_model_backend()
    completion = backend.complete(inputs["Prompt"])
    ctx.charge(cost=completion.cost, latency_ms=completion.latency_ms)
    return [("Completion", completion.text, ("LLMOUT",))]


PROCESSORS = {
    "intent_classifier": intent_classifier,
    "agentic_employer": agentic_employer,
    "profiler": profiler,
    "job_matcher": job_matcher,
    "presenter": presenter,
    "nl2q": nl2q,
    "query_executor": query_executor,
    "query_summarizer": query_summarizer,
    "summarizer": summarizer,
    "responder": responder,
    "list_editor": list_editor,
    "llm": llm_completion,
}
