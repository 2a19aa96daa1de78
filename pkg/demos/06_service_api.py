"""Drive the annotation/review HTTP API in-process (no network needed).

Run: python3 demos/06_service_api.py
For a real server + browser UI:  aoml serve --project <dir>
"""

import tempfile

from fastapi.testclient import TestClient

from aoml.corpus import ReviewDocument, save_corpus
from aoml.project import Project
from aoml.service import build_app

with tempfile.TemporaryDirectory() as tmp:
    project = Project(tmp)
    project.ensure_layout()
    save_corpus([ReviewDocument(id="r1", text="good camera"),
                 ReviewDocument(id="r2", text="poor battery life")],
                project.corpus_path)

    client = TestClient(build_app(project.root))

    listing = client.get("/api/documents").json()
    print("documents:", [(d["id"], d["annotated"]) for d in listing["documents"]])

    doc = client.get("/api/documents/r1").json()
    print("tokens:", [t["surface"] for t in doc["tokens"]],
          "| revision:", repr(doc["revision"]))

    # first write: empty revision token; the response is the canonical form
    put = client.put("/api/documents/r1/annotations", json={
        "revision": "",
        "entities": [{"start": 0, "end": 4, "label": "OPI"},
                     {"start": 5, "end": 11, "label": "ASP"}],
        "relations": [{"head": 1, "tail": 0, "label": "ASP-OPI"}]})
    saved = put.json()
    print("saved revision:", saved["revision"][:12], "...")

    # a stale token is refused and changes nothing
    stale = client.put("/api/documents/r1/annotations", json={
        "revision": "deadbeef", "entities": [], "relations": []})
    print("stale write ->", stale.status_code, stale.json()["error"])

    # invariant violations come back with the invariant's name
    bad = client.put("/api/documents/r2/annotations", json={
        "revision": "",
        "entities": [{"start": 0, "end": 9, "label": "OPI"},
                     {"start": 5, "end": 12, "label": "ASP"}],
        "relations": []})
    print("overlapping spans ->", bad.status_code, bad.json()["error"])

    print("version header on every response:",
          put.headers["X-AOML-Version"])
