"""HTTP contract tests: do the endpoints lift and validate what they are sent, and refuse what they can't read?"""

from __future__ import annotations

import pytest
from conftest import chunk_text
from fastapi.testclient import TestClient

from asmlift.api import app
from asmlift.ledger import AssumptionLedger


@pytest.fixture
def client():
    return TestClient(app)


# ── Health ───────────────────────────────────────────────────────────


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok"}


# ── Lift ─────────────────────────────────────────────────────────────


def test_lift_returns_c_ir_and_ledger(client):
    r = client.post("/lift", json={"chunk": chunk_text("fd_zero"), "name": "fd_zero", "level": "O4"})
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "relevant"
    assert body["report"]["lifted"] is True
    assert "void __lift_fd_zero(" in body["c"]
    assert body["ir"].startswith("bb0:")
    assert len(AssumptionLedger.from_jsonl(body["ledger"])) > 0


def test_lift_of_an_unsupported_chunk_reports_its_status(client):
    r = client.post("/lift", json={"chunk": chunk_text("rdtsc"), "name": "rdtsc"})
    assert r.status_code == 200
    assert r.json()["status"] == "out-of-scope"
    assert r.json()["c"] == ""


def test_relaxations_are_applied(client):
    chunk = ".arch x86-32\n.template\nmovl %1, (%0)\n.inputs\nr p : ptr(u32)\nr x : u32\n"
    strict = client.post("/lift", json={"chunk": chunk})
    relaxed = client.post("/lift", json={"chunk": chunk, "relax": ["memory"]})
    assert strict.json()["status"] == "rejected"
    assert relaxed.json()["status"] == "relevant"


def test_unknown_level_is_rejected(client):
    r = client.post("/lift", json={"chunk": chunk_text("umin"), "level": "O9"})
    assert r.status_code == 422


# ── Validate ─────────────────────────────────────────────────────────


def test_validate_pair(client):
    r = client.post("/validate", json={
        "original": "bb0:\n  t<8> := a<8> ^ 255<8>\n  r<8> := t ^ 255<8>\n  halt\n",
        "lifted": "bb0:\n  r<8> := a<8>\n  halt\n",
        "observables": ["r"],
    })
    assert r.status_code == 200
    assert r.json()["kind"] == "EQUIVALENT"


def test_validate_finds_a_difference(client):
    r = client.post("/validate", json={
        "original": "bb0:\n  r<8> := a<8> + 1<8>\n  halt\n",
        "lifted": "bb0:\n  r<8> := a<8> | 1<8>\n  halt\n",
        "observables": ["r"],
        "seed": 3,
    })
    assert r.status_code == 200
    assert r.json()["kind"] == "NOT_EQUIVALENT"


def test_unparsable_ir_is_a_422_with_the_error(client):
    r = client.post("/validate", json={"original": "bb0:\n  goto nowhere\n", "lifted": "bb0:\n  halt\n"})
    assert r.status_code == 422
    assert r.json()["result"] is None
    assert "nowhere" in r.json()["error"]
