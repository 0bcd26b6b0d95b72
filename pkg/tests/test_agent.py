import pytest
from fastapi.testclient import TestClient

from sealshare import queryparse
from sealshare.client import (
    PatientClient,
    PractitionerClient,
    create_patient_agent,
    create_practitioner_agent,
)
from sealshare.server import ProxyService, ServiceConfig, create_app

PASS = "agent passphrase"
VOCAB = ["covid-19", "pneumonia", "happy"]


@pytest.fixture()
def world(tmp_path):
    service = ProxyService(ServiceConfig(storage_root=str(tmp_path / "server")))
    http = TestClient(create_app(service))
    patient = PatientClient.init(tmp_path / "pt", http, "pt-0", PASS,
                                 vocabulary=VOCAB, profile="test-fast", seed=5)
    doctor = PractitionerClient.init(tmp_path / "dr", http, "dr-0", PASS)

    docs = tmp_path / "docs"
    docs.mkdir()
    for name, content, words in (("a.png", b"A", ["covid-19"]),
                                 ("b.png", b"B", ["pneumonia"]),
                                 ("c.png", b"C", ["happy"])):
        (docs / name).write_bytes(content)
        (docs / f"{name}.keywords").write_text("\n".join(words))
    patient.ingest(sorted(docs.glob("*.png")))

    agent = TestClient(create_patient_agent(patient, proxy_url="http://proxy"))
    prac_agent = TestClient(create_practitioner_agent(doctor, proxy_url="http://proxy"))
    yield {"service": service, "patient": patient, "doctor": doctor,
           "agent": agent, "prac_agent": prac_agent, "tmp": tmp_path}
    service.close()


def test_config_endpoint(world):
    config = world["agent"].get("/config").json()
    assert config == {"mode": "patient", "principal": "pt-0", "proxy": "http://proxy"}


def test_pending_mirrors_client_review(world):
    doctor, agent, patient = world["doctor"], world["agent"], world["patient"]
    request_id = doctor.submit("pt-0", queryparse.parse("Pneumonia OR COVID-19"))
    board = agent.get("/pending").json()["pending"]
    assert len(board) == 1
    card = board[0]
    assert card["request_id"] == request_id
    assert card["practitioner_id"] == "dr-0"
    # equivalence with the direct client path
    report = patient.review(request_id)
    assert card["matched"] == [
        {"doc_id": d, "filename": f} for d, f in report.matched]
    assert {m["filename"] for m in card["matched"]} == {"a.png", "b.png"}


def test_grant_via_agent_reaches_fulfilled(world):
    doctor, agent = world["doctor"], world["agent"]
    request_id = doctor.submit("pt-0", queryparse.parse("covid-19"))
    card = agent.get("/pending").json()["pending"][0]
    response = agent.post("/grant", json={
        "request_id": request_id,
        "doc_ids": [m["doc_id"] for m in card["matched"]],
    })
    assert response.status_code == 200
    assert doctor.status(request_id)["status"] == "FULFILLED"
    assert agent.get("/grants").json()["grants"][0]["request_id"] == request_id


def test_decline_and_revoke_via_agent(world):
    doctor, agent = world["doctor"], world["agent"]
    r1 = doctor.submit("pt-0", queryparse.parse("NOT happy"))
    assert agent.post("/decline", json={"request_id": r1}).status_code == 200
    assert doctor.status(r1)["status"] == "DECLINED"

    r2 = doctor.submit("pt-0", queryparse.parse("covid-19"))
    card = agent.get("/pending").json()["pending"][0]
    agent.post("/grant", json={"request_id": r2,
                               "doc_ids": [m["doc_id"] for m in card["matched"]]})
    response = agent.post("/revoke", json={"practitioner_id": "dr-0"})
    assert response.json()["revoked"] == 1
    assert doctor.status(r2)["status"] == "REVOKED"


def test_documents_listing(world):
    docs = world["agent"].get("/documents").json()["documents"]
    assert [d["filename"] for d in docs] == ["a.png", "b.png", "c.png"]


def test_non_loopback_connection_refused(world):
    patient = world["patient"]
    app = create_patient_agent(patient)
    remote = TestClient(app, client=("203.0.113.9", 4444))
    assert remote.get("/pending").status_code == 403
    assert remote.post("/decline", json={"request_id": "x"}).status_code == 403
    local = TestClient(app, client=("127.0.0.1", 4444))
    assert local.get("/config").status_code == 200


def test_agent_exposes_no_key_material(world):
    agent = world["agent"]
    for path in ("/config", "/pending", "/documents", "/grants"):
        body = agent.get(path).content
        assert b"dec_key" not in body and b"pre_secret" not in body
        assert b"SPHX" not in body  # no raw containers either


# ------------------------------------------------------- practitioner agent

def test_practitioner_parse_endpoint(world):
    response = world["prac_agent"].post(
        "/parse", json={"expression": "Pneumonia OR COVID-19"})
    data = response.json()
    assert data["ast"] == {"op": "or",
                           "lhs": {"op": "atom", "keyword": "pneumonia"},
                           "rhs": {"op": "atom", "keyword": "covid-19"}}
    bad = world["prac_agent"].post("/parse", json={"expression": "(a OR"})
    assert bad.status_code == 422
    assert bad.json()["position"] == 5


def test_practitioner_agent_submit_track_retrieve(world):
    agent, prac_agent, tmp = world["agent"], world["prac_agent"], world["tmp"]
    response = prac_agent.post("/submit", json={
        "patient_id": "pt-0", "expression": "covid-19"})
    request_id = response.json()["request_id"]
    rows = prac_agent.get("/requests").json()["requests"]
    assert rows[0]["request_id"] == request_id

    card = agent.get("/pending").json()["pending"][0]
    agent.post("/grant", json={"request_id": request_id,
                               "doc_ids": [m["doc_id"] for m in card["matched"]]})
    out = tmp / "agent-retrieved"
    files = prac_agent.post("/retrieve", json={
        "request_id": request_id, "out_dir": str(out)}).json()["files"]
    assert len(files) == 1 and files[0].endswith("a.png")
    assert (out / "a.png").read_bytes() == b"A"
