"""Scenario simulations: scripted actors against an in-process proxy.

Four scenarios mirror the system's intended use: a consultation where the
practitioner queries, the patient grants, and files flow (`appointment`);
the same flow with acknowledgement delays (`report`); revocation of an
earlier grant (`change-doctor`); and a suspicious query the patient
declines (`malign`).

Transcripts are deterministic for a fixed seed once timing fields are
stripped; every scenario ends with a canary scan over the server's
persistence root, which must come back empty.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .. import queryparse
from ..client import PatientClient, PractitionerClient
from ..errors import SealShareError
from ..server import ProxyService, ServiceConfig, create_app
from .corpus import Population, generate_population

SCENARIOS = ("appointment", "report", "change-doctor", "malign")

QUERY_CONSULT = "Pneumonia OR COVID-19"
QUERY_MALIGN = "NOT happy"

_PASSPHRASE = "simulation-passphrase"


@dataclass
class SimulationResult:
    scenario: str
    seed: int
    events: list[dict] = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    postconditions: dict = field(default_factory=dict)
    population: dict = field(default_factory=dict)

    def deterministic_view(self) -> list[dict]:
        """Events with wall-clock fields stripped; equal across same-seed runs."""
        return [{k: v for k, v in event.items() if k != "ts"} for event in self.events]

    def write_jsonl(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            for event in self.events:
                fh.write(json.dumps(event) + "\n")
        return path

    @property
    def ok(self) -> bool:
        return all(self.postconditions.values())

    def failures(self) -> list[str]:
        return [name for name, passed in self.postconditions.items() if not passed]


def scan_for_canaries(root: str | Path, canaries: list[str]) -> list[str]:
    """Recursive byte-scan; returns canaries found anywhere under root."""
    needles = [c.encode() for c in canaries]
    hits = set()
    for path in sorted(Path(root).rglob("*")):
        if not path.is_file():
            continue
        data = path.read_bytes()
        for canary, needle in zip(canaries, needles):
            if needle in data:
                hits.add(canary)
    return sorted(hits)


class Simulation:
    """Owns the in-process server, the scripted actors, and the transcript."""

    def __init__(self, workdir: str | Path, seed: int = 0, n_patients: int = 50,
                 mean_files: float = 13.71, total_files: int | None = None,
                 profile: str = "test-fast", think_delay: float = 0.0):
        self.workdir = Path(workdir)
        self.seed = seed
        self.think_delay = think_delay
        self.population: Population = generate_population(
            seed, n_patients=n_patients, mean_files=mean_files, total_files=total_files)
        self.server_root = self.workdir / "server"
        self.service = ProxyService(ServiceConfig(
            storage_root=str(self.server_root), profile=profile, workers=0))
        self.app = create_app(self.service)
        # in-process ASGI transport; the real-socket path is covered separately
        from fastapi.testclient import TestClient
        self.http = TestClient(self.app)
        self.profile = profile
        self.events: list[dict] = []
        self._seq = 0
        self.patients: dict[str, PatientClient] = {}
        self.practitioners: dict[str, PractitionerClient] = {}
        self.originals: dict[str, dict[str, bytes]] = {}

    # ------------------------------------------------------------- transcript

    def record(self, actor: str, action: str, **detail) -> None:
        self._seq += 1
        self.events.append({"seq": self._seq, "actor": actor, "action": action,
                            "ts": time.time(), **detail})

    # ------------------------------------------------------------------ setup

    def setup(self) -> None:
        for i, spec in enumerate(self.population.patients):
            home = self.workdir / "patients" / spec.patient_id
            files_dir = home / "files"
            files_dir.mkdir(parents=True, exist_ok=True)
            client = PatientClient.init(
                home, self.http, spec.patient_id, _PASSPHRASE,
                vocabulary=self.population.vocabulary, profile=self.profile,
                seed=self.seed * 100003 + i)
            paths = []
            originals = {}
            for file in spec.files:
                path = files_dir / file.filename
                path.write_bytes(file.content)
                path.with_name(path.name + ".keywords").write_text(
                    "\n".join(sorted(file.keywords)) + "\n")
                paths.append(path)
                originals[file.filename] = file.content
            client.ingest(paths)
            self.patients[spec.patient_id] = client
            self.originals[spec.patient_id] = originals
            self.record("harness", "patient-ready", patient_id=spec.patient_id,
                        files=len(spec.files))

    def practitioner(self, practitioner_id: str) -> PractitionerClient:
        if practitioner_id not in self.practitioners:
            home = self.workdir / "practitioners" / practitioner_id
            self.practitioners[practitioner_id] = PractitionerClient.init(
                home, self.http, practitioner_id, _PASSPHRASE)
            self.record("harness", "practitioner-ready", practitioner_id=practitioner_id)
        return self.practitioners[practitioner_id]

    def close(self) -> None:
        self.service.close()

    # ------------------------------------------------------------ shared steps

    def _search(self, doctor: PractitionerClient, patient_id: str,
                expression: str) -> tuple[str, float]:
        ast = queryparse.parse(expression)
        t0 = time.perf_counter()
        request_id = doctor.submit(patient_id, ast)
        view = doctor.poll(request_id, until={"AWAITING_CONSENT", "FAILED"},
                           base=0.01, cap=0.1, budget=300)
        search_s = time.perf_counter() - t0
        self.record(doctor.practitioner_id, "search", request_id=request_id,
                    status=view["status"], atoms=queryparse.count_atoms(ast))
        return request_id, search_s


def _postcondition_scan(sim: Simulation, result: SimulationResult) -> None:
    hits = scan_for_canaries(sim.server_root, sim.population.canaries())
    result.postconditions["no_plaintext_on_server"] = hits == []
    result.population = {"patients": len(sim.population.patients),
                         "files": sim.population.total_files}


def _run_consult(sim: Simulation, result: SimulationResult,
                 delay_eps: float = 0.0, delay_delta: float = 0.0) -> str:
    """Shared body of appointment/report: search, grant all matches, retrieve."""
    patient_id = "pt-0000"
    doctor = sim.practitioner("dr-adams")
    patient = sim.patients[patient_id]

    request_id, search_s = sim._search(doctor, patient_id, QUERY_CONSULT)
    result.timings["search_s"] = search_s

    time.sleep(delay_eps)  # patient notices the pending request
    report = patient.review(request_id)
    sim.record(patient_id, "review", request_id=request_id,
               matched=len(report.matched))

    t0 = time.perf_counter()
    patient.grant(request_id, [doc_id for doc_id, _ in report.matched])
    result.timings["grant_s"] = time.perf_counter() - t0
    sim.record(patient_id, "grant", request_id=request_id,
               granted=len(report.matched))

    time.sleep(delay_delta)  # doctor notices the fulfilled request
    view = doctor.poll(request_id, base=0.01, cap=0.1, budget=60)
    result.postconditions["status_fulfilled"] = view["status"] == "FULFILLED"

    out_dir = sim.workdir / "retrieved" / request_id
    t0 = time.perf_counter()
    files = doctor.retrieve(request_id, out_dir)
    result.timings["retrieve_s"] = time.perf_counter() - t0
    sim.record(doctor.practitioner_id, "retrieve", request_id=request_id,
               files=len(files))

    originals = sim.originals[patient_id]
    matched_names = {name for _, name in report.matched}
    byte_equal = (len(files) == len(report.matched) and
                  all(p.name in originals and p.read_bytes() == originals[p.name]
                      for p in files))
    result.postconditions["retrieved_files_byte_equal"] = byte_equal
    result.postconditions["matched_at_least_one"] = len(report.matched) >= 1
    result.timings["matched_count"] = len(report.matched)
    return request_id


def run_scenario(scenario: str, workdir: str | Path, seed: int = 0,
                 n_patients: int = 50, mean_files: float = 13.71,
                 total_files: int | None = None, profile: str = "test-fast",
                 think_delay: float = 0.0) -> SimulationResult:
    if scenario not in SCENARIOS:
        raise SealShareError(f"unknown scenario {scenario!r}; pick from {SCENARIOS}")
    sim = Simulation(workdir, seed=seed, n_patients=n_patients,
                     mean_files=mean_files, total_files=total_files,
                     profile=profile, think_delay=think_delay)
    result = SimulationResult(scenario=scenario, seed=seed)
    try:
        sim.setup()
        if scenario == "appointment":
            _run_consult(sim, result)
        elif scenario == "report":
            _run_consult(sim, result, delay_eps=think_delay, delay_delta=think_delay)
        elif scenario == "change-doctor":
            request_id = _run_consult(sim, result)
            patient = sim.patients["pt-0000"]
            doctor = sim.practitioners["dr-adams"]
            granted = doctor.status(request_id)["granted_docs"]

            t0 = time.perf_counter()
            revoked = patient.revoke(practitioner_id="dr-adams")
            revoke_s = time.perf_counter() - t0
            result.timings["revoke_s"] = revoke_s
            result.timings["revoke_per_grant_s"] = revoke_s / max(revoked["revoked"], 1)
            sim.record("pt-0000", "revoke", count=revoked["revoked"])
            result.postconditions["revoked_one_grant"] = revoked["revoked"] == 1

            failures = 0
            for _ in granted:
                try:
                    doctor.api.get(f"/requests/{request_id}/download")
                except SealShareError:
                    failures += 1
            result.postconditions["all_downloads_fail_after_revoke"] = (
                failures == len(granted) and len(granted) > 0)
            result.timings["post_revoke_download_attempts"] = len(granted)
            sim.record(doctor.practitioner_id, "download-after-revoke",
                       attempts=len(granted), failures=failures)
        elif scenario == "malign":
            patient_id = "pt-0000"
            doctor = sim.practitioner("dr-kepler")
            patient = sim.patients[patient_id]
            request_id, search_s = sim._search(doctor, patient_id, QUERY_MALIGN)
            result.timings["search_s"] = search_s

            report = patient.review(request_id)
            sim.record(patient_id, "review", request_id=request_id,
                       matched=len(report.matched))
            t0 = time.perf_counter()
            patient.decline(request_id)
            result.timings["decline_s"] = time.perf_counter() - t0
            sim.record(patient_id, "decline", request_id=request_id)

            view = doctor.status(request_id)
            result.postconditions["status_declined"] = view["status"] == "DECLINED"
            grants = [g for g in sim.service.meta.state.get("grants", {}).values()
                      if g["practitioner_id"] == "dr-kepler"]
            result.postconditions["zero_rekeys_stored"] = grants == []
            try:
                doctor.api.get(f"/requests/{request_id}/download")
                result.postconditions["download_refused"] = False
            except SealShareError:
                result.postconditions["download_refused"] = True
        _postcondition_scan(sim, result)
    finally:
        result.events = sim.events
        sim.close()
    return result
