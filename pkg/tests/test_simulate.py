import json

import pytest

from sealshare.bench.simulate import run_scenario, scan_for_canaries

# routine runs use a small population; acceptance runs the spec default 50


def test_appointment_scenario(tmp_path):
    result = run_scenario("appointment", tmp_path, seed=3, n_patients=4)
    assert result.ok, result.failures()
    assert result.timings["matched_count"] == 7
    assert result.postconditions["retrieved_files_byte_equal"]
    assert result.postconditions["no_plaintext_on_server"]
    actions = [e["action"] for e in result.events]
    assert actions.count("search") == 1
    assert "grant" in actions and "retrieve" in actions


def test_report_scenario_with_delays(tmp_path):
    result = run_scenario("report", tmp_path, seed=4, n_patients=3,
                          think_delay=0.05)
    assert result.ok, result.failures()
    assert result.postconditions["status_fulfilled"]


def test_change_doctor_scenario(tmp_path):
    result = run_scenario("change-doctor", tmp_path, seed=5, n_patients=3)
    assert result.ok, result.failures()
    assert result.postconditions["all_downloads_fail_after_revoke"]
    assert result.postconditions["revoked_one_grant"]
    assert result.timings["post_revoke_download_attempts"] == 7
    assert result.timings["revoke_per_grant_s"] < 0.1


def test_malign_scenario(tmp_path):
    result = run_scenario("malign", tmp_path, seed=6, n_patients=3)
    assert result.ok, result.failures()
    assert result.postconditions["status_declined"]
    assert result.postconditions["zero_rekeys_stored"]
    assert result.postconditions["download_refused"]
    assert result.timings["decline_s"] < 1.0


def test_transcripts_deterministic_given_seed(tmp_path):
    a = run_scenario("malign", tmp_path / "a", seed=42, n_patients=3)
    b = run_scenario("malign", tmp_path / "b", seed=42, n_patients=3)
    assert a.deterministic_view() == b.deterministic_view()
    c = run_scenario("malign", tmp_path / "c", seed=43, n_patients=3)
    assert a.deterministic_view() != c.deterministic_view()


def test_transcript_jsonl_written(tmp_path):
    result = run_scenario("malign", tmp_path, seed=1, n_patients=2)
    path = result.write_jsonl(tmp_path / "out" / "transcript.jsonl")
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert [e["seq"] for e in lines] == list(range(1, len(lines) + 1))
    assert all("ts" in e and "actor" in e for e in lines)


def test_scan_finds_planted_canary(tmp_path):
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "blob").write_bytes(b"prefix" + b"c" * 32 + b"suffix")
    assert scan_for_canaries(tmp_path, ["c" * 32, "d" * 32]) == ["c" * 32]


def test_unknown_scenario_rejected(tmp_path):
    from sealshare.errors import SealShareError
    with pytest.raises(SealShareError):
        run_scenario("heist", tmp_path)
