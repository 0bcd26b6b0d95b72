import json

from click.testing import CliRunner

from sealshare.cli import main


def test_bench_search_writes_csv_and_figure(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, [
        "bench", "search", "--keywords", "1,2", "--files", "1,4",
        "--runs", "3", "--out", str(tmp_path / "out"), "--seed", "1"])
    assert result.exit_code == 0, result.output
    assert "search_mean" in result.output
    assert (tmp_path / "out" / "search_times.csv").exists()
    assert (tmp_path / "out" / "search_times.png").exists()


def test_bench_pre_writes_csv_and_figure(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, [
        "bench", "pre", "--sizes", "0.25,1", "--runs", "3",
        "--out", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "out" / "pre_times.csv").exists()
    assert (tmp_path / "out" / "pre_times.png").exists()


def test_simulate_malign_via_cli(tmp_path):
    runner = CliRunner()
    population = tmp_path / "pop.json"
    population.write_text(json.dumps({"n_patients": 3, "mean_files": 4,
                                      "total_files": None}))
    result = runner.invoke(main, [
        "simulate", "malign", "--seed", "9",
        "--population-file", str(population),
        "--workdir", str(tmp_path / "sim"),
        "--out", str(tmp_path / "transcript.jsonl")])
    assert result.exit_code == 0, result.output
    assert "decline" in result.output
    assert '"status_declined": true' in result.output
    assert (tmp_path / "transcript.jsonl").exists()


def test_cli_help_lists_all_verbs():
    runner = CliRunner()
    for args, expect in [
        ([], ["server", "patient", "practitioner", "bench", "simulate"]),
        (["patient"], ["init", "ingest", "pending", "review", "grant",
                       "decline", "revoke", "agent"]),
        (["practitioner"], ["init", "query", "status", "retrieve", "agent"]),
        (["bench"], ["pre", "search"]),
    ]:
        result = runner.invoke(main, args + ["--help"])
        assert result.exit_code == 0
        for verb in expect:
            assert verb in result.output
