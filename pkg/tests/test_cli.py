"""CLI commands: gen, seed, run, dump, verify, and exit codes."""
import json
from pathlib import Path

import pytest

from orchestra_kernel.cli import main

REPO_SEEDS = Path(__file__).resolve().parent.parent / "seeds"


def test_gen_is_deterministic(tmp_path, seed_dir):
    """Regenerating produces byte-identical seed files."""
    assert main(["gen", "--out", str(tmp_path / "again")]) == 0
    for relative in ("agents.yaml", "catalog.yaml", "templates.yaml",
                     "mockllm.yaml", "data/jobs.csv", "data/applicants.csv",
                     "data/titles_graph.json", "data/regions.json",
                     "scenarios/ui_select_summary.yaml"):
        fresh = (tmp_path / "again" / relative).read_bytes()
        fixture = (seed_dir / relative).read_bytes()
        assert fresh == fixture, f"{relative} differs between generations"


def test_gen_matches_committed_seeds(tmp_path):
    assert main(["gen", "--out", str(tmp_path / "s")]) == 0
    for relative in ("agents.yaml", "catalog.yaml", "data/jobs.csv"):
        assert ((tmp_path / "s" / relative).read_bytes()
                == (REPO_SEEDS / relative).read_bytes()), relative


def test_seed_prints_counts(seed_dir, capsys):
    code = main(["seed",
                 "--agents", str(seed_dir / "agents.yaml"),
                 "--catalog", str(seed_dir / "catalog.yaml"),
                 "--data", str(seed_dir / "data")])
    assert code == 0
    out = capsys.readouterr().out
    assert "agents: 12" in out
    assert "sources: 10" in out
    assert "rows: 1200" in out


def test_seed_missing_csv_exits_2_naming_file(seed_dir, tmp_path, capsys):
    empty = tmp_path / "no-data"
    empty.mkdir()
    code = main(["seed",
                 "--agents", str(seed_dir / "agents.yaml"),
                 "--catalog", str(seed_dir / "catalog.yaml"),
                 "--data", str(empty)])
    assert code == 2
    err = capsys.readouterr().err
    assert "missing file" in err and "applicants.csv" in err


def test_config_parse_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("{:::not yaml")
    assert main(["serve", "--config", str(bad)]) == 2


def test_run_scenario_exit_codes(seed_dir, tmp_path, capsys):
    code = main(["run",
                 "--scenario", str(seed_dir / "scenarios" / "conversation_query.yaml"),
                 "--seeds", str(seed_dir),
                 "--out", str(tmp_path / "t.jsonl")])
    assert code == 0
    assert (tmp_path / "t.jsonl").exists()
    # a scenario expecting an impossible tag exits 1
    import yaml
    scenario = yaml.safe_load(
        (seed_dir / "scenarios" / "conversation_query.yaml").read_text())
    scenario["steps"][0]["expect"] = ["NEVERTAG"]
    broken = tmp_path / "broken.yaml"
    broken.write_text(yaml.safe_dump(scenario))
    assert main(["run", "--scenario", str(broken),
                 "--seeds", str(seed_dir)]) == 1


def test_run_determinism_via_verify(seed_dir, tmp_path):
    for name in ("a", "b"):
        assert main(["run",
                     "--scenario", str(seed_dir / "scenarios" / "ui_select_summary.yaml"),
                     "--seeds", str(seed_dir),
                     "--out", str(tmp_path / f"{name}.jsonl")]) == 0
    assert main(["verify",
                 "--transcript", str(tmp_path / "a.jsonl"),
                 "--golden", str(tmp_path / "b.jsonl")]) == 0


def test_verify_self_and_mismatch(seed_dir, tmp_path, capsys):
    out = tmp_path / "x.jsonl"
    assert main(["run",
                 "--scenario", str(seed_dir / "scenarios" / "smalltalk.yaml"),
                 "--seeds", str(seed_dir), "--out", str(out)]) == 0
    assert main(["verify", "--transcript", str(out),
                 "--golden", str(out)]) == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    records[-1]["payload"] = "tampered"
    tampered = tmp_path / "y.jsonl"
    tampered.write_text("\n".join(json.dumps(r) for r in records))
    assert main(["verify", "--transcript", str(out),
                 "--golden", str(tampered)]) == 1


def test_verify_ignores_timestamps_and_latency(seed_dir, tmp_path):
    out = tmp_path / "x.jsonl"
    assert main(["run",
                 "--scenario", str(seed_dir / "scenarios" / "ui_select_summary.yaml"),
                 "--seeds", str(seed_dir), "--out", str(out)]) == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    for record in records:
        record["ts"] = 0
        payload = record["payload"]
        if isinstance(payload, dict) and "charge" in payload:
            payload["charge"]["latency_ms"] = 99999.0
    clone = tmp_path / "y.jsonl"
    clone.write_text("\n".join(json.dumps(r) for r in records))
    assert main(["verify", "--transcript", str(out),
                 "--golden", str(clone)]) == 0


def test_dump_exports_persisted_session(seed_dir, tmp_path, capsys):
    from orchestra_kernel.kernel import Kernel
    from orchestra_kernel.scenario import run_scenario
    from orchestra_kernel.seedio import read_structured

    store = tmp_path / "store"
    kernel = Kernel({"data_dir": str(store)})
    kernel.seed_tree(seed_dir)
    scenario = read_structured(seed_dir / "scenarios" / "smalltalk.yaml")
    session_id, records = run_scenario(kernel, scenario)
    kernel.close()
    out = tmp_path / "dumped.jsonl"
    assert main(["dump", "--session", session_id, "--store", str(store),
                 "--out", str(out)]) == 0
    from orchestra_kernel.transcript import load_jsonl, normalize
    assert normalize(load_jsonl(out)) == normalize(records)
    assert main(["dump", "--session", "S99", "--store", str(store)]) == 2
