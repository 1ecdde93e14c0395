import json
import os
from pathlib import Path

import pytest

import editbench

FIXTURE = Path(os.environ.get("EDITBENCH_FIXTURE_DIR", Path(__file__).parents[1] / "fixtures")) / "synth200"


def triplet(s, r, o, sid="Q1", rid="P1", oid="Q2"):
    return {
        "subject": {"id": sid, "label": s},
        "relation": {"id": rid, "label": r, "description": ""},
        "object": {"id": oid, "label": o},
    }


def test_normalize_and_judge():
    assert editbench.normalize("  Washington,   D.C. ") == "washington dc"
    assert editbench.judge_answer("The capital is Washington, D.C.", "Washington, D.C.")
    assert not editbench.judge_answer("Oslo", "Stockholm", mode="exact")
    with pytest.raises(editbench.ConfigError):
        editbench.judge_answer("a", "b", mode="fuzzy")


def test_diff_modification_and_addition():
    old = [triplet("A", "r", "B", "Q1", "P1", "Q2")]
    new = [triplet("A", "r", "C", "Q1", "P1", "Q3"), triplet("D", "r", "E", "Q4", "P1", "Q5")]
    out = editbench.diff(old, new)
    assert out["static"] == []
    assert [c["change_kind"] for c in out["changed"]] == ["modified", "new"]


def test_filter_report_reconciles():
    kept_example = triplet("Lea County Regional Airport", "state of use", "in use")
    rejected = triplet("X", "follows", "Twitter", "Q7", "P2", "Q8")
    kept, report = editbench.filter_triplets([kept_example, rejected])
    assert kept == [kept_example]
    assert report["removed_by_rule"]["single_char"] == 1
    assert report["input_count"] == report["kept_count"] + sum(report["removed_by_rule"].values())


def test_mhop_chain():
    first = triplet("podcast", "named after", "iPod", "Q1", "P138", "Q2")
    second = triplet("iPod", "manufacturer", "Apple", "Q2", "P176", "Q3")
    tuples = editbench.mhop_tuples([first, second])
    assert len(tuples) == 1


def test_validate_qa_reasons():
    fact = triplet("Turnberry Lighthouse", "color", "white")
    assert editbench.validate_qa("What is the color of Turnberry Lighthouse?", "white", fact) == []
    assert editbench.validate_qa("What is its color?", "white", fact)[0] == "missing-subject"


def test_memory_retrieves_stored_question():
    memory = editbench.Memory(dim=256)
    memory.add("Who owns Amber Harbor?", "Velmora Trust", id="a")
    memory.add("What is the color of Cedar Abbey?", "green", id="b")
    assert len(memory) == 2
    top = memory.retrieve("Who owns Amber Harbor?", k=1)[0]
    assert top["source_id"] == "a"
    assert abs(top["similarity"] - 1.0) < 1e-6
    assert memory.answer("Who owns Amber Harbor?") == "Velmora Trust"


def test_pipeline_on_fixture(tmp_path):
    expected = json.loads((FIXTURE / "expected.json").read_text())
    results = editbench.run_pipeline(
        FIXTURE / "old.json",
        FIXTURE / "new.json",
        tmp_path,
        config=FIXTURE / "config.toml",
        overrides=[f'qa.replay_dir="{FIXTURE / "replay"}"'],
    )
    assert all(r["ok"] for r in results)
    batch = editbench.load_timestep(tmp_path / "dataset", "T1")
    for kind, n in expected["qa_counts"].items():
        assert len(batch["sets"][kind]) == n


def test_corruption_is_detected(tmp_path):
    editbench.run_pipeline(
        FIXTURE / "old.json",
        FIXTURE / "new.json",
        tmp_path,
        config=FIXTURE / "config.toml",
        overrides=[f'qa.replay_dir="{FIXTURE / "replay"}"'],
    )
    victim = tmp_path / "dataset" / "T1" / "update.jsonl"
    data = bytearray(victim.read_bytes())
    data[5] ^= 0x01
    victim.write_bytes(bytes(data))
    with pytest.raises(editbench.IntegrityError):
        editbench.load_timestep(tmp_path / "dataset", "T1")


def test_write_fixture(tmp_path):
    editbench.write_fixture(tmp_path, seed=7)
    assert (tmp_path / "old.json").exists()
    assert (tmp_path / "new.json").exists()
