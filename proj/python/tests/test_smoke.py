import math

import pytest

import realvul


def test_score_examples():
    assert realvul.score(1, 0.2, 0.3) == pytest.approx(0.69, abs=1e-9)
    assert realvul.score(1, 0.85, 0.85) == pytest.approx(0.94, abs=1e-9)
    assert realvul.score(1, 1, 1) == 1.0
    assert realvul.classify(0, True) == "ICP_ICR"


def test_range_violation_carries_code():
    with pytest.raises(realvul.RealvulError) as info:
        realvul.score(1, 2.0, 0.0)
    assert info.value.code == "RangeViolation"


def test_verdict_parsing():
    v = realvul.parse_verdict("Prediction: Yes\nReason: strcpy without bounds check (CWE-121)")
    assert v["prediction"] == "yes"
    assert v["reason_summary"] == "strcpy without bounds check"
    assert v["claimed_cwe"] == "CWE-121"


def test_corpus_and_plan():
    assert len(realvul.load_corpus()) == 15
    assert realvul.cwe_distribution() == {"CWE-787": 6, "CWE-416": 1, "CWE-476": 4, "CWE-190": 4}
    assert realvul.plan_size(1, ["P-S"], ["ZS", "FS"]) == 120


def test_embedding_and_search():
    v = realvul.mock_embed("heap buffer overflow", 64)
    assert len(v) == 64
    assert math.isclose(sum(x * x for x in v), 1.0, rel_tol=1e-12)
    store = realvul.VectorStore(64)
    store.upsert(v, "CVE-1")
    store.upsert(realvul.mock_embed("null pointer dereference", 64), "CVE-2")
    hits = store.search(v, 2)
    assert hits[0][2] == "CVE-1"
    assert hits[0][1] == pytest.approx(1.0)
    assert [h[2] for h in store.search(v, 2, exclude="CVE-1")] == ["CVE-2"]


def test_chunk_is_lossless():
    doc = "The parser reads a header. It trusts the length field! Does it check? No."
    assert "".join(realvul.chunk(doc, max_tokens=4)).replace(" ", "") == doc.replace(" ", "")


def test_prompt():
    system, user = realvul.render_prompt("P-CoT", "CVE-2023-2908")
    assert "Let's think step by step" in user
    assert "security" in system.lower()


def test_demo(tmp_path):
    out = realvul.run_demo(tmp_path)
    assert out["errors"] == 0
    assert out["executed"] == 160
    assert len(out["report_files"]) == 8
    rows = realvul.outcome_breakdown(out["log"])
    assert sum(r["total"] for r in rows) == 160
    code, text, _ = realvul.run_cli(["report", "--log", str(out["log"]), "--out", str(tmp_path / "t"), "--formats", "table"])
    assert code == 0
    assert "4 files" in text
