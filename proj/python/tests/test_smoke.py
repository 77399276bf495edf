import math
import pathlib

import pytest

import livinglab as ll

FIXTURES = pathlib.Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def test_outcome_and_ctr():
    assert ll.outcome(3, 1) == pytest.approx(0.75)
    assert ll.outcome(0, 0) is None
    assert ll.ctr(5, 20) == pytest.approx(0.25)


def test_reward_uses_element_weights():
    assert ll.default_weights()["Bookmark"] == 10
    assert ll.reward({"Title": 4, "Order": 1}) == pytest.approx(14.0)
    assert ll.reward({"Title": 2}, {"Title": 3.0}) == pytest.approx(6.0)
    assert ll.nreward(30.0, 10.0) == pytest.approx(0.75)
    assert ll.nreward(0.0, 0.0) is None


def test_wilcoxon_small_exact():
    r = ll.wilcoxon([(2, 1), (4, 2), (6, 3)])
    assert r["p_value"] == pytest.approx(0.25)
    assert r["method"] == "exact"
    with pytest.raises(ValueError):
        ll.wilcoxon([(1, 1), (2, 2)])
    with pytest.raises(ValueError):
        ll.wilcoxon([(2, 1)], method="bogus")


def test_spearman():
    rho, p = ll.spearman([1, 2, 3, 4, 5], [2, 1, 4, 3, 5])
    assert rho == pytest.approx(0.8)
    assert p == pytest.approx(0.10408, abs=1e-4)
    with pytest.raises(ll.DomainError):
        ll.spearman([1, 1, 1], [1, 2, 3])


def test_interleave_is_balanced_and_seeded():
    a = [f"a{i}" for i in range(10)]
    b = [f"b{i}" for i in range(10)]
    page = ll.team_draft_interleave(a, b, 10, seed=7)
    assert page == ll.team_draft_interleave(a, b, 10, seed=7)
    assert len(page) == 10
    teams = [t for _, t in page]
    for k in range(1, 11):
        assert abs(teams[:k].count("EXP") - teams[:k].count("BASE")) <= 1
    assert ll.judge(2, 1) == "WIN"
    assert ll.judge(0, 0) == "NO_CLICK"


def test_run_parsing():
    run = ll.read_run(FIXTURES / "runs" / "valid.txt")
    assert run["tag"] == "demo"
    assert run["entries"]["101"][0] == ("doc-a", 1, 9.5)
    with pytest.raises(ValueError):
        ll.read_run(FIXTURES / "runs" / "rank_gap.txt")
    parsed = ll.parse_run("1 Q0 d 1 2.5 t\n")
    assert parsed["entries"]["1"] == [("d", 1, 2.5)]
    assert math.isfinite(parsed["entries"]["1"][0][2])


def test_evaluate_empty_log(tmp_path):
    log = tmp_path / "feedback.jsonl"
    log.write_text("")
    files = ll.evaluate(log, tmp_path / "out")
    assert "round_report.json" in files
    assert (tmp_path / "out" / "round_report.json").exists()
