import json
import math

import pytest

from grunbaum import cli
from grunbaum.cli import Config, StageError, VerificationReport, parse_s, run_stage


def _stable(report):
    d = json.loads(report.to_json())
    d.pop("wall_time")
    d["params"].pop("workers")
    return json.dumps(d, sort_keys=True)


def test_report_schema_and_digits():
    r = VerificationReport("mu", {"s": None, "n": 6}, 0.1, 1 / 3, 2.0, "fail", "x", 5, 1.5)
    d = json.loads(r.to_json())
    assert list(d) == list(cli.REPORT_FIELDS)
    assert '"uncertainty": 0.33333333333333331' in r.to_json()
    assert '"threshold": 2.0' in r.to_json()
    assert float(json.loads(r.to_json())["uncertainty"]) == 1 / 3
    r = VerificationReport("mu", {}, math.nan, math.inf, 0.0, "infeasible")
    assert json.loads(r.to_json())["net_value"] is None
    with pytest.raises(ValueError):
        VerificationReport("mu", {}, 0.0, 0.0, 0.0, "maybe")


def test_parse_s():
    assert parse_s("7") == 7
    assert parse_s("4-14") == (4, 14)
    assert parse_s((3, 5)) == (3, 5)
    assert parse_s(None) is None
    for bad in ("1", "15", "2-5", "9-4"):
        with pytest.raises(StageError):
            parse_s(bad)


def test_run_stage_validation():
    with pytest.raises(StageError):
        run_stage("nonsense")
    with pytest.raises(StageError):
        run_stage("base", {"colour": 1})
    with pytest.raises(StageError):
        run_stage("iter-min", {"s": 15})
    with pytest.raises(StageError):
        Config(n=0)


def test_base_stage():
    r = run_stage("base")
    assert r.verdict == "pass" and r.reason is None
    assert abs(r.net_value - 4 / 3) <= 1e-12
    assert r.params["workers"] >= 1


def test_gamma_reduce_stage():
    r = run_stage("gamma-reduce")
    assert r.verdict == "pass"
    assert r.net_value + r.uncertainty < r.threshold == -0.0355


def test_infeasible_verdict():
    r = run_stage("mu", {"delta": -1.0, "n": 2})
    assert r.verdict == "infeasible" and r.reason == "EmptyNetError"


def test_oracle_stage():
    r = run_stage("oracle", {"n": 3})
    assert r.verdict == "pass"
    assert r.net_value == pytest.approx(4 / 3, abs=1e-6)


def test_main_exit_codes(capsys, tmp_path):
    out = tmp_path / "r.jsonl"
    assert cli.main(["--stage", "base", "--out", str(out)]) == 0
    assert json.loads(out.read_text().splitlines()[0])["stage"] == "base"
    assert "verdict" in capsys.readouterr().out
    assert cli.main(["--stage", "nonsense"]) == 2
    assert cli.main(["--stage", "iter-min", "--s", "15"]) == 2
    assert cli.main(["--stage", "iter-min", "--s", "2-4"]) == 2


def test_failing_stage_exits_one(capsys):
    # the sharpened s = 2 budget cannot be met on a tenfold coarser net
    assert cli.main(["--stage", "iter-min", "--s", "2", "--quick"]) == 1
    last = [l for l in capsys.readouterr().out.splitlines() if l.startswith("{")][-1]
    d = json.loads(last)
    assert d["verdict"] == "fail" and d["reason"] == "uncertainty_exceeds_margin"
    assert d["net_value"] > 0


@pytest.mark.parametrize("stage, overrides", [
    ("gamma-reduce", {}),
    ("iter-min", {"s": 6, "quick": True}),
    ("mu", {"n": 1}),
])
def test_worker_count_determinism(stage, overrides):
    one = run_stage(stage, {**overrides, "workers": 1})
    eight = run_stage(stage, {**overrides, "workers": 8})
    one = one if isinstance(one, list) else [one]
    eight = eight if isinstance(eight, list) else [eight]
    assert [_stable(r) for r in one] == [_stable(r) for r in eight]
