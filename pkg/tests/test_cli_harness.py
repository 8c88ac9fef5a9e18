import csv
import json
import subprocess
import sys

import pytest

from weilcheck import cli
from weilcheck.schur_tensor import UsageError

SMALL = """
[suite]
name = "small"
cases = ["orthogonal"]
suite = "symbolic"

[symbolic]
orth_b_max = 1
genus2_orth_max = 1
cohomology_orth_max = 1
properties_orth_max = 2
"""

SMALL_NUMERIC = """
[suite]
name = "small-numeric"
cases = ["unitary"]
suite = "numeric"

[numeric]
unit_lambda = [[1, 0]]
dual_points = 5
green_points = 2

[battery]
unitary = [[["0.9", "0.1j"], ["1.3", "1.1+0.3j"]]]

[lambda0]
unitary = []
"""


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(args, tmp_path):
    return cli.main(list(args) + ["--out", str(tmp_path / "out")])


def report(tmp_path):
    return json.loads((tmp_path / "out" / "report.json").read_text())


# --- configuration ------------------------------------------------------

def test_default_config_validates_and_plans():
    cfg = cli.load_config()
    cli.validate_config(cfg)
    names = [c["name"] for c in cli.plan_checks(cfg)]
    assert len(names) == len(set(names))
    assert "holomorphy:orthogonal:b=6" in names and "holomorphy:unitary:b=4x4" in names
    assert "lambda0_ratio:unitary:config=4" in names


def test_unknown_section_rejected(tmp_path):
    with pytest.raises(UsageError):
        cli.load_config(write(tmp_path, "[nonsense]\na = 1\n"))


@pytest.mark.parametrize("flags,word", [(["--b", "9"], "8"), (["--bp", "6"], "5")])
def test_caps_exit_2(tmp_path, capsys, flags, word):
    assert run(flags, tmp_path) == 2
    err = capsys.readouterr().err
    assert "cap" in err and word in err


def test_missing_config_exit_2(tmp_path):
    assert run([str(tmp_path / "absent.toml")], tmp_path) == 2


def test_bad_flag_exit_2(tmp_path):
    assert run(["--suite", "everything"], tmp_path) == 2


def test_seeded_battery_deterministic():
    a = cli.seeded_battery("unitary", 3, 5)
    assert a == cli.seeded_battery("unitary", 3, 5)
    assert a != cli.seeded_battery("unitary", 3, 6)


# --- running ------------------------------------------------------------

def test_small_symbolic_passes(tmp_path, capsys):
    assert run([write(tmp_path, SMALL)], tmp_path) == 0
    out = capsys.readouterr().out
    assert out.count("\n") == 1 and "checks passed" in out
    r = report(tmp_path)
    assert r["schema"] == cli.REPORT_SCHEMA and r["overall"] == "pass"
    assert r["summary"]["total"] == len(r["checks"]) == 7
    assert set(r["timing"]["runtime"]) == {"out", "cache", "jobs"}


def test_failing_check_exit_1(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.replace("orth_b_max = 1", "orth_b_max = 2"))
    assert run([cfg, "--omega-variant", "flip_potential"], tmp_path) == 1
    err = capsys.readouterr().err
    assert "FAIL holomorphy:orthogonal:b=2" in err
    r = report(tmp_path)
    bad = [c for c in r["checks"] if c["status"] == "fail"]
    assert bad and all("difference" in c["values"] for c in bad)


def test_sign_flag_changes_outcome(tmp_path):
    cfg = SMALL.replace("cohomology_orth_max = 1", "cohomology_orth_max = 2")
    assert run([write(tmp_path, cfg)], tmp_path) == 1
    assert run([write(tmp_path, cfg + 'relation_sign = "opposite"\n', "d.toml")], tmp_path) == 0


def test_report_deterministic_and_cache(tmp_path):
    cfg = cli.load_config(write(tmp_path, SMALL))
    cfg["suite"]["cache"] = str(tmp_path / "cache")
    a = cli.run_suite(cfg, str(tmp_path / "a.json"), log=lambda m: None)
    cfg["suite"]["out"] = "/elsewhere"
    b = cli.run_suite(cfg, str(tmp_path / "b.json"), log=lambda m: None)
    assert all(t["cached"] for t in b["timing"]["checks"].values())
    strip = lambda r: {k: v for k, v in r.items() if k != "timing"}
    assert json.dumps(strip(a), sort_keys=True) == json.dumps(strip(b), sort_keys=True)


def test_jobs_do_not_change_report(tmp_path):
    cfg = cli.load_config(write(tmp_path, SMALL))
    a = cli.run_suite(cfg, log=lambda m: None)
    cfg["suite"]["jobs"] = 2
    b = cli.run_suite(cfg, log=lambda m: None)
    assert a["checks"] == b["checks"] and a["config_hash"] == b["config_hash"]


def test_small_numeric(tmp_path):
    code = run([write(tmp_path, SMALL_NUMERIC)], tmp_path)
    r = report(tmp_path)
    st = {c["name"]: c["status"] for c in r["checks"]}
    assert st["exchange:unitary:lam=1x0:config=0"] == "pass"
    assert st["green_equation:unitary:lam=1x0"] == "pass"
    assert code == (0 if r["overall"] == "pass" else 1)


def _exchange_check(x2):
    return {"name": "x", "suite": "numeric", "kind": "exchange",
            "params": {"case": "orthogonal", "lam": 0, "x1": [1, 0, 0], "x2": x2,
                       "tol": 1e-3, "reality_tol": 1e-6}}


def test_bad_battery_is_usage_error():
    with pytest.raises(UsageError):
        cli.execute_check(_exchange_check([2, 0, 0]))       # degenerate moment matrix


def test_crash_inside_check_is_failure(monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("quadrature blew up")
    monkeypatch.setattr(cli.gn, "star_integral", boom)
    status, vals, *_ = cli.execute_check(_exchange_check([0.4, 0.9, 0.5]))
    assert status == "fail" and "blew up" in vals["error"]


# --- grids --------------------------------------------------------------

def test_grid_green(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["grid", "--what", "green", "--x", "1,0.2,0.1", "--n", "5",
                     "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["u", "v", "component", "value_re", "value_im"]
    assert len(rows) > 1


def test_grid_empty(tmp_path):
    out = tmp_path / "e.csv"
    assert cli.main(["grid", "--what", "kernel", "--case", "unitary", "--lam", "1,1",
                     "--x1", "1,0.3j", "--x2", "0.2,0.9", "--n", "0", "--out", str(out)]) == 0
    assert out.read_text().strip() == "u,v,component,value_re,value_im"


def test_grid_unwritable(tmp_path, capsys):
    bad = tmp_path / "file"
    bad.write_text("")
    assert cli.main(["grid", "--what", "green", "--x", "1,0,0", "--n", "3",
                     "--out", str(bad / "g.csv")]) == 2
    assert str(bad) in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    p = subprocess.run([sys.executable, "-m", "weilcheck", "--b", "9", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert p.returncode == 2
