import json
import math
import pathlib

import pytest

import bracket_stab as bs

ROOT = pathlib.Path(__file__).resolve().parents[2]
SCENARIOS = ROOT / "scenarios"


def test_label_counts_and_beta():
    assert len(bs.enumerate_labels(2, 3)) == 24
    assert len(bs.enumerate_labels(2, 3, prune=False)) == 44
    assert [bs.beta(k) for k in (1, 2, 3)] == [1, 4, 10]


def test_label_info():
    info = bs.label_info("+[[f1,f3],f1]")
    assert info["degree"] == 3
    assert info["switch_number"] == 10
    assert info["control_values"] == [(1, 1), (1, -1), (3, 1), (3, -1)]


def test_oriented_control_commutator():
    segs = bs.oriented_control("+[f1,f2]", 1.0)["segments"]
    assert len(segs) == 4
    assert segs[0]["t_start"] == pytest.approx(0.0)
    assert segs[-1]["t_end"] == pytest.approx(1.0)
    assert segs[1]["start"] == "1/4"


def test_worked_schedule_values():
    c = {"M": 1, "omega": 1, "L_U": 1, "L_l": 0, "C_bar": 1, "theta": 1, "delta_bar": 1}
    delta, residual = bs.solve_delta_check(c, 0.0, 1, 1.0, 0.5)
    assert delta == pytest.approx(0.1, abs=1e-12)
    assert residual <= 1e-12
    assert bs.time_bound(1, 2.0, 1.0, 1.0, 1.0) == 3.0


def test_heisenberg_hamiltonian_anchor():
    s = bs.load_scenario(SCENARIOS / "heisenberg_k2.json")
    assert (s.dimension, s.num_fields, s.k) == (3, 2, 2)
    # p0 only enters through the Lagrangian term; u is chosen where it is evaluated.
    h1, _ = s.hamiltonian([0, 0, 1], [0, 0, 1], 0.0, 1)
    h2, label = s.hamiltonian([0, 0, 1], [0, 0, 1], 0.0, 2)
    assert h2 <= h1
    assert label == "-[f1,f2]"


def test_schedule_stage_from_dict():
    doc = json.loads((SCENARIOS / "worked_schedule.json").read_text())
    summary = bs.run(bs.load_scenario(doc), "schedule")
    sched = summary["schedules"][0]
    assert sched["degrees"][0]["delta_check"] == pytest.approx(0.1, abs=1e-12)
    assert sched["T"] == pytest.approx(4.0)
    assert summary["exit_code"] == 0


def test_simulate_writes_artifacts(tmp_path):
    s = bs.load_scenario(SCENARIOS / "heisenberg_k2.json")
    summary = bs.run(s, "simulate", out_dir=tmp_path, jobs=2)
    assert summary["exit_code"] == 0
    assert all(r["four_conditions"] for r in summary["runs"] if not r["skipped"])
    assert (tmp_path / "summary.json").exists()
    assert (tmp_path / "report.md").exists()


def test_asymptotic_study():
    s = bs.load_scenario(SCENARIOS / "unicycle.json")
    study = bs.asymptotic(s, "+[f1,f2]", [0.2, 0.1, 0.9])
    assert not study["exact"]
    assert study["slope"] == pytest.approx(3.0, abs=0.1)


def test_errors_are_mapped():
    with pytest.raises(bs.ConfigError):
        bs.load_scenario({"radii": []})
    with pytest.raises(bs.ParseError):
        bs.label_info("+[f1,")
    with pytest.raises(bs.ConfigError):
        bs.run(bs.load_scenario(SCENARIOS / "worked_schedule.json"), "bogus")
    assert issubclass(bs.ConfigError, bs.BstabError)
    assert math.isfinite(bs.beta(4))
