import json

import numpy as np
import pytest

from relsemi.cli import main
from relsemi.relation import LinearRelation
from relsemi.report import vector_to_json, write_json


@pytest.fixture
def rel_file(tmp_path):
    rel = LinearRelation.from_operator(np.array([[-1.0, 0.5], [-0.5, -2.0]]))
    path = tmp_path / "rel.json"
    path.write_text(json.dumps(rel.to_json()))
    return str(path)


@pytest.fixture
def degenerate_file(tmp_path):
    xs = np.array([[1.0, 0.0], [0.0, 0.0]])
    ys = np.array([[0.0, 0.0], [0.0, 1.0]])
    rel = LinearRelation.from_pairs(xs, ys)
    path = tmp_path / "rel2.json"
    path.write_text(json.dumps(rel.to_json()))
    return str(path)


def test_rel_parts_operator(rel_file, capsys, tmp_path):
    out = tmp_path / "o"
    assert main(["rel", "parts", rel_file, "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == \
        "dom=2 ran=2 ker=0 mul=0 (graph dim 2 in K^2)"
    dims = json.loads((out / "parts.json").read_text())
    assert dims["mul"] == 0 and dims["graph"] == 2


def test_rel_parts_degenerate(degenerate_file, capsys):
    assert main(["rel", "parts", degenerate_file]) == 0
    assert "dom=1 ran=1 ker=1 mul=1" in capsys.readouterr().out


def test_spec_scan_csv(rel_file, capsys):
    assert main(["spec", "scan", rel_file, "--grid", "0:1:3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# schema:")
    assert lines[1] == "lambda_re,lambda_im,in_resolvent_set,norm_R,residual"
    assert len(lines) == 2 + 4
    for row in lines[2:]:
        assert row.split(",")[2] == "true"  # spectrum is in the left half-plane


def test_spec_scan_jobs_stable(rel_file, capsys):
    assert main(["spec", "scan", rel_file, "--grid=-3:0.5:3", "--jobs", "1"]) == 0
    one = capsys.readouterr().out
    assert main(["spec", "scan", rel_file, "--grid=-3:0.5:3", "--jobs", "4"]) == 0
    four = capsys.readouterr().out
    assert one == four


def test_spec_scan_flags_eigenvalue(tmp_path, capsys):
    rel = LinearRelation.from_operator(np.diag([-1.0, -3.0]))
    path = tmp_path / "d.json"
    path.write_text(json.dumps(rel.to_json()))
    assert main(["spec", "scan", str(path), "--grid=-3:1:0"]) == 0
    rows = [r.split(",") for r in capsys.readouterr().out.splitlines()[2:]]
    by_re = {float(r[0]): r for r in rows}
    assert by_re[-3.0][2] == "false" and by_re[-1.0][2] == "false"
    assert by_re[-2.0][2] == "true"
    assert float(by_re[-2.0][3]) == pytest.approx(1.0)  # dist to spectrum 1


def test_config_errors_exit_2(rel_file):
    assert main(["spec", "scan", rel_file, "--grid", "bad"]) == 2
    assert main(["spec", "scan", rel_file, "--grid", "0:1:2", "--jobs", "0"]) == 2
    assert main(["rel", "parts", "/nonexistent.json"]) == 2


def test_dissip_check_verdicts(rel_file, tmp_path, capsys):
    assert main(["dissip", "check", rel_file]) == 0
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["dissipative"] is True and verdict["norm"] == "l2"
    expanding = tmp_path / "bad.json"
    expanding.write_text(json.dumps(
        LinearRelation.from_operator(np.eye(2)).to_json()))
    assert main(["dissip", "check", str(expanding)]) == 1
    assert json.loads(capsys.readouterr().out)["dissipative"] is False
    assert main(["dissip", "check", rel_file, "--norm", "sup"]) == 0
    assert json.loads(capsys.readouterr().out)["norm"] == "sup"


def test_semigroup_run_artifacts(rel_file, tmp_path, capsys):
    x = tmp_path / "x.json"
    write_json(str(x), vector_to_json(np.array([1.0, 0.0])))
    out = tmp_path / "sg"
    assert main(["semigroup", "run", rel_file, "--x", str(x),
                 "--grid", "0:0.5:2", "--out", str(out)]) == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[1] == "t,u_1,u_2"
    first = lines[2].split(",")
    assert float(first[0]) == 0.0
    assert float(first[1]) == pytest.approx(1.0)
    assert (out / "trajectory.svg").exists()
    # wrong-length state is a config error
    bad = tmp_path / "bad_x.json"
    write_json(str(bad), vector_to_json(np.array([1.0])))
    assert main(["semigroup", "run", rel_file, "--x", str(bad),
                 "--out", str(out)]) == 2


def test_converge_tk_oscillating(tmp_path):
    fam = tmp_path / "fam.json"
    fam.write_text(json.dumps({
        "family": "oscillating", "ns": [5, 10], "tol": 0.5,
        "items": ["i", "ii", "iii", "v"],
        "lambda_grid": [1.0, 2.0],
    }))
    out = tmp_path / "tk"
    assert main(["converge", "tk", "--family", str(fam), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["consistent"] is True
    assert all(summary["verdicts"].values())
    assert summary["final_integrated_error"] <= 0.5
    errors = (out / "errors.csv").read_text().splitlines()
    assert errors[1] == "n,kind,param,error"
    assert (out / "errors.svg").exists()


def _relations_family(tmp_path, ns, tol, lambda_grid=(1.0, 2.0)):
    member = lambda a: LinearRelation.from_operator(np.array([[a]])).to_json()
    fam = tmp_path / "rels.json"
    fam.write_text(json.dumps({
        "family": "relations",
        "members": [member(-1 - 1 / n) for n in ns],
        "limit": member(-1.0),
        "tol": tol,
        "lambda_grid": list(lambda_grid),
        "t_grid": {"start": 0.0, "stop": 3.0, "num": 31},
    }))
    return str(fam)


def _stdout_summary(capsys):
    # stdout carries the CSV table first, then the JSON summary
    out = capsys.readouterr().out
    return json.loads(out[out.index("{"):])


def test_converge_tk_relations_pass(tmp_path, capsys):
    fam = _relations_family(tmp_path, (4, 16, 64), tol=0.05)
    assert main(["converge", "tk", "--family", fam]) == 0
    assert all(_stdout_summary(capsys)["verdicts"].values())


def test_converge_tk_consistent_failure(tmp_path, capsys):
    # tol below every criterion: all verdicts False, consistently
    fam = _relations_family(tmp_path, (4, 16, 64), tol=1e-9)
    assert main(["converge", "tk", "--family", fam]) == 1
    summary = _stdout_summary(capsys)
    assert not any(summary["verdicts"].values())
    assert summary["consistent"] is True


def test_converge_tk_inconsistent_exit(tmp_path, capsys):
    # frozen: tol=5e-3 splits integrated/gap from the resolvent criteria
    fam = _relations_family(tmp_path, (4, 16, 64), tol=0.005)
    assert main(["converge", "tk", "--family", fam]) == 1
    assert "FAIL" in capsys.readouterr().err


def test_converge_tk_needs_limit(tmp_path):
    fam = tmp_path / "nolimit.json"
    member = LinearRelation.from_operator(np.array([[-1.0]])).to_json()
    fam.write_text(json.dumps({"family": "relations", "members": [member]}))
    assert main(["converge", "tk", "--family", str(fam)]) == 2


def _heat_family_file(tmp_path):
    fam = tmp_path / "heat.json"
    fam.write_text(json.dumps({
        "grid": {"m": 12},
        "limit": {"shape": {"kind": "disk", "center": [0.0, 0.0], "radius": 0.7},
                  "label": "disk"},
        "builder": {"name": "polygons", "radius": 0.7, "sides": [3, 4]},
        "lambda_grid": [1.0],
        "t_grid": {"start": 0.0, "stop": 1.0, "num": 4},
        "tol": 0.5,
        "items": ["i", "ii"],
        "f": ["ones"],
        "samples": 2,
    }))
    return str(fam)


HEAT_ARTIFACTS = ("report.json", "errors.csv", "criterion.csv",
                  "error_curves.svg", "criterion_trace.svg")


def test_heat_converge_artifacts(tmp_path, capsys):
    fam = _heat_family_file(tmp_path)
    out = tmp_path / "hc"
    assert main(["heat", "converge", "--family", fam, "--out", str(out)]) == 0
    assert "heat-converge: PASS" in capsys.readouterr().out
    for name in HEAT_ARTIFACTS:
        assert (out / name).exists(), name
    report = json.loads((out / "report.json").read_text())
    assert report["consistent"] is True
    assert report["criterion"]["ok"] is True
    assert set(report["contraction_norms"]) == {"poly-3", "poly-4", "disk"}
    crit = (out / "criterion.csv").read_text().splitlines()
    assert crit[1].startswith("label,surplus_nodes,surplus_eig")


def test_heat_converge_deterministic(tmp_path):
    fam = _heat_family_file(tmp_path)
    out1, out2 = tmp_path / "h1", tmp_path / "h2"
    assert main(["heat", "converge", "--family", fam, "--out", str(out1)]) == 0
    assert main(["heat", "converge", "--family", fam, "--out", str(out2)]) == 0
    for name in HEAT_ARTIFACTS:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_heat_orbit_artifacts(tmp_path, capsys):
    mask = tmp_path / "mask.json"
    mask.write_text(json.dumps({
        "grid": {"m": 12},
        "shape": {"kind": "disk", "center": [0.0, 0.0], "radius": 0.7},
    }))
    out = tmp_path / "orbit"
    assert main(["heat", "orbit", "--mask", str(mask),
                 "--grid", "0.1:0.1:0.5", "--out", str(out)]) == 0
    assert "heat-orbit: PASS" in capsys.readouterr().out
    checks = json.loads((out / "checks.json").read_text())
    assert checks["off_domain_max"] <= 1e-12
    assert max(checks["membership_residuals"]) <= 1e-6
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[1] == "t,node_index,value"
    assert len(lines) == 2 + 5 * 144  # five times, every grid node
    assert (out / "orbit.svg").exists()
    # all-positive grid must fail on a bad time grid
    assert main(["heat", "orbit", "--mask", str(mask),
                 "--grid", "0:0:0", "--out", str(out)]) == 2


def test_heat_out_is_required(tmp_path):
    mask = tmp_path / "mask.json"
    mask.write_text("{}")
    with pytest.raises(SystemExit):
        main(["heat", "orbit", "--mask", str(mask)])
