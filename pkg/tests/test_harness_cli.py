import csv
import json

import numpy as np
import pytest

from fano_continuity.harness_cli import (ConfigInvalid, ManifestMissing, RunConfig,
                                         bundled_config_path, convergence_study, execute_run,
                                         load_config, main, product_oracle, write_report)


def small_config(tmp_path, model="product", t_end=3.0, npoints=64, **spec):
    base = {"model": "product", "a": 1, "b0": 0.0, "binf": 2.0, "kappa": 1.0}
    if model == "hirzebruch":
        base = {"model": "hirzebruch", "a": 1, "b0": 2.0, "binf": 4.0, "kappa": 1.0}
    base.update(spec)
    cfg = {"schema_version": 1, "name": "small", "spec": base,
           "gauge": 4.0 if model == "product" else 1.0, "mesh": {"npoints": npoints},
           "schedule": {"t_start": 0.1, "t_end": t_end}}
    p = tmp_path / f"{model}.json"
    p.write_text(json.dumps(cfg))
    return p


def quiet(*a, **k):
    pass


def test_bundled_configs_load():
    for name in ("product_einstein", "hirzebruch_a1"):
        assert bundled_config_path(name).is_file()
        cfg = load_config(f"{name}.json")
        assert cfg.digest() == load_config(str(bundled_config_path(name))).digest()


@pytest.mark.parametrize("bad", [
    {"schema_version": 2, "spec": {}},
    {"schema_version": 1, "spec": {"model": "product", "b0": 3.0, "binf": 2.0}},
    {"schema_version": 1, "spec": {"model": "product"}, "colour": 1},
    {"schema_version": 1, "spec": {"model": "product"}, "schedule": {"steps": 3, "list": [1, 2]}},
    {"schema_version": 1, "spec": {"model": "product"}, "schedule": {"list": [0.5, 0.2]}},
    {"schema_version": 1, "spec": {"model": "product"}, "mesh": {"npoints": 4}},
])
def test_config_invalid(bad):
    with pytest.raises(ConfigInvalid):
        RunConfig.from_dict(bad)


def test_run_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "spec": {"model": "product", "b0": 3, "binf": 2}}))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "ConfigInvalid"
    assert main(["verify", "nosuch"]) == 2
    assert main(["study", "--resolutions", "64,128", "--config", "product_einstein.json"]) == 2
    assert main(["report", str(tmp_path / "empty")]) == 2
    assert main(["frobnicate"]) == 2


def test_report_without_manifest(tmp_path):
    with pytest.raises(ManifestMissing):
        write_report(tmp_path)


def test_product_run_and_report(tmp_path, capsys):
    out = tmp_path / "prod"
    assert main(["--seed", "3", "run", "--config", "product_einstein.json", "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "complete" and man["seed"] == 3
    assert set(man["files"]) == {"config.json", "limit_data.json", "phi_snapshots.csv",
                                 "diagnostics.csv"}
    with open(out / "diagnostics.csv") as fh:
        rows = list(csv.DictReader(fh))
    last = rows[-1]
    assert float(last["t"]) == 10.0
    assert float(last["c0_phi_minus_psi"]) <= 3e-4
    spec = load_config("product_einstein.json").model_spec()
    assert abs(float(last["sup_phi"]) - product_oracle(spec, 10.0)) < 1e-9
    assert main(["report", str(out)]) == 0
    res = write_report(out)
    assert res["warnings"] == []
    assert abs(res["fits"]["c0_phi_minus_psi"]["rate"] - 1.0) < 0.1
    assert (out / "report.md").exists() and (out / "plots" / "sup_phi.gp").exists()


def test_tampered_output_warns(tmp_path):
    cfg = load_config(str(small_config(tmp_path)))
    out = tmp_path / "run"
    execute_run(cfg, out, log=quiet)
    assert write_report(out)["warnings"] == []
    (out / "limit_data.json").write_text("{}")
    w = write_report(out)["warnings"]
    assert any("limit_data.json" in s and "integrity" in s for s in w)
    assert "integrity warning" in (out / "report.md").read_text()


def test_csvs_bit_identical_across_runs(tmp_path):
    cfg = load_config(str(small_config(tmp_path, "hirzebruch", t_end=2.0)))
    execute_run(cfg, tmp_path / "a", log=quiet)
    execute_run(cfg, tmp_path / "b", log=quiet)
    for f in ("phi_snapshots.csv", "diagnostics.csv", "limit_data.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_resume_after_interruption(tmp_path):
    cfg = load_config(str(small_config(tmp_path, "hirzebruch", t_end=2.0)))
    full = tmp_path / "full"
    execute_run(cfg, full, log=quiet)
    part = tmp_path / "part"
    execute_run(cfg, part, log=quiet)
    n = cfg.mesh["npoints"]
    # simulate a crash after 5 steps, with a half-written sixth snapshot block
    snap = (part / "phi_snapshots.csv").read_text().splitlines(True)
    (part / "phi_snapshots.csv").write_text("".join(snap[:1 + 5 * n + n // 2]))
    diag = (part / "diagnostics.csv").read_text().splitlines(True)
    (part / "diagnostics.csv").write_text("".join(diag[:1 + 5]))
    man = json.loads((part / "manifest.json").read_text())
    man["status"] = "incomplete"
    (part / "manifest.json").write_text(json.dumps(man))
    logs = []
    man2 = execute_run(cfg, part, log=logs.append)
    assert man2["resumed_from"] == cfg.times()[4]
    assert any("resuming" in s for s in logs)
    for f in ("phi_snapshots.csv", "diagnostics.csv"):
        assert (part / f).read_bytes() == (full / f).read_bytes()


def test_completed_run_is_not_resumed(tmp_path):
    cfg = load_config(str(small_config(tmp_path, t_end=1.0)))
    execute_run(cfg, tmp_path / "r", log=quiet)
    assert execute_run(cfg, tmp_path / "r", log=quiet)["resumed_from"] is None


def test_study_product_is_exact(tmp_path):
    cfg = load_config(str(small_config(tmp_path, t_end=2.0)))
    out = convergence_study(cfg, [32, 64, 128])
    assert out["passed"]
    phi = [r for r in out["rows"] if r["quantity"] == "phi"][0]
    assert max(phi["error_vs_closed_form"]) < 1e-10


def test_study_rejects_two_resolutions(tmp_path):
    cfg = load_config(str(small_config(tmp_path)))
    with pytest.raises(ConfigInvalid):
        convergence_study(cfg, [64, 128])


def test_verify_suite(capsys):
    assert main(["verify", "einstein"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3 and all("[PASS]" in s for s in lines)
