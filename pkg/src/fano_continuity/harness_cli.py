"""Run configuration, orchestration, persistence, reports and studies.

Entry point: ``python3 -m fano_continuity <command> ...`` with the commands
run, verify, study and report.  Exit codes: 0 success, 1 solver or
acceptance failure, 2 usage or configuration error.
"""
import argparse
import csv
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .continuity_path import ContinuityPath, T_MIN, standard_schedule
from .diagnostics import CSV_FIELDS, fit_decay, measure
from .errors import FanoContinuityError, InvalidModel, SolverError
from .limit_pipeline import build_limit
from .radial_geometry import ModelSpec

SCHEMA_VERSION = 1
SNAPSHOT_FIELDS = ["t", "node", "x", "phi", "phi_shift", "phi_osc"]
DECAY_FIELDS = ["phi_dot_sup", "tr_omegaY_minus_k", "fiber_c0_dist", "global_c0_dist",
                "l1_phi_minus_psi", "c0_phi_minus_psi"]
OUTPUT_FILES = ["config.json", "diagnostics.csv", "phi_snapshots.csv", "limit_data.json"]


class ConfigInvalid(FanoContinuityError, ValueError):
    kind = "ConfigInvalid"


class ManifestMissing(FanoContinuityError, FileNotFoundError):
    kind = "ManifestMissing"


class UnknownSuite(FanoContinuityError, KeyError):
    kind = "UnknownSuite"

    def __str__(self):
        return str(self.args[0]) if self.args else ""


_SPEC_KEYS = {"model", "a", "b0", "binf", "kappa"}
_SECTIONS = {
    "mesh": {"npoints"},
    "schedule": {"t_start", "t_end", "steps", "list"},
    "solver": {"tol", "max_iter"},
    "outputs": {"directory", "formats"},
}
_TOP = {"schema_version", "name", "spec", "gauge", "mesh", "schedule", "solver", "outputs", "seed"}


@dataclass
class RunConfig:
    spec: dict
    gauge: float = 1.0
    mesh: dict = field(default_factory=lambda: {"npoints": 256})
    schedule: dict = field(default_factory=lambda: {"t_start": 0.1, "t_end": 12.0})
    solver: dict = field(default_factory=lambda: {"tol": 1e-10, "max_iter": 50})
    outputs: dict = field(default_factory=lambda: {"directory": "runs/default", "formats": ["csv", "json"]})
    name: str = "run"
    seed: int = 0
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigInvalid("config must be a JSON object")
        unknown = set(d) - _TOP
        if unknown:
            raise ConfigInvalid(f"unknown keys {sorted(unknown)}")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ConfigInvalid(f"schema_version must be {SCHEMA_VERSION}")
        if "spec" not in d:
            raise ConfigInvalid("missing 'spec'")
        bad = set(d["spec"]) - _SPEC_KEYS
        if bad:
            raise ConfigInvalid(f"unknown spec keys {sorted(bad)}")
        for sec, keys in _SECTIONS.items():
            if sec in d:
                if not isinstance(d[sec], dict):
                    raise ConfigInvalid(f"'{sec}' must be an object")
                bad = set(d[sec]) - keys
                if bad:
                    raise ConfigInvalid(f"unknown {sec} keys {sorted(bad)}")
        base = cls(spec=dict(d["spec"]))
        merged = {k: dict(getattr(base, k), **d.get(k, {})) for k in _SECTIONS}
        cfg = cls(spec=dict(d["spec"]), gauge=float(d.get("gauge", 1.0)), name=str(d.get("name", "run")),
                  seed=int(d.get("seed", 0)), **merged)
        cfg.validate()
        return cfg

    def to_dict(self):
        return asdict(self)

    def validate(self):
        try:
            self.model_spec()
        except (InvalidModel, TypeError) as exc:
            raise ConfigInvalid(str(exc)) from exc
        n = self.mesh.get("npoints")
        if not isinstance(n, int) or n < 16:
            raise ConfigInvalid("mesh.npoints must be an integer >= 16")
        if not self.gauge > 0:
            raise ConfigInvalid("gauge must be positive")
        s = self.schedule
        if "steps" in s and "list" in s:
            raise ConfigInvalid("schedule takes 'steps' or 'list', not both")
        ts = self.times()
        if not ts or ts[0] < T_MIN - 1e-12 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigInvalid(f"schedule must increase strictly from t >= {T_MIN}")
        tol, it = self.solver.get("tol"), self.solver.get("max_iter")
        if not (isinstance(tol, (int, float)) and tol > 0) or not (isinstance(it, int) and it > 0):
            raise ConfigInvalid("solver.tol and solver.max_iter must be positive")

    def model_spec(self):
        return ModelSpec(omega_gauge=self.gauge, **self.spec)

    def times(self):
        s = self.schedule
        if "list" in s:
            return [float(t) for t in s["list"]]
        t0, t1 = float(s.get("t_start", 0.1)), float(s.get("t_end", 12.0))
        if "steps" in s:
            return [float(t) for t in np.linspace(t0, t1, int(s["steps"]) + 1)]
        return standard_schedule(t0, t1)

    def digest(self):
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def bundled_config_path(name):
    return resources.files("fano_continuity") / "configs" / f"{name}.json"


def load_config(path):
    p = Path(path)
    if not p.exists():
        cand = bundled_config_path(p.stem)
        if not cand.is_file():
            raise ConfigInvalid(f"no such config {path}")
        p = cand
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"invalid JSON: {exc}") from exc
    return RunConfig.from_dict(data)


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def fixture_path():
    return resources.files("fano_continuity") / "data" / "regression_hirzebruch.json"


def _fmt(v):
    return repr(float(v)) if not isinstance(v, (int, np.integer)) else str(int(v))


def _write_manifest(out, manifest):
    tmp = out / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    os.replace(tmp, out / "manifest.json")


def _read_resume(out, cfg, npoints):
    """Last fully persisted state of an incomplete run with the same config."""
    mpath = out / "manifest.json"
    if not mpath.exists():
        return None
    man = json.loads(mpath.read_text())
    if man.get("status") != "incomplete" or man.get("config_hash") != cfg.digest():
        return None
    snap, diag = out / "phi_snapshots.csv", out / "diagnostics.csv"
    if not snap.exists() or not diag.exists():
        return None
    with open(snap) as fh:
        rows = list(csv.DictReader(fh))
    blocks = {}
    for r in rows:
        blocks.setdefault(float(r["t"]), []).append(r)
    done = [t for t, b in blocks.items() if len(b) == npoints]
    with open(diag) as fh:
        drows = list(csv.reader(fh))[1:]
    dts = [float(r[0]) for r in drows]
    done = sorted(t for t in done if t in dts)
    if not done:
        return None
    t_last = done[-1]
    blk = sorted(blocks[t_last], key=lambda r: int(r["node"]))
    shift = float(blk[0]["phi_shift"])
    osc = np.array([float(r["phi_osc"]) for r in blk])
    keep_snap = [r for r in rows if float(r["t"]) <= t_last]
    keep_diag = [r for r in drows if float(r[0]) <= t_last]
    return t_last, (shift, osc), keep_snap, keep_diag


def execute_run(cfg, out, seed=None, log=print):
    """Run the whole experiment into directory `out`; returns the manifest."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.model_spec()
    npoints = cfg.mesh["npoints"]
    resume = _read_resume(out, cfg, npoints)
    manifest = {"config_hash": cfg.digest(), "code_version": __version__, "status": "incomplete",
                "started": time.strftime("%Y-%m-%dT%H:%M:%S"), "seed": cfg.seed if seed is None else seed,
                "files": {}, "resumed_from": resume[0] if resume else None}
    fx = fixture_path()
    if fx.is_file():
        prov = json.loads(fx.read_text()).get("provenance", {})
        manifest["frozen_regression"] = {"file": "regression_hirzebruch.json",
                                         "sha256": sha256_file(fx), "provenance": prov}
    _write_manifest(out, manifest)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))

    path = ContinuityPath(spec, npoints, tol=float(cfg.solver["tol"]),
                          max_iter=int(cfg.solver["max_iter"]))
    limit = build_limit(spec, path.u0, path.volume)
    lim = limit.as_dict()
    lim["config_hash"] = cfg.digest()
    (out / "limit_data.json").write_text(json.dumps(lim, indent=2, sort_keys=True))

    times = cfg.times()
    warm = warm_t = None
    snap_mode = diag_mode = "w"
    if resume:
        t_last, warm, keep_snap, keep_diag = resume
        warm_t = t_last
        times = [t for t in times if t > t_last]
        with open(out / "phi_snapshots.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, SNAPSHOT_FIELDS, lineterminator="\n")
            w.writeheader()
            w.writerows(keep_snap)
        with open(out / "diagnostics.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_FIELDS)
            w.writerows(keep_diag)
        snap_mode = diag_mode = "a"
        log(f"resuming after t={t_last}")

    x = path.mesh.nodes
    with open(out / "phi_snapshots.csv", snap_mode, newline="") as fs, \
            open(out / "diagnostics.csv", diag_mode, newline="") as fd:
        ws, wd = csv.writer(fs, lineterminator="\n"), csv.writer(fd, lineterminator="\n")
        if snap_mode == "w":
            ws.writerow(SNAPSHOT_FIELDS)
            wd.writerow(CSV_FIELDS)

        def sink(state):
            shift, osc = state.parts
            ws.writerows([_fmt(state.t), i, _fmt(x[i]), _fmt(state.phi[i]), _fmt(shift), _fmt(osc[i])]
                         for i in range(npoints))
            row = measure(state, limit, path)
            wd.writerow([_fmt(v) for v in row.values()])
            fs.flush()
            fd.flush()

        t_cur = [None]

        def tracking_sink(state):
            t_cur[0] = state.t
            sink(state)

        try:
            path.march(times, tracking_sink, warm_start=warm, warm_t=warm_t)
        except FanoContinuityError as exc:
            rec = exc.record()
            rec["t_last_solved"] = t_cur[0]
            manifest["error"] = rec
            _write_manifest(out, manifest)
            raise
    manifest["files"] = {f: sha256_file(out / f) for f in OUTPUT_FILES}
    manifest["status"] = "complete"
    manifest["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    _write_manifest(out, manifest)
    return manifest


def read_diagnostics(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in CSV_FIELDS}


def write_report(run_dir):
    run_dir = Path(run_dir)
    mpath = run_dir / "manifest.json"
    if not mpath.exists():
        raise ManifestMissing(f"no manifest.json in {run_dir}")
    man = json.loads(mpath.read_text())
    warnings = []
    if man.get("status") != "complete":
        warnings.append(f"run status is {man.get('status')!r}")
    for f, dig in man.get("files", {}).items():
        p = run_dir / f
        if not p.exists():
            warnings.append(f"{f} is missing")
        elif sha256_file(p) != dig:
            warnings.append(f"integrity warning: digest of {f} does not match the manifest")
    lines = [f"# Run report: {run_dir.name}", "",
             f"- config hash: `{man.get('config_hash')}`",
             f"- code version: {man.get('code_version')}",
             f"- status: {man.get('status')}", ""]
    if warnings:
        lines += ["## Warnings", ""] + [f"- {w}" for w in warnings] + [""]
    fits = {}
    dpath = run_dir / "diagnostics.csv"
    if dpath.exists():
        d = read_diagnostics(dpath)
        ts = d["t"]
        lines += ["## Final values", "", "| quantity | value |", "|---|---|"]
        lines += [f"| {k} | {d[k][-1]:.6e} |" for k in CSV_FIELDS[1:]]
        lines += ["", "## Fitted decay (t >= 2)", "", "| quantity | model | rate | constant | R^2 |",
                  "|---|---|---|---|---|"]
        for k in DECAY_FIELDS:
            try:
                rate, const, q = fit_decay(list(zip(ts, d[k])))
            except FanoContinuityError as exc:
                lines.append(f"| {k} | n/a | {exc} | | |")
                continue
            fits[k] = {"rate": rate, "constant": const, **q}
            lines.append(f"| {k} | {q['model']} | {rate:.4f} | {const:.4e} | {q['r2']:.5f} |")
        plots = run_dir / "plots"
        plots.mkdir(exist_ok=True)
        for col, k in enumerate(CSV_FIELDS[1:], start=2):
            logy = "set logscale y\n" if k in DECAY_FIELDS else ""
            (plots / f"{k}.gp").write_text(
                "set datafile separator ','\n"
                f"set title '{k}'\nset xlabel 't'\n{logy}"
                f"set terminal pngcairo\nset output '{k}.png'\n"
                f"plot '../diagnostics.csv' every ::1 using 1:{'(abs($%d))' % col if logy else col} "
                f"with linespoints title '{k}'\n")
    (run_dir / "report.md").write_text("\n".join(lines) + "\n")
    return {"warnings": warnings, "fits": fits}


def product_oracle(spec, t):
    """Closed-form phi(t) for the product model with round initial data."""
    return -np.expm1(-t) * np.log(4.0 * (spec.kappa + 2.0 * np.exp(-t)) / spec.omega_gauge)


def _sample_points():
    return np.linspace(0.05, 0.95, 19)


def convergence_study(cfg, resolutions, noise=1e-12):
    """Observed orders of phi (space-time sup over the schedule), Phi and psi."""
    resolutions = [int(n) for n in resolutions]
    if len(resolutions) < 3 or any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ConfigInvalid("need at least 3 strictly increasing resolutions")
    spec = cfg.model_spec()
    q = _sample_points()
    times = cfg.times()
    runs = []
    for n in resolutions:
        path = ContinuityPath(spec, n, tol=float(cfg.solver["tol"]),
                              max_iter=int(cfg.solver["max_iter"]), polish=3)
        states = path.march(times)
        limit = build_limit(spec, path.u0, path.volume)
        m = path.mesh
        runs.append({
            "phi": np.array([s.parts[0] + m.interpolate_many(s.parts[1], q) for s in states]),
            "density": np.array([m.interpolate_many(s.density, q) for s in states]),
            "psi": np.array([limit.psi_value]),
            "residual": max(s.report.residual_sup for s in states)})
    rows = []
    exact = None
    if spec.model == "product" and spec.b0 + 2.0 == spec.binf:
        exact = np.array([product_oracle(spec, t) for t in times])[:, None]
    for key in ("phi", "density", "psi"):
        for i in range(len(resolutions) - 2):
            a, b, c = (runs[j][key] for j in (i, i + 1, i + 2))
            e1, e2 = float(np.abs(a - b).max()), float(np.abs(b - c).max())
            scale = max(1.0, float(np.abs(c).max()))
            row = {"quantity": key, "resolutions": resolutions[i:i + 3], "diff_coarse": e1,
                   "diff_fine": e2}
            if key == "phi" and exact is not None:
                errs = [float(np.abs(runs[j]["phi"] - exact).max()) for j in (i, i + 1, i + 2)]
                row["error_vs_closed_form"] = errs
            if max(e1, e2) <= noise * scale:
                row.update(order=None, status="exact")
            else:
                order = float(np.log2(e1 / e2)) if e2 > 0 else float("inf")
                row.update(order=order, status="pass" if order >= 3.5 else "fail")
            rows.append(row)
    return {"rows": rows, "passed": all(r["status"] != "fail" for r in rows),
            "max_residual": max(r["residual"] for r in runs)}


def _print_table(rows, out=sys.stdout):
    for r in rows:
        order = "-" if r.get("order") is None else f"{r['order']:.3f}"
        print(f"{r['quantity']:>8} {str(r['resolutions']):>16} {r['diff_coarse']:11.3e} "
              f"{r['diff_fine']:11.3e} {order:>7} {r['status']}", file=out)


def _error(exc, **extra):
    rec = exc.record() if isinstance(exc, FanoContinuityError) else {"error": type(exc).__name__,
                                                                     "message": str(exc)}
    rec.update(extra)
    print(json.dumps(rec), file=sys.stderr)


def cmd_run(args):
    try:
        cfg = load_config(args.config)
    except ConfigInvalid as exc:
        _error(exc)
        return 2
    out = Path(args.out or cfg.outputs["directory"])
    try:
        execute_run(cfg, out, seed=args.seed)
    except SolverError as exc:
        _error(exc, kind="SolverFailed")
        return 1
    except FanoContinuityError as exc:
        _error(exc)
        return 1
    except OSError as exc:
        _error(exc, kind="IoError")
        return 1
    print(f"run complete: {out}")
    return 0


def cmd_verify(args):
    from .acceptance import SUITES, run_suite
    if args.suite not in SUITES:
        _error(UnknownSuite(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)}"))
        return 2
    results = run_suite(args.suite, seed=args.seed)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def cmd_study(args):
    try:
        res = [int(s) for s in args.resolutions.split(",")]
        cfg = load_config(args.config)
        out = convergence_study(cfg, res)
    except (ConfigInvalid, ValueError) as exc:
        _error(exc)
        return 2
    except FanoContinuityError as exc:
        _error(exc)
        return 1
    print(f"{'quantity':>8} {'resolutions':>16} {'diff_coarse':>11} {'diff_fine':>11} {'order':>7} status")
    _print_table(out["rows"])
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "study.json").write_text(json.dumps(out, indent=2))
    return 0 if out["passed"] else 1


def cmd_report(args):
    try:
        res = write_report(args.dir)
    except ManifestMissing as exc:
        _error(exc)
        return 2
    for w in res["warnings"]:
        print(w, file=sys.stderr)
    print(f"wrote {Path(args.dir) / 'report.md'}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="fano_continuity")
    p.add_argument("--seed", type=int, default=0, help="recorded; used by Monte Carlo checks")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("verify")
    v.add_argument("suite")
    v.set_defaults(func=cmd_verify)
    s = sub.add_parser("study")
    s.add_argument("--resolutions", default="64,128,256")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_study)
    rp = sub.add_parser("report")
    rp.add_argument("dir")
    rp.set_defaults(func=cmd_report)
    for sp in (r, v, s, rp):
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    return args.func(args)
