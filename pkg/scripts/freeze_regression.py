"""Regenerate the frozen regression bounds from a high-resolution Hirzebruch run.

Run once after a deliberate numerical change and commit the updated fixture:

    python3 scripts/freeze_regression.py
"""
import json
import time

from fano_continuity import __version__
from fano_continuity.acceptance import reference_bounds
from fano_continuity.harness_cli import fixture_path, load_config

NPOINTS = 512

cfg = load_config("hirzebruch_a1")
t0 = time.time()
data = reference_bounds(NPOINTS)
data["provenance"] = {
    "config": "hirzebruch_a1",
    "config_hash": cfg.digest(),
    "npoints": NPOINTS,
    "code_version": __version__,
    "generated": time.strftime("%Y-%m-%d"),
    "tolerance": "bounds reproduced within 5% relative; decay finals within +5%",
}
out = fixture_path()
with open(out, "w") as fh:
    json.dump(data, fh, indent=2, sort_keys=True)
print(f"wrote {out} in {time.time() - t0:.1f}s")
for section in ("bounds", "decay_final"):
    for k, v in data[section].items():
        print(f"  {k:32s} {v:.6e}")
