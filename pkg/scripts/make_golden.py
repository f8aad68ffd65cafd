"""Regenerate the golden CLI outputs under fixtures/golden.

    make golden

Each case is a shipped config shrunk to a small N so the artifacts stay
reviewable. The golden test reruns every case and compares the files byte for
byte; run.json is compared with the version block removed.
"""
import shutil
import sys
from pathlib import Path

import yaml

from pmc_adapt.cli import main

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "fixtures" / "golden"

CASES = {
    "example1_small": ("run", "example1.yaml", {"N": 400, "T": 4}),
    "example3_small": ("run", "example3.yaml", {"N": 500, "T": 3}),
    "discrete_rb_small": ("run", "discrete_rb.yaml", {"N": 300, "T": 3}),
    "discrete_basic_small": ("run", "discrete_basic.yaml", {"N": 300, "T": 3}),
    "example2_surface_small": ("surface", "example2.yaml", {"surface": {"grid_resolution": 5, "pairs": 400, "tol": 1e-6}}),
}


def write_case_config(name, config, patch, dest):
    doc = yaml.safe_load((ROOT / "configs" / config).read_text())
    doc.update(patch)
    doc["name"] = name
    doc["output_dir"] = "out"
    if doc["target"]["type"] == "discrete_file":
        doc["target"]["path"] = "../../discrete/" + Path(doc["target"]["path"]).name
    path = dest / "config.yaml"
    path.write_text(yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=120))
    return path


def run_case(name, out_dir):
    command, config, patch = CASES[name]
    case_dir = GOLDEN / name
    case_dir.mkdir(parents=True, exist_ok=True)
    cfg = case_dir / "config.yaml"
    if not cfg.exists():
        cfg = write_case_config(name, config, patch, case_dir)
    return main([command, str(cfg), "--out", str(out_dir)])


if __name__ == "__main__":
    if GOLDEN.exists():
        shutil.rmtree(GOLDEN)
    for name in CASES:
        code = run_case(name, GOLDEN / name / "out")
        if code != 0:
            sys.exit(f"{name}: exit code {code}")
        print(f"wrote {GOLDEN / name}")
