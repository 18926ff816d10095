#!/usr/bin/env python3
"""Walk the coverage loop end to end on the bundled VerticalCAS example.

Starts from a random partial dataset, reports coverage, turns the gap list
into new scenario parameters, feeds them back in, and shows the ratio
reaching 1.0. Each stage is the corresponding CLI subcommand, so the
console transcript doubles as usage documentation.

    python scripts/closure_demo.py --out /tmp/oddcov-demo
"""

import argparse
import json
import os
import subprocess
import sys

import oddcov


def run(args):
    print(f"\n$ oddcov {' '.join(args)}", flush=True)
    proc = subprocess.run([sys.executable, "-m", "oddcov.cli", *args])
    return proc.returncode


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="oddcov-demo")
    parser.add_argument("--rows", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    spec = oddcov.bundled_spec_path()
    out = args.out
    os.makedirs(out, exist_ok=True)
    seed_csv = os.path.join(out, "seed_data.csv")

    here = os.path.dirname(os.path.abspath(__file__))
    subprocess.run([sys.executable, os.path.join(here, "make_synthetic_data.py"),
                    "--rows", str(args.rows), "--seed", str(args.seed),
                    "-o", seed_csv], check=True)

    run(["space", spec])
    # a random corpus never covers everything: expect exit 3 (below threshold)
    run(["analyze", spec, seed_csv, "--out", out])
    run(["gaps", spec, "--out", out, "--limit", "5"])
    run(["generate", spec, "--out", out, "--strategy", "center"])
    code = run(["analyze", spec, os.path.join(out, "scenarios.csv"), "--out", out])

    report = json.load(open(os.path.join(out, "report.json")))
    print(f"\nfinal r_cov = {report['r_cov']}, exit code {code}")
    return 0 if report["r_cov"] == 1.0 and code == 0 else 1


if __name__ == "__main__":
    raise SystemExit(main())
