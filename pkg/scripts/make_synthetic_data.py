#!/usr/bin/env python3
"""Generate a synthetic scenario dataset for a spec's parameters.

Values are drawn uniformly over each parameter's range (levels uniformly
for categoricals), which loosely mimics an unstructured simulation corpus:
plenty of raw rows, poor combination coverage.

    python scripts/make_synthetic_data.py --rows 100000 --seed 7 -o data.csv
"""

import argparse

import numpy as np
import pandas as pd

import oddcov


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--spec", default=oddcov.bundled_spec_path(),
                        help="ODD spec JSON (default: bundled VerticalCAS)")
    parser.add_argument("--rows", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("-o", "--output", required=True)
    args = parser.parse_args()

    model = oddcov.build_model(oddcov.load_spec(args.spec))
    rng = np.random.default_rng(args.seed)
    columns = {}
    for p in model.spec.parameters:
        column = model.spec.column_for(p.name)
        if p.kind == "categorical":
            columns[column] = rng.choice(list(p.levels), args.rows)
        else:
            lo, hi = p.range
            columns[column] = rng.uniform(lo, hi, args.rows)
    pd.DataFrame(columns).to_csv(args.output, index=False)
    print(f"{args.rows} rows -> {args.output}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
