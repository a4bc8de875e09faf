"""Regenerate the bundled CSV samples (rows are observations)."""

import csv
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "geocomplexity" / "data"
N = 2000
SEED = 0
FIXTURES = {
    "rank3.csv": [16.0, 9.0, 4.0, 2.5, 2.5],
    "isotropic.csv": [4.0] * 5,
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, variances in FIXTURES.items():
        rng = np.random.default_rng(SEED)
        x = rng.standard_normal((N, len(variances))) * np.sqrt(variances)
        with open(OUT / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(len(variances))])
            w.writerows([[f"{v:.6f}" for v in row] for row in x])


if __name__ == "__main__":
    main()
