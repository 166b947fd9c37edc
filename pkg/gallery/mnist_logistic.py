"""Distributed logistic regression on MNIST digits 0 and 1.

Uses the bundled 992-sample subset unless $MNIST_DIR points at a full MNIST
training set. Each node holds 62 images; the averaged model is scored on the
pooled training data.
"""

import os
from pathlib import Path

from quantgt import load_config, run_experiment
from quantgt.experiment import build

root = Path(__file__).resolve().parents[1]
os.environ.setdefault("QUANTGT_OUTPUT_DIR", "gallery-output")

for kind in ("identity", "log", "uniform"):
    cfg = load_config(root / "configs" / f"mnist_subset_exponential_{kind}.ini")
    trace = run_experiment(cfg)
    costs, _, _ = build(cfg)
    print(f"{kind:>8}: gap {trace.gap[0]:.3e} -> {trace.final_gap:.3e}, "
          f"training accuracy {costs.accuracy(trace.x_bar):.4f}")
