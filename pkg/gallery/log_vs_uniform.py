"""Log-scale versus uniform link quantization at two quantization levels.

The log runs converge to the floating-point floor; the uniform runs stall at
a residual gap that shrinks with rho.
"""

import os
from pathlib import Path

from quantgt import compare_report, load_config, run_experiment
from quantgt.report import format_table

root = Path(__file__).resolve().parents[1]
out = Path(os.environ.setdefault("QUANTGT_OUTPUT_DIR", "gallery-output"))

names = [f"academic_{kind}_rho{r}" for r in (16, 64) for kind in ("log", "uniform")]
for name in names:
    run_experiment(load_config(root / "configs" / f"{name}.ini"))

rows = compare_report([out / f"{n}.csv" for n in names], out_svg=out / "log_vs_uniform.svg",
                      title="log vs uniform quantization")
print(format_table(rows))
