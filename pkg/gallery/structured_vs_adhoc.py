"""Switching exponential graph versus switching Erdos-Renyi graph under log quantization.

Both runs use the same costs, quantizer (rho = 1/128) and iteration budget.
The exponential graph only reweights its links every 100 iterations; the ER
graph redraws links and weights. Traces and a comparison chart are written to
$QUANTGT_OUTPUT_DIR (default ./gallery-output).
"""

import os
from pathlib import Path

from quantgt import compare_report, load_config, run_experiment
from quantgt.report import format_table

root = Path(__file__).resolve().parents[1]
out = Path(os.environ.setdefault("QUANTGT_OUTPUT_DIR", "gallery-output"))

names = ["academic_exponential_logq", "academic_er_logq"]
for name in names:
    trace = run_experiment(load_config(root / "configs" / f"{name}.ini"))
    print(f"{name}: alpha={trace.alpha:.3e} final gap={trace.final_gap:.3e}")

rows = compare_report([out / f"{n}.csv" for n in names], out_svg=out / "structured_vs_adhoc.svg",
                      title="exponential vs Erdos-Renyi, log quantization")
print()
print(format_table(rows))
print(f"\nchart: {out / 'structured_vs_adhoc.svg'}")
