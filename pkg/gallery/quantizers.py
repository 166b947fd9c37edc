"""Log-scale versus uniform quantization of link messages.

Log quantization keeps relative precision at every scale, so small messages
survive. Uniform quantization has a fixed absolute step and flattens anything
below half a step to zero.
"""

import numpy as np

from quantgt import LinkNonlinearity, quantize_log, quantize_uniform, sector_bounds

rho = 1 / 16
z = np.array([-3.0, -0.2, -1e-3, 1e-6, 0.01, 0.04, 0.5, 2.0, 7.3])

print(f"{'z':>10} {'log':>12} {'uniform':>12}")
for v, ql, qu in zip(z, quantize_log(z, rho), quantize_uniform(z, rho)):
    print(f"{v:>10.3g} {ql:>12.5g} {qu:>12.5g}")

lo, hi = sector_bounds(LinkNonlinearity("log", rho))
print(f"\nlog sector bounds for rho={rho}: [{lo:.5f}, {hi:.5f}]")

rng = np.random.default_rng(0)
w = rng.standard_normal(10_000) * 10.0 ** rng.uniform(-4, 2, 10_000)
rel_log = np.abs(quantize_log(w, rho) / w - 1)
rel_uni = np.abs(quantize_uniform(w, rho) / w - 1)
print(f"worst relative error over 1e4 messages: log {rel_log.max():.4f}, uniform {rel_uni.max():.4f}")
