"""Algebraic connectivity of the bundled graph families and the admissible step.

The step bound is min(lambda2_A, lambda2_B) / (L * K_upper), where L is the
gradient Lipschitz constant and K_upper the upper sector bound of the links.
"""

import math

from quantgt import (LinkNonlinearity, assign_weights, gen_complete, gen_cycle, gen_erdos_renyi,
                     gen_exponential, gen_geometric, laplacian, spectrum, step_size_bound)
from quantgt.costs import academic_L, academic_generate

n = 16
graphs = {
    "complete": assign_weights(gen_complete(n), 0.5),
    "exponential": assign_weights(gen_exponential(n), 0.5),
    "directed cycle": gen_cycle(n),
    "erdos-renyi p=0.3": assign_weights(gen_erdos_renyi(n, 0.3, seed=1), 0.5),
    "geometric r=0.45": assign_weights(gen_geometric(n, 0.45, seed=2), 0.5),
}

params = academic_generate(n, 1, seed=3)
L = academic_L(params)
K = LinkNonlinearity("log", 1 / 128).K_upper
print(f"academic cost: L = {L:.3f}; log links rho=1/128: K_upper = {K:.6f}\n")
print(f"{'graph':<20} {'lambda2':>10} {'alpha_bar':>12}")
for name, g in graphs.items():
    lam2 = spectrum(laplacian(g)).lambda2_real_abs
    print(f"{name:<20} {lam2:>10.5f} {step_size_bound(lam2, lam2, L, K):>12.3e}")

print(f"\ncycle closed form 1 - cos(2 pi / n) = {1 - math.cos(2 * math.pi / n):.5f}")
