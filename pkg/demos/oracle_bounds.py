"""How the oracle bounds compare at a few (Gibbs risk, tandem risk) points.

Run: python3 demos/oracle_bounds.py
"""
import numpy as np

from mvbound.oracle import mu_star, oracle_cbound, oracle_fo, oracle_mv_param, oracle_tnd, ratio_surface

points = [(0.1, 0.02), (0.1, 0.05), (0.1, 0.09), (0.3, 0.1), (0.3, 0.15), (0.3, 0.25), (0.45, 0.21)]

print(f"{'g':>5} {'t':>5} {'FO':>7} {'TND':>7} {'C-bound':>8} {'mu*':>7} {'param@mu*':>10}")
for g, t in points:
    mu = mu_star(g, t)
    print(
        f"{g:5.2f} {t:5.2f} {oracle_fo(g):7.3f} {oracle_tnd(g, t):7.3f} "
        f"{oracle_cbound(g, t):8.4f} {mu:7.3f} {oracle_mv_param(g, t, mu):10.4f}"
    )

g, t, ratio = ratio_surface(400)
print()
print(f"C-bound / TND over {ratio.size} feasible grid points: max {ratio.max():.12f}, min {ratio.min():.4f}")
print(f"the ratio equals 1 on t = g/2 ({np.sum(t == 0.5 * g)} points) and drops towards 0 as t -> g^2")
