"""
The quasi-Monte Carlo ERM baseline
==================================

Sobol points in a box of three standard deviations around the mean,
weighted by the nominal density, replace the expectation of the gap.
"""

import numpy as np

from drerm import MomentAmbiguity, SamplingMode, erm_objective, equicorrelated_sigma, qmc_samples, sobol, solve_erm
from drerm.harness import generate_game

print(sobol(4, 2))

game = generate_game(seed=3)
inst = game.to_svip()
alpha = 1.0 / inst.beta0()
amb = MomentAmbiguity(np.zeros(game.m), equicorrelated_sigma(game.m))

for mode in SamplingMode:
    for nk in (80, 10000):
        samples = qmc_samples(amb, nk, mode)
        x, rep = solve_erm(inst, alpha, samples, amb)
        print(f"{mode.value:15s} N_k = {nk:5d}: {rep.status} after {rep.iterations} steps, objective {rep.objective:.5f}")

# the objective at the origin for comparison
print("objective at 0:", erm_objective(inst, alpha, qmc_samples(amb, 80), amb, np.zeros(inst.n)))
