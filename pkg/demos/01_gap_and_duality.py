"""
The regularized gap function and its dual bound
===============================================

A one-dimensional SVIP ``F(x, xi) = x - xi`` on ``x >= 0``. The gap
``f_alpha(x, xi)`` is zero exactly when ``x`` solves the VI for that ``xi``,
and ``omega_alpha`` bounds it from above for every multiplier.
"""

import numpy as np

from drerm import AffineSVIP, PolyhedralSet, gap_value, omega, strong_duality_multipliers

inst = AffineSVIP(
    m_lin=np.zeros((1, 1, 1)),
    m_const=np.ones((1, 1)),
    q_lin=-np.ones((1, 1)),
    q_const=np.zeros(1),
    feasible=PolyhedralSet.nonneg_orthant(1),
)

# %% the gap over a few scenarios at x = 0.5
for xi in (-1.0, 0.0, 0.5, 2.0):
    print(f"xi = {xi:5.1f}   f = {gap_value(inst, 1.0, [0.5], [xi]).value:.4f}")

# %% weak duality for random multipliers, equality at the witness
# x >= 0 has no rows in A, so only the bound multiplier mu is present
rng = np.random.default_rng(0)
x, xi = np.array([0.5]), np.array([2.0])
f = gap_value(inst, 1.0, x, xi).value
lam_star, mu_star = strong_duality_multipliers(inst, 1.0, x, xi)
print("witness mu", mu_star, "omega - f =", omega(inst, 1.0, x, lam_star, mu_star, xi) - f)
for mu in rng.exponential(size=(3, 1)):
    print("mu", mu, "omega - f =", omega(inst, 1.0, x, [], mu, xi) - f)
