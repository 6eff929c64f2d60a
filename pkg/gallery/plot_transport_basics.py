"""
Exact transport distances on a finite space
===========================================

Wasserstein-1 distances between two measures on a handful of points, solved
exactly as a transportation linear program.
"""

import numpy as np

from conclab import FiniteMeasure, FiniteMetricSpace, kl_divergence, tv_distance, w1_exact

# two measures on three points of a line
mu = FiniteMeasure([0.5, 0.3, 0.2])
nu = FiniteMeasure([0.1, 0.3, 0.6])
line = FiniteMetricSpace(np.abs(np.subtract.outer([0.0, 1.0, 2.0], [0.0, 1.0, 2.0])))

value, coupling = w1_exact(mu, nu, line)
print("W1 on the line:", value)
print("optimal coupling:\n", coupling.joint.round(3))

# on a line W1 is the area between the two CDFs
print("CDF check:     ", np.abs(np.cumsum(mu.weights - nu.weights))[:-1].sum())

# under the discrete metric W1 collapses to total variation
discrete, _ = w1_exact(mu, nu, FiniteMetricSpace.discrete(3))
print("discrete W1:", discrete, " TV:", tv_distance(mu, nu))

# Pinsker: TV <= sqrt(KL / 2)
print("sqrt(KL/2):", np.sqrt(kl_divergence(mu, nu) / 2))
