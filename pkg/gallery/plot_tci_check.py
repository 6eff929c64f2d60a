"""
Checking a transportation cost inequality by brute force
========================================================

The law of the first ``n`` states of a contracting chain should satisfy
``W1(mu, nu) <= sqrt(2 sigma2 D(mu || nu))`` under the Hamming metric with
``sigma2 = n / (4 (1 - r)**2)``.  We search for counterexamples among random
measures on the path space.
"""

from conclab import FiniteMeasure, MarkovChainModel, chain_path_law, hamming_space, marton_sigma2, tci_check

chain = MarkovChainModel([[0.9, 0.1], [0.2, 0.8]], FiniteMeasure([0.5, 0.5]))
n = 3

law = chain_path_law(chain, n)
space = hamming_space(chain.K, n)
sigma2 = marton_sigma2(n, chain.r)

report = tci_check(law, space, sigma2, num_samples=300, seed=0)
print(f"sigma2 = {sigma2:.3f}")
print(f"worst ratio W1 / sqrt(2 sigma2 D) = {report.max_ratio:.4f} over {report.num_evaluated} measures")
print("violations:", report.num_violations)

# shrinking sigma2 far enough breaks the inequality, and the check notices
tight = tci_check(law, space, sigma2 / 50, num_samples=50, seed=0)
print("with sigma2 / 50:", tight.num_violations, "violations, worst ratio", round(tight.max_ratio, 3))
