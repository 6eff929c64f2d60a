"""
Tail probabilities of an empirical state distribution
=====================================================

A two-state chain is run for ``n`` steps and the plug-in estimate of its
stationary law is compared against the truth.  The exact tail comes from
enumerating every path; the three bounds are printed next to it.
"""

from conclab import FiniteMeasure, MarkovChainModel, compare_bounds, dobrushin, mc_tail

chain = MarkovChainModel([[0.9, 0.1], [0.2, 0.8]], FiniteMeasure([0.5, 0.5]))
print("stationary law:", chain.pi.weights, " Dobrushin r:", dobrushin(chain))

# 2**10 paths: small enough to enumerate exactly
reports = compare_bounds(chain, n=10, p=1, eps_grid=[0.2, 0.4, 0.6, 0.8])
print(f"{'eps':>5} {'tail':>8} {'bound1':>8} {'bound2':>8} {'bound3':>8}")
for rep in reports:
    b1 = "NA" if rep.bound1 is None else f"{rep.bound1:8.4f}"
    print(f"{rep.eps:5.2f} {rep.empirical:8.4f} {b1:>8} {rep.bound2:8.4f} {rep.bound3:8.4f}")

# longer runs need Monte Carlo; the half-width is a 99% Clopper-Pearson radius
est, half = mc_tail(chain, n=500, p=1, eps=0.1, trials=20_000, seed=0)
print(f"n=500: P(deviation >= 0.1) = {est:.4f} +/- {half:.4f}")
