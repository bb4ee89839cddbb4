"""When the booster is the target population, the prior should learn to pool.

Target and booster counts are drawn from the same allele frequency with 60
alleles each.  Pooling is then the ideal estimator, and the fitted EB1 slope
should approach the booster sample size while the intercept stays near zero.
"""

import numpy as np

from ebfreq import SimConfig, estimate_all, fit_parametric, simulate_dataset


def main():
    data, truth = simulate_dataset(SimConfig(n_markers=50_000, mode="identical", n_x=60, n_y=60, seed=1))
    result = fit_parametric(data, "eb1")
    model = result.model
    print(f"fitted beta0 = {model.beta0:.3f}, beta1 = {model.betas[0]:.2f} (booster alleles: 60)")
    print(f"affinity nu = {model.affinity():.2f}, converged = {result.converged}")

    records = estimate_all(model, data)
    for name in ("q_mle", "q_pooled", "q_eb"):
        est = np.array([getattr(r, name) for r in records])
        print(f"{name:9s} MSE = {np.mean((est - truth.q) ** 2):.4e}")


if __name__ == "__main__":
    main()
