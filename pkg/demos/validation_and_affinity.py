"""Scoring without known truth, and reading booster affinity from the fit.

Part one holds out a small validation sample per marker.  The naive MSE
against validation frequencies overstates the true error by about
E[q(1-q)] / n_val, and the corrected score removes that excess.

Part two fits one prior per booster for three boosters that drift away from
the target by increasing amounts.  The fitted affinity falls as drift grows,
so it ranks boosters by how much they should be trusted.
"""

import numpy as np

from ebfreq import EB1Prior, MarkerDataset, SimConfig, draw_truth, fit_parametric, mse_vs_truth, mse_vs_validation
from ebfreq import sample_counts, sample_validation
from ebfreq.estimate import estimate_arrays
from ebfreq.rng import MarkerStreams
from ebfreq.simulate import marker_ids

N_VAL = 24


def validation_part():
    config = SimConfig(n_markers=20_000, seed=4)
    truth = draw_truth(config)
    data = sample_counts(truth, config.n_x, config.n_y, seed=config.seed)
    est = estimate_arrays(fit_parametric(data, "eb1").model, data)
    exact = mse_vs_truth(est["q_eb"], truth.q).mse_raw
    report = mse_vs_validation(est, sample_validation(truth, N_VAL, seed=config.seed))
    print(f"MSE against truth           {exact:.4e}")
    print(f"naive MSE against validation {report.mse_raw:.4e}")
    print(f"corrected validation MSE     {report.mse_corrected:.4e}")
    print(f"predicted excess q(1-q)/n    {np.mean(truth.q * (1 - truth.q)) / N_VAL:.4e}")


def affinity_part(seed=0, m=20_000, drift=(200.0, 40.0, 8.0)):
    q = MarkerStreams(seed, "q", m).beta(0.198, 0.198)
    y = MarkerStreams(seed, "y", m).binomial(30, q)
    xs = []
    for k, c in enumerate(drift):
        p = MarkerStreams(seed, f"p{k}", m).beta(np.maximum(c * q, 1e-300), np.maximum(c * (1 - q), 1e-300))
        xs.append(MarkerStreams(seed, f"x{k}", m).binomial(90, p))
    x = np.column_stack(xs)
    data = MarkerDataset(marker_ids(m), y, np.full(m, 30), x, np.full_like(x, 90))
    for k, c in enumerate(drift):
        model: EB1Prior = fit_parametric(data.select_boosters([k]), "eb1").model
        print(f"booster {k} (drift concentration {c:5.0f}): affinity nu = {model.affinity():6.2f}")


if __name__ == "__main__":
    validation_part()
    print()
    affinity_part()
