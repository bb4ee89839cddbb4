import numpy as np
import pytest

from conftest import make_dataset
from ebfreq.core import CountPair
from ebfreq.estimate import estimate_all
from ebfreq.evaluate import bias_variance_profile, format_profile, format_report, mse_vs_truth, mse_vs_validation
from ebfreq.fit import fit_parametric
from ebfreq.simulate import SimConfig, draw_truth, sample_counts, sample_validation


def test_truth_mode_examples():
    q = np.array([0.1, 0.4, 0.9])
    rep = mse_vs_truth(q, q)
    assert rep.mse_raw == 0.0 and rep.mse_corrected == 0.0 and rep.correction_term == 0.0
    rep = mse_vs_truth(q + 0.1, q)
    assert rep.mse_raw == pytest.approx(0.01)


def test_truth_mode_aligns_by_id():
    est = {"id": ["a", "b"], "q_eb": np.array([0.2, 0.6])}
    assert mse_vs_truth(est, {"b": 0.6, "a": 0.2}).mse_raw == 0.0
    with pytest.raises(ValueError, match="'b'"):
        mse_vs_truth(est, {"a": 0.2, "c": 0.6})


def test_validation_mode_examples():
    rep = mse_vs_validation(np.array([0.0, 1.0]), [CountPair(0, 12), CountPair(12, 12)])
    assert rep.correction_term == 0.0 and rep.mse_corrected == rep.mse_raw
    rep = mse_vs_validation(np.array([0.5]), [CountPair(1, 2)])
    assert rep.mse_raw == 0.0
    assert rep.correction_term == pytest.approx(0.25)
    assert rep.mse_corrected == pytest.approx(-0.25)


def test_validation_needs_two_alleles():
    with pytest.raises(ValueError, match="at least 2"):
        mse_vs_validation(np.array([0.5, 0.5]), [CountPair(1, 2), CountPair(1, 1)])


def test_validation_dataset_matched_by_id():
    est = {"id": ["b", "a"], "q_eb": np.array([0.25, 0.5])}
    val = make_dataset([2, 1], [4, 4], ids=["a", "b"])
    assert mse_vs_validation(est, val).mse_raw == 0.0


def test_correction_is_unbiased_by_monte_carlo():
    # Direct oracle: E[(qhat - qv)^2] = E[(qhat - q)^2] + E[q (1 - q)] / n_val.
    truth = draw_truth(SimConfig(n_markers=2000, seed=21))
    est = np.clip(truth.q + 0.03, 0, 1)
    true_mse = mse_vs_truth(est, truth.q).mse_raw
    diffs = []
    for r in range(200):
        val = sample_validation(truth, 24, seed=21, replicate=r)
        diffs.append(mse_vs_validation(est, val).mse_corrected - true_mse)
    diffs = np.array(diffs)
    assert abs(diffs.mean()) < 2 * diffs.std(ddof=1) / np.sqrt(len(diffs))


def test_profile_needs_replicates():
    with pytest.raises(ValueError):
        bias_variance_profile([np.array([0.1])], np.array([0.1]))


def test_profile_all_zero_when_exact():
    q = np.linspace(0.01, 0.99, 50)
    prof = bias_variance_profile([q, q, q], q, n_bins=5)
    assert all(b.mse == 0 and b.bias_sq == 0 and b.variance == 0 for b in prof)


def test_profile_empty_bins_reported():
    q = np.array([0.12, 0.13])
    prof = bias_variance_profile([q, q + 0.01], q, n_bins=10)
    assert prof[1].count == 2
    assert prof[5].count == 0 and prof[5].mse is None and prof[5].bias_sq is None


@pytest.mark.parametrize("decomposition", ["marker", "bin"])
def test_profile_decomposition_identity(decomposition):
    rng = np.random.default_rng(2)
    q = rng.random(500)
    reps = [q + rng.normal(0.02, 0.05, 500) for _ in range(7)]
    for b in bias_variance_profile(reps, q, n_bins=8, decomposition=decomposition):
        assert b.mse == pytest.approx(b.bias_sq + b.variance, rel=1e-12)


def test_profile_decompositions_differ_only_in_bias_placement():
    # Errors of +e and -e on two markers in one bin: per-marker bias is e^2,
    # bin-level bias is zero.
    q = np.array([0.5, 0.52])
    reps = [np.array([0.6, 0.42]), np.array([0.6, 0.42])]
    (m,) = [b for b in bias_variance_profile(reps, q, n_bins=2) if b.count]
    (b,) = [b for b in bias_variance_profile(reps, q, n_bins=2, decomposition="bin") if b.count]
    assert m.bias_sq == pytest.approx(0.01) and m.variance == pytest.approx(0.0)
    assert b.bias_sq == pytest.approx(0.0) and b.variance == pytest.approx(0.01)


def test_validation_converges_to_truth_for_large_n_val():
    truth = draw_truth(SimConfig(n_markers=20_000, seed=5))
    data = sample_counts(truth, 90, 30, seed=5)
    est = estimate_all(fit_parametric(data, "eb1").model, data)
    exact = mse_vs_truth(est, {i: q for i, q in zip(truth.ids, truth.q)}).mse_raw
    val = sample_validation(truth, 2000, seed=5)
    assert mse_vs_validation(est, val).mse_corrected == pytest.approx(exact, rel=0.05)


def test_human_tables():
    rep = mse_vs_truth(np.array([0.1, 0.2]), np.array([0.1, 0.25]))
    text = format_report(rep)
    assert "truth" in text and "0.00125" in text
    prof = bias_variance_profile([np.array([0.1, 0.2])] * 2, np.array([0.1, 0.25]), n_bins=2)
    assert "NA" not in format_profile(prof).splitlines()[1]
