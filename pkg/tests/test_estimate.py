import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_dataset
from ebfreq.core import CountPair
from ebfreq.data import DataError, MarkerRecord
from ebfreq.estimate import estimate_all, estimate_arrays, estimate_eb, estimate_mle, estimate_pooled
from ebfreq.priors import EB1Prior, WindowBin, WindowedPrior


class FixedPrior:
    """Prior that returns the same (a, b) for every profile."""

    K = 1

    def __init__(self, a, b):
        self.a, self.b = a, b

    def evaluate(self, freqs):
        m = np.asarray(freqs).reshape(-1, 1).shape[0]
        return np.full(m, self.a), np.full(m, self.b)


class CountPrior:
    """Prior with pseudo-counts equal to the observed booster counts (pooling limit)."""

    K = 1

    def __init__(self, n_x):
        self.n_x = n_x

    def evaluate(self, freqs):
        p = np.asarray(freqs, dtype=float).reshape(-1)
        return p * self.n_x, (1 - p) * self.n_x


def rec(y, n, *boosters, mid="m"):
    return MarkerRecord(mid, CountPair(y, n), tuple(CountPair(s, t) for s, t in boosters))


def test_mle_examples():
    assert estimate_mle(rec(10, 30)) == pytest.approx(1 / 3)
    assert estimate_mle(rec(0, 30)) == 0.0
    assert estimate_mle(rec(30, 30)) == 1.0


def test_pooled_examples():
    assert estimate_pooled(rec(10, 30, (30, 90))) == pytest.approx(1 / 3)
    assert estimate_pooled(rec(0, 30, (0, 90))) == 0.0
    assert estimate_pooled(rec(1, 2, (1, 2), (1, 2))) == 0.5
    with pytest.raises(ValueError):
        estimate_pooled(rec(1, 2))


def test_symmetric_prior_at_half():
    r = estimate_eb(FixedPrior(18.478, 18.478), rec(15, 30, (45, 90)))
    assert r.q_eb == pytest.approx(33.478 / 66.956)
    assert r.q_eb == pytest.approx(0.5)


def test_count_prior_reproduces_pooling_exactly():
    data = make_dataset([3, 0, 30, 12], [30] * 4, [17, 0, 90, 41], [90] * 4)
    out = estimate_arrays(CountPrior(90), data)
    np.testing.assert_allclose(out["q_eb"], out["q_pooled"], rtol=1e-15)


def test_invalid_prior_is_an_error():
    with pytest.raises(DataError):
        estimate_eb(EB1Prior(0.0, (0.0,)), rec(3, 10, (2, 5)))


def test_windowed_miss_names_marker():
    model = WindowedPrior((WindowBin(0.0, 0.2, 1.0, 4.0), WindowBin(0.5, 1.0, 4.0, 1.0)))
    data = make_dataset([1, 2, 3], [10] * 3, [1, 3, 8], [10] * 3, ids=["a", "gap", "c"])
    with pytest.raises(DataError, match="'gap'"):
        estimate_all(model, data)


def test_bulk_matches_record_loop_and_keeps_order():
    model = EB1Prior(0.2, (31.0,))
    data = make_dataset([5, 0, 30, 12, 7], [30, 30, 30, 25, 9], [40, 2, 88, 30, 9], [90, 90, 90, 70, 10],
                        ids=["z", "b", "y", "a", "x"])
    bulk = estimate_all(model, data)
    assert [r.id for r in bulk] == ["z", "b", "y", "a", "x"]
    assert bulk == [estimate_eb(model, r) for r in data.records]


def test_record_fields():
    r = estimate_eb(EB1Prior(0.5, (9.0,)), rec(3, 10, (6, 9)))
    a, b = 0.5 + 6.0, 0.5 + 3.0
    assert (r.prior.a, r.prior.b) == pytest.approx((a, b), rel=1e-15)
    assert r.q_eb == pytest.approx((3 + a) / (10 + a + b))
    assert r.var_eb == pytest.approx(r.q_eb * (1 - r.q_eb) / (10 + a + b + 1))
    assert r.local_affinity == pytest.approx(10.0)
    assert r.q_mle == 0.3 and r.q_pooled == pytest.approx(9 / 19)


@given(st.floats(0.01, 500), st.floats(0.0, 200), st.integers(1, 200), st.integers(1, 200), st.data())
def test_shrinkage_direction(beta0, beta1, n, n_x, data):
    y = data.draw(st.integers(0, n))
    x = data.draw(st.integers(0, n_x))
    r = estimate_eb(EB1Prior(beta0, (beta1,)), rec(y, n, (x, n_x)))
    prior_mean = r.prior.mean
    assert 0.0 < r.q_eb < 1.0
    assert np.sign(r.q_eb - r.q_mle) == np.sign(prior_mean - r.q_mle) or r.q_eb == r.q_mle
    lo, hi = sorted((prior_mean, r.q_mle))
    assert lo - 1e-15 <= r.q_eb <= hi + 1e-15


@given(st.floats(0.05, 50), st.floats(1.01, 20), st.integers(0, 30), st.floats(0.01, 0.99))
def test_larger_affinity_moves_toward_prior(nu, c, y, mean):
    base = FixedPrior(mean * nu, (1 - mean) * nu)
    scaled = FixedPrior(c * mean * nu, c * (1 - mean) * nu)
    r1 = estimate_eb(base, rec(y, 30, (1, 2)))
    r2 = estimate_eb(scaled, rec(y, 30, (1, 2)))
    if abs(r1.q_mle - mean) > 1e-9:
        assert abs(r2.q_eb - mean) < abs(r1.q_eb - mean)
