import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from edvkit.statistics import (NumericError, background_removal, correlation_power, fisher_ci, lmg_importance,
                               ols_regression, partial_spearman, shapiro_wilk, skew_normal_fit, spearman)
from conftest import DATA


def _brute_ranks(x):
    return [1 + sum(v < xi for v in x) + (sum(v == xi for v in x) - 1) / 2 for xi in x]


def _brute_spearman(x, y):
    rx, ry = _brute_ranks(x), _brute_ranks(y)
    n = len(x)
    mx, my = sum(rx) / n, sum(ry) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sxx = sum((a - mx) ** 2 for a in rx)
    syy = sum((b - my) ** 2 for b in ry)
    return sxy / math.sqrt(sxx * syy)


def test_spearman_matches_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = int(rng.integers(4, 60))
        x = rng.integers(0, 8, n).astype(float) if rng.random() < 0.5 else rng.normal(size=n)
        y = x + rng.normal(size=n) * rng.random() * 3
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            continue
        assert abs(spearman(x, y).rho - _brute_spearman(list(x), list(y))) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=5, max_size=30),
       st.lists(st.integers(0, 20), min_size=30, max_size=30))
def test_monotone_transform_invariance(xs, ys):
    x = np.array(xs, dtype=float)
    y = np.array(ys[:len(xs)], dtype=float)
    assume(np.ptp(x) > 0 and np.ptp(y) > 0)
    r = spearman(x, y).rho
    assert spearman(x ** 3 + 2 * x, y).rho == pytest.approx(r, abs=1e-12)
    assert spearman(-x, y).rho == pytest.approx(-r, abs=1e-12)


def test_partial_without_covariates_is_bit_exact():
    rng = np.random.default_rng(5)
    x, y = rng.normal(size=30), rng.normal(size=30)
    assert partial_spearman(x, y, []) == spearman(x, y)


def test_against_pingouin():
    pg = pytest.importorskip("pingouin")
    pd = pytest.importorskip("pandas")
    rng = np.random.default_rng(6)
    for n in (12, 40, 90):
        z1, z2 = rng.normal(size=n), rng.normal(size=n)
        x = z1 + rng.normal(size=n)
        y = -0.5 * x + z1 + 0.3 * z2 + rng.normal(size=n)
        df = pd.DataFrame({"x": x, "y": y, "z1": z1, "z2": z2})
        ref = pg.corr(x, y, method="spearman")
        ours = spearman(x, y)
        assert ours.rho == pytest.approx(ref["r"].iloc[0], abs=1e-12)
        assert ours.p_value == pytest.approx(ref["p_val"].iloc[0], rel=1e-6)
        assert ours.power == pytest.approx(ref["power"].iloc[0], abs=1e-6)
        lo, hi = ref["CI95"].iloc[0]
        assert ours.ci95 == pytest.approx((lo, hi), abs=0.006)
        for covs in (["z1"], ["z1", "z2"]):
            ref = pg.partial_corr(df, "x", "y", covar=covs, method="spearman")
            ours = partial_spearman(x, y, [df[c].to_numpy() for c in covs], names=covs)
            assert ours.rho == pytest.approx(ref["r"].iloc[0], abs=1e-10)
            assert ours.p_value == pytest.approx(ref["p_val"].iloc[0], rel=1e-6)


def test_small_n_exact_permutation_pvalue():
    x = np.arange(5.0)
    res = spearman(x, x)
    # only the identity and reversal reach |rho| = 1 among 5! orderings
    assert res.rho == 1.0
    assert res.p_value == pytest.approx(2 / 120)


# Reference rows (rho, n, k) with their reported CI, adjusted rho^2, p and power.
@pytest.mark.parametrize("rho,n,k,ci,adj,p,power", [
    (-0.466, 90, 0, (-0.61, -0.29), 0.208, None, 0.997),
    (-0.290, 90, 1, (-0.47, -0.09), 0.063, 0.006, 0.796),
    (-0.312, 90, 2, (-0.49, -0.11), 0.066, 0.003, 0.849),
    (0.163, 44, 1, (-0.14, 0.44), -0.021, 0.296, 0.182),
])
def test_reference_ci_adjusted_and_power(rho, n, k, ci, adj, p, power):
    from edvkit.statistics import _summarize, _t_pvalue
    res = _summarize(rho, n, k, _t_pvalue(rho, n - 2 - k), ["c"] * k)
    assert res.ci95 == pytest.approx(ci, abs=0.005 + 1e-9)
    assert res.adj_rho_squared == pytest.approx(adj, abs=0.0015)
    assert res.power == pytest.approx(power, abs=0.0015)
    if p is not None:
        assert res.p_value == pytest.approx(p, abs=0.0015)


def test_fisher_ci_contains_estimate():
    lo, hi = fisher_ci(0.3, 50)
    assert lo < 0.3 < hi
    assert correlation_power(0.0, 50) == pytest.approx(0.05, abs=1e-3)


def test_spearman_errors():
    with pytest.raises(ValueError):
        spearman([1, 2, 3], [3, 2, 1])
    with pytest.raises(ValueError):
        spearman([1, 1, 1, 1], [1, 2, 3, 4])
    with pytest.raises(ValueError):
        spearman([1, 2, np.nan, 4], [1, 2, 3, 4])
    x = np.arange(10.0)
    with pytest.raises(np.linalg.LinAlgError):
        partial_spearman(x, x[::-1] * 2, [x, 2 * x + 1])


REFERENCE = json.loads((DATA / "shapiro_reference.json").read_text())


@pytest.mark.parametrize("case", REFERENCE["cases"], ids=[c["name"] for c in REFERENCE["cases"]])
def test_shapiro_reference(case):
    res = shapiro_wilk(case["x"])
    assert res.w == pytest.approx(case["w"], abs=1e-3)
    assert res.p_value == pytest.approx(case["p"], rel=0.10, abs=1e-12)


def test_shapiro_errors():
    with pytest.raises(ValueError):
        shapiro_wilk([1.0, 2.0])
    with pytest.raises(ValueError):
        shapiro_wilk([3.0] * 10)


def test_lmg_orthogonal_equal_split():
    x1 = np.array([1, -1, 1, -1, 1, -1, 1, -1], float)
    x2 = np.array([1, 1, -1, -1, 1, 1, -1, -1], float)
    noise = np.array([1, -1, -1, 1, -1, 1, 1, -1], float) * 0.1
    res = ols_regression(x1 + x2 + noise, {"a": x1, "b": x2})
    assert res.relative_importance["a"] == pytest.approx(50.0, abs=0.1)
    assert res.relative_importance["b"] == pytest.approx(50.0, abs=0.1)


def test_lmg_sums_to_100_and_matches_r2():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(60, 4))
    X[:, 1] += X[:, 0]
    y = X @ np.array([1.0, -0.5, 0.2, 0.0]) + rng.normal(size=60)
    res = ols_regression(y, {f"x{i}": X[:, i] for i in range(4)})
    assert sum(res.relative_importance.values()) == pytest.approx(100.0, abs=0.1)
    assert lmg_importance(y, X).sum() == pytest.approx(res.r_squared, abs=1e-12)


def test_lmg_brute_force_shapley():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(30, 3))
    y = X.sum(axis=1) + rng.normal(size=30)

    def r2(cols):
        if not cols:
            return 0.0
        A = np.column_stack([np.ones(30), X[:, cols]])
        beta = np.linalg.lstsq(A, y, rcond=None)[0]
        return 1 - np.sum((y - A @ beta) ** 2) / np.sum((y - y.mean()) ** 2)

    expected = np.zeros(3)
    for order in itertools.permutations(range(3)):
        for pos, j in enumerate(order):
            expected[j] += r2(list(order[:pos + 1])) - r2(list(order[:pos]))
    assert lmg_importance(y, X) == pytest.approx(expected / 6, abs=1e-12)


def test_exact_linear_fit():
    x = np.arange(10.0)
    y = 2 * x + 3
    res = ols_regression(y + np.where(x % 2, 1e-9, -1e-9), {"x": x})
    assert res.coefficients["x"][0] == pytest.approx(2.0)
    assert res.intercept == pytest.approx(3.0)
    assert res.r_squared == pytest.approx(1.0)
    assert res.predict({"x": [20.0]})[0] == pytest.approx(43.0)


def test_regression_errors():
    x = np.arange(10.0)
    with pytest.raises(np.linalg.LinAlgError):
        ols_regression(x, {"a": x, "b": 2 * x})
    with pytest.raises(ValueError):
        ols_regression(x[:2], {"a": x[:2]})


def test_background_perfect_fit():
    tokens = np.array([1e3, 5e3, 2e4, 1e5, 4e5])
    las = 10 + 5 * np.log(tokens)
    norm, fits = background_removal(las, [(tokens, "log_linear")])
    assert norm == pytest.approx(np.ones(5))
    assert fits[0]["slope"] == pytest.approx(5.0)
    assert fits[0]["intercept"] == pytest.approx(10.0)


def test_background_zero_slope_and_two_stages():
    y = np.full(6, 80.0)
    cov = np.arange(1.0, 7.0)
    norm, fits = background_removal(y, [(cov, "log_linear"), (cov, "linear")])
    assert fits[0]["slope"] == pytest.approx(0.0, abs=1e-9)
    assert norm == pytest.approx(np.ones(6))
    assert len(fits) == 2


def test_background_nonpositive_prediction():
    with pytest.raises(NumericError):
        background_removal(np.array([1.0, -5.0, -12.0]), [(np.array([1.0, 2.0, 3.0]), "linear")])
    with pytest.raises(ValueError):
        background_removal(np.ones(3), [(np.array([0.0, 1.0, 2.0]), "log_linear")])


def test_skew_normal_symmetric():
    x = np.random.default_rng(10).normal(5.0, 2.0, size=4000)
    fit = skew_normal_fit(x, n_bins=20)
    assert fit.fitted_mean == pytest.approx(5.0, abs=0.15)
    assert fit.fitted_sd == pytest.approx(2.0, rel=0.1)
    assert fit.p_value > 0.001
    assert fit.dof >= 1


def test_skew_normal_recovers_skew():
    from scipy import stats
    x = stats.skewnorm.rvs(5.0, loc=0, scale=1, size=5000, random_state=11)
    assert skew_normal_fit(x, n_bins=25).shape > 1.5


def test_skew_normal_degenerate():
    with pytest.raises(NumericError):
        skew_normal_fit(np.r_[np.zeros(15), np.ones(15)])
    with pytest.raises(ValueError):
        skew_normal_fit(np.arange(5.0))
