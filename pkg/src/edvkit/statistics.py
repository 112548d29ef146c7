"""Rank correlations, normality testing, background removal and regression.

Correlation summaries follow the conventions of the pingouin library:
Fisher-z confidence intervals, t-distributed p-values, and post-hoc power
from the Fisher-z power formula with a t critical value.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy import optimize, stats

ALPHA = 0.05
EXACT_PERMUTATION_MAX_N = 9
LMG_MAX_PREDICTORS = 6


class NumericError(RuntimeError):
    """A fit or decomposition could not be computed."""


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    n: int
    ci95: tuple
    rho_squared: float
    adj_rho_squared: float
    p_value: float
    power: float
    covariates: list = field(default_factory=list)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["ci95_low"], d["ci95_high"] = d.pop("ci95")
        d["covariates"] = ",".join(self.covariates) or "None"
        return d


@dataclass(frozen=True)
class NormalityResult:
    w: float
    p_value: float
    normal_at_005: bool
    n: int = 0


@dataclass(frozen=True)
class RegressionResult:
    coefficients: dict
    intercept: float
    r_squared: float
    adj_r_squared: float
    relative_importance: dict
    n: int

    def predict(self, predictors: Mapping[str, Sequence[float]]) -> np.ndarray:
        out = np.full(len(next(iter(predictors.values()))), self.intercept, dtype=float)
        for name, (beta, _) in self.coefficients.items():
            out += beta * np.asarray(predictors[name], dtype=float)
        return out


class SkewNormalFit(NamedTuple):
    location: float
    scale: float
    shape: float
    fitted_mean: float
    fitted_sd: float
    chi2: float
    p_value: float
    dof: int


def _vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    r = float(a @ b / math.sqrt((a @ a) * (b @ b)))
    return max(-1.0, min(1.0, r))


def rank(x) -> np.ndarray:
    """Average ranks (ties share the mean rank), 1-based."""
    return stats.rankdata(x, method="average")


def fisher_ci(r: float, n_eff: int, confidence: float = 0.95) -> tuple[float, float]:
    crit = stats.norm.ppf(0.5 + confidence / 2)
    se = 1.0 / math.sqrt(n_eff - 3)
    with np.errstate(divide="ignore"):
        z = np.arctanh(r)
    return float(np.tanh(z - crit * se)), float(np.tanh(z + crit * se))


def correlation_power(r: float, n_eff: int, alpha: float = ALPHA) -> float:
    """Two-sided post-hoc power of a correlation test at the observed effect."""
    if abs(r) >= 1.0:
        return 1.0
    dof = n_eff - 2
    tcrit = stats.t.ppf(1 - alpha / 2, dof)
    rc = math.sqrt(tcrit ** 2 / (tcrit ** 2 + dof))
    zr = math.atanh(r) + r / (2 * (n_eff - 1))
    zrc = math.atanh(rc)
    root = math.sqrt(n_eff - 3)
    return float(stats.norm.cdf((zr - zrc) * root) + stats.norm.cdf((-zr - zrc) * root))


def _t_pvalue(r: float, dof: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt(dof / (1 - r * r))
    return float(min(1.0, 2 * stats.t.sf(abs(t), dof)))


def _exact_pvalue(rx: np.ndarray, ry: np.ndarray, r: float) -> float:
    perms = np.array(list(itertools.permutations(ry)))
    rxc = rx - rx.mean()
    pc = perms - perms.mean(axis=1, keepdims=True)
    null = pc @ rxc / np.sqrt((rxc @ rxc) * np.einsum("ij,ij->i", pc, pc))
    return float(np.mean(np.abs(null) >= abs(r) - 1e-12))


def _summarize(r: float, n: int, k: int, p_value: float, covariates: list) -> CorrelationResult:
    r2 = r * r
    return CorrelationResult(
        rho=r, n=n, ci95=fisher_ci(r, n - k), rho_squared=r2,
        adj_rho_squared=1 - (1 - r2) * (n - 1) / (n - k - 2),
        p_value=p_value, power=correlation_power(r, n - k), covariates=list(covariates),
    )


def spearman(x, y) -> CorrelationResult:
    """Spearman's rho with p-value, Fisher-z CI95, adjusted rho^2 and power.

    p-values come from the t approximation for n >= 10 and from exact
    permutation enumeration below that.
    """
    x, y = _vector(x, "x"), _vector(y, "y")
    n = len(x)
    if len(y) != n:
        raise ValueError("x and y differ in length")
    if n < 4:
        raise ValueError("spearman needs n >= 4")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError("constant input")
    rx, ry = rank(x), rank(y)
    r = _pearson(rx, ry)
    p = _exact_pvalue(rx, ry, r) if n <= EXACT_PERMUTATION_MAX_N else _t_pvalue(r, n - 2)
    return _summarize(r, n, 0, p, [])


def partial_spearman(x, y, covariates: Sequence = (), names: Sequence[str] | None = None) -> CorrelationResult:
    """Partial Spearman correlation: partial Pearson on rank-transformed data.

    With covariates the p-value always uses the t approximation with
    n - 2 - k degrees of freedom.
    """
    covariates = list(covariates)
    if not covariates:
        return spearman(x, y)
    k = len(covariates)
    names = list(names) if names is not None else [f"z{i}" for i in range(k)]
    x, y = _vector(x, "x"), _vector(y, "y")
    zs = [_vector(z, f"covariate {nm}") for z, nm in zip(covariates, names)]
    n = len(x)
    if any(len(v) != n for v in [y, *zs]):
        raise ValueError("all vectors must have equal length")
    if n <= k + 3:
        raise ValueError(f"need n > {k + 3} for {k} covariate(s)")
    data = np.column_stack([rank(v) for v in [x, y, *zs]])
    if np.any(np.ptp(data, axis=0) == 0):
        raise ValueError("constant input")
    corr = np.corrcoef(data, rowvar=False)
    sub = corr[2:, 2:]
    if np.linalg.matrix_rank(sub) < k or np.linalg.cond(sub) > 1e12:
        raise np.linalg.LinAlgError("covariate correlation matrix is singular")
    try:
        prec = np.linalg.inv(corr)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("correlation matrix is singular") from exc
    r = float(-prec[0, 1] / math.sqrt(prec[0, 0] * prec[1, 1]))
    r = max(-1.0, min(1.0, r))
    return _summarize(r, n, k, _t_pvalue(r, n - 2 - k), names)


# Shapiro-Wilk, Royston (1995) approximation
_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)
_G = (-2.273, 0.459)


def _poly(coefs, x: float) -> float:
    return sum(c * x ** i for i, c in enumerate(coefs))


def shapiro_wilk_coefficients(n: int) -> np.ndarray:
    if n == 3:
        return np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    m = stats.norm.ppf((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    summ2 = float(m @ m)
    u = 1.0 / math.sqrt(n)
    a = np.empty(n)
    an = m[-1] / math.sqrt(summ2) + _poly(_C1, u)
    if n > 5:
        an1 = m[-2] / math.sqrt(summ2) + _poly(_C2, u)
        phi = (summ2 - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * an ** 2 - 2 * an1 ** 2)
        a[2:-2] = m[2:-2] / math.sqrt(phi)
        a[1], a[-2] = -an1, an1
    else:
        phi = (summ2 - 2 * m[-1] ** 2) / (1 - 2 * an ** 2)
        a[1:-1] = m[1:-1] / math.sqrt(phi)
    a[0], a[-1] = -an, an
    return a


def shapiro_wilk(x) -> NormalityResult:
    """Shapiro-Wilk W and p-value for 3 <= n <= 5000."""
    x = np.sort(_vector(x, "x"))
    n = len(x)
    if not 3 <= n <= 5000:
        raise ValueError("shapiro_wilk needs 3 <= n <= 5000")
    centered = x - x.mean()
    ss = float(centered @ centered)
    if ss == 0 or np.ptp(x) == 0:
        raise ValueError("constant input")
    a = shapiro_wilk_coefficients(n)
    w = float((a @ centered) ** 2 / ss)
    w = min(w, 1.0)
    if n == 3:
        p = max(0.0, 6 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75))))
    else:
        y = math.log1p(-w) if w < 1 else -math.inf
        if n <= 11:
            gamma = _poly(_G, n)
            if y >= gamma:
                p = 1e-99
                return NormalityResult(w, p, p >= ALPHA, n)
            y = -math.log(gamma - y)
            mu, sigma = _poly(_C3, n), math.exp(_poly(_C4, n))
        else:
            ln = math.log(n)
            mu, sigma = _poly(_C5, ln), math.exp(_poly(_C6, ln))
        p = float(stats.norm.sf((y - mu) / sigma))
    p = min(max(p, 0.0), 1.0)
    return NormalityResult(w, p, p >= ALPHA, n)


def _fit_stage(target: np.ndarray, covariate: np.ndarray, family: str) -> dict:
    if family == "log_linear":
        if np.any(covariate <= 0):
            raise ValueError("log_linear stage needs a positive covariate")
        design = np.log(covariate)
    elif family == "linear":
        design = covariate
    else:
        raise ValueError(f"unknown fit family {family!r}")
    slope, intercept = np.polyfit(design, target, 1)
    return {"family": family, "slope": float(slope), "intercept": float(intercept),
            "predicted": slope * design + intercept}


def background_removal(target, stages: Sequence[tuple]) -> tuple[np.ndarray, list[dict]]:
    """Sequentially fit-and-divide ``target`` by each ``(covariate, family)`` stage.

    Returns the final normalized target and one dict per stage with the fit
    parameters and the normalized values after that stage.
    """
    current = _vector(target, "target")
    fits = []
    for i, (covariate, family) in enumerate(stages):
        cov = _vector(covariate, f"stage {i} covariate")
        if len(cov) != len(current):
            raise ValueError(f"stage {i}: covariate length mismatch")
        fit = _fit_stage(current, cov, family)
        pred = fit.pop("predicted")
        bad = np.flatnonzero(pred <= 0)
        if bad.size:
            raise NumericError(f"stage {i}: fit predicts {pred[bad[0]]:.4g} <= 0 at sample {int(bad[0])}")
        current = current / pred
        fit["normalized"] = current
        fits.append(fit)
    return current, fits


def _design(predictors: Mapping[str, Sequence[float]], n: int) -> tuple[list[str], np.ndarray]:
    names = list(predictors)
    cols = [_vector(predictors[nm], nm) for nm in names]
    if any(len(c) != n for c in cols):
        raise ValueError("predictor lengths differ from y")
    return names, np.column_stack(cols) if cols else np.empty((n, 0))


def _r_squared(y: np.ndarray, X: np.ndarray) -> float:
    if X.shape[1] == 0:
        return 0.0
    A = np.column_stack([np.ones(len(y)), X])
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ beta
    tss = float(((y - y.mean()) ** 2).sum())
    return 1.0 - float(resid @ resid) / tss


def lmg_importance(y, X: np.ndarray) -> np.ndarray:
    """Average sequential R^2 gain of each column over all column orderings."""
    p = X.shape[1]
    if p > LMG_MAX_PREDICTORS:
        raise ValueError(f"exact LMG enumeration limited to {LMG_MAX_PREDICTORS} predictors")
    cache = {}

    def r2(subset: frozenset) -> float:
        if subset not in cache:
            cache[subset] = _r_squared(y, X[:, sorted(subset)])
        return cache[subset]

    gains = np.zeros(p)
    orders = list(itertools.permutations(range(p)))
    for order in orders:
        seen = frozenset()
        for j in order:
            after = seen | {j}
            gains[j] += r2(after) - r2(seen)
            seen = after
    return gains / len(orders)


def ols_regression(y, predictors: Mapping[str, Sequence[float]]) -> RegressionResult:
    """OLS with intercept, t-test p-values and LMG relative importance (% of R^2)."""
    y = _vector(y, "y")
    n = len(y)
    names, X = _design(predictors, n)
    p = X.shape[1]
    if p == 0:
        raise ValueError("at least one predictor required")
    if n <= p + 1:
        raise ValueError(f"need n > {p + 1} observations")
    A = np.column_stack([np.ones(n), X])
    if np.linalg.matrix_rank(A) < p + 1:
        raise np.linalg.LinAlgError("design matrix is rank deficient")
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ beta
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    if tss == 0:
        raise ValueError("constant response")
    r2 = 1.0 - rss / tss
    dof = n - p - 1
    sigma2 = rss / dof
    cov = sigma2 * np.linalg.inv(A.T @ A)
    se = np.sqrt(np.clip(np.diag(cov), 0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = np.where(se > 0, beta / se, np.inf * np.sign(beta))
    pvals = np.where(np.isfinite(tvals), 2 * stats.t.sf(np.abs(tvals), dof), 0.0)
    gains = lmg_importance(y, X)
    importance = 100.0 * gains / gains.sum() if gains.sum() > 0 else np.full(p, 100.0 / p)
    return RegressionResult(
        coefficients={nm: (float(beta[i + 1]), float(pvals[i + 1])) for i, nm in enumerate(names)},
        intercept=float(beta[0]),
        r_squared=r2,
        adj_r_squared=1 - (1 - r2) * (n - 1) / dof,
        relative_importance={nm: float(v) for nm, v in zip(names, importance)},
        n=n,
    )


def skew_normal_moments(location: float, scale: float, shape: float) -> tuple[float, float]:
    delta = shape / math.sqrt(1 + shape * shape)
    mean = location + scale * delta * math.sqrt(2 / math.pi)
    sd = scale * math.sqrt(1 - 2 * delta * delta / math.pi)
    return mean, sd


def skew_normal_fit(samples, n_bins: int = 10) -> SkewNormalFit:
    """Least-squares skew-normal fit to the density histogram, with chi^2 check.

    The chi^2 statistic uses bins whose expected count is at least 1 and
    ``bins - 3`` degrees of freedom.
    """
    x = _vector(samples, "samples")
    n = len(x)
    if n < 20:
        raise ValueError("skew_normal_fit needs at least 20 samples")
    if len(np.unique(x)) < 3 or np.std(x) == 0:
        raise NumericError("degenerate sample: fewer than three distinct values")
    dens, edges = np.histogram(x, bins=n_bins, density=True)
    centers = (edges[:-1] + edges[1:]) / 2

    def pdf(t, loc, scale, shape):
        return stats.skewnorm.pdf(t, shape, loc=loc, scale=abs(scale))

    sd = float(np.std(x))
    skew = float(stats.skew(x))
    best = None
    # a few starting shapes; keep the lowest residual
    for shape0 in (0.0, math.copysign(2.0, skew), -math.copysign(2.0, skew)):
        d0 = shape0 / math.sqrt(1 + shape0 ** 2)
        scale0 = sd / math.sqrt(1 - 2 * d0 * d0 / math.pi)
        loc0 = float(np.mean(x)) - scale0 * d0 * math.sqrt(2 / math.pi)
        try:
            params, _ = optimize.curve_fit(pdf, centers, dens, p0=(loc0, scale0, shape0), maxfev=20000)
        except (RuntimeError, optimize.OptimizeWarning):
            continue
        resid = float(np.sum((pdf(centers, *params) - dens) ** 2))
        if np.all(np.isfinite(params)) and (best is None or resid < best[1]):
            best = (params, resid)
    if best is None:
        raise NumericError(f"skew-normal fit did not converge (n={n}, bins={n_bins}, sd={sd:.4g})")
    loc, scale, shape = (float(v) for v in best[0])
    scale = abs(scale)
    obs, _ = np.histogram(x, bins=edges)
    expected = n * np.diff(stats.skewnorm.cdf(edges, shape, loc=loc, scale=scale))
    keep = expected >= 1
    dof = int(keep.sum()) - 3
    if dof < 1:
        raise NumericError(f"too few usable bins for a chi^2 test ({int(keep.sum())})")
    chi2 = float(np.sum((obs[keep] - expected[keep]) ** 2 / expected[keep]))
    mean, fsd = skew_normal_moments(loc, scale, shape)
    return SkewNormalFit(loc, scale, shape, mean, fsd, chi2, float(stats.chi2.sf(chi2, dof)), dof)
