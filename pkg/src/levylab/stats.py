"""Estimators, hypothesis tests, and regression diagnostics.

Every conformance decision is sample-size-derived: Monte Carlo comparisons
accept at ``3 * SE`` plus an explicit truncation-bias allowance propagated
from the samplers' recorded tail bounds, and families of tests reach a
joint verdict through Holm-adjusted rejection at level 0.01.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special as sc
import scipy.stats as st

from .core import BaseSpace, StepFunction, TestFunction
from .densities import (
    multiplied_functional_batch,
    rn_log_density_gamma_batch,
)
from .models import GammaModel
from .rng import RandomStream
from .samplers import (
    LevyDraws,
    TruncationPolicy,
    iter_levy_chunks,
    sample_levy_batch,
    tilted_scaled_laplace,
    tilted_scaled_model,
)
from .transforms import CheckReport, CheckRow, laplace_gamma


# ---------------------------------------------------------------------------
# estimator summaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimatorSummary:
    mean: float
    se: float
    n: int
    reference: float | None = None
    bias_allowance: float = 0.0
    verdict: str = "info"
    ess: float | None = None

    def as_dict(self):
        return {
            "mean": self.mean,
            "se": self.se,
            "n": self.n,
            "reference": self.reference,
            "bias_allowance": self.bias_allowance,
            "verdict": self.verdict,
            "ess": self.ess,
        }


def summarize(values, reference=None, bias_allowance=0.0, weights=None, warn_ess=True):
    """Fold samples (optionally self-normalized) into an EstimatorSummary."""
    values = np.asarray(values, dtype=float)
    n = values.size
    ess = None
    if weights is None:
        mean = float(values.mean())
        se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    else:
        weights = np.asarray(weights, dtype=float)
        wbar = weights.mean()
        mean = float(np.dot(weights, values) / (n * wbar))
        infl = weights * (values - mean) / wbar
        se = float(infl.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        ess = float(weights.sum() ** 2 / np.dot(weights, weights))
    if reference is None:
        verdict = "info"
    elif abs(mean - reference) <= 3.0 * se + bias_allowance:
        verdict = "pass"
    else:
        verdict = "fail"
    if verdict == "pass" and warn_ess and ess is not None and ess < n / 10:
        verdict = "warn"
    return EstimatorSummary(mean, se, n, reference, bias_allowance, verdict, ess)


def mc_estimate(
    statistic,
    sampler,
    n: int,
    seed: int,
    *,
    reference=None,
    allowance=0.0,
    label: str = "mc",
    vectorized: bool = False,
) -> EstimatorSummary:
    """Chunked Monte Carlo mean of a statistic of process realizations.

    ``sampler(stream, m)`` must yield a LevyDraws batch; chunk ``i`` draws
    from the substream ``(seed, label, i)`` so results are independent of
    scheduling.  ``statistic`` maps a DiscreteMeasure to a real number, or a
    whole batch to an array when ``vectorized``.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    chunks = []
    done = 0
    idx = 0
    while done < n:
        m = min(16384, n - done)
        stream = RandomStream(seed).substream(idx, label)
        draws = sampler(stream, m)
        if vectorized:
            vals = np.asarray(statistic(draws), dtype=float)
        else:
            vals = np.fromiter((statistic(mu) for mu in draws), dtype=float, count=len(draws))
        chunks.append(vals)
        done += m
        idx += 1
    return summarize(np.concatenate(chunks), reference=reference, bias_allowance=allowance)


def weighted_mc_estimate(
    statistic,
    weighted_sampler,
    n: int,
    seed: int,
    *,
    reference=None,
    allowance=0.0,
    label: str = "wmc",
    vectorized: bool = False,
) -> EstimatorSummary:
    """Self-normalized importance-sampling mean with delta-method SE.

    ``weighted_sampler(stream, m)`` returns ``(LevyDraws, weights)``; the
    verdict downgrades to ``warn`` when the effective sample size drops
    below ``n/10``.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    vals, wts = [], []
    done, idx = 0, 0
    while done < n:
        m = min(16384, n - done)
        stream = RandomStream(seed).substream(idx, label)
        draws, w = weighted_sampler(stream, m)
        if vectorized:
            vals.append(np.asarray(statistic(draws), dtype=float))
        else:
            vals.append(np.fromiter((statistic(mu) for mu in draws), dtype=float, count=len(draws)))
        wts.append(np.asarray(w, dtype=float))
        done += m
        idx += 1
    return summarize(
        np.concatenate(vals), reference=reference, bias_allowance=allowance,
        weights=np.concatenate(wts),
    )


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov machinery
# ---------------------------------------------------------------------------


def kolmogorov_sf(t: float) -> float:
    """Asymptotic survival function ``2 sum (-1)^(k-1) exp(-2 k^2 t^2)``."""
    if t <= 0.05:
        return 1.0
    total = 0.0
    for k in range(1, 200):
        term = (-1.0) ** (k - 1) * math.exp(-2.0 * (k * t) ** 2)
        total += term
        if abs(term) < 1e-17:
            break
    return float(min(1.0, max(0.0, 2.0 * total)))


def _ks_2samp_statistic(x, y) -> float:
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    grid = np.concatenate([x, y])
    cdf_x = np.searchsorted(x, grid, side="right") / x.size
    cdf_y = np.searchsorted(y, grid, side="right") / y.size
    return float(np.max(np.abs(cdf_x - cdf_y)))


def ks_two_sample(x, y, mode: str = "asymptotic"):
    """Two-sample KS statistic and p-value.

    ``mode="asymptotic"`` uses the limiting distribution at the effective
    sample size; ``mode="exact"`` counts lattice paths (small samples only).
    """
    d = _ks_2samp_statistic(x, y)
    n, m = len(x), len(y)
    if mode == "exact":
        return d, _ks_2samp_exact_pvalue(n, m, d)
    en = math.sqrt(n * m / (n + m))
    return d, kolmogorov_sf(en * d)


def _ks_2samp_exact_pvalue(n: int, m: int, d: float) -> float:
    """Exact null p-value by counting monotone lattice paths.

    Under the null every interleaving of the pooled sample is equally
    likely; ``D < d`` corresponds to paths from (0,0) to (n,m) that keep
    ``|i/n - j/m| < d`` at every vertex.  Integer DP, so exact.
    """
    if n * m > 4_000_000:
        raise ValueError("exact mode is for small samples")
    thresh = d - 1e-12
    ways = [[0] * (m + 1) for _ in range(n + 1)]
    ways[0][0] = 1
    for i in range(n + 1):
        for j in range(m + 1):
            if i == 0 and j == 0:
                continue
            if abs(i / n - j / m) >= thresh:
                ways[i][j] = 0
                continue
            acc = 0
            if i > 0:
                acc += ways[i - 1][j]
            if j > 0:
                acc += ways[i][j - 1]
            ways[i][j] = acc
    total = math.comb(n + m, n)
    return 1.0 - ways[n][m] / total


def ks_one_sample(x, cdf, mode: str = "asymptotic"):
    """One-sample KS statistic against a callable CDF, asymptotic p-value."""
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    up = np.max(np.arange(1, n + 1) / n - f)
    down = np.max(f - np.arange(0, n) / n)
    d = float(max(up, down))
    del mode
    return d, kolmogorov_sf(math.sqrt(n) * d)


def holm_adjust(pvalues) -> np.ndarray:
    """Step-down Holm adjustment; suite verdicts reject on adjusted p."""
    p = np.asarray(pvalues, dtype=float)
    m = p.size
    order = np.argsort(p)
    adj = np.empty(m)
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, (m - rank) * p[idx])
        adj[idx] = min(1.0, running)
    return adj


def holm_pass(pvalues, level: float = 0.01) -> bool:
    """True when no Holm-adjusted rejection occurs at the given level."""
    if len(pvalues) == 0:
        return True
    return bool(holm_adjust(pvalues).min() > level)


# ---------------------------------------------------------------------------
# independence
# ---------------------------------------------------------------------------


def _ranks(x):
    order = np.argsort(x, kind="stable")
    r = np.empty(x.size)
    r[order] = np.arange(1, x.size + 1)
    return r


@dataclass(frozen=True)
class IndependenceReport:
    rank_correlation: float
    correlation_limit: float
    correlation_pvalue: float
    chi2: float
    chi2_pvalue: float
    n: int

    @property
    def passed(self) -> bool:
        return (
            abs(self.rank_correlation) < self.correlation_limit and self.chi2_pvalue > 0.01
        )

    def as_dict(self):
        return {
            "rank_correlation": self.rank_correlation,
            "correlation_limit": self.correlation_limit,
            "correlation_pvalue": self.correlation_pvalue,
            "chi2": self.chi2,
            "chi2_pvalue": self.chi2_pvalue,
            "n": self.n,
            "pass": self.passed,
        }


def independence_test(u, v, bins: int = 4) -> IndependenceReport:
    """Rank correlation plus a quantile-binned contingency chi-square.

    Passes iff ``|rho| < 3/sqrt(N)`` and the chi-square p-value exceeds
    0.01; the two-test union bound makes the per-call false-alarm rate
    about 1.3% under the null.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError("samples must have equal length")
    n = u.size
    ru, rv = _ranks(u), _ranks(v)
    rho = float(np.corrcoef(ru, rv)[0, 1])
    rho_p = 2.0 * st.norm.sf(abs(rho) * math.sqrt(n - 1))
    qu = np.quantile(u, np.linspace(0, 1, bins + 1)[1:-1])
    qv = np.quantile(v, np.linspace(0, 1, bins + 1)[1:-1])
    bu = np.digitize(u, qu)
    bv = np.digitize(v, qv)
    counts = np.bincount(bu * bins + bv, minlength=bins * bins).reshape(bins, bins).astype(float)
    row = counts.sum(axis=1, keepdims=True)
    col = counts.sum(axis=0, keepdims=True)
    expected = row * col / n
    with np.errstate(divide="ignore", invalid="ignore"):
        chi2 = float(np.nansum((counts - expected) ** 2 / np.where(expected > 0, expected, np.nan)))
    dof = (bins - 1) ** 2
    chi2_p = float(st.chi2.sf(chi2, dof))
    return IndependenceReport(rho, 3.0 / math.sqrt(n), float(rho_p), chi2, chi2_p, n)


# ---------------------------------------------------------------------------
# asymptotic-regime estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowEstimate:
    estimate: float
    se: float
    n_draws: int
    window: tuple
    flagged: bool = False

    @property
    def ci_half_width(self) -> float:
        return 3.0 * self.se

    def as_dict(self):
        return {
            "estimate": self.estimate,
            "se": self.se,
            "n_draws": self.n_draws,
            "window": list(self.window),
            "ci_half_width": self.ci_half_width,
            "flagged": self.flagged,
        }


def tail_slope(sequences, window) -> WindowEstimate:
    """Least-squares slope of ``log z_n`` against ``n`` over an index window.

    ``sequences``: one array or a (draws, terms) matrix / list of arrays;
    per-draw slopes are averaged with their spread as the error bar.
    """
    lo, hi = window
    seqs = _as_rows(sequences)
    slopes = []
    for row in seqs:
        idx = np.arange(lo, min(hi, row.size))
        vals = row[idx]
        good = vals > 0
        if good.sum() < 8:
            raise ValueError("window too short or sequence underflowed")
        pos = idx[good] + 1.0  # 1-based index
        slopes.append(np.polyfit(pos, np.log(vals[good]), 1)[0])
    slopes = np.asarray(slopes)
    se = float(slopes.std(ddof=1) / math.sqrt(slopes.size)) if slopes.size > 1 else 0.0
    return WindowEstimate(float(slopes.mean()), se, slopes.size, (lo, hi))


def stable_tail_constant(sequences, alpha: float, window) -> WindowEstimate:
    """Windowed estimate of ``lim n^(1/alpha) z_n`` averaged over draws.

    Sequences whose rescaled values drift across the window (wrong tail
    regime, e.g. exponentially decaying charges) raise the ``flagged`` bit.
    """
    lo, hi = window
    seqs = _as_rows(sequences)
    per_draw, drifts = [], []
    for row in seqs:
        idx = np.arange(lo, min(hi, row.size))
        vals = np.maximum((idx + 1.0) ** (1.0 / alpha) * row[idx], 1e-300)
        per_draw.append(np.median(vals))
        drift = np.polyfit(np.log(idx + 1.0), np.log(vals), 1)[0] * math.log(
            (idx[-1] + 1.0) / (idx[0] + 1.0)
        )
        drifts.append(drift)
    per_draw = np.asarray(per_draw)
    se = float(per_draw.std(ddof=1) / math.sqrt(per_draw.size)) if per_draw.size > 1 else 0.0
    flagged = bool(abs(float(np.mean(drifts))) > math.log(4.0))
    return WindowEstimate(float(per_draw.mean()), se, per_draw.size, (lo, hi), flagged)


def _as_rows(sequences):
    if isinstance(sequences, np.ndarray) and sequences.ndim == 2:
        return list(sequences)
    if isinstance(sequences, np.ndarray):
        return [sequences]
    return [np.asarray(s, dtype=float) for s in sequences]


# ---------------------------------------------------------------------------
# change-of-variables checks
# ---------------------------------------------------------------------------


def quasi_invariance_check(
    a: TestFunction,
    theta: float,
    n: int,
    seed: int,
    probe: TestFunction | None = None,
    trunc: TruncationPolicy = TruncationPolicy(),
    label: str = "qi",
) -> CheckReport:
    """Paired test of ``E k(M_a eta) = E k(eta) rho_a(eta)`` for the gamma law.

    The statistic is ``k(eta) = exp(-f_probe(eta))`` (probe defaults to 1);
    both sides are evaluated on the same draws so the difference has mean
    zero under the theorem and much smaller variance than either side.
    """
    base = BaseSpace(theta)
    probe = probe if probe is not None else StepFunction.constant(1.0)
    diffs, lhss, rhss, tails = [], [], [], []
    for draws in iter_levy_chunks(GammaModel(), base, n, trunc, seed, label):
        lhs = np.exp(-multiplied_functional_batch(a, draws, probe))
        rhs = np.exp(-draws.functional(probe) + rn_log_density_gamma_batch(a, draws, base))
        diffs.append(lhs - rhs)
        lhss.append(lhs)
        rhss.append(rhs)
        tails.append(draws.tail_bounds)
    d = np.concatenate(diffs)
    allowance = (
        (1.0 + a.upper) * (1.0 + probe.upper) * float(np.concatenate(tails).mean())
    )
    summary = summarize(d, reference=0.0, bias_allowance=allowance)
    report = CheckReport(
        "quasi-invariance",
        {"theta": theta, "a": repr(a), "probe": repr(probe), "n": n, "seed": seed},
        extras={
            "lhs_mean": float(np.concatenate(lhss).mean()),
            "rhs_mean": float(np.concatenate(rhss).mean()),
        },
    )
    report.rows.append(CheckRow(0.0, summary.mean, summary.se, 0.0, allowance))
    return report


def density_normalization_check(
    a: TestFunction, theta: float, n: int, seed: int, label: str = "norm"
) -> CheckReport:
    """``E rho_a(eta) = 1``: the change-of-measure density integrates to one."""
    base = BaseSpace(theta)
    vals, tails = [], []
    for draws in iter_levy_chunks(GammaModel(), base, n, TruncationPolicy(), seed, label):
        vals.append(np.exp(rn_log_density_gamma_batch(a, draws, base)))
        tails.append(draws.tail_bounds)
    allowance = (1.0 + a.upper) * float(np.concatenate(tails).mean())
    summary = summarize(np.concatenate(vals), reference=1.0, bias_allowance=allowance)
    report = CheckReport(
        "density-normalization", {"theta": theta, "a": repr(a), "n": n, "seed": seed}
    )
    report.rows.append(CheckRow(0.0, summary.mean, summary.se, 1.0, allowance))
    return report


def quasi_lebesgue_invariance_check(
    a: TestFunction,
    theta: float,
    n: int,
    seed: int,
    cutoff: float = 10.0,
    probe: TestFunction | None = None,
    trunc: TruncationPolicy = TruncationPolicy(),
    label: str = "ql",
) -> CheckReport:
    """Invariance of the ``exp(total)``-reweighted law under a zero-log multiplier.

    Expectations are taken against compactly supported functionals
    ``F(xi) = exp(-f_probe(xi)) 1[xi(X) <= cutoff]``, which is exact: the
    sigma-finite invariance statement must hold on every such functional.
    Both sides share draws (paired difference).
    """
    base = BaseSpace(theta)
    probe = probe if probe is not None else StepFunction.constant(1.0)
    diffs = []
    for draws in iter_levy_chunks(GammaModel(), base, n, trunc, seed, label):
        weight = np.exp(draws.totals)
        f_mult = multiplied_functional_batch(a, draws, probe)
        tot_mult = multiplied_functional_batch(a, draws, StepFunction.constant(1.0))
        lhs = np.exp(-f_mult) * (tot_mult <= cutoff) * weight
        rhs = np.exp(-draws.functional(probe)) * (draws.totals <= cutoff) * weight
        diffs.append(lhs - rhs)
    summary = summarize(np.concatenate(diffs), reference=0.0)
    report = CheckReport(
        "quasi-lebesgue-invariance",
        {
            "theta": theta,
            "a": repr(a),
            "probe": repr(probe),
            "cutoff": cutoff,
            "n": n,
            "seed": seed,
        },
    )
    report.rows.append(CheckRow(0.0, summary.mean, summary.se, 0.0, 0.0))
    return report


# ---------------------------------------------------------------------------
# identity-in-law of normal subordination vs. centered difference
# ---------------------------------------------------------------------------


def subordination_test(
    t_grid, n: int, seed: int, label: str = "subordination"
) -> CheckReport:
    """At each ``t``, compare a normal evaluated at a gamma-distributed time
    against the scaled difference of two independent gamma totals.

    Includes variance checks (both marginals have variance ``t``) and a
    power control: dropping the ``1/sqrt(2)`` scaling must be detected.
    """
    report = CheckReport("subordination", {"t_grid": list(t_grid), "n": n, "seed": seed})
    pvals = []
    for i, t in enumerate(t_grid):
        s1 = RandomStream(seed).substream(3 * i, label)
        s2 = RandomStream(seed).substream(3 * i + 1, label)
        x = np.sqrt(s1.gamma(t, n)) * s1.normal(n)
        y = (s2.gamma(t, n) - s2.gamma(t, n)) / math.sqrt(2.0)
        d, p = ks_two_sample(x, y)
        pvals.append(p)
        var_sum = summarize(x**2, reference=float(t))
        report.rows.append(CheckRow(float(t), var_sum.mean, var_sum.se, float(t)))
        report.extras[f"ks_p_t={t:g}"] = p
    report.extras["ks_pvalues"] = pvals
    report.extras["pass_ks_holm"] = holm_pass(pvals)
    s1 = RandomStream(seed).substream(1000, label)
    s2 = RandomStream(seed).substream(1001, label)
    t0 = t_grid[len(t_grid) // 2]
    x = np.sqrt(s1.gamma(t0, n)) * s1.normal(n)
    y = s2.gamma(t0, n) - s2.gamma(t0, n)  # deliberately unscaled
    _, p_bad = ks_two_sample(x, y)
    report.extras["power_control_p"] = p_bad
    report.extras["pass_power_control"] = p_bad < 1e-6
    return report


# ---------------------------------------------------------------------------
# small-index limit of the rescaled tilted-stable family
# ---------------------------------------------------------------------------


def weak_limit_test(
    alpha_grid,
    theta: float,
    n_per_alpha,
    seed: int,
    k: float = 1.0,
    a: TestFunction | None = None,
    final_tol: float = 0.005,
    trunc: TruncationPolicy = TruncationPolicy(),
    label: str = "weak-limit",
) -> CheckReport:
    """Convergence of the rescaled tilted-stable Laplace functional.

    Per index the empirical transform must match its own closed form at
    ``3 SE`` (Holm over the grid); the analytic-vs-empirical discrepancy to
    the gamma closed form must decrease strictly along the grid, and the
    final-index discrepancy must clear ``final_tol``.
    """
    a = a if a is not None else StepFunction.constant(1.0)
    base = BaseSpace(theta)
    gamma_target = laplace_gamma(a, base)
    if np.isscalar(n_per_alpha):
        n_per_alpha = [int(n_per_alpha)] * len(alpha_grid)
    report = CheckReport(
        "weak-limit",
        {
            "alpha_grid": list(alpha_grid),
            "k": k,
            "theta": theta,
            "a": repr(a),
            "n_per_alpha": list(n_per_alpha),
            "seed": seed,
            "gamma_target": gamma_target,
        },
    )
    discrepancies = []
    for alpha, n_a in zip(alpha_grid, n_per_alpha):
        model = tilted_scaled_model(alpha, k)
        vals, tails = [], []
        for draws in iter_levy_chunks(model, base, n_a, trunc, seed, f"{label}-{alpha:g}"):
            vals.append(draws.laplace_samples(a))
            tails.append(draws.tail_bounds)
        vals = np.concatenate(vals)
        analytic = tilted_scaled_laplace(a, alpha, k, base)
        allowance = max(a.upper, 1e-12) * float(np.concatenate(tails).mean())
        summary = summarize(vals, reference=analytic, bias_allowance=allowance)
        discrepancies.append(abs(summary.mean - gamma_target))
        report.rows.append(CheckRow(float(alpha), summary.mean, summary.se, analytic, allowance))
    report.extras["discrepancy_to_gamma"] = discrepancies
    report.extras["pass_per_alpha"] = bool(all(r.passed for r in report.rows))
    report.extras["pass_monotone_decrease"] = bool(
        all(d1 > d2 for d1, d2 in zip(discrepancies, discrepancies[1:]))
    )
    report.extras["final_discrepancy"] = discrepancies[-1]
    report.extras["pass_final"] = bool(discrepancies[-1] < final_tol)
    return report


def tilted_stable_is_crosscheck(
    alpha: float,
    k: float,
    theta: float,
    n: int,
    seed: int,
    a: TestFunction | None = None,
    trunc: TruncationPolicy = TruncationPolicy(),
) -> CheckReport:
    """Importance-weighted oracle for the pushforward sampler (alpha >= 0.3).

    Draws from the plain stable law, weights by the exponential tilt, and
    rescales charges by ``g = k / alpha**(1/alpha)``; the reweighted
    functional must agree with the direct sampler at 3 combined SE.  Only
    usable where ``g`` does not overflow, i.e. moderate alpha.
    """
    if alpha < 0.3:
        raise ValueError("importance route needs alpha >= 0.3 (g overflows below)")
    a = a if a is not None else StepFunction.constant(1.0)
    base = BaseSpace(theta)
    from .models import StableModel

    g = k / alpha ** (1.0 / alpha)
    stream = RandomStream(seed).substream(0, "is-oracle")
    draws = sample_levy_batch(StableModel(alpha, 1.0), base, n, trunc, stream)
    weights = np.exp(-g * draws.totals)
    vals = np.exp(-g * draws.functional(a))  # f_a(g*eta) = g*f_a(eta)
    is_summary = summarize(vals, weights=weights)

    direct = mc_estimate(
        lambda d: d.laplace_samples(a),
        lambda s, m: sample_levy_batch(tilted_scaled_model(alpha, k), base, m, trunc, s),
        n,
        seed,
        label="is-direct",
        vectorized=True,
    )
    se = math.hypot(is_summary.se, direct.se)
    report = CheckReport(
        "tilted-stable-sampler-crosscheck",
        {"alpha": alpha, "k": k, "theta": theta, "n": n, "seed": seed},
        extras={"ess": is_summary.ess},
    )
    report.rows.append(CheckRow(float(alpha), is_summary.mean, se, direct.mean, 0.0))
    return report
