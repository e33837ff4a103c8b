"""Evaluation protocol: cross-validation metrics, coverage diagnostics,
observation-scale scans, and a direct conjugate/grid fit on decomposed
steps and turns.
"""

from __future__ import annotations

import multiprocessing
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import i0e
from scipy.stats import gamma, kstest

from .inference import PARAM_NAMES, fit, hpd_interval, weighted_quantile
from .movement import MovementParams, observe, simulate_until
from .streams import stream
from .summaries import MEANCOS_CLAMP, bessel_ratio_inverse, summarize

DEFAULT_CONSTRAINT = (70.0, 25.0)  # kappa_max, lambda_max for pseudo-observations


def prediction_error(true_values, medians):
    """Root mean squared deviation of posterior medians from the truth."""
    true_values = np.asarray(true_values, dtype=float)
    medians = np.asarray(medians, dtype=float)
    if true_values.shape != medians.shape or true_values.ndim != 1 or len(true_values) == 0:
        raise ValueError("true_values and medians must be equal-length non-empty 1-d")
    return float(np.sqrt(np.sum((medians - true_values) ** 2) / len(true_values)))


def md_index(true_values, medians):
    """Mean absolute deviation of the medians relative to the truth."""
    true_values = np.asarray(true_values, dtype=float)
    medians = np.asarray(medians, dtype=float)
    if true_values.shape != medians.shape or true_values.ndim != 1 or len(true_values) == 0:
        raise ValueError("true_values and medians must be equal-length non-empty 1-d")
    if np.any(true_values == 0):
        raise ValueError("md_index requires all true values nonzero")
    return float(np.mean(np.abs(medians - true_values) / np.abs(true_values)))


def coverage_pvalue(posterior, parameter, truth):
    """Posterior mass strictly below ``truth`` plus half the mass at it."""
    index = 0 if parameter == "kappa" else 1 if parameter == "lambda" else int(parameter)
    values = posterior.draws[:, index]
    weights = posterior.weights / float(np.sum(posterior.weights))
    below = float(np.sum(weights[values < truth]))
    at = float(np.sum(weights[values == truth]))
    return below + 0.5 * at


@dataclass(frozen=True)
class CoverageTestResult:
    p_values: np.ndarray
    ks_statistic: float
    ks_pvalue: float
    histogram: np.ndarray  # 20-bin counts over [0, 1]

    @property
    def mean_p(self):
        return float(np.mean(self.p_values))


def coverage_test(posteriors, true_values, parameter):
    """Uniformity diagnostic of coverage p-values across replicates.

    Computes p_i for each (posterior, truth) pair and tests the sample
    against U(0, 1) with a Kolmogorov-Smirnov test.
    """
    true_values = np.asarray(true_values, dtype=float)
    if len(posteriors) != len(true_values) or len(posteriors) == 0:
        raise ValueError("need equally many posteriors and true values (>= 1)")
    p_values = np.array(
        [coverage_pvalue(post, parameter, t) for post, t in zip(posteriors, true_values)]
    )
    ks = kstest(p_values, "uniform")
    histogram, _ = np.histogram(p_values, bins=20, range=(0.0, 1.0))
    return CoverageTestResult(
        p_values=p_values,
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        histogram=histogram,
    )


# ---------------------------------------------------------------------------
# cross-validation


@dataclass(frozen=True)
class ReplicateRecord:
    method: str
    epsilon: float
    rep: int
    param: str
    truth: float
    median: float
    hpd_lo: float
    hpd_hi: float
    p: float


@dataclass(frozen=True)
class CrossValReport:
    records: list[ReplicateRecord]
    n_rep: int
    methods: tuple[str, ...]
    epsilons: tuple[float, ...]
    alpha: float

    def select(self, method=None, epsilon=None, param=None):
        out = self.records
        if method is not None:
            out = [r for r in out if r.method == method]
        if epsilon is not None:
            out = [r for r in out if r.epsilon == epsilon]
        if param is not None:
            out = [r for r in out if r.param == param]
        return out

    def prediction_error(self, method, epsilon, param):
        recs = self.select(method, epsilon, param)
        return prediction_error([r.truth for r in recs], [r.median for r in recs])

    def md_index(self, method, epsilon, param):
        recs = self.select(method, epsilon, param)
        return md_index([r.truth for r in recs], [r.median for r in recs])


_CV_CTX = None  # (table, methods, epsilons, alpha, net_config); set before forking


def _crossval_replicate(task):
    rep, row = task
    table, methods, epsilons, alpha, net_config = _CV_CTX
    truth = table.params[row]
    s_obs = table.summaries[row]
    sub = table.without_row(row)
    records = []
    for method in methods:
        for epsilon in epsilons:
            post = fit(sub, s_obs, method, epsilon, net_config=net_config)
            for k, name in enumerate(PARAM_NAMES):
                records.append(
                    ReplicateRecord(
                        method=method,
                        epsilon=float(epsilon),
                        rep=rep,
                        param=name,
                        truth=float(truth[k]),
                        median=weighted_quantile(post, k, 0.5),
                        hpd_lo=hpd_interval(post, k, alpha)[0],
                        hpd_hi=hpd_interval(post, k, alpha)[1],
                        p=coverage_pvalue(post, k, truth[k]),
                    )
                )
    return records


def cross_validate(
    table,
    methods=("rejection", "loclinear", "neuralnet"),
    epsilons=(0.1, 0.01, 0.005, 0.001),
    n_rep=100,
    constraint=DEFAULT_CONSTRAINT,
    seed=0,
    alpha=0.95,
    net_config=None,
    workers=1,
):
    """Leave-one-out assessment over pseudo-observations from the table.

    Each replicate removes one constrained row, treats its summaries as
    the observation, and fits every (method, epsilon) combination against
    the remaining rows. ``constraint = (kappa_max, lambda_max)`` keeps
    pseudo-observations away from the upper prior limits; pass None to
    sample from the whole table.
    """
    if constraint is not None:
        kappa_max, lambda_max = constraint
        eligible = np.flatnonzero(
            (table.params[:, 0] <= kappa_max) & (table.params[:, 1] <= lambda_max)
        )
    else:
        eligible = np.arange(table.n_rows)
    if len(eligible) < n_rep:
        raise ValueError(
            f"only {len(eligible)} rows satisfy the constraint; need n_rep={n_rep}"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(eligible, size=n_rep, replace=False)
    tasks = [(rep, int(row)) for rep, row in enumerate(chosen)]
    context = (table, tuple(methods), tuple(epsilons), alpha, net_config)
    results = _map_with_context("_CV_CTX", context, _crossval_replicate, tasks, workers)
    records = [record for sub in results for record in sub]
    return CrossValReport(
        records=records,
        n_rep=n_rep,
        methods=tuple(methods),
        epsilons=tuple(float(e) for e in epsilons),
        alpha=alpha,
    )


def _map_with_context(ctx_name, context, worker, tasks, workers):
    """Map tasks in order; context travels to fork children via a module
    global, so only the small task tuples are pickled."""
    previous = globals()[ctx_name]
    globals()[ctx_name] = context
    try:
        if workers > 1 and len(tasks) > 1:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(processes=workers) as pool:
                return pool.map(worker, tasks)
        return [worker(t) for t in tasks]
    finally:
        globals()[ctx_name] = previous


def empirical_coverage(records):
    """Fraction of replicates whose truth lies inside the recorded HPD.

    Returns a dict keyed by (method, epsilon, param).
    """
    if not records:
        raise ValueError("no replicate records")
    keys = sorted({(r.method, r.epsilon, r.param) for r in records})
    out = {}
    for key in keys:
        recs = [r for r in records if (r.method, r.epsilon, r.param) == key]
        hits = sum(1 for r in recs if r.hpd_lo <= r.truth <= r.hpd_hi)
        out[key] = hits / len(recs)
    return out


@dataclass(frozen=True)
class CoverageReport:
    """Per (method, epsilon, parameter): empirical coverage, the coverage
    p-values, and their KS uniformity test."""

    coverage: dict
    p_values: dict
    ks_statistic: dict
    ks_pvalue: dict
    histogram: dict
    alpha: float
    records: list[ReplicateRecord] = field(repr=False, default_factory=list)


def coverage_report(crossval, alpha=0.95):
    """Assemble the coverage diagnostics from cross-validation records."""
    records = crossval.records
    coverage = empirical_coverage(records)
    p_values, ks_stat, ks_p, histogram = {}, {}, {}, {}
    for key in coverage:
        recs = [r for r in records if (r.method, r.epsilon, r.param) == key]
        p = np.array([r.p for r in recs])
        ks = kstest(p, "uniform")
        p_values[key] = p
        ks_stat[key] = float(ks.statistic)
        ks_p[key] = float(ks.pvalue)
        histogram[key], _ = np.histogram(p, bins=20, range=(0.0, 1.0))
    return CoverageReport(
        coverage=coverage,
        p_values=p_values,
        ks_statistic=ks_stat,
        ks_pvalue=ks_p,
        histogram=histogram,
        alpha=alpha,
        records=records,
    )


# ---------------------------------------------------------------------------
# observation-scale scan


@dataclass(frozen=True)
class RScanRecord:
    method: str
    r_value: float
    kappa_true: float
    rep: int
    param: str
    truth: float
    median: float


@dataclass(frozen=True)
class RScanReport:
    records: list[RScanRecord]
    skipped: list[tuple[float, float, str]]  # (R, kappa, reason)
    n_per_cell: int
    dt: float
    epsilon: float

    def cell_error(self, method, r_value, kappa_true, param):
        recs = [
            r
            for r in self.records
            if r.method == method
            and r.r_value == r_value
            and r.kappa_true == kappa_true
            and r.param == param
        ]
        return prediction_error([r.truth for r in recs], [r.median for r in recs])

    def mean_error_at(self, method, r_value, param):
        recs = [
            r
            for r in self.records
            if r.method == method and r.r_value == r_value and r.param == param
        ]
        return prediction_error([r.truth for r in recs], [r.median for r in recs])


_RS_CTX = None


def _rscan_cell(task):
    cell_index, r_value, kappa_true = task
    table, methods, epsilon, dt, n_per_cell, n_obs, net_config, seed = _RS_CTX
    lam_true = r_value / dt
    records = []
    for rep in range(n_per_cell):
        rng = stream(seed, cell_index * n_per_cell + rep)
        params = MovementParams(kappa=kappa_true, lam=lam_true)
        path = simulate_until(params, n_obs * dt, rng)
        s_obs = summarize(observe(path, dt, n_obs)).as_array()
        for method in methods:
            post = fit(table, s_obs, method, epsilon, net_config=net_config)
            for k, name in enumerate(PARAM_NAMES):
                records.append(
                    RScanRecord(
                        method=method,
                        r_value=float(r_value),
                        kappa_true=float(kappa_true),
                        rep=rep,
                        param=name,
                        truth=float(kappa_true) if k == 0 else float(lam_true),
                        median=weighted_quantile(post, k, 0.5),
                    )
                )
    return records


def r_scan(
    table,
    r_values,
    kappa_values,
    n_per_cell=50,
    dt=0.5,
    methods=("rejection", "loclinear", "neuralnet"),
    epsilon=0.001,
    seed=0,
    n_obs=1500,
    net_config=None,
    workers=1,
):
    """Prediction errors on fresh trajectories over a grid of R = lam * dt.

    Each (R, kappa) cell simulates ``n_per_cell`` trajectories with
    lam = R / dt and fits them against the fixed reference table. Cells
    whose implied parameters fall outside the table's prior support are
    skipped with a warning record.
    """
    skipped = []
    cells = []
    cell_index = 0
    for r_value in r_values:
        for kappa_true in kappa_values:
            lam_true = r_value / dt
            if not table.prior.contains(kappa_true, lam_true):
                reason = (
                    f"implied lambda={lam_true:g} or kappa={kappa_true:g} "
                    "outside prior support"
                )
                warnings.warn(f"skipping cell R={r_value:g}, kappa={kappa_true:g}: {reason}")
                skipped.append((float(r_value), float(kappa_true), reason))
            else:
                cells.append((cell_index, float(r_value), float(kappa_true)))
            cell_index += 1
    context = (table, tuple(methods), float(epsilon), dt, n_per_cell, n_obs, net_config, seed)
    results = _map_with_context("_RS_CTX", context, _rscan_cell, cells, workers)
    records = [record for sub in results for record in sub]
    return RScanReport(
        records=records,
        skipped=skipped,
        n_per_cell=n_per_cell,
        dt=dt,
        epsilon=float(epsilon),
    )


# ---------------------------------------------------------------------------
# direct fit on decomposed steps and turns


@dataclass(frozen=True)
class DirectFitResult:
    """Conjugate rate posterior and grid concentration posterior."""

    lambda_median: float
    lambda_interval: tuple[float, float]
    lambda_point: float
    kappa_median: float
    kappa_interval: tuple[float, float]
    kappa_point: float
    kappa_grid: np.ndarray = field(repr=False)
    kappa_density: np.ndarray = field(repr=False)
    at_grid_bound: bool = False


def direct_fit(
    durations,
    turns,
    a0=1.0,
    b0=0.0,
    kappa_grid_max=200.0,
    n_grid=4001,
    alpha=0.95,
):
    """Fit (lambda, kappa) from known step durations and turning angles.

    The rate posterior is the conjugate Gamma(n + a0, sum(t) + b0) with a
    flat-limit default prior (a0 = 1, b0 = 0). The concentration gets a
    1-d grid posterior under the von Mises likelihood with a uniform prior
    on [0, kappa_grid_max], plus the inverse-Bessel-ratio point estimate.
    Intervals are central (equal-tailed) at mass ``alpha``.
    """
    durations = np.asarray(durations, dtype=float)
    turns = np.asarray(turns, dtype=float)
    if len(durations) < 2 or len(turns) < 2:
        raise ValueError("need at least 2 durations and 2 turning angles")
    if np.any(durations <= 0):
        raise ValueError("durations must be strictly positive")
    n_dur = len(durations)
    rate_post = gamma(a=n_dur + a0, scale=1.0 / (float(durations.sum()) + b0))
    lo = (1.0 - alpha) / 2.0
    lambda_interval = (float(rate_post.ppf(lo)), float(rate_post.ppf(1.0 - lo)))

    mean_cos = float(np.mean(np.cos(turns)))
    kappa_point = bessel_ratio_inverse(min(max(mean_cos, 0.0), 1.0 - MEANCOS_CLAMP))
    grid = np.linspace(0.0, kappa_grid_max, n_grid)
    n_turn = len(turns)
    # log I0(k) = k + log(i0e(k)) keeps large concentrations finite
    log_lik = n_turn * (grid * mean_cos - grid - np.log(i0e(grid)) - np.log(2.0 * np.pi))
    density = np.exp(log_lik - log_lik.max())
    mass = np.trapezoid(density, grid)
    density = density / mass
    cdf = np.concatenate(
        ([0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(grid)))
    )
    cdf = cdf / cdf[-1]
    at_bound = bool(np.argmax(density) == len(grid) - 1)
    if at_bound:
        warnings.warn(
            "concentration posterior peaks at the grid upper bound; "
            "increase kappa_grid_max"
        )
    kappa_median = float(np.interp(0.5, cdf, grid))
    kappa_interval = (float(np.interp(lo, cdf, grid)), float(np.interp(1.0 - lo, cdf, grid)))
    return DirectFitResult(
        lambda_median=float(rate_post.median()),
        lambda_interval=lambda_interval,
        lambda_point=float(n_dur / durations.sum()),
        kappa_median=kappa_median,
        kappa_interval=kappa_interval,
        kappa_point=kappa_point,
        kappa_grid=grid,
        kappa_density=density,
        at_grid_bound=at_bound,
    )
