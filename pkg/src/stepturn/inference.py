"""Reference-table generation and ABC posterior estimation.

A reference table pairs prior parameter draws with the summaries of
trajectories simulated under them. Posteriors come from rejection on a
standardized Euclidean distance, optionally followed by a local-linear or
neural-network regression correction of the accepted draws.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from scipy.stats import median_abs_deviation

from . import nnet
from .errors import DegenerateTrackError, SingularRegressionError
from .movement import MovementParams, observe, simulate_until
from .streams import stream
from .summaries import SummaryVector, summarize

PARAM_NAMES = ("kappa", "lambda")
SUMMARY_NAMES = ("s1", "s2", "s3", "s4")
METHODS = ("rejection", "loclinear", "neuralnet")


@dataclass(frozen=True)
class PriorSpec:
    """Independent uniform priors for (kappa, lambda)."""

    kappa_range: tuple[float, float] = (0.0, 100.0)
    lambda_range: tuple[float, float] = (0.0, 50.0)

    def __post_init__(self):
        for name, (lo, hi) in (
            ("kappa_range", self.kappa_range),
            ("lambda_range", self.lambda_range),
        ):
            if not (0.0 <= lo < hi):
                raise ValueError(f"{name} must satisfy 0 <= lo < hi, got ({lo}, {hi})")

    @property
    def bounds(self):
        """Array of [[kappa_lo, kappa_hi], [lambda_lo, lambda_hi]]."""
        return np.array([self.kappa_range, self.lambda_range])

    def contains(self, kappa, lam):
        return (
            self.kappa_range[0] <= kappa <= self.kappa_range[1]
            and self.lambda_range[0] <= lam <= self.lambda_range[1]
        )


@dataclass(frozen=True)
class SimConfig:
    """Shared settings of every simulated trajectory in a table."""

    dt: float = 0.5
    min_obs: int = 1500

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.min_obs < 4:
            raise ValueError(f"min_obs must be >= 4, got {self.min_obs}")


@dataclass(frozen=True)
class ReferenceTable:
    """Paired (parameter, summary) rows from prior-predictive simulation."""

    params: np.ndarray  # (K, 2) columns kappa, lambda
    summaries: np.ndarray  # (K, 4) columns s1..s4
    prior: PriorSpec
    config: SimConfig
    seed: int
    n_resampled: int = 0

    def __post_init__(self):
        if len(self.params) != len(self.summaries):
            raise ValueError("params and summaries must have equal row counts")
        if not np.all(np.isfinite(self.summaries)):
            raise ValueError("every summary row must be finite")

    @property
    def n_rows(self):
        return len(self.params)

    def without_row(self, index):
        """Copy of the table with one row removed (for leave-one-out fits)."""
        return replace(
            self,
            params=np.delete(self.params, index, axis=0),
            summaries=np.delete(self.summaries, index, axis=0),
        )


@dataclass(frozen=True)
class WeightedPosterior:
    """Weighted parameter draws from an ABC fit.

    ``delta`` is the realized distance threshold of the rejection step.
    The accepted rows' summaries, distances and table indices are carried
    along so regression corrections can run on the same accepted set.
    """

    draws: np.ndarray  # (m, 2) columns kappa, lambda
    weights: np.ndarray  # (m,) nonnegative, summing to 1
    method: str
    epsilon: float
    delta: float
    summaries: np.ndarray | None = None
    distances: np.ndarray | None = None
    indices: np.ndarray | None = None
    scales: np.ndarray | None = field(default=None, repr=False)
    prior: PriorSpec | None = field(default=None, repr=False)
    n_projected: int = 0

    def __post_init__(self):
        if len(self.draws) != len(self.weights):
            raise ValueError("draws and weights must have equal lengths")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    @property
    def n_draws(self):
        return len(self.draws)


def _param_index(parameter):
    if isinstance(parameter, str):
        try:
            return PARAM_NAMES.index(parameter)
        except ValueError:
            raise ValueError(
                f"unknown parameter {parameter!r}; expected one of {PARAM_NAMES}"
            ) from None
    index = int(parameter)
    if index not in (0, 1):
        raise ValueError(f"parameter index must be 0 or 1, got {index}")
    return index


# ---------------------------------------------------------------------------
# reference-table generation


def _reference_row(prior, config, base_seed, index):
    """Simulate one table row; degenerate draws are resampled with a bumped
    sub-stream. Returns (kappa, lambda, s1..s4, n_resamples)."""
    for attempt in range(1000):
        rng = stream(base_seed, index, bump=attempt)
        kappa = rng.uniform(*prior.kappa_range)
        lam = rng.uniform(*prior.lambda_range)
        try:
            params = MovementParams(kappa=kappa, lam=lam)
            path = simulate_until(params, config.min_obs * config.dt, rng)
            track = observe(path, config.dt, config.min_obs)
            s = summarize(track).as_array()
        except (ValueError, DegenerateTrackError):
            continue
        if np.all(np.isfinite(s)):
            return kappa, lam, s[0], s[1], s[2], s[3], attempt
    raise RuntimeError(f"row {index}: exhausted resampling attempts")


def reference_rows(prior, config, base_seed, lo, hi):
    """Rows lo..hi-1 of the table as ((n, 6) array, total resamples)."""
    rows = np.empty((hi - lo, 6))
    resamples = 0
    for offset, index in enumerate(range(lo, hi)):
        *values, attempts = _reference_row(prior, config, base_seed, index)
        rows[offset] = values
        resamples += attempts
    return rows, resamples


def _rows_task(args):
    prior, config, base_seed, lo, hi = args
    return reference_rows(prior, config, base_seed, lo, hi)


def generate_reference_table(
    prior, n_sims, config=None, seed=0, workers=1, chunk_size=256
):
    """Simulate ``n_sims`` prior-predictive rows.

    Row i draws its parameters and trajectory from the stream
    ``seed XOR i``, so the table is bit-identical for any worker count.
    """
    if n_sims < 1:
        raise ValueError(f"n_sims must be >= 1, got {n_sims}")
    prior = prior or PriorSpec()
    config = config or SimConfig()
    edges = list(range(0, n_sims, chunk_size)) + [n_sims]
    tasks = [(prior, config, seed, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]
    if workers > 1 and len(tasks) > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=workers) as pool:
            results = pool.map(_rows_task, tasks)
    else:
        results = [_rows_task(t) for t in tasks]
    rows = np.vstack([r for r, _ in results])
    n_resampled = int(sum(c for _, c in results))
    return ReferenceTable(
        params=rows[:, :2].copy(),
        summaries=rows[:, 2:].copy(),
        prior=prior,
        config=config,
        seed=seed,
        n_resampled=n_resampled,
    )


# ---------------------------------------------------------------------------
# rejection


def summary_scales(table):
    """Per-column scale for distance standardization.

    Median absolute deviation of each summary column; falls back to the
    sample standard deviation when the MAD is zero, and to 1 when both
    vanish.
    """
    scales = median_abs_deviation(table.summaries, axis=0)
    for k in range(len(scales)):
        if scales[k] == 0.0:
            scales[k] = float(np.std(table.summaries[:, k], ddof=1))
        if scales[k] == 0.0 or not np.isfinite(scales[k]):
            scales[k] = 1.0
    return scales


def standardized_distances(table, s_obs):
    """Standardized Euclidean distance of every table row to ``s_obs``."""
    if table.n_rows == 0:
        raise ValueError("reference table is empty")
    s_obs = _as_summary_array(s_obs)
    scales = summary_scales(table)
    z = (table.summaries - s_obs) / scales
    return np.sqrt(np.sum(z * z, axis=1))


def _as_summary_array(s_obs):
    if isinstance(s_obs, SummaryVector):
        return s_obs.as_array()
    s_obs = np.asarray(s_obs, dtype=float)
    if s_obs.shape != (4,):
        raise ValueError(f"expected 4 summary values, got shape {s_obs.shape}")
    return s_obs


def abc_reject(table, s_obs, epsilon):
    """Accept the ceil(epsilon * K) rows closest to the observed summaries.

    Ties at the acceptance boundary break by row index (stable sort);
    accepted draws carry uniform weights and the realized distance
    threshold delta.
    """
    if not (0.0 < epsilon <= 1.0):
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    distances = standardized_distances(table, s_obs)
    n_accept = int(np.ceil(epsilon * table.n_rows))
    order = np.argsort(distances, kind="stable")
    accepted = order[:n_accept]
    return WeightedPosterior(
        draws=table.params[accepted].copy(),
        weights=np.full(n_accept, 1.0 / n_accept),
        method="rejection",
        epsilon=float(epsilon),
        delta=float(distances[accepted[-1]]),
        summaries=table.summaries[accepted].copy(),
        distances=distances[accepted].copy(),
        indices=accepted.copy(),
        scales=summary_scales(table),
        prior=table.prior,
    )


# ---------------------------------------------------------------------------
# regression corrections

_DESIGN_NAMES = ("intercept",) + SUMMARY_NAMES


def _kernel_weights(distances, delta):
    """Epanechnikov weights 1 - (d/delta)^2; all ones when delta is 0."""
    if delta <= 0.0:
        return np.ones_like(distances)
    return np.clip(1.0 - (distances / delta) ** 2, 0.0, None)


def _collinear_columns(weighted_design):
    _, r, pivots = scipy.linalg.qr(weighted_design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag[0] * max(weighted_design.shape) * np.finfo(float).eps if diag[0] else 0.0
    rank = int(np.sum(diag > tol))
    return [_DESIGN_NAMES[c] for c in sorted(pivots[rank:])]


def _prepare_regression(accepted, s_obs, transform):
    s_obs = _as_summary_array(s_obs)
    if accepted.summaries is None or accepted.distances is None:
        raise ValueError("posterior lacks accepted summaries; run abc_reject first")
    m, n_cols = accepted.summaries.shape
    if m <= n_cols + 1:
        raise ValueError(
            f"need more than {n_cols + 1} accepted rows for a regression, got {m}"
        )
    if transform not in ("none", "log"):
        raise ValueError(f"transform must be 'none' or 'log', got {transform!r}")
    theta = accepted.draws
    if transform == "log":
        if np.any(theta <= 0):
            raise ValueError("log transform requires strictly positive draws")
        theta = np.log(theta)
    scales = accepted.scales if accepted.scales is not None else np.ones(n_cols)
    z = (accepted.summaries - s_obs) / scales
    w = _kernel_weights(accepted.distances, accepted.delta)
    return z, theta, w


def _finalize_posterior(accepted, corrected, w, transform, method):
    if transform == "log":
        corrected = np.exp(corrected)
    n_projected = 0
    if accepted.prior is not None:
        bounds = accepted.prior.bounds
        clipped = np.clip(corrected, bounds[:, 0], bounds[:, 1])
        n_projected = int(np.sum(np.any(clipped != corrected, axis=1)))
        corrected = clipped
    wsum = float(np.sum(w))
    weights = w / wsum if wsum > 0 else np.full(len(w), 1.0 / len(w))
    return replace(
        accepted,
        draws=corrected,
        weights=weights,
        method=method,
        n_projected=n_projected,
    )


def loclinear_adjust(accepted, s_obs, transform="none"):
    """Local-linear regression correction of accepted draws.

    Fits a kernel-weighted linear regression of each parameter on the
    standardized summaries and moves every accepted draw by the fitted
    shift: corrected_i = m(s_obs) + residual_i. Output weights are the
    (normalized) kernel weights; corrected draws outside the prior support
    are projected to its boundary.

    Raises
    ------
    SingularRegressionError
        If the weighted design matrix is rank deficient.
    """
    z, theta, w = _prepare_regression(accepted, s_obs, transform)
    design = np.column_stack((np.ones(len(z)), z))
    sqrt_w = np.sqrt(w)
    a = design * sqrt_w[:, None]
    beta, _, rank, _ = np.linalg.lstsq(a, theta * sqrt_w[:, None], rcond=None)
    if rank < design.shape[1]:
        raise SingularRegressionError(_collinear_columns(a))
    corrected = beta[0] + (theta - design @ beta)
    return _finalize_posterior(accepted, corrected, w, transform, "loclinear")


def neuralnet_adjust(accepted, s_obs, net_config=None, transform="none"):
    """Neural-network regression correction of accepted draws.

    Same correction scheme as :func:`loclinear_adjust` but with the
    conditional mean fitted by a single-hidden-layer network on the
    kernel-weighted data (targets standardized internally). Deterministic
    given the accepted set and the network config.
    """
    config = net_config or nnet.NetConfig()
    z, theta, w = _prepare_regression(accepted, s_obs, transform)
    if len(z) < 10 * config.n_hidden:
        raise ValueError(
            f"need at least {10 * config.n_hidden} accepted rows for "
            f"{config.n_hidden} hidden units, got {len(z)}"
        )
    wsum = float(np.sum(w))
    w_norm = w / wsum if wsum > 0 else np.full(len(w), 1.0 / len(w))
    center = w_norm @ theta
    spread = np.sqrt(w_norm @ (theta - center) ** 2)
    spread[spread == 0.0] = 1.0
    y = (theta - center) / spread
    flat, shapes = nnet.train(z, y, w, config)
    fitted = nnet.predict(flat, shapes, z)
    m_obs = nnet.predict(flat, shapes, np.zeros((1, z.shape[1])))[0]
    corrected = (m_obs + (y - fitted)) * spread + center
    return _finalize_posterior(accepted, corrected, w, transform, "neuralnet")


def fit(table, s_obs, method, epsilon, net_config=None, transform="none"):
    """Run one ABC fit: rejection plus the requested correction."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    accepted = abc_reject(table, s_obs, epsilon)
    if method == "loclinear":
        return loclinear_adjust(accepted, s_obs, transform=transform)
    if method == "neuralnet":
        return neuralnet_adjust(accepted, s_obs, net_config=net_config, transform=transform)
    return accepted


# ---------------------------------------------------------------------------
# posterior functionals


def weighted_quantile(posterior, parameter, q):
    """Smallest draw whose cumulative weight reaches ``q`` (ascending sort)."""
    if not (0.0 <= q <= 1.0):
        raise ValueError(f"q must be in [0, 1], got {q}")
    if posterior.n_draws == 0:
        raise ValueError("posterior is empty")
    index = _param_index(parameter)
    values = posterior.draws[:, index]
    order = np.argsort(values, kind="stable")
    cumulative = np.cumsum(posterior.weights[order])
    cumulative /= cumulative[-1]
    position = int(np.searchsorted(cumulative, q, side="left"))
    return float(values[order[min(position, len(order) - 1)]])


def hpd_interval(posterior, parameter, alpha=0.95):
    """Shortest interval between draws containing at least ``alpha`` mass.

    Ties in width resolve to the smallest lower endpoint. Mass comparisons
    carry a 1e-12 slack so float-accumulated weights behave like their
    exact values.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if posterior.n_draws == 0:
        raise ValueError("posterior is empty")
    index = _param_index(parameter)
    order = np.argsort(posterior.draws[:, index], kind="stable")
    values = posterior.draws[order, index]
    weights = posterior.weights[order] / float(np.sum(posterior.weights))
    cumulative = np.concatenate(([0.0], np.cumsum(weights)))
    target = alpha - 1e-12
    n = len(values)
    best = (np.inf, values[0], values[-1])
    hi = 0
    for lo in range(n):
        if hi < lo:
            hi = lo
        # advance hi until the window holds alpha mass
        while hi < n and cumulative[hi + 1] - cumulative[lo] < target:
            hi += 1
        if hi == n:
            break
        width = values[hi] - values[lo]
        if width < best[0]:
            best = (width, values[lo], values[hi])
    if not np.isfinite(best[0]):  # total mass below alpha (numerical edge)
        return float(values[0]), float(values[-1])
    return float(best[1]), float(best[2])
