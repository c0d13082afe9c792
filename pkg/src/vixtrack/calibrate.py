"""Parameter estimation: spot-series MLE and futures-curve moment fit.

Under square-root (CIR) dynamics the one-step transition density of the
index has a closed form involving the modified Bessel function I_q, so
the historical parameters (mu, theta, sigma) are fitted by maximizing
the average log-likelihood over the observed daily transitions.  The
risk-neutral pair (mu_tilde, theta_tilde) is fitted by matching the
closed-form futures curve to observed prices in least squares, averaged
over days (method of moments).

All Bessel work happens in the log domain so likelihood evaluation
cannot overflow even for arguments of order 1e6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln, logsumexp

from .errors import CalibrationError
from .model import HistoricalParams, RiskNeutralParams

__all__ = [
    "MLEReport",
    "MOMReport",
    "log_bessel_i",
    "cir_log_density",
    "average_log_likelihood",
    "initial_guess_from_moments",
    "mle_fit",
    "mom_loss",
    "mom_fit",
]

# Parameter box for the historical fit; solutions at a bound are flagged.
MLE_BOUNDS = ((1e-3, 100.0), (1e-2, 200.0), (1e-3, 50.0))

# Evaluation regimes for log I_q(x): ascending series for small x,
# large-argument expansion once x/(q+1) crosses this ratio (and x
# dominates q^2, where that expansion is usable), and the uniform
# large-order expansion when the order itself is large (where the
# ascending series would need O(q^2) terms).
_LARGE_X_RATIO = 20.0
_LARGE_ORDER_MIN = 50.0
_PENALTY = 1e12


def _log_i_series(q: float, x: np.ndarray) -> np.ndarray:
    # ln sum_m (x/2)^(2m+q) / (m! Gamma(m+q+1)), all terms positive
    x = np.atleast_1d(x)
    m_peak = 0.5 * (-q + math.sqrt(q * q + float(np.max(x)) ** 2))
    n_terms = int(m_peak + 12.0 * math.sqrt(m_peak + 16.0) + 40.0)
    m = np.arange(n_terms, dtype=float)[:, None]
    log_half_x = np.log(0.5 * x)[None, :]
    log_terms = (2.0 * m + q) * log_half_x - gammaln(m + 1.0) - gammaln(m + q + 1.0)
    return logsumexp(log_terms, axis=0)


def _log_i_large_x(q: float, x: np.ndarray) -> np.ndarray:
    # Hankel expansion: I_q(x) ~ e^x/sqrt(2 pi x) * sum_k (-1)^k a_k(q)/x^k,
    # truncated at its smallest term.
    x = np.atleast_1d(x)
    four_q2 = 4.0 * q * q
    total = np.ones_like(x)
    term = np.ones_like(x)
    active = np.ones_like(x, dtype=bool)
    for k in range(1, 40):
        factor = -(four_q2 - (2.0 * k - 1.0) ** 2) / (8.0 * k * x)
        new_term = term * factor
        # stop where the asymptotic terms start growing again
        active &= np.abs(new_term) < np.abs(term)
        if not np.any(active):
            break
        total = np.where(active, total + new_term, total)
        term = np.where(active, new_term, term)
        if np.all(np.abs(term) < 1e-20):
            break
    return x - 0.5 * np.log(2.0 * np.pi * x) + np.log(total)


def _log_i_uniform(q: float, x: np.ndarray) -> np.ndarray:
    # Uniform large-order expansion in z = x/q (valid for all z, q large).
    x = np.atleast_1d(x)
    z = x / q
    root = np.sqrt(1.0 + z * z)
    eta = root + np.log(z / (1.0 + root))
    t = 1.0 / root
    t2 = t * t
    u1 = t * (3.0 - 5.0 * t2) / 24.0
    u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0
    u3 = (
        t * t2 * (30375.0 + t2 * (-369603.0 + t2 * (765765.0 - 425425.0 * t2)))
        / 414720.0
    )
    u4 = (
        t2
        * t2
        * (
            4465125.0
            + t2
            * (-94121676.0 + t2 * (349922430.0 + t2 * (-446185740.0 + 185910725.0 * t2)))
        )
        / 39813120.0
    )
    u5 = (
        t * t2 * t2
        * (
            1519035525.0
            + t2
            * (
                -49286948607.0
                + t2
                * (
                    284499769554.0
                    + t2
                    * (-614135872350.0 + t2 * (566098157625.0 - 188699385875.0 * t2))
                )
            )
        )
        / 6688604160.0
    )
    correction = 1.0 + u1 / q + u2 / q**2 + u3 / q**3 + u4 / q**4 + u5 / q**5
    return -0.5 * np.log(2.0 * np.pi * q) + q * eta - 0.5 * np.log(root) + np.log(
        correction
    )


def log_bessel_i(order: float, x):
    """ln I_order(x) for order >= 0 and x > 0, vectorized over x.

    Uses the ascending series for small arguments, the large-argument
    asymptotic expansion once x/(order+1) is large, and the uniform
    large-order expansion for large orders.  Never overflows for x up
    to 1e6.
    """
    if not (math.isfinite(order) and order >= 0):
        raise ValueError(f"order must be finite and >= 0, got {order}")
    scalar = np.isscalar(x)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x_arr <= 0):
        raise ValueError("x must be positive")
    out = np.empty_like(x_arr)
    hankel = x_arr >= max(_LARGE_X_RATIO * (order + 1.0), order * order)
    rest = ~hankel
    if np.any(hankel):
        out[hankel] = _log_i_large_x(order, x_arr[hankel])
    if np.any(rest):
        if order >= _LARGE_ORDER_MIN:
            out[rest] = _log_i_uniform(order, x_arr[rest])
        else:
            out[rest] = _log_i_series(order, x_arr[rest])
    return float(out[0]) if scalar else out


def cir_log_density(s_next, s_prev, p: HistoricalParams, dt: float):
    """Log transition density of the square-root process over one step.

    With sig2 = sigma^2 (1 - e^(-mu dt)) / (2 mu), q = 2 mu theta / sigma^2 - 1
    and u = s_prev e^(-mu dt):

        ln f = -ln sig2 - (s_next + u)/sig2 + (q/2) ln(s_next/u)
               + ln I_q(2 sqrt(s_next u) / sig2)

    Vectorized over (s_next, s_prev) pairs.

    Raises
    ------
    ValueError
        If q <= -1 (the density would be improper at zero) or any
        state is nonpositive.
    """
    q = 2.0 * p.mu * p.theta / p.sigma**2 - 1.0
    if q <= -1.0:
        raise ValueError(
            f"2*mu*theta/sigma^2 - 1 = {q:.4f} <= -1; improper density at 0"
        )
    scalar = np.isscalar(s_next) and np.isscalar(s_prev)
    s_next = np.atleast_1d(np.asarray(s_next, dtype=float))
    s_prev = np.atleast_1d(np.asarray(s_prev, dtype=float))
    if np.any(s_next <= 0) or np.any(s_prev <= 0):
        raise ValueError("states must be positive")
    decay = math.exp(-p.mu * dt)
    sig2 = p.sigma**2 * (1.0 - decay) / (2.0 * p.mu)
    u = s_prev * decay
    arg = 2.0 * np.sqrt(s_next * u) / sig2
    log_f = (
        -math.log(sig2)
        - (s_next + u) / sig2
        + 0.5 * q * (np.log(s_next) - np.log(u))
        + log_bessel_i(q, arg)
    )
    return float(log_f[0]) if scalar else log_f


def average_log_likelihood(series: np.ndarray, p: HistoricalParams, dt: float) -> float:
    """Mean log transition density over consecutive observations."""
    series = np.asarray(series, dtype=float)
    return float(np.mean(cir_log_density(series[1:], series[:-1], p, dt)))


@dataclass(frozen=True)
class MLEReport:
    """Historical-measure fit with convergence diagnostics."""

    params: HistoricalParams
    avg_loglik: float
    iterations: int
    converged: bool
    start: HistoricalParams
    at_bound: bool = False


@dataclass(frozen=True)
class MOMReport:
    """Risk-neutral curve fit: parameters, average squared pricing error,
    and its per-day decomposition."""

    params: RiskNeutralParams
    loss: float
    per_day_loss: np.ndarray


def initial_guess_from_moments(series: np.ndarray, dt: float) -> HistoricalParams:
    """Moment-based starting point: sample mean for theta, lag-1
    autocorrelation for mu, realized quadratic variation for sigma."""
    s = np.asarray(series, dtype=float)
    theta0 = float(np.mean(s))
    rho = float(np.corrcoef(s[1:], s[:-1])[0, 1])
    rho = min(max(rho, 1e-4), 1.0 - 1e-4)
    mu0 = -math.log(rho) / dt
    sigma0 = math.sqrt(float(np.mean(np.diff(s) ** 2 / (s[:-1] * dt))))
    clip = lambda v, lo, hi: min(max(v, lo * 1.01), hi * 0.99)
    return HistoricalParams(
        mu=clip(mu0, *MLE_BOUNDS[0]),
        theta=clip(theta0, *MLE_BOUNDS[1]),
        sigma=clip(sigma0, *MLE_BOUNDS[2]),
    )


def _neg_avg_loglik(z: np.ndarray, s_next, s_prev, dt: float) -> float:
    mu, theta, sigma = np.exp(z)
    penalty = 0.0
    for v, (lo, hi) in zip((mu, theta, sigma), MLE_BOUNDS):
        if v < lo:
            penalty += (math.log(lo) - math.log(v)) ** 2
        elif v > hi:
            penalty += (math.log(v) - math.log(hi)) ** 2
    if penalty > 0:
        return _PENALTY * (1.0 + penalty)
    q = 2.0 * mu * theta / sigma**2 - 1.0
    if q <= -1.0 + 1e-12:
        return _PENALTY
    p = HistoricalParams(mu=mu, theta=theta, sigma=sigma)
    val = np.mean(cir_log_density(s_next, s_prev, p, dt))
    if not np.isfinite(val):
        return _PENALTY
    return -float(val)


def mle_fit(
    series,
    dt: float,
    init: HistoricalParams | None = None,
    budget: int = 600,
    n_restarts: int = 3,
) -> MLEReport:
    """Maximize the average log-likelihood of the square-root model.

    Runs a derivative-free simplex search in log-parameter space from
    the given start plus ``n_restarts`` deterministically jittered
    restarts, keeping the best local maximizer.  If no restart converges
    within ``budget`` iterations the best point so far is returned with
    ``converged=False``.
    """
    series = np.asarray(series, dtype=float)
    if series.size < 100:
        raise ValueError(f"need at least 100 observations, got {series.size}")
    if np.any(series <= 0):
        raise ValueError("spot series must be positive")
    if init is None:
        init = initial_guess_from_moments(series, dt)
    s_next, s_prev = series[1:], series[:-1]
    z0 = np.log([init.mu, init.theta, init.sigma])
    rng = np.random.default_rng(20_52_01)
    starts = [z0] + [z0 + rng.normal(0.0, 0.25, size=3) for _ in range(n_restarts)]
    best = None
    total_iter = 0
    any_converged = False
    for z_start in starts:
        res = minimize(
            _neg_avg_loglik,
            z_start,
            args=(s_next, s_prev, dt),
            method="Nelder-Mead",
            options={
                "maxiter": budget,
                "xatol": 1e-8,
                "fatol": 1e-12,
                "adaptive": True,
            },
        )
        total_iter += res.nit
        if best is None or res.fun < best.fun:
            best = res
            any_converged = res.success
    f_init = _neg_avg_loglik(z0, s_next, s_prev, dt)
    if best.fun > f_init:
        # never return something worse than the starting point
        best_x, best_fun = z0, f_init
        any_converged = False
    else:
        best_x, best_fun = best.x, best.fun
    mu, theta, sigma = np.exp(best_x)
    at_bound = any(
        v / lo < 1.0 + 1e-6 or v / hi > 1.0 - 1e-6
        for v, (lo, hi) in zip((mu, theta, sigma), MLE_BOUNDS)
    )
    return MLEReport(
        params=HistoricalParams(mu=float(mu), theta=float(theta), sigma=float(sigma)),
        avg_loglik=-best_fun,
        iterations=total_iter,
        converged=bool(any_converged and not at_bound),
        start=init,
        at_bound=at_bound,
    )


def _flatten_observations(observations):
    if not observations:
        raise ValueError("empty observation set")
    spots, ttms, prices, weights = [], [], [], []
    n = len(observations)
    for spot, quotes in observations:
        if not quotes:
            raise ValueError("every observation needs at least one contract")
        n_j = len(quotes)
        for ttm, price in quotes:
            spots.append(spot)
            ttms.append(ttm)
            prices.append(price)
            weights.append(1.0 / (2.0 * n_j * n))
    return (np.array(spots), np.array(ttms), np.array(prices), np.array(weights))


def mom_loss(rn: RiskNeutralParams, observations) -> float:
    """Average squared futures-pricing error over the sample.

    loss = (1/n) sum_j (1/(2 N_j)) sum_i
           ((s_j - theta_tilde) e^(-mu_tilde T_i) + theta_tilde - f_j^i)^2
    """
    spots, ttms, prices, weights = _flatten_observations(observations)
    fitted = (spots - rn.theta_tilde) * np.exp(-rn.mu_tilde * ttms) + rn.theta_tilde
    return float(np.sum(weights * (fitted - prices) ** 2))


def _per_day_loss(rn: RiskNeutralParams, observations) -> np.ndarray:
    out = np.empty(len(observations))
    for j, (spot, quotes) in enumerate(observations):
        errs = [
            (spot - rn.theta_tilde) * math.exp(-rn.mu_tilde * ttm)
            + rn.theta_tilde
            - price
            for ttm, price in quotes
        ]
        out[j] = sum(e * e for e in errs) / (2.0 * len(quotes))
    return out


def mom_fit(observations, budget: int = 800) -> MOMReport:
    """Fit (mu_tilde, theta_tilde) by minimizing the average squared
    pricing error: a coarse log-grid scan followed by simplex
    refinement.  Deterministic given the observations.

    Raises
    ------
    CalibrationError
        If the loss surface cannot identify both parameters (a single
        maturity observed at a single spot level).
    """
    spots, ttms, prices, weights = _flatten_observations(observations)
    if np.unique(np.round(ttms, 12)).size < 2 and np.unique(spots).size < 2:
        raise CalibrationError(
            "unidentifiable: one maturity at one spot level cannot pin down "
            "both mean-reversion parameters"
        )

    def loss_xy(mu_t: float, theta_t: float) -> float:
        fitted = (spots - theta_t) * np.exp(-mu_t * ttms) + theta_t
        return float(np.sum(weights * (fitted - prices) ** 2))

    level_hi = max(float(np.max(prices)), float(np.max(spots)))
    level_lo = min(float(np.min(prices)), float(np.min(spots)))
    mu_grid = np.geomspace(0.01, 20.0, 30)
    theta_grid = np.geomspace(max(level_lo * 0.2, 1e-2), level_hi * 5.0, 40)
    best = None
    for mu_t in mu_grid:
        for theta_t in theta_grid:
            val = loss_xy(mu_t, theta_t)
            if best is None or val < best[0]:
                best = (val, mu_t, theta_t)
    z0 = np.log([best[1], best[2]])

    def objective(z: np.ndarray) -> float:
        mu_t, theta_t = np.exp(z)
        if not (1e-6 < mu_t < 1e3 and 1e-6 < theta_t < 1e4):
            return _PENALTY
        return loss_xy(mu_t, theta_t)

    res = minimize(
        objective,
        z0,
        method="Nelder-Mead",
        options={"maxiter": budget, "xatol": 1e-12, "fatol": 1e-16, "adaptive": True},
    )
    # polish once from the first solution; cheap and tightens the minimum
    res2 = minimize(
        objective,
        res.x,
        method="Nelder-Mead",
        options={"maxiter": budget, "xatol": 1e-13, "fatol": 1e-18},
    )
    z_best = res2.x if res2.fun <= res.fun else res.x
    mu_t, theta_t = np.exp(z_best)
    rn = RiskNeutralParams(mu_tilde=float(mu_t), theta_tilde=float(theta_t))
    return MOMReport(
        params=rn,
        loss=mom_loss(rn, observations),
        per_day_loss=_per_day_loss(rn, observations),
    )
