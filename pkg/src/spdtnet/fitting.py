"""Maximum-likelihood fitting of the generator parameters and the RSE metric."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from sklearn.base import BaseEstimator

from .contact import SECONDS_PER_DAY, TemporalContactNetwork


class FitError(ValueError):
    pass


def _as_samples(x, minimum: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size == 0:
        raise FitError("no samples")
    if np.any(x < minimum):
        raise FitError(f"samples must be >= {minimum}")
    return x


def fit_geometric(samples) -> float:
    """MLE of the success probability of a geometric law on {1, 2, ...}."""
    s = _as_samples(samples, 1)
    return float(len(s) / math.fsum(s))


def fit_activation_q(freq_samples, rho: float, z: float = 288) -> float:
    """Solve ``z q rho / (q + rho) = mean(h)`` for q."""
    h = _as_samples(freq_samples, 0)
    if z <= 0:
        raise FitError("z must be positive")
    h_bar = math.fsum(h) / len(h)
    if h_bar >= z * rho:
        raise FitError(f"mean activation frequency {h_bar} >= z*rho = {z * rho}: no positive q")
    return float(h_bar * rho / (z * rho - h_bar))


# --------------------------------------------------------------------------
# truncated geometric link delays

def truncated_geometric_score(p: float, delays, truncations, paired: bool = False) -> float:
    """Derivative of the delay log-likelihood in ``p``.

    ``truncations`` holds ``t_a + delta`` values.  In paired mode delay k is
    truncated at ``truncations[k]``; otherwise each delay is treated as drawn
    under an equal-weight mixture over the truncation values that admit it
    (those greater than the delay).
    """
    t = np.asarray(delays, dtype=float)
    K = np.asarray(truncations, dtype=float)
    n = len(t)
    one_minus = 1.0 - p
    norm = -np.expm1(K * math.log1p(-p))  # 1 - (1-p)^K
    base = n / p - math.fsum(t) / one_minus
    if paired:
        return base - math.fsum(K * one_minus ** (K - 1) / norm)
    order = np.argsort(K, kind="stable")
    K_sorted = K[order]
    # suffix sums over truncations strictly above each delay
    weight = np.append(np.cumsum((1.0 / norm[order])[::-1])[::-1], 0.0)
    slope = np.append(np.cumsum((K * one_minus ** (K - 1) / norm ** 2)[order][::-1])[::-1], 0.0)
    first = np.searchsorted(K_sorted, t, side="right")
    if np.any(first == len(K)):
        raise FitError("a delay exceeds every truncation")
    return base - math.fsum(slope[first] / weight[first])


def fit_truncated_geometric(delays, active_periods, delta_steps: int, paired: bool = False,
                            bracket=(1e-6, 1 - 1e-6), xtol: float = 1e-12) -> float:
    """Estimate the per-step link-creation probability from delays in {0, ...}."""
    t = _as_samples(delays, 0)
    ta = _as_samples(active_periods, 1)
    if paired and len(ta) != len(t):
        raise FitError("paired mode needs one active period per delay")
    K = ta + delta_steps
    if paired and np.any(t >= K):
        raise FitError("a delay exceeds its truncation")
    lo, hi = bracket
    if math.fsum(t) == 0:
        # all mass at zero: the likelihood increases all the way to p = 1
        return hi
    f_lo = truncated_geometric_score(lo, t, K, paired)
    f_hi = truncated_geometric_score(hi, t, K, paired)
    if np.sign(f_lo) == np.sign(f_hi):
        raise FitError(f"score does not change sign on bracket: f({lo})={f_lo}, f({hi})={f_hi}")
    return float(optimize.brentq(truncated_geometric_score, lo, hi, args=(t, K, paired),
                                 xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500))


# --------------------------------------------------------------------------
# power-law mixture of geometric degrees

_TAYLOR_TERMS = 30


def _a_and_b(x, log_lo: float, log_hi: float):
    """A(x) = integral of e^{x s} over [log_lo, log_hi] and its x-derivative B(x).

    With s = ln(lambda) this gives A(x) = (psi^x - xi^x) / x.  Near x = 0 a
    Taylor series avoids the cancellation.
    """
    x = np.asarray(x, dtype=float)
    a = np.empty_like(x)
    b = np.empty_like(x)
    small = np.abs(x) * max(abs(log_lo), abs(log_hi)) < 1e-3
    xs = x[~small]
    if xs.size:
        e_hi = np.exp(xs * log_hi)
        e_lo = np.exp(xs * log_lo)
        a[~small] = (e_hi - e_lo) / xs
        b[~small] = (log_hi * e_hi - log_lo * e_lo) / xs - (e_hi - e_lo) / xs ** 2
    if np.any(small):
        xs = x[small]
        sa = np.zeros_like(xs)
        sb = np.zeros_like(xs)
        term = np.ones_like(xs)
        for j in range(_TAYLOR_TERMS):
            sa += term * (log_hi ** (j + 1) - log_lo ** (j + 1)) / (j + 1)
            sb += term * (log_hi ** (j + 2) - log_lo ** (j + 2)) / (j + 2)
            term = term * xs / (j + 1)
        a[small] = sa
        b[small] = sb
    return a, b


def powerlaw_mixture_pmf(d, alpha: float, xi: float, psi: float = 1.0):
    """Pr(d) for a geometric degree whose parameter follows the power law on [xi, psi]."""
    d = np.asarray(d, dtype=float)
    norm = xi ** -alpha - psi ** -alpha
    log_lo, log_hi = math.log(xi), math.log(psi)
    a1, _ = _a_and_b(d - alpha - 1, log_lo, log_hi)
    a0, _ = _a_and_b(d - alpha, log_lo, log_hi)
    return alpha / norm * (a1 - a0)


def powerlaw_loglik(degrees, alpha: float, xi: float, psi: float = 1.0) -> float:
    vals, counts = np.unique(np.asarray(degrees), return_counts=True)
    return float(np.dot(counts, np.log(powerlaw_mixture_pmf(vals, alpha, xi, psi))))


def _powerlaw_scores(vals, counts, alpha: float, xi: float, psi: float):
    n = counts.sum()
    log_lo, log_hi = math.log(xi), math.log(psi)
    a1, b1 = _a_and_b(vals - alpha - 1, log_lo, log_hi)
    a0, b0 = _a_and_b(vals - alpha, log_lo, log_hi)
    g = a1 - a0
    norm = xi ** -alpha - psi ** -alpha
    # d/dxi of g is -(1 - xi) xi^(d - alpha - 2)
    s_xi = (n * alpha * xi ** (-alpha - 1) / norm
            - np.dot(counts, (1 - xi) * xi ** (vals - alpha - 2) / g))
    dnorm = -xi ** -alpha * log_lo + psi ** -alpha * log_hi
    s_alpha = n / alpha - n * dnorm / norm - np.dot(counts, (b1 - b0) / g)
    return float(s_alpha), float(s_xi)


@dataclass
class PowerLawFit:
    alpha: float
    xi: float
    psi: float
    converged: bool
    degenerate: bool
    iterations: int
    trace: list = field(default_factory=list)


def fit_powerlaw_degree(degrees, alpha_init: float = 2.5, psi: float = 1.0,
                        xi_bounds=(1e-4, 0.999), alpha_bounds=(1.0 + 1e-6, 20.0),
                        tol: float = 1e-6, max_iter: int = 100) -> PowerLawFit:
    """Alternate between the xi and alpha score equations until both settle."""
    d = _as_samples(degrees, 1)
    if not 1 < alpha_init < 5:
        raise FitError("alpha_init must lie in (1, 5)")
    vals, counts = np.unique(d, return_counts=True)
    counts = counts.astype(float)
    xi_hi = min(xi_bounds[1], psi - 1e-9)
    if len(vals) == 1 and vals[0] == 1:
        return PowerLawFit(alpha_init, xi_bounds[0], psi, False, True, 0)

    def root(f, lo, hi):
        f_lo, f_hi = f(lo), f(hi)
        if np.sign(f_lo) == np.sign(f_hi):
            # the likelihood is monotone on the bracket: take the better end
            return (hi if f_lo > 0 else lo), True
        return optimize.brentq(f, lo, hi, xtol=1e-12, maxiter=500), False

    alpha, xi = alpha_init, None
    trace = []
    degenerate = False
    for it in range(1, max_iter + 1):
        xi_new, hit_x = root(lambda x: _powerlaw_scores(vals, counts, alpha, x, psi)[1],
                             xi_bounds[0], xi_hi)
        alpha_new, hit_a = root(lambda a: _powerlaw_scores(vals, counts, a, xi_new, psi)[0],
                                *alpha_bounds)
        degenerate = hit_x or hit_a
        trace.append((alpha_new, xi_new))
        done = xi is not None and abs(alpha_new - alpha) < tol and abs(xi_new - xi) < tol
        alpha, xi = alpha_new, xi_new
        if done:
            return PowerLawFit(alpha, xi, psi, True, degenerate, it, trace)
    raise FitError(f"power-law fit did not converge after {max_iter} alternations: "
                   f"last iterates {trace[-3:]}")


def powerlaw_scores(degrees, alpha: float, xi: float, psi: float = 1.0) -> tuple[float, float]:
    """Score components (d/d alpha, d/d xi) of the mixture log-likelihood."""
    vals, counts = np.unique(np.asarray(degrees, dtype=float), return_counts=True)
    return _powerlaw_scores(vals, counts.astype(float), alpha, xi, psi)


# --------------------------------------------------------------------------
# goodness of fit

def rse(observed_pmf, reference_pmf) -> float:
    x = np.asarray(observed_pmf, dtype=float)
    y = np.asarray(reference_pmf, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    return float(np.sqrt(np.sum((x - y) ** 2)))


def empirical_pmf(samples, start: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Unit-bin proportions from ``start`` to the largest observed value."""
    s = np.asarray(samples, dtype=np.int64)
    support = np.arange(start, int(s.max()) + 1)
    counts = np.bincount(s - start, minlength=len(support))[: len(support)]
    return support, counts / len(s)


# --------------------------------------------------------------------------
# sample extraction from a network

@dataclass
class CipSamples:
    active_periods: np.ndarray
    activation_freqs: np.ndarray
    degrees: np.ndarray
    link_delays: np.ndarray
    delay_active_periods: np.ndarray
    link_durations: np.ndarray

    def counts(self) -> dict:
        return {k: len(v) for k, v in self.__dict__.items()}


def extract_cip_samples(net: TemporalContactNetwork, margin_s: int = SECONDS_PER_DAY) -> CipSamples:
    """Recover per-copy samples, in steps of ``net.dt_s``, from a network.

    Active copies are identified by ``(host, t_s, t_l)``.  To keep the
    horizon from biasing the samples, stays and durations are taken only from
    copies or links starting at least ``margin_s`` before the end (and not
    cut by it); degrees and delays only from copies whose whole link window
    fits.  Activation frequencies count copy starts per node-day, zeros
    included, skipping copies that begin at time zero (their start is not
    observed).  Raw-second timestamps are rounded up to whole steps.
    """
    dt, T_end, delta = net.dt_s, net.horizon_s, net.delta_s
    margin_s = min(margin_s, T_end // 2)
    key = np.stack([net.host, net.ts, net.tl], axis=1)
    if len(key) == 0:
        empty = np.zeros(0, np.int64)
        return CipSamples(empty, np.zeros(net.node_count * net.horizon_days, np.int64),
                          empty, empty, empty, empty)
    copies, inverse, degree = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    c_host, c_ts, c_tl = copies.T
    t_a = np.maximum(1, -(-(c_tl - c_ts) // dt))
    stay_ok = (c_ts + margin_s <= T_end) & (c_tl < T_end)
    window_ok = c_tl + delta <= T_end

    starts = c_ts > 0
    day = c_ts[starts] // SECONDS_PER_DAY
    freq = np.bincount(c_host[starts] * net.horizon_days + day,
                       minlength=net.node_count * net.horizon_days)

    link_ok = window_ok[inverse]
    delay_ta = t_a[inverse][link_ok]
    delays = np.clip((net.tsp - net.ts)[link_ok] // dt, 0, delay_ta + delta // dt - 1)
    dur_ok = (net.tsp + margin_s <= T_end) & (net.tlp < T_end)
    durations = np.maximum(1, -(-(net.tlp - net.tsp)[dur_ok] // dt))
    return CipSamples(t_a[stay_ok], freq, degree[window_ok], delays, delay_ta, durations)


# --------------------------------------------------------------------------
# estimator front ends

class PowerLawDegreeEstimator(BaseEstimator):
    """Fit the power-law mixture to activation degrees; ``fit(degrees)``."""

    def __init__(self, alpha_init: float = 2.5, psi: float = 1.0, tol: float = 1e-6,
                 max_iter: int = 100):
        self.alpha_init = alpha_init
        self.psi = psi
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        res = fit_powerlaw_degree(np.asarray(X).reshape(-1), self.alpha_init, self.psi,
                                  tol=self.tol, max_iter=self.max_iter)
        self.alpha_, self.xi_, self.result_ = res.alpha, res.xi, res
        return self

    def predict_proba(self, X):
        """Mixture pmf at the given degrees."""
        return powerlaw_mixture_pmf(np.asarray(X).reshape(-1), self.alpha_, self.xi_, self.psi)

    def score(self, X, y=None):
        return powerlaw_loglik(np.asarray(X).reshape(-1), self.alpha_, self.xi_, self.psi)


class SPDTGraphModel(BaseEstimator):
    """Fit generator parameters from a network, then ``generate`` synthetic ones.

    ``degree_mode='heterogeneous'`` fits the power-law mixture to degrees;
    ``paired_delays`` selects the per-delay truncation likelihood.
    """

    def __init__(self, degree_mode: str = "homogeneous", paired_delays: bool = False,
                 eta_reinf: float = 0.1, mu: float = 0.4, psi: float = 0.999):
        self.degree_mode = degree_mode
        self.paired_delays = paired_delays
        self.eta_reinf = eta_reinf
        self.mu = mu
        self.psi = psi

    def fit(self, X: TemporalContactNetwork | CipSamples, y=None, dt_s: int | None = None,
            delta_steps: int | None = None):
        if isinstance(X, TemporalContactNetwork):
            samples = extract_cip_samples(X)
            dt_s = X.dt_s if dt_s is None else dt_s
            delta_steps = X.delta_s // X.dt_s if delta_steps is None else delta_steps
        else:
            samples = X
            dt_s = 300 if dt_s is None else dt_s
            delta_steps = 36 if delta_steps is None else delta_steps
        z = SECONDS_PER_DAY / dt_s
        rho = fit_geometric(samples.active_periods)
        kw = dict(dt_s=dt_s, rho=rho, delta_steps=delta_steps, eta_reinf=self.eta_reinf,
                  mu=self.mu, degree_mode=self.degree_mode,
                  q=fit_activation_q(samples.activation_freqs, rho, z),
                  p_b=fit_geometric(samples.link_durations))
        ta_for_delays = samples.delay_active_periods if self.paired_delays else samples.active_periods
        kw["p_c"] = fit_truncated_geometric(samples.link_delays, ta_for_delays, delta_steps,
                                            paired=self.paired_delays)
        if self.degree_mode == "heterogeneous":
            pl = fit_powerlaw_degree(samples.degrees, psi=1.0)
            kw.update(alpha_powerlaw=pl.alpha, xi=pl.xi, psi=self.psi)
        else:
            kw["lam"] = 1.0 - fit_geometric(samples.degrees)
        self.samples_ = samples
        self.fitted_params_ = kw
        return self

    def generate(self, N: int, T_days: int, seed=None) -> TemporalContactNetwork:
        from .graphgen import GraphGenParams, generate_network
        return generate_network(GraphGenParams(N=N, T_days=T_days, **self.fitted_params_), seed)
