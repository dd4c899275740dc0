"""Gaussian-emission hidden Markov model fitted by Baum-Welch EM.

The likelihood of an observation sequence is the matrix product
delta P(x1) . Gamma P(x2) ... Gamma P(xT) 1, with P(x) the diagonal matrix
of per-state normal densities. That product underflows long before T = 300,
so every routine here works with row-normalized forward vectors and
accumulated log scale factors; backward vectors reuse the same factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.stats import norm

PROB_TOL = 1e-12        # slack for probability-vector and row-sum checks
DEGENERATE_MASS = 1e-8  # a state owning less posterior mass is frozen


class EmptyObservations(ValueError):
    """The observation sequence is empty."""


class NumericalUnderflow(ArithmeticError):
    """Some observation has zero density under every state."""


class ResidualVariant(Enum):
    CONDITIONAL = "conditional"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class HmmParams:
    """Initial distribution, transition matrix, and per-state normal emissions."""

    delta: np.ndarray   # (m,) initial state probabilities
    gamma: np.ndarray   # (m, m) row-stochastic transition matrix
    mu: np.ndarray      # (m,) state means
    sigma: np.ndarray   # (m,) state standard deviations, all > 0

    def __post_init__(self):
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=float))
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        m = self.delta.shape[0]
        if self.gamma.shape != (m, m) or self.mu.shape != (m,) or self.sigma.shape != (m,):
            raise ValueError("inconsistent parameter shapes")
        if not all(np.all(np.isfinite(a)) for a in (self.delta, self.gamma, self.mu, self.sigma)):
            raise ValueError("parameters must be finite")
        if np.any(self.delta < 0) or abs(self.delta.sum() - 1.0) > PROB_TOL:
            raise ValueError("delta must be a probability vector")
        if np.any(self.gamma < 0) or np.any(np.abs(self.gamma.sum(axis=1) - 1.0) > PROB_TOL):
            raise ValueError("gamma rows must each sum to 1")
        if np.any(self.sigma <= 0):
            raise ValueError("sigma entries must be positive")

    @property
    def m(self) -> int:
        return self.delta.shape[0]

    def permuted(self, order: Sequence[int]) -> "HmmParams":
        """Relabel states by `order` (new state j = old state order[j])."""
        idx = np.asarray(order)
        return HmmParams(
            delta=self.delta[idx],
            gamma=self.gamma[np.ix_(idx, idx)],
            mu=self.mu[idx],
            sigma=self.sigma[idx],
        )


@dataclass
class ForwardBackwardTables:
    """Scaled forward/backward rows plus per-step log scale factors.

    Unscaled quantities are recoverable as
    alpha_t = alpha_hat[t] * exp(sum(log_c[: t + 1])) and
    beta_t = beta_hat[t] * exp(sum(log_c[t + 1 :])), which makes
    alpha_hat[t] @ beta_hat[t] == 1 for every t.
    """

    alpha_hat: np.ndarray    # (T, m)
    beta_hat: np.ndarray     # (T, m)
    log_c: np.ndarray        # (T,)
    log_likelihood: float


@dataclass
class PosteriorTables:
    """Smoothed state and successive-pair probabilities given all observations."""

    state_prob: np.ndarray   # (T, m)
    pair_prob: np.ndarray    # (T-1, m, m); [t, j, k] = Pr(C_t = j, C_{t+1} = k | X)


@dataclass
class FitReport:
    """Outcome of an EM fit, states relabeled in ascending-mean order."""

    params: HmmParams
    loglik_trace: list[float]
    iterations: int
    state_order: tuple[int, ...]
    warnings: list[str] = field(default_factory=list)


@dataclass
class PseudoResiduals:
    """Probability-integral-transform residuals, one per observation."""

    u: np.ndarray
    variant: ResidualVariant


def _density_matrix(params: HmmParams, obs: np.ndarray) -> np.ndarray:
    """(T, m) matrix of per-state normal densities at each observation."""
    # far-tail z*z may overflow to inf; exp then flushes the density to 0,
    # which the recursions report as NumericalUnderflow
    with np.errstate(over="ignore"):
        z = (obs[:, None] - params.mu[None, :]) / params.sigma[None, :]
        return np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * params.sigma[None, :])


def emission_density(params: HmmParams, j: int, x: float) -> float:
    """Normal density of state j (0-based) at x."""
    z = (x - params.mu[j]) / params.sigma[j]
    return math.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * params.sigma[j])


def emission_log_density(params: HmmParams, j: int, x: float) -> float:
    z = (x - params.mu[j]) / params.sigma[j]
    return -0.5 * z * z - math.log(params.sigma[j]) - 0.5 * math.log(2.0 * math.pi)


def forward_backward(params: HmmParams, obs: Sequence[float]) -> ForwardBackwardTables:
    """Scaled forward/backward recursions over the observation sequence."""
    x = np.asarray(obs, dtype=float)
    if x.size == 0:
        raise EmptyObservations("observation sequence is empty")
    dens = _density_matrix(params, x)
    T, m = dens.shape

    alpha_hat = np.empty((T, m))
    log_c = np.empty(T)
    w = params.delta * dens[0]
    for t in range(T):
        if t > 0:
            w = (alpha_hat[t - 1] @ params.gamma) * dens[t]
        c = w.sum()
        if c <= 0.0 or not math.isfinite(c):
            raise NumericalUnderflow(
                f"observation {t} has zero density under every state"
            )
        alpha_hat[t] = w / c
        log_c[t] = math.log(c)

    beta_hat = np.empty((T, m))
    beta_hat[T - 1] = 1.0
    for t in range(T - 2, -1, -1):
        b = params.gamma @ (dens[t + 1] * beta_hat[t + 1])
        beta_hat[t] = b * math.exp(-log_c[t + 1])

    return ForwardBackwardTables(
        alpha_hat=alpha_hat,
        beta_hat=beta_hat,
        log_c=log_c,
        log_likelihood=float(log_c.sum()),
    )


def log_likelihood(params: HmmParams, obs: Sequence[float]) -> float:
    """Log of the matrix-product likelihood, via the scaled forward recursion."""
    x = np.asarray(obs, dtype=float)
    if x.size == 0:
        raise EmptyObservations("observation sequence is empty")
    dens = _density_matrix(params, x)
    total = 0.0
    w = params.delta * dens[0]
    for t in range(x.size):
        if t > 0:
            w = (w @ params.gamma) * dens[t]
        c = w.sum()
        if c <= 0.0 or not math.isfinite(c):
            raise NumericalUnderflow(f"observation {t} has zero density under every state")
        w = w / c
        total += math.log(c)
    return total


def posterior_pairs(params: HmmParams, obs: Sequence[float],
                    tables: Optional[ForwardBackwardTables] = None) -> PosteriorTables:
    """Smoothed state and pair probabilities from the scaled tables.

    pair_prob[t, j, k] = alpha_hat[t, j] gamma[j, k] p_k(x_{t+1})
    beta_hat[t+1, k] / c_{t+1}, the scaled form of the joint posterior of
    consecutive hidden states.
    """
    x = np.asarray(obs, dtype=float)
    if tables is None:
        tables = forward_backward(params, x)
    dens = _density_matrix(params, x)
    T, m = dens.shape

    state = tables.alpha_hat * tables.beta_hat
    state /= state.sum(axis=1, keepdims=True)

    pair = np.empty((T - 1, m, m))
    for t in range(T - 1):
        joint = (tables.alpha_hat[t][:, None]
                 * params.gamma
                 * (dens[t + 1] * tables.beta_hat[t + 1])[None, :])
        pair[t] = joint * math.exp(-tables.log_c[t + 1])
    return PosteriorTables(state_prob=state, pair_prob=pair)


def default_init(obs: Sequence[float], m: int, gamma_diag: float = 0.8,
                 lloyd_rounds: int = 50) -> HmmParams:
    """Deterministic EM starting point.

    The transition matrix gets `gamma_diag` on the diagonal with the rest
    spread evenly off-diagonal; the initial distribution is uniform. Means
    come from quantile seeds refined by Lloyd assignment rounds (plain
    1-d k-means, no randomness), with per-group standard deviations;
    equal-count splits alone leave badly unbalanced clusters merged, which
    a short EM run cannot then separate.
    """
    x = np.sort(np.asarray(obs, dtype=float))
    if x.size < m:
        raise ValueError(f"need at least {m} observations to initialize {m} states")
    if not 0.0 < gamma_diag <= 1.0:
        raise ValueError("gamma_diag must lie in (0, 1]")
    if m == 1:
        gamma = np.ones((1, 1))
    else:
        off = (1.0 - gamma_diag) / (m - 1)
        gamma = np.full((m, m), off)
        np.fill_diagonal(gamma, gamma_diag)

    centers = np.quantile(x, (np.arange(m) + 0.5) / m)
    labels = np.zeros(x.size, dtype=int)
    for _ in range(lloyd_rounds):
        new_labels = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(m):
            if np.any(labels == j):
                centers[j] = x[labels == j].mean()
    floor = _sigma_floor(x)
    overall = max(float(np.std(x)), floor)
    mu = np.array([x[labels == j].mean() if np.any(labels == j) else centers[j]
                   for j in range(m)])
    sigma = np.array([max(x[labels == j].std(), floor) if np.sum(labels == j) > 1
                      else overall / m for j in range(m)])
    return HmmParams(delta=np.full(m, 1.0 / m), gamma=gamma, mu=mu, sigma=sigma)


def _sigma_floor(obs: np.ndarray) -> float:
    sd = float(np.std(obs))
    return 1e-6 * sd if sd > 0 else 1e-12


def baum_welch(obs: Sequence[float], init: HmmParams, max_iters: int = 15,
               tol: float = 0.0, update_delta: bool = True) -> FitReport:
    """Fit by EM: forward/backward posteriors, then closed-form updates.

    Runs exactly `max_iters` iterations unless `tol` > 0 and the
    log-likelihood gain drops below it. With a single observation sequence
    the delta update (posterior of the first state) is of limited value;
    pass update_delta=False to keep the initial delta fixed.

    States with posterior mass below DEGENERATE_MASS are frozen at their
    current parameters and reported in the fit warnings.
    """
    x = np.asarray(obs, dtype=float)
    if x.size == 0:
        raise EmptyObservations("observation sequence is empty")
    if x.size < init.m:
        raise ValueError("need at least m observations")
    floor = _sigma_floor(x)

    params = init
    trace: list[float] = []
    warnings: list[str] = []
    iterations = 0
    for it in range(max_iters):
        tables = forward_backward(params, x)
        post = posterior_pairs(params, x, tables)
        trace.append(tables.log_likelihood)
        iterations = it + 1

        mass = post.state_prob.sum(axis=0)
        frozen = mass < DEGENERATE_MASS
        if frozen.any():
            warnings.append(
                f"iteration {it + 1}: state(s) {np.flatnonzero(frozen).tolist()} "
                f"degenerate (posterior mass < {DEGENERATE_MASS:g}); frozen"
            )

        delta = post.state_prob[0] if update_delta else params.delta
        pair_sum = post.pair_prob.sum(axis=0)
        out_mass = post.state_prob[:-1].sum(axis=0)
        gamma = params.gamma.copy()
        ok = ~frozen & (out_mass > 0)
        gamma[ok] = pair_sum[ok] / out_mass[ok, None]
        gamma[ok] /= gamma[ok].sum(axis=1, keepdims=True)

        mu = params.mu.copy()
        sigma = params.sigma.copy()
        mu[~frozen] = (post.state_prob[:, ~frozen] * x[:, None]).sum(axis=0) / mass[~frozen]
        var = (post.state_prob[:, ~frozen] * (x[:, None] - mu[None, ~frozen]) ** 2).sum(axis=0)
        sigma[~frozen] = np.maximum(np.sqrt(var / mass[~frozen]), floor)

        params = HmmParams(delta=delta, gamma=gamma, mu=mu, sigma=sigma)
        if tol > 0.0 and len(trace) >= 2 and trace[-1] - trace[-2] < tol:
            break

    order = tuple(int(i) for i in np.argsort(params.mu, kind="stable"))
    return FitReport(
        params=params.permuted(order),
        loglik_trace=trace,
        iterations=iterations,
        state_order=order,
        warnings=warnings,
    )


def stationary_distribution(gamma: np.ndarray) -> np.ndarray:
    """Stationary row vector of a row-stochastic matrix (pi @ gamma = pi)."""
    gamma = np.asarray(gamma, dtype=float)
    m = gamma.shape[0]
    a = np.vstack([gamma.T - np.eye(m), np.ones(m)])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def pseudo_residuals(params: HmmParams, obs: Sequence[float],
                     variant: ResidualVariant = ResidualVariant.CONDITIONAL) -> PseudoResiduals:
    """Uniform residuals u_t = Pr(X(t) <= x_t) under the fitted model.

    CONDITIONAL conditions each observation on all the others: the mixture
    weights are the posterior state probabilities computed with x_t removed,
    proportional to (alpha_hat[t-1] @ gamma) * beta_hat[t]. MARGINAL uses
    the stationary distribution of gamma as fixed weights.
    """
    x = np.asarray(obs, dtype=float)
    if x.size == 0:
        raise EmptyObservations("observation sequence is empty")
    T = x.size
    cdf = norm.cdf((x[:, None] - params.mu[None, :]) / params.sigma[None, :])

    if variant is ResidualVariant.MARGINAL:
        weights = np.tile(stationary_distribution(params.gamma), (T, 1))
    else:
        tables = forward_backward(params, x)
        weights = np.empty((T, params.m))
        weights[0] = params.delta * tables.beta_hat[0]
        if T > 1:
            pred = tables.alpha_hat[:-1] @ params.gamma
            weights[1:] = pred * tables.beta_hat[1:]
        weights /= weights.sum(axis=1, keepdims=True)

    u = np.clip((weights * cdf).sum(axis=1), 0.0, 1.0)
    return PseudoResiduals(u=u, variant=variant)


def residual_histogram(residuals: PseudoResiduals, bins: int = 10) -> np.ndarray:
    """Counts over equal-width bins of [0, 1]; u = 1 falls in the last bin."""
    if bins < 2:
        raise ValueError("need at least 2 bins")
    counts, _ = np.histogram(residuals.u, bins=bins, range=(0.0, 1.0))
    return counts
