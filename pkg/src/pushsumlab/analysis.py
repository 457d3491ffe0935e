"""Metrics, convergence-bound evaluators, and rate fitting.

The bound evaluators implement the finite-time guarantees for the four
algorithms as stated, term by term, with no re-derivation: callers
supply the contraction pair (eta, mu), the gradient bound G, and the
initial data, and get back the certified ceiling for the chosen error
notion. Geometric sums use the 0^0 = 1 convention so the rank-one case
mu = 0 keeps its surviving tau = 0 terms.

Everything here is pure post-processing of recorded traces; nothing
re-runs dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .optim import GradientOracle, Objective, StepSchedule
from .pushsum import Trace

__all__ = [
    "consensus_error",
    "consensus_error_series",
    "lyapunov_series",
    "running_average_iterates",
    "BoundInputs",
    "bound_inputs_from_trace",
    "bound_subgradient_push_fixed",
    "bound_subgradient_push_varying",
    "bound_per_agent",
    "bound_heterogeneous",
    "k2_constant",
    "estimate_k1",
    "SgpConstants",
    "sgp_constants",
    "bound_sgp",
    "RateFit",
    "fit_rate",
    "verify_descent_recursion",
    "RunMetrics",
    "compute_metrics",
]


# ---------------------------------------------------------------------------
# trace-level series


def consensus_error(trace: Trace, t: int) -> float:
    """max_i ||z_i(t) - <z(t)>|| where <z> is the mass-weighted average."""
    k = trace.index_of(t)
    z = trace.zs[k]
    center = trace.z_weighted[k]
    return float(np.max(np.linalg.norm(z - center[np.newaxis, :], axis=1)))


def consensus_error_series(trace: Trace) -> np.ndarray:
    z = trace.zs
    center = trace.z_weighted[:, np.newaxis, :]
    return np.max(np.linalg.norm(z - center, axis=2), axis=1)


def lyapunov_series(trace: Trace, z_star: np.ndarray) -> np.ndarray:
    """||<z(t)> - z*||^2 for every recorded state."""
    z_star = np.asarray(z_star, dtype=float).reshape(trace.d)
    diff = trace.z_weighted - z_star[np.newaxis, :]
    return np.sum(diff * diff, axis=1)


def running_average_iterates(trace: Trace) -> tuple[np.ndarray, np.ndarray]:
    """Step-size-weighted running averages of the ratios.

    Returns
    -------
    net : (steps, d)
        r(t) = sum_{tau<=t} alpha(tau) <z(tau)> / sum alpha(tau).
    per_agent : (steps, n, d)
        Same weighting applied to each agent's own ratio trajectory.

    Only the first ``steps`` states enter: the final state has no step
    size attached to it.
    """
    if trace.alphas is None:
        raise ValueError("trace has no step sizes; not an optimizer trace")
    alphas = np.asarray(trace.alphas, dtype=float)
    steps = trace.steps
    zw = trace.z_weighted[:steps]
    zs = trace.zs[:steps]
    wsum = np.cumsum(alphas)
    net = np.cumsum(alphas[:, np.newaxis] * zw, axis=0) / wsum[:, np.newaxis]
    per_agent = np.cumsum(alphas[:, np.newaxis, np.newaxis] * zs, axis=0) / wsum[
        :, np.newaxis, np.newaxis
    ]
    return net, per_agent


# ---------------------------------------------------------------------------
# bound inputs


@dataclass(frozen=True)
class BoundInputs:
    """Everything the bound evaluators consume.

    eta is a positive lower bound on the mass weights y along the run
    (a-priori worst case or the realized minimum); mu is the geometric
    mixing rate in [0, 1); grad_bound is the uniform subgradient norm
    bound G. The initial arrays are taken from the trace, z_star from
    the objective.
    """

    n: int
    grad_bound: float
    eta: float
    mu: float
    z_bar0: np.ndarray
    z0: np.ndarray
    x0: np.ndarray
    g0: np.ndarray | None
    z_star: np.ndarray
    horizon: int | None = None
    alphas: np.ndarray | None = None
    lambda_bar: float | None = None
    gamma_bar: float | None = None
    k1: float | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (self.grad_bound > 0.0):
            raise ValueError("grad_bound must be positive")
        if not (self.eta > 0.0):
            raise ValueError("eta must be positive")
        if not (0.0 <= self.mu < 1.0):
            raise ValueError(f"mu must lie in [0, 1), got {self.mu}")

    def sum_initial_spread(self) -> float:
        """sum_i ||z_bar(0) - z_i(0)||."""
        return float(np.sum(np.linalg.norm(self.z0 - self.z_bar0[np.newaxis, :], axis=1)))

    def sum_agent_spread(self, k: int) -> float:
        """sum_i ||z_k(0) - z_i(0)||."""
        return float(np.sum(np.linalg.norm(self.z0 - self.z0[k][np.newaxis, :], axis=1)))

    def initial_gap_sq(self) -> float:
        return float(np.sum((self.z_bar0 - self.z_star) ** 2))

    def sum_corrected_init(self, alpha0: float) -> float:
        """sum_i ||x_i(0) - alpha(0) g_i(0)||."""
        if self.g0 is None:
            raise ValueError("bound needs the initial gradient rows g0")
        return float(np.sum(np.linalg.norm(self.x0 - alpha0 * self.g0, axis=1)))

    def sum_x0_norm(self) -> float:
        return float(np.sum(np.linalg.norm(self.x0, axis=1)))


def bound_inputs_from_trace(
    trace: Trace,
    obj: Objective,
    mu: float,
    eta: float | None = None,
    grad_bound: float | None = None,
    k1: float | None = None,
) -> BoundInputs:
    """Assemble bound inputs from a recorded run.

    Defaults are the realized quantities: eta is the minimum recorded y
    and grad_bound the largest applied gradient-row norm. mu has no
    realized analogue and must be supplied (typically mu_ub from
    theoretical_constants).
    """
    if eta is None:
        eta = float(trace.ys.min())
    if grad_bound is None:
        if trace.gs is None:
            grad_bound = obj.grad_norm_bound
        else:
            grad_bound = float(np.max(np.linalg.norm(trace.gs, axis=2)))
        if grad_bound is None or grad_bound <= 0.0:
            raise ValueError("cannot infer a positive gradient bound; pass grad_bound")
    z0 = trace.zs[0]
    g0 = np.stack([obj.subgradient(i, z0[i]) for i in range(trace.n)])
    z_star, _ = obj.optimum()
    return BoundInputs(
        n=trace.n,
        grad_bound=grad_bound,
        eta=eta,
        mu=mu,
        z_bar0=trace.z_weighted[0],
        z0=z0,
        x0=trace.xs[0],
        g0=g0,
        z_star=z_star,
        horizon=trace.steps,
        alphas=None if trace.alphas is None else np.asarray(trace.alphas, dtype=float),
        lambda_bar=obj.lambda_bar,
        gamma_bar=obj.gamma_bar,
        k1=k1,
    )


# ---------------------------------------------------------------------------
# deterministic-algorithm bounds


def _geometric_sums(alphas: np.ndarray, mu: float, t: int) -> tuple[float, float, float, float]:
    """The four weighted sums the varying-step bounds share.

    Returns (A, A2, S1, S2) with A = sum_{tau<=t} alpha, A2 the same for
    alpha^2, S1 = sum_{tau<t} alpha(tau) mu^tau and
    S2 = sum_{tau<t} alpha(tau) (alpha(0) mu^(tau/2) + alpha(ceil(tau/2))).
    0^0 = 1 applies inside S1 and S2.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    a = alphas[: t + 1]
    if len(a) != t + 1:
        raise ValueError(f"need step sizes up to t={t}, have {len(alphas)}")
    big_a = float(np.sum(a))
    big_a2 = float(np.sum(a * a))
    s1 = 0.0
    s2 = 0.0
    for tau in range(t):
        s1 += a[tau] * mu**tau
        s2 += a[tau] * (a[0] * mu ** (tau / 2.0) + alphas[math.ceil(tau / 2)])
    return big_a, big_a2, s1, s2


def _varying_bound_series(inputs: BoundInputs, het: bool) -> np.ndarray:
    """All varying-step ceilings for t = 0 .. horizon-1 in one pass.

    Same quantities as the scalar functions, evaluated with cumulative
    sums so the whole series costs O(T) instead of O(T^2).
    """
    if inputs.alphas is None:
        raise ValueError("varying-step bound needs the step sizes")
    if inputs.horizon is None or inputs.horizon < 1:
        raise ValueError("bound series needs the horizon")
    g, eta, mu, n = inputs.grad_bound, inputs.eta, inputs.mu, inputs.n
    steps = inputs.horizon
    a = np.asarray(inputs.alphas, dtype=float)[:steps]
    tau = np.arange(steps)
    big_a = np.cumsum(a)
    big_a2 = np.cumsum(a * a)
    s1 = np.concatenate(([0.0], np.cumsum(a * mu**tau)[:-1]))
    half = a[np.ceil(tau / 2.0).astype(int)]
    s2 = np.concatenate(([0.0], np.cumsum(a * (a[0] * mu ** (tau / 2.0) + half))[:-1]))
    alpha0 = float(a[0])
    head = (inputs.initial_gap_sq() + g * g * big_a2) / (2.0 * big_a)
    if het:
        head = head + 2.0 * g * alpha0 * inputs.sum_initial_spread() / (n * big_a)
        if mu == 0.0:
            s3 = np.concatenate(([0.0], np.cumsum(a[1:] * a[:-1])))
            return head + (4.0 * n * g * g / eta) * (s3 / big_a)
        return (
            head
            + (32.0 * g * inputs.sum_x0_norm() / eta) * (s1 / big_a)
            + (32.0 * n * g * g / (eta * mu * (1.0 - mu))) * (s2 / big_a)
        )
    return (
        head
        + 2.0 * g * alpha0 * inputs.sum_initial_spread() / (n * big_a)
        + (32.0 * g / eta) * (s1 / big_a) * inputs.sum_corrected_init(alpha0)
        + (32.0 * n * g * g / (eta * (1.0 - mu))) * (s2 / big_a)
    )


def bound_subgradient_push_fixed(inputs: BoundInputs) -> float:
    """Gap ceiling for the horizon-tuned constant step alpha = 1/sqrt(T),
    applied to f of the plain running average over the first T states."""
    if inputs.horizon is None or inputs.horizon < 1:
        raise ValueError("fixed-step bound needs the horizon T")
    big_t = float(inputs.horizon)
    g, eta, mu, n = inputs.grad_bound, inputs.eta, inputs.mu, inputs.n
    alpha0 = 1.0 / math.sqrt(big_t)
    return (
        2.0 * g * inputs.sum_initial_spread() / (n * big_t)
        + (inputs.initial_gap_sq() + g * g) / (2.0 * math.sqrt(big_t))
        + 32.0 * g * inputs.sum_corrected_init(alpha0) / (eta * (1.0 - mu) * big_t)
        + 32.0 * n * g * g / (eta * (1.0 - mu) * math.sqrt(big_t))
    )


def bound_subgradient_push_varying(inputs: BoundInputs, t: int) -> float:
    """Gap ceiling at time t for an arbitrary positive step sequence,
    applied to f of the alpha-weighted running average up to t."""
    if inputs.alphas is None:
        raise ValueError("varying-step bound needs the step sizes")
    g, eta, mu, n = inputs.grad_bound, inputs.eta, inputs.mu, inputs.n
    big_a, big_a2, s1, s2 = _geometric_sums(inputs.alphas, mu, t)
    alpha0 = float(inputs.alphas[0])
    return (
        (inputs.initial_gap_sq() + g * g * big_a2) / (2.0 * big_a)
        + 2.0 * g * alpha0 * inputs.sum_initial_spread() / (n * big_a)
        + (32.0 * g / eta) * (s1 / big_a) * inputs.sum_corrected_init(alpha0)
        + (32.0 * n * g * g / (eta * (1.0 - mu))) * (s2 / big_a)
    )


def bound_per_agent(inputs: BoundInputs, k: int, variant: str = "fixed", t: int | None = None) -> float:
    """Per-agent version: same ceiling applied to agent k's own running
    average, with the initial-spread term split between the network
    average and agent k's start."""
    if not (0 <= k < inputs.n):
        raise ValueError(f"agent index {k} out of range")
    g, eta, mu, n = inputs.grad_bound, inputs.eta, inputs.mu, inputs.n
    spread = inputs.sum_initial_spread() + inputs.sum_agent_spread(k)
    if variant == "fixed":
        if inputs.horizon is None or inputs.horizon < 1:
            raise ValueError("fixed-step bound needs the horizon T")
        big_t = float(inputs.horizon)
        alpha0 = 1.0 / math.sqrt(big_t)
        return (
            g * spread / (n * big_t)
            + (inputs.initial_gap_sq() + g * g) / (2.0 * math.sqrt(big_t))
            + 32.0 * g * inputs.sum_corrected_init(alpha0) / (eta * (1.0 - mu) * big_t)
            + 32.0 * n * g * g / (eta * (1.0 - mu) * math.sqrt(big_t))
        )
    if variant == "varying":
        if inputs.alphas is None:
            raise ValueError("varying-step bound needs the step sizes")
        if t is None:
            raise ValueError("varying-step bound needs t")
        big_a, big_a2, s1, s2 = _geometric_sums(inputs.alphas, mu, t)
        alpha0 = float(inputs.alphas[0])
        return (
            (inputs.initial_gap_sq() + g * g * big_a2) / (2.0 * big_a)
            + g * alpha0 * spread / (n * big_a)
            + (32.0 * g / eta) * (s1 / big_a) * inputs.sum_corrected_init(alpha0)
            + (32.0 * n * g * g / (eta * (1.0 - mu))) * (s2 / big_a)
        )
    raise ValueError(f"unknown variant {variant!r}; expected 'fixed' or 'varying'")


def bound_heterogeneous(
    inputs: BoundInputs, variant: str = "fixed", k: int | None = None, t: int | None = None
) -> float:
    """Gap ceiling for the switching algorithm, any switching signal.

    The generic form carries an extra 1/mu and replaces the corrected
    initial sum with sum_i ||x_i(0)||. At mu = 0 the generic form is
    vacuous, and the dedicated rank-one-case ceiling is used instead
    (single mixing step erases disagreement, so the network term
    collapses to a neighboring-step-size sum).
    """
    if variant not in ("fixed", "varying"):
        raise ValueError(f"unknown variant {variant!r}; expected 'fixed' or 'varying'")
    g, eta, mu, n = inputs.grad_bound, inputs.eta, inputs.mu, inputs.n
    if k is None:
        spread_term_scale = 2.0
        spread = inputs.sum_initial_spread()
    else:
        if not (0 <= k < inputs.n):
            raise ValueError(f"agent index {k} out of range")
        spread_term_scale = 1.0
        spread = inputs.sum_initial_spread() + inputs.sum_agent_spread(k)

    if variant == "fixed":
        if inputs.horizon is None or inputs.horizon < 1:
            raise ValueError("fixed-step bound needs the horizon T")
        big_t = float(inputs.horizon)
        head = spread_term_scale * g * spread / (n * big_t) + (
            inputs.initial_gap_sq() + g * g
        ) / (2.0 * math.sqrt(big_t))
        if mu == 0.0:
            return head + 4.0 * n * g * g / (eta * math.sqrt(big_t))
        return (
            head
            + 32.0 * g * inputs.sum_x0_norm() / (eta * (1.0 - mu) * big_t)
            + 32.0 * n * g * g / (eta * mu * (1.0 - mu) * math.sqrt(big_t))
        )

    if inputs.alphas is None:
        raise ValueError("varying-step bound needs the step sizes")
    if t is None:
        raise ValueError("varying-step bound needs t")
    big_a, big_a2, s1, s2 = _geometric_sums(inputs.alphas, mu, t)
    alpha0 = float(inputs.alphas[0])
    head = (inputs.initial_gap_sq() + g * g * big_a2) / (2.0 * big_a) + (
        spread_term_scale * g * alpha0 * spread / (n * big_a)
    )
    if mu == 0.0:
        a = inputs.alphas[: t + 1]
        s3 = float(np.sum(a[1:] * a[:-1]))
        return head + (4.0 * n * g * g / eta) * (s3 / big_a)
    return (
        head
        + (32.0 * g * inputs.sum_x0_norm() / eta) * (s1 / big_a)
        + (32.0 * n * g * g / (eta * mu * (1.0 - mu))) * (s2 / big_a)
    )


# ---------------------------------------------------------------------------
# stochastic-algorithm constants and bounds


def k2_constant(mu: float) -> float:
    """K2 = -mu^(-1/ln mu) / ln mu, the ceiling of t mu^t over t >= 0."""
    if not (0.0 < mu < 1.0):
        raise ValueError(f"mu must lie strictly inside (0, 1), got {mu}")
    log_mu = math.log(mu)
    return -(mu ** (-1.0 / log_mu)) / log_mu


def estimate_k1(
    obj: Objective,
    oracle: GradientOracle,
    x1: np.ndarray,
    alpha1: float,
    draws: int = 1000,
) -> tuple[float, float]:
    """Monte-Carlo estimate of K1 = E[sum_k ||x_k(1) + alpha(1) g~_k(1)||].

    Uses oracle draw indices 1..draws at t = 1 (draw 0 belongs to the
    run itself). Returns (mean, standard error); with zero noise bounds
    the standard error is exactly zero.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    x1 = np.asarray(x1, dtype=float)
    if x1.ndim == 1:
        x1 = x1[:, np.newaxis]
    n = x1.shape[0]
    vals = np.empty(draws)
    for m in range(draws):
        total = 0.0
        for i in range(n):
            gt = oracle.gradient(obj, i, x1[i], 1, draw=m + 1)
            total += float(np.linalg.norm(x1[i] + alpha1 * gt))
        vals[m] = total
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return mean, stderr


@dataclass(frozen=True)
class SgpConstants:
    k1: float
    k2: float
    c: float


def sgp_constants(inputs: BoundInputs) -> SgpConstants:
    """The constant triple (K1, K2, C) entering the stochastic bounds.

    C = 4 + 128 K1 K2 lambda_bar / (G eta mu^2)
          + 512 n (K2 + 1) / (eta (1 - mu) mu).

    Requires mu strictly inside (0, 1) and a K1 estimate in the inputs
    (see estimate_k1).
    """
    if not (0.0 < inputs.mu < 1.0):
        raise ValueError(f"sgp constants need mu in (0, 1), got {inputs.mu}")
    if inputs.k1 is None:
        raise ValueError("inputs.k1 missing; estimate it first (estimate_k1)")
    if inputs.lambda_bar is None:
        raise ValueError("sgp constants need lambda_bar (strongly convex objective)")
    g, eta, mu, n = inputs.grad_bound, inputs.eta, inputs.mu, inputs.n
    k2 = k2_constant(mu)
    c = (
        4.0
        + 128.0 * inputs.k1 * k2 * inputs.lambda_bar / (g * eta * mu * mu)
        + 512.0 * n * (k2 + 1.0) / (eta * (1.0 - mu) * mu)
    )
    return SgpConstants(k1=float(inputs.k1), k2=k2, c=c)


def bound_sgp(inputs: BoundInputs, t: int, which: str = "state") -> float:
    """Expected-error ceilings for the stochastic algorithm under the
    strongly-convex step rule alpha(t) = 2 / (lambda_bar t).

    which:
      "state"         E ||z_i(t) - z*||^2            (any agent, t >= 2)
      "f_agent"       E f(z_i(t)) - f*               (any agent, t >= 2)
      "f_average"     E f(mean_k x_k(t)) - f*        (t >= 1)
      "state_average" E ||<z(t)> - z*||^2            (t >= 1)
    """
    sc = sgp_constants(inputs)
    g, eta, mu, n = inputs.grad_bound, inputs.eta, inputs.mu, inputs.n
    lam = inputs.lambda_bar
    if which in ("f_agent", "f_average"):
        if inputs.gamma_bar is None:
            raise ValueError("function-value bounds need gamma_bar (smooth objective)")
        gam = inputs.gamma_bar

    if which == "state":
        if t < 2:
            raise ValueError(f"state bound needs t >= 2, got {t}")
        return (
            8.0 * sc.c * g * g / (lam * lam * t)
            + 128.0 * n * g / (eta * (1.0 - mu) * lam * (t - 1.0))
            + (32.0 * sc.k1 / eta) * mu ** (t - 2.0)
            + (64.0 * n * g / (eta * (1.0 - mu) * lam)) * mu ** ((t - 1.0) / 2.0)
        )
    if which == "f_agent":
        if t < 2:
            raise ValueError(f"f_agent bound needs t >= 2, got {t}")
        return (
            4.0 * sc.c * g * g * gam / (lam * lam * t)
            + 64.0 * n * g * gam / (eta * (1.0 - mu) * lam * (t - 1.0))
            + (16.0 * gam * sc.k1 / eta) * mu ** (t - 2.0)
            + (32.0 * n * g * gam / (eta * (1.0 - mu) * lam)) * mu ** ((t - 1.0) / 2.0)
        )
    if which == "f_average":
        if t < 1:
            raise ValueError(f"f_average bound needs t >= 1, got {t}")
        return 2.0 * sc.c * g * g * gam / (lam * lam * (t + 1.0))
    if which == "state_average":
        if t < 1:
            raise ValueError(f"state_average bound needs t >= 1, got {t}")
        return 4.0 * sc.c * g * g / (lam * lam * t)
    raise ValueError(f"unknown bound selector {which!r}")


# ---------------------------------------------------------------------------
# rate fitting


@dataclass(frozen=True)
class RateFit:
    """Least-squares rate fits on the tail of a positive series.

    power_slope is d log(value) / d log(t) (a -0.5 slope means value
    behaves like t^-0.5); geo_rate is the per-step factor exp(d log(value)/dt)
    for exponential decay claims. r2 values gate meaningfulness: below
    0.9 the corresponding slope should not be quoted as a rate.
    """

    power_slope: float
    power_r2: float
    geo_rate: float
    geo_r2: float
    n_used: int
    n_filtered: int


def _linfit(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), r2


def fit_rate(
    values: Sequence[float] | np.ndarray,
    times: Sequence[float] | np.ndarray | None = None,
    tail_fraction: float = 0.5,
    min_points: int = 20,
) -> RateFit:
    """Fit power-law and geometric rates on the tail of a series.

    The last ``tail_fraction`` of samples is used; entries with
    non-positive value or non-positive time are filtered out (their
    count is reported) because both fits work in log space. Fewer than
    ``min_points`` surviving points is an error.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValueError("values must be one-dimensional")
    if times is None:
        times = np.arange(len(values), dtype=float)
    else:
        times = np.asarray(times, dtype=float)
        if times.shape != values.shape:
            raise ValueError("times must match values in length")
    if not (0.0 < tail_fraction <= 1.0):
        raise ValueError("tail_fraction must lie in (0, 1]")
    start = int(math.floor(len(values) * (1.0 - tail_fraction)))
    v = values[start:]
    t = times[start:]
    keep = (v > 0.0) & (t > 0.0)
    n_filtered = int(np.sum(~keep))
    v, t = v[keep], t[keep]
    if len(v) < min_points:
        raise ValueError(
            f"rate fit needs at least {min_points} usable points in the tail, got {len(v)}"
        )
    log_v = np.log(v)
    power_slope, power_r2 = _linfit(np.log(t), log_v)
    geo_slope, geo_r2 = _linfit(t, log_v)
    return RateFit(
        power_slope=power_slope,
        power_r2=power_r2,
        geo_rate=math.exp(geo_slope),
        geo_r2=geo_r2,
        n_used=len(v),
        n_filtered=n_filtered,
    )


# ---------------------------------------------------------------------------
# exact-recursion verification


def verify_descent_recursion(trace: Trace) -> float:
    """Max violation of the exact mass-average recursion
    <z(t+1)> = <z(t)> - (alpha(t)/kappa) sum_i g_i(t).

    Holds pathwise for all four algorithms (for the stochastic one with
    the sampled gradients as recorded), because every mixing matrix is
    column stochastic. kappa equals n under the standard y(0) = 1 start.
    """
    if trace.gs is None or trace.alphas is None:
        raise ValueError("trace has no recorded gradients; not an optimizer trace")
    zw = trace.z_weighted
    worst = 0.0
    for k in range(trace.steps):
        predicted = zw[k] - (trace.alphas[k] / trace.kappa) * trace.gs[k].sum(axis=0)
        worst = max(worst, float(np.max(np.abs(zw[k + 1] - predicted))))
    return worst


# ---------------------------------------------------------------------------
# aggregated metrics


@dataclass
class RunMetrics:
    """Per-step series and realized constants for one recorded run.

    f-gap and varying-bound series have one entry per step (the state a
    step size is attached to); consensus and Lyapunov series cover every
    recorded state including the last.
    """

    times: np.ndarray
    consensus: np.ndarray
    lyapunov: np.ndarray | None
    f_gap_avg: np.ndarray | None
    f_gap_agent: np.ndarray | None
    agent: int
    bound_fixed: float | None
    bound_varying: np.ndarray | None
    realized_grad_bound: float | None
    realized_eta: float
    realized_y_max: float
    z_star: np.ndarray | None
    f_star: float | None


def compute_metrics(
    trace: Trace,
    obj: Objective | None = None,
    schedule: StepSchedule | None = None,
    agent: int = 0,
    mu: float | None = None,
    eta: float | None = None,
) -> RunMetrics:
    """Post-process a trace into the standard metric series.

    For optimizer traces with a known optimum, running-average f-gaps
    and (when mu is supplied) the matching bound series are included.
    Bounds follow the algorithm recorded in the trace; the stochastic
    algorithm gets no per-run bound columns here since its guarantees
    are expectations (see bound_sgp).
    """
    if not (0 <= agent < trace.n):
        raise ValueError(f"agent index {agent} out of range")
    realized_eta = float(trace.ys.min())
    realized_y_max = float(trace.ys.max())
    cons = consensus_error_series(trace)
    times = trace.times()

    lyap = None
    f_gap_avg = None
    f_gap_agent = None
    bound_fixed = None
    bound_varying = None
    realized_g = None
    z_star = None
    f_star = None

    if trace.gs is not None:
        realized_g = float(np.max(np.linalg.norm(trace.gs, axis=2)))

    if obj is not None:
        z_star, f_star = obj.optimum()
        lyap = lyapunov_series(trace, z_star)
        if trace.alphas is not None:
            net, per_agent = running_average_iterates(trace)
            f_gap_avg = np.array([obj.value(v) - f_star for v in net])
            f_gap_agent = np.array([obj.value(v) - f_star for v in per_agent[:, agent]])
            if mu is not None and trace.algorithm != "sgp":
                inputs = bound_inputs_from_trace(trace, obj, mu=mu, eta=eta)
                het = trace.algorithm in ("heterogeneous", "push_subgradient")
                bound_varying = _varying_bound_series(inputs, het=het)
                if schedule is not None and schedule.kind == "fixed_inv_sqrt":
                    if het:
                        bound_fixed = bound_heterogeneous(inputs, "fixed")
                    else:
                        bound_fixed = bound_subgradient_push_fixed(inputs)

    return RunMetrics(
        times=times,
        consensus=cons,
        lyapunov=lyap,
        f_gap_avg=f_gap_avg,
        f_gap_agent=f_gap_agent,
        agent=agent,
        bound_fixed=bound_fixed,
        bound_varying=bound_varying,
        realized_grad_bound=realized_g,
        realized_eta=realized_eta,
        realized_y_max=realized_y_max,
        z_star=z_star,
        f_star=f_star,
    )
