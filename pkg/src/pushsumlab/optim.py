"""Distributed subgradient optimization on top of push-sum mixing.

All four algorithms share the linear mixing pair (x, y) from the
push-sum engine and differ only in where the gradient correction enters
the x update:

* subgradient_push: x <- W (x - alpha g), correct locally, then mix.
* push_subgradient: x <- W x - alpha g, mix, then correct locally.
* heterogeneous: each agent picks one of the two orders per step via a
  0/1 switching signal sigma_i(t); sigma identically 1 or 0 recovers
  the two algorithms above exactly.
* sgp: subgradient_push driven by a stochastic first-order oracle with
  bounded zero-mean noise, time starting at t = 1.

Gradients are always evaluated at the ratios z = x / y, and the mass
average sum_i x_i / kappa obeys the exact recursion
<z(t+1)> = <z(t)> - (alpha(t)/kappa) sum_i g_i(t) regardless of graph,
weights, or switching; that recursion is what the verifier checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graphs import GraphSequence
from .pushsum import (
    DEGENERATE_Y,
    DegenerateStateError,
    NetworkState,
    Trace,
    ratio,
    resolve_weight_sequence,
)
from .weights import WeightMatrix

__all__ = [
    "ALGORITHMS",
    "OBJECTIVE_KINDS",
    "Objective",
    "absolute_deviation_objective",
    "quadratic_objective",
    "huber_objective",
    "subgradient",
    "StepSchedule",
    "fixed_inv_sqrt",
    "harmonic",
    "sgp_strong",
    "constant_step",
    "stepsize",
    "SwitchingSignal",
    "all_ones_signal",
    "all_zeros_signal",
    "bernoulli_signal",
    "alternating_signal",
    "table_signal",
    "GradientOracle",
    "stochastic_gradient",
    "subgradient_push_step",
    "push_subgradient_step",
    "heterogeneous_step",
    "sgp_step",
    "weighted_average_state",
    "run_optimizer",
]

ALGORITHMS = ("subgradient_push", "push_subgradient", "heterogeneous", "sgp")
OBJECTIVE_KINDS = ("abs", "quadratic", "huber")


# ---------------------------------------------------------------------------
# objectives


@dataclass(frozen=True)
class Objective:
    """Separable objective f(z) = (1/n) sum_i f_i(z) with one component
    per agent, each anchored at a point a_i.

    kinds
    -----
    abs       f_i(z) = sum_k |z_k - a_ik|            (nonsmooth, G = sqrt(d))
    quadratic f_i(z) = (s_i / 2) ||z - a_i||^2       (smooth, strongly convex)
    huber     f_i(z) = sum_k h_delta(z_k - a_ik)     (smooth, G = delta sqrt(d))
    """

    kind: str
    anchors: np.ndarray
    scales: np.ndarray
    delta: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in OBJECTIVE_KINDS:
            raise ValueError(f"unknown objective kind {self.kind!r}")
        a = np.asarray(self.anchors, dtype=float)
        if a.ndim == 1:
            a = a[:, np.newaxis]
        if a.ndim != 2 or not np.all(np.isfinite(a)):
            raise ValueError("anchors must be a finite (n, d) array")
        s = np.asarray(self.scales, dtype=float)
        if s.shape != (a.shape[0],) or np.any(s <= 0.0) or not np.all(np.isfinite(s)):
            raise ValueError("scales must be a strictly positive (n,) array")
        if self.kind == "huber":
            if self.delta is None or not (self.delta > 0.0):
                raise ValueError("huber objective needs delta > 0")
        object.__setattr__(self, "anchors", a)
        object.__setattr__(self, "scales", s)

    @property
    def n(self) -> int:
        return self.anchors.shape[0]

    @property
    def d(self) -> int:
        return self.anchors.shape[1]

    @property
    def smooth(self) -> bool:
        return self.kind in ("quadratic", "huber")

    @property
    def strong_convexity(self) -> np.ndarray | None:
        """Per-agent strong convexity moduli, or None if absent."""
        if self.kind == "quadratic":
            return self.scales.copy()
        return None

    @property
    def smoothness(self) -> np.ndarray | None:
        """Per-agent gradient Lipschitz constants, or None (abs)."""
        if self.kind == "quadratic":
            return self.scales.copy()
        if self.kind == "huber":
            return np.ones(self.n)
        return None

    @property
    def lambda_bar(self) -> float | None:
        sc = self.strong_convexity
        return None if sc is None else float(sc.mean())

    @property
    def gamma_bar(self) -> float | None:
        sm = self.smoothness
        return None if sm is None else float(sm.mean())

    @property
    def grad_norm_bound(self) -> float | None:
        """A-priori uniform bound on component subgradient norms, where
        one exists (quadratics are unbounded: use the realized maximum)."""
        if self.kind == "abs":
            return math.sqrt(self.d)
        if self.kind == "huber":
            return float(self.delta) * math.sqrt(self.d)
        return None

    def component_value(self, i: int, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float).reshape(self.d)
        r = z - self.anchors[i]
        if self.kind == "abs":
            return float(np.sum(np.abs(r)))
        if self.kind == "quadratic":
            return float(0.5 * self.scales[i] * np.dot(r, r))
        delta = float(self.delta)
        small = np.abs(r) <= delta
        quad = 0.5 * r[small] ** 2
        lin = delta * (np.abs(r[~small]) - 0.5 * delta)
        return float(np.sum(quad) + np.sum(lin))

    def value(self, z: np.ndarray) -> float:
        return float(np.mean([self.component_value(i, z) for i in range(self.n)]))

    def subgradient(self, i: int, z: np.ndarray) -> np.ndarray:
        """A subgradient of f_i at z; at kinks of abs the minimum-norm
        element (zero) is returned, so sign(0) = 0 is deliberate."""
        z = np.asarray(z, dtype=float).reshape(self.d)
        r = z - self.anchors[i]
        if self.kind == "abs":
            return np.sign(r)
        if self.kind == "quadratic":
            return self.scales[i] * r
        return np.clip(r, -float(self.delta), float(self.delta))

    def optimum(self) -> tuple[np.ndarray, float]:
        """A minimizer of f and its value. For abs the per-coordinate
        median (any point of the optimal interval works), for huber the
        per-coordinate root of the monotone mean gradient."""
        if self.kind == "quadratic":
            z = (self.scales[:, np.newaxis] * self.anchors).sum(axis=0) / self.scales.sum()
        elif self.kind == "abs":
            z = np.median(self.anchors, axis=0)
        else:
            z = np.array([self._huber_root(self.anchors[:, k]) for k in range(self.d)])
        return z, self.value(z)

    def _huber_root(self, col: np.ndarray) -> float:
        delta = float(self.delta)

        def mean_grad(v: float) -> float:
            return float(np.mean(np.clip(v - col, -delta, delta)))

        lo, hi = float(col.min()) - 1.0, float(col.max()) + 1.0
        for _ in range(200):
            if hi - lo <= 1e-14 * max(1.0, abs(lo), abs(hi)):
                break
            mid = 0.5 * (lo + hi)
            if mean_grad(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def absolute_deviation_objective(anchors: np.ndarray) -> Objective:
    a = np.asarray(anchors, dtype=float)
    n = a.shape[0]
    return Objective("abs", a, np.ones(n))


def quadratic_objective(anchors: np.ndarray, scales: np.ndarray | None = None) -> Objective:
    a = np.asarray(anchors, dtype=float)
    n = a.shape[0]
    s = np.ones(n) if scales is None else np.asarray(scales, dtype=float)
    return Objective("quadratic", a, s)


def huber_objective(anchors: np.ndarray, delta: float = 1.0) -> Objective:
    a = np.asarray(anchors, dtype=float)
    n = a.shape[0]
    return Objective("huber", a, np.ones(n), delta=delta)


def subgradient(obj: Objective, i: int, z: np.ndarray) -> np.ndarray:
    return obj.subgradient(i, z)


# ---------------------------------------------------------------------------
# step-size schedules


@dataclass(frozen=True)
class StepSchedule:
    """Step-size rule alpha(t).

    kinds: fixed_inv_sqrt (1/sqrt(horizon), for horizon-tuned runs),
    harmonic (scale/(t+1)^power), sgp_strong (2/(lambda_bar t), defined
    from t = 1), constant.
    """

    kind: str
    horizon: int | None = None
    scale: float | None = None
    power: float | None = None
    lambda_bar: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "fixed_inv_sqrt":
            if self.horizon is None or self.horizon < 1:
                raise ValueError("fixed_inv_sqrt needs horizon >= 1")
        elif self.kind == "harmonic":
            if self.scale is None or not (self.scale > 0.0):
                raise ValueError("harmonic needs scale > 0")
            if self.power is None or not (0.0 < self.power <= 1.0):
                raise ValueError("harmonic needs power in (0, 1]")
        elif self.kind == "sgp_strong":
            if self.lambda_bar is None or not (self.lambda_bar > 0.0):
                raise ValueError("sgp_strong needs lambda_bar > 0")
        elif self.kind == "constant":
            if self.scale is None or not (self.scale > 0.0):
                raise ValueError("constant needs scale > 0")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @property
    def start(self) -> int:
        """First time index the rule is defined at."""
        return 1 if self.kind == "sgp_strong" else 0

    @property
    def satisfies_diminishing_conditions(self) -> bool:
        """True when sum alpha diverges while sum alpha^2 converges and
        the sequence is non-increasing (the diminishing-step regime)."""
        if self.kind == "harmonic":
            return 0.5 < float(self.power) <= 1.0
        return self.kind == "sgp_strong"

    def alpha(self, t: int) -> float:
        if t < self.start:
            raise ValueError(f"schedule {self.kind} is undefined at t={t} (starts at {self.start})")
        if self.kind == "fixed_inv_sqrt":
            return 1.0 / math.sqrt(self.horizon)
        if self.kind == "harmonic":
            return float(self.scale) / (t + 1.0) ** float(self.power)
        if self.kind == "sgp_strong":
            return 2.0 / (float(self.lambda_bar) * t)
        return float(self.scale)


def fixed_inv_sqrt(horizon: int) -> StepSchedule:
    return StepSchedule("fixed_inv_sqrt", horizon=horizon)


def harmonic(scale: float, power: float) -> StepSchedule:
    return StepSchedule("harmonic", scale=scale, power=power)


def sgp_strong(lambda_bar: float) -> StepSchedule:
    return StepSchedule("sgp_strong", lambda_bar=lambda_bar)


def constant_step(alpha: float) -> StepSchedule:
    return StepSchedule("constant", scale=alpha)


def stepsize(schedule: StepSchedule, t: int) -> float:
    return schedule.alpha(t)


# ---------------------------------------------------------------------------
# switching signals


@dataclass(frozen=True)
class SwitchingSignal:
    """Per-(agent, step) 0/1 signal selecting correct-then-mix (1) or
    mix-then-correct (0) in the heterogeneous algorithm."""

    kind: str
    p: float = 0.5
    seed: int = 0
    table: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("all-ones", "all-zeros", "bernoulli", "alternating", "table"):
            raise ValueError(f"unknown switching signal kind {self.kind!r}")
        if self.kind == "bernoulli" and not (0.0 <= self.p <= 1.0):
            raise ValueError(f"bernoulli p must lie in [0, 1], got {self.p}")
        if self.kind == "table":
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 2 or not np.all((tab == 0.0) | (tab == 1.0)):
                raise ValueError("table must be a (steps, n) array of 0/1 values")
            object.__setattr__(self, "table", tab)

    def row(self, t: int, n: int) -> np.ndarray:
        """sigma(t) for all agents as a float 0/1 vector."""
        if self.kind == "all-ones":
            return np.ones(n)
        if self.kind == "all-zeros":
            return np.zeros(n)
        if self.kind == "alternating":
            # adversarial stress: neighbors always disagree and flip each step
            return np.array([(i + t) % 2 for i in range(n)], dtype=float)
        if self.kind == "table":
            if not (0 <= t < self.table.shape[0]):
                raise ValueError(f"switching table has no row for t={t}")
            if self.table.shape[1] != n:
                raise ValueError("switching table width does not match n")
            return self.table[t].copy()
        out = np.empty(n)
        for i in range(n):
            gen = np.random.Generator(np.random.Philox(key=self.seed, counter=[t, i, 0, 0]))
            out[i] = 1.0 if gen.random() < self.p else 0.0
        return out


def all_ones_signal() -> SwitchingSignal:
    return SwitchingSignal("all-ones")


def all_zeros_signal() -> SwitchingSignal:
    return SwitchingSignal("all-zeros")


def bernoulli_signal(p: float = 0.5, seed: int = 0) -> SwitchingSignal:
    return SwitchingSignal("bernoulli", p=p, seed=seed)


def alternating_signal() -> SwitchingSignal:
    return SwitchingSignal("alternating")


def table_signal(table: np.ndarray) -> SwitchingSignal:
    return SwitchingSignal("table", table=np.asarray(table, dtype=float))


# ---------------------------------------------------------------------------
# stochastic first-order oracle


@dataclass(frozen=True)
class GradientOracle:
    """Gradient plus zero-mean noise drawn uniformly from the solid ball
    of radius c_i, so ||noise|| <= c_i holds almost surely.

    Draws are addressed, not streamed: the Philox counter is
    (t, agent, draw, 0) under a single run key, so any subset of draws
    can be regenerated independently and in any order.
    """

    noise_bounds: np.ndarray
    seed: int = 0

    def __post_init__(self) -> None:
        c = np.asarray(self.noise_bounds, dtype=float)
        if c.ndim != 1 or np.any(c < 0.0) or not np.all(np.isfinite(c)):
            raise ValueError("noise bounds must be a finite nonnegative (n,) array")
        object.__setattr__(self, "noise_bounds", c)

    def noise(self, i: int, t: int, d: int, draw: int = 0) -> np.ndarray:
        c = float(self.noise_bounds[i])
        if c == 0.0:
            return np.zeros(d)
        gen = np.random.Generator(np.random.Philox(key=self.seed, counter=[t, i, draw, 0]))
        direction = gen.standard_normal(d)
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            return np.zeros(d)
        radius = c * float(gen.random()) ** (1.0 / d)
        return direction * (radius / norm)

    def gradient(self, obj: Objective, i: int, z: np.ndarray, t: int, draw: int = 0) -> np.ndarray:
        if not obj.smooth:
            raise ValueError(
                f"stochastic oracle needs a differentiable objective, got kind {obj.kind!r}"
            )
        return obj.subgradient(i, z) + self.noise(i, t, obj.d, draw)


def stochastic_gradient(
    oracle: GradientOracle, obj: Objective, i: int, z: np.ndarray, t: int, draw: int = 0
) -> np.ndarray:
    return oracle.gradient(obj, i, z, t, draw)


# ---------------------------------------------------------------------------
# one-step updates

# The runner reuses these kernels, so manual stepping and run_optimizer
# produce identical floating-point trajectories.


def _exact_rows(obj: Objective, state: NetworkState) -> np.ndarray:
    z = ratio(state)
    return np.stack([obj.subgradient(i, z[i]) for i in range(state.n)])


def _oracle_rows(obj: Objective, oracle: GradientOracle, state: NetworkState) -> np.ndarray:
    z = ratio(state)
    return np.stack([oracle.gradient(obj, i, z[i], state.t) for i in range(state.n)])


def _kernel(
    algorithm: str,
    m: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    g: np.ndarray,
    alpha: float,
    sigma_row: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray]:
    if algorithm in ("subgradient_push", "sgp"):
        x_next = m @ (x - alpha * g)
    elif algorithm == "push_subgradient":
        x_next = m @ x - alpha * g
    elif algorithm == "heterogeneous":
        sig = sigma_row[:, np.newaxis]
        x_next = m @ (x - alpha * g * sig) - alpha * g * (1.0 - sig)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return x_next, m @ y


def _mat(w: WeightMatrix | np.ndarray) -> np.ndarray:
    return w.matrix if isinstance(w, WeightMatrix) else np.asarray(w, dtype=float)


def subgradient_push_step(
    state: NetworkState, w: WeightMatrix | np.ndarray, obj: Objective, alpha: float
) -> NetworkState:
    """Correct locally, then mix: x <- W (x - alpha g(z))."""
    g = _exact_rows(obj, state)
    x, y = _kernel("subgradient_push", _mat(w), state.x, state.y, g, alpha, None)
    return NetworkState(state.t + 1, x, y)


def push_subgradient_step(
    state: NetworkState, w: WeightMatrix | np.ndarray, obj: Objective, alpha: float
) -> NetworkState:
    """Mix, then correct locally: x <- W x - alpha g(z)."""
    g = _exact_rows(obj, state)
    x, y = _kernel("push_subgradient", _mat(w), state.x, state.y, g, alpha, None)
    return NetworkState(state.t + 1, x, y)


def heterogeneous_step(
    state: NetworkState,
    w: WeightMatrix | np.ndarray,
    obj: Objective,
    alpha: float,
    sigma_row: np.ndarray,
) -> NetworkState:
    """Per-agent mix of the two orders: agents with sigma_i = 1 correct
    before mixing, agents with sigma_i = 0 after."""
    sigma_row = np.asarray(sigma_row, dtype=float)
    if sigma_row.shape != (state.n,) or not np.all((sigma_row == 0.0) | (sigma_row == 1.0)):
        raise ValueError("sigma_row must be a 0/1 vector of length n")
    g = _exact_rows(obj, state)
    x, y = _kernel("heterogeneous", _mat(w), state.x, state.y, g, alpha, sigma_row)
    return NetworkState(state.t + 1, x, y)


def sgp_step(
    state: NetworkState,
    w: WeightMatrix | np.ndarray,
    obj: Objective,
    oracle: GradientOracle,
    alpha: float,
) -> NetworkState:
    """Stochastic subgradient_push step; the oracle draw is addressed by
    (state.t, agent), so replaying a step resamples nothing."""
    g = _oracle_rows(obj, oracle, state)
    x, y = _kernel("sgp", _mat(w), state.x, state.y, g, alpha, None)
    return NetworkState(state.t + 1, x, y)


def weighted_average_state(z: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Average of agent vectors under a probability vector: sum_i pi_i z_i."""
    z = np.asarray(z, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if z.ndim != 2 or pi.shape != (z.shape[0],):
        raise ValueError("need z of shape (n, d) and pi of shape (n,)")
    return pi @ z


# ---------------------------------------------------------------------------
# runner


def run_optimizer(
    algorithm: str,
    seq: GraphSequence,
    obj: Objective,
    schedule: StepSchedule,
    weights: str | WeightMatrix | Sequence[WeightMatrix] = "default",
    x0: np.ndarray | None = None,
    y0: np.ndarray | None = None,
    sigma: SwitchingSignal | None = None,
    oracle: GradientOracle | None = None,
    horizon: int | None = None,
    seed: int | None = None,
) -> Trace:
    """Run one optimization algorithm and record everything.

    The trace stores states at times t0..t0+horizon (t0 = 1 for sgp,
    otherwise 0), the mixing matrix, step size, gradient rows actually
    applied at every step, and switching rows for the heterogeneous
    algorithm. Identical inputs give identical traces.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    if obj.n != seq.n:
        raise ValueError(f"objective has {obj.n} components but the graphs have n={seq.n}")
    if x0 is None:
        raise ValueError("x0 is required")
    horizon = len(seq) if horizon is None else horizon

    t0 = 1 if algorithm == "sgp" else 0
    if schedule.start > t0:
        raise ValueError(
            f"schedule {schedule.kind} starts at t={schedule.start} but the run starts at t={t0}"
        )
    if algorithm == "sgp":
        if oracle is None:
            raise ValueError("sgp needs a gradient oracle")
        if not obj.smooth:
            raise ValueError("sgp needs a differentiable objective")
        if obj.strong_convexity is None:
            raise ValueError("sgp needs a strongly convex objective")
        if oracle.noise_bounds.shape != (seq.n,):
            raise ValueError("oracle noise bounds must have one entry per agent")
    if algorithm == "heterogeneous":
        if sigma is None:
            sigma = bernoulli_signal(0.5, seed=0 if seed is None else seed)
    elif sigma is not None:
        raise ValueError(f"{algorithm} takes no switching signal")
    if algorithm != "sgp" and oracle is not None:
        raise ValueError(f"{algorithm} takes no gradient oracle")

    w_list = resolve_weight_sequence(seq, weights, horizon)
    n = seq.n
    x = np.asarray(x0, dtype=float)
    if x.ndim == 1:
        x = x[:, np.newaxis]
    if x.shape[0] != n or not np.all(np.isfinite(x)):
        raise ValueError(f"x0 must be a finite (n, d) array with n={n}")
    if x.shape[1] != obj.d:
        raise ValueError(f"x0 has d={x.shape[1]} but the objective has d={obj.d}")
    y = np.ones(n) if y0 is None else np.asarray(y0, dtype=float)
    if y.shape != (n,) or np.any(y <= 0.0):
        raise ValueError("y0 must be a strictly positive (n,) vector")

    d = x.shape[1]
    xs = np.empty((horizon + 1, n, d))
    ys = np.empty((horizon + 1, n))
    gs = np.empty((horizon, n, d))
    alphas = np.empty(horizon)
    sigmas = np.empty((horizon, n)) if algorithm == "heterogeneous" else None
    xs[0], ys[0] = x, y

    for k in range(horizon):
        t = t0 + k
        alpha = schedule.alpha(t)
        state = NetworkState(t, x, y)
        if algorithm == "sgp":
            g = _oracle_rows(obj, oracle, state)
            sigma_row = None
        elif algorithm == "heterogeneous":
            g = _exact_rows(obj, state)
            sigma_row = sigma.row(t, n)
            sigmas[k] = sigma_row
        else:
            g = _exact_rows(obj, state)
            sigma_row = None
        x, y = _kernel(algorithm, w_list[k], state.x, state.y, g, alpha, sigma_row)
        if float(y.min()) <= DEGENERATE_Y:
            worst = int(np.argmin(y))
            raise DegenerateStateError(
                f"y[{worst}] collapsed to {y[worst]:.3e} after step {k}; "
                f"check connectivity of the graph sequence"
            )
        if not np.all(np.isfinite(x)):
            raise RuntimeError(
                f"state diverged at step {k} (non-finite x); reduce the step size"
            )
        gs[k] = g
        alphas[k] = alpha
        xs[k + 1], ys[k + 1] = x, y

    return Trace(
        algorithm=algorithm,
        t0=t0,
        xs=xs,
        ys=ys,
        w_mats=np.stack(w_list),
        kappa=float(np.sum(ys[0])),
        alphas=alphas,
        gs=gs,
        sigmas=sigmas,
        seed=seed,
    )
