"""Built-in coefficient models used by the CLI, the test suite and the checker.

Each factory returns a CoefficientModel whose rate functions (local
monotonicity, coercivity, magnitude bound) are the analytically correct
envelopes, except for the deliberately mis-rated `superlinear_bad`, which the
condition checker is expected to catch.
"""

from __future__ import annotations

import math

import numpy as np

from .noise import MartingaleMeasureSpec, NoiseRealization, uniform_marks
from .paths import constant_path
from .solver import CoefficientModel

__all__ = [
    "gbm",
    "gbm_exact_terminal",
    "delay_ode",
    "linear",
    "superlinear_bad",
    "additive_jumps",
    "geometric_jump",
    "geometric_jump_exact_terminal",
    "build_model",
    "build_noise",
    "model_param_names",
    "MODEL_NAMES",
]


def gbm(mu: float = 0.05, sigma: float = 0.2, x0: float = 1.0, delay: float = 1.0) -> CoefficientModel:
    """dX = mu X dt + sigma X dW.  No delay dependence; tau only sets the initial window."""

    def drift(t, h):
        return mu * h.value_at(t)

    def jump(t, h, mark):
        if isinstance(mark, (int, np.integer)):
            return sigma * h.value_at(t)
        return np.zeros(1)

    lip = 2 * abs(mu) + sigma * sigma
    return CoefficientModel(
        dim=1,
        delay=delay,
        drift=drift,
        jump=jump,
        initial=constant_path(x0, -delay, 0.0),
        lipschitz_rate=lambda t, R: lip,
        growth_rate=lambda t: lip,
        bound_rate=lambda t, R: abs(mu) * R + sigma * sigma * R * R,
        name="gbm",
    )


def gbm_exact_terminal(mu: float, sigma: float, x0: float, T: float):
    """Closed-form GBM endpoint driven by the same Brownian path as the solver."""

    def oracle(real: NoiseRealization) -> np.ndarray:
        w_T = float(real.wiener_increments[:, 0].sum())
        return np.array([x0 * math.exp((mu - 0.5 * sigma * sigma) * T + sigma * w_T)])

    return oracle


def delay_ode() -> CoefficientModel:
    """x'(t) = -x(t - 1) with unit history x = 1 on [-1, 0] and no noise.

    Solvable exactly interval by interval, which makes it the deterministic
    oracle for the drift quadrature.
    """

    def drift(t, h):
        return -h.value_at(t - 1.0)

    def jump(t, h, mark):
        return np.zeros(1)

    return CoefficientModel(
        dim=1,
        delay=1.0,
        drift=drift,
        jump=jump,
        initial=constant_path(1.0, -1.0, 0.0),
        lipschitz_rate=lambda t, R: 2.0,
        growth_rate=lambda t: 2.0,
        bound_rate=lambda t, R: R,
        name="delay-ode",
    )


def linear(sigma: float = 0.5, delay: float = 1.0, dim: int = 1, jump_rate_bound: float = 0.0) -> CoefficientModel:
    """Contracting drift f = -x(t-) with constant noise amplitude sigma.

    The drift difference term is non-positive, so the monotonicity envelope 2
    is generous and the coercivity envelope is the constant jump/diffusion
    term sigma^2 * (wiener + lambda_bar).
    """

    def drift(t, h):
        return -h.left_limit(t) if t > h.start else -h.value_at(t)

    def jump(t, h, mark):
        return np.full(dim, sigma)

    k_const = sigma * sigma * dim * (1.0 + jump_rate_bound)
    return CoefficientModel(
        dim=dim,
        delay=delay,
        drift=drift,
        jump=jump,
        initial=constant_path(np.zeros(dim), -delay, 0.0),
        compensator=lambda t, h: np.full(dim, sigma),
        lipschitz_rate=lambda t, R: 2.0,
        growth_rate=lambda t: max(k_const, 1e-12),
        bound_rate=lambda t, R: R + k_const,
        name="linear",
    )


def superlinear_bad(delay: float = 1.0) -> CoefficientModel:
    """f = x|x| componentwise with a (wrong) unit coercivity envelope.

    2 <x, x|x|> = 2|x|^3 outgrows K(t)(1 + sup^2) for any constant K; the
    checker must find C2 witnesses (e.g. x = 5 gives lhs 250 > 26).
    """

    def drift(t, h):
        x = h.value_at(t)
        return x * np.abs(x)

    def jump(t, h, mark):
        return np.zeros(1)

    return CoefficientModel(
        dim=1,
        delay=delay,
        drift=drift,
        jump=jump,
        initial=constant_path(0.0, -delay, 0.0),
        lipschitz_rate=lambda t, R: 4.0 * R,
        growth_rate=lambda t: 1.0,
        bound_rate=lambda t, R: R * R,
        name="superlinear-bad",
    )


def additive_jumps(gamma: float = 1.0, mark_mean: float = 0.5, delay: float = 1.0) -> CoefficientModel:
    """Pure-jump model dX = gamma * xi dM~: additive marks, closed-form compensator."""

    def drift(t, h):
        return np.zeros(1)

    def jump(t, h, mark):
        if isinstance(mark, (int, np.integer)):
            return np.zeros(1)
        return gamma * np.atleast_1d(mark)[:1]

    return CoefficientModel(
        dim=1,
        delay=delay,
        drift=drift,
        jump=jump,
        initial=constant_path(0.0, -delay, 0.0),
        compensator=lambda t, h: np.array([gamma * mark_mean]),
        lipschitz_rate=lambda t, R: 0.0,
        growth_rate=lambda t: 1.0,
        bound_rate=lambda t, R: 1.0 + gamma * gamma,
        name="additive-jumps",
    )


def geometric_jump(
    mu: float = 0.05,
    sigma: float = 0.2,
    gamma: float = 0.3,
    mark_mean: float = 0.5,
    mark_sq_bound: float = 1.0,
    rate_bound: float = 2.0,
    x0: float = 1.0,
    delay: float = 1.0,
) -> CoefficientModel:
    """Geometric jump diffusion dX = X(t-) [mu dt + sigma dW + gamma xi dM~].

    mark_mean, mark_sq_bound (a sure bound on xi^2 over the mark space, NOT
    its mean: the checker evaluates the mark integral by node quadrature, so
    only a sure bound keeps the envelopes sound) and rate_bound must describe
    the noise spec this model is paired with (defaults: uniform marks on
    [0,1], lambda <= 2).
    """

    def drift(t, h):
        return mu * h.value_at(t)

    def jump(t, h, mark):
        if isinstance(mark, (int, np.integer)):
            return sigma * h.value_at(t)
        return gamma * float(np.atleast_1d(mark)[0]) * h.value_at(t)

    noise_l2 = sigma * sigma + gamma * gamma * rate_bound * mark_sq_bound
    lip = 2 * abs(mu) + noise_l2
    return CoefficientModel(
        dim=1,
        delay=delay,
        drift=drift,
        jump=jump,
        initial=constant_path(x0, -delay, 0.0),
        compensator=lambda t, h: gamma * mark_mean * h.value_at(t),
        lipschitz_rate=lambda t, R: lip,
        growth_rate=lambda t: lip,
        bound_rate=lambda t, R: abs(mu) * R + noise_l2 * R * R,
        name="geometric-jump",
    )


def geometric_jump_exact_terminal(
    mu: float, sigma: float, gamma: float, mark_mean: float, rate, x0: float, T: float
):
    """Stochastic-exponential endpoint for the geometric jump diffusion.

    X_T = x0 exp((mu - gamma lambda-bar-integral mean - sigma^2/2) T + sigma W_T)
    prod_e (1 + gamma xi_e), with the compensator drift integrated exactly for
    a constant rate."""
    lam = rate if not callable(rate) else None
    if lam is None:
        raise ValueError("closed form implemented for constant rates")

    def oracle(real: NoiseRealization) -> np.ndarray:
        w_T = float(real.wiener_increments[:, 0].sum())
        factor = float(np.prod(1.0 + gamma * real.event_marks[:, 0])) if real.event_times.size else 1.0
        expo = (mu - gamma * lam * mark_mean - 0.5 * sigma * sigma) * T + sigma * w_T
        return np.array([x0 * math.exp(expo) * factor])

    return oracle


MODEL_NAMES = ("gbm", "delay-ode", "linear", "superlinear-bad", "additive-jumps", "geometric-jump")

_BUILDERS = {
    "gbm": (gbm, {"mu", "sigma", "x0", "delay"}),
    "delay-ode": (delay_ode, set()),
    "linear": (linear, {"sigma", "delay", "dim", "jump_rate_bound"}),
    "superlinear-bad": (superlinear_bad, {"delay"}),
    "additive-jumps": (additive_jumps, {"gamma", "mark_mean", "delay"}),
    "geometric-jump": (
        geometric_jump,
        {"mu", "sigma", "gamma", "mark_mean", "mark_sq_bound", "rate_bound", "x0", "delay"},
    ),
}


def model_param_names(name: str) -> set:
    if name not in _BUILDERS:
        raise ValueError(f"unknown model '{name}'; available: {', '.join(sorted(_BUILDERS))}")
    return set(_BUILDERS[name][1])


def build_model(name: str, params: dict | None = None) -> CoefficientModel:
    allowed = model_param_names(name)
    factory = _BUILDERS[name][0]
    params = dict(params or {})
    bad = set(params) - allowed
    if bad:
        raise ValueError(f"model '{name}' does not take parameters {sorted(bad)}")
    return factory(**params)


def build_noise(
    wiener: int = 1,
    jump_rate: float = 0.0,
    mark_low=0.0,
    mark_high=1.0,
    quadrature_nodes: int = 64,
) -> MartingaleMeasureSpec:
    """Constant-rate noise spec for declarative configs (richer specs via the API)."""
    rate = float(jump_rate)
    if rate > 0:
        return MartingaleMeasureSpec(
            wiener_count=wiener,
            intensity=lambda t: rate,
            intensity_bound=rate,
            mark_sampler=uniform_marks(mark_low, mark_high),
            quadrature_nodes=quadrature_nodes,
        )
    return MartingaleMeasureSpec(wiener_count=wiener)
