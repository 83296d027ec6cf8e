"""Statistical falsification of the coefficient hypotheses C1-C5.

The conditions quantify over an infinite-dimensional path space, so there is
no decision procedure; instead we sample random piecewise-constant path
pairs and evaluation times and hunt for violations of the declared rate
envelopes.  A model shipping with correct envelopes must survive this; a
model with a wrong envelope should be caught within a modest sample budget.

Sample i always comes from the counter-based stream (seed, i), so growing
the sample count only appends new draws, and any recorded witness can be
replayed bit-identically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import EstimationError
from .noise import MartingaleMeasureSpec
from .paths import CadlagPath, sup_distance, write_path_csv
from .solver import CoefficientModel
from .streams import stream

__all__ = [
    "CONDITIONS",
    "Violation",
    "ConditionReport",
    "check_condition",
    "evaluate_condition",
    "suggest_rate",
    "random_path_sampler",
]

CONDITIONS = ("C1", "C2", "C3", "C4", "C5")

# Shrink factors used when probing continuity of f in the path argument.
_C3_SCALES = (1e-1, 1e-2, 1e-4, 1e-6, 1e-8)


@dataclass(frozen=True)
class Violation:
    index: int
    t: float
    lhs: float
    rhs: float
    margin: float
    x_path: CadlagPath
    y_path: Optional[CadlagPath] = None


@dataclass
class ConditionReport:
    condition: str
    samples: int
    violations: list[Violation] = field(default_factory=list)
    rate_functions_used: str = ""

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> str:
        return json.dumps(
            {
                "condition": self.condition,
                "samples": self.samples,
                "violations": [
                    {"index": v.index, "t": v.t, "lhs": v.lhs, "rhs": v.rhs, "margin": v.margin}
                    for v in self.violations
                ],
                "rate_functions_used": self.rate_functions_used,
                "passed": self.passed,
            },
            sort_keys=True,
        )

    def write_witnesses(self, directory):
        from pathlib import Path

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for v in self.violations:
            with open(directory / f"{self.condition}_witness_{v.index}_x.csv", "w") as fh:
                write_path_csv(v.x_path, fh)
            if v.y_path is not None:
                with open(directory / f"{self.condition}_witness_{v.index}_y.csv", "w") as fh:
                    write_path_csv(v.y_path, fh)


def random_path_sampler(model: CoefficientModel, radius: float, horizon: float = 1.0):
    """Default sampler: random piecewise-constant path pairs with sup norm <= radius.

    Returns (t, x, y) with t uniform in (0, horizon] and up to 8 random
    breakpoints per path on [-tau, horizon].
    """
    tau = model.delay
    d = model.dim
    lim = radius / math.sqrt(d)

    def one_path(rng):
        k = int(rng.integers(1, 8))
        inner = np.sort(rng.random(k - 1)) * (horizon + tau) - tau if k > 1 else np.empty(0)
        bp = np.concatenate([[-tau], inner])
        bp = np.unique(bp)
        vals = rng.uniform(-lim, lim, size=(bp.size, d))
        return CadlagPath(bp, vals, horizon)

    def sampler(rng):
        t = float(rng.random()) * horizon
        t = t if t > 0 else horizon
        return t, one_path(rng), one_path(rng)

    return sampler


def _squared_mark_integral(model, spec, t, x, y=None) -> float:
    """int |g(t,x,xi) - g(t,y,xi)|^2 nu_t(dxi) over Wiener indices + marks."""
    total = 0.0
    for i in range(spec.wiener_count):
        gx = np.atleast_1d(model.jump(t, x, i))
        gy = np.atleast_1d(model.jump(t, y, i)) if y is not None else 0.0
        diff = gx - gy
        total += float(diff @ diff)
    if spec.has_jumps:
        lam = spec.rate(t)
        if lam > 0:
            nodes = spec.compensator_node_set()
            acc = 0.0
            for node in nodes:
                gx = np.atleast_1d(model.jump(t, x, node))
                gy = np.atleast_1d(model.jump(t, y, node)) if y is not None else 0.0
                diff = gx - gy
                acc += float(diff @ diff)
            total += lam * acc / nodes.shape[0]
    return total


def _require_rate(model, attr, condition):
    fn = getattr(model, attr)
    if fn is None:
        raise ValueError(f"model '{model.name}' supplies no {attr} needed by {condition}")
    return fn


def evaluate_condition(
    model: CoefficientModel,
    spec: MartingaleMeasureSpec,
    condition: str,
    t: float,
    x: CadlagPath,
    y: Optional[CadlagPath] = None,
    radius: float = 1.0,
) -> tuple[float, float]:
    """One (lhs, rhs) evaluation of a condition at a witness; deterministic,
    so recorded violations replay bit-identically."""
    if condition == "C1":
        if y is None:
            raise ValueError("C1 needs a path pair")
        lip = _require_rate(model, "lipschitz_rate", "C1")
        dx = x.left_limit(t) - y.left_limit(t)
        df = np.atleast_1d(model.drift(t, x)) - np.atleast_1d(model.drift(t, y))
        lhs = 2.0 * float(dx @ df) + _squared_mark_integral(model, spec, t, x, y)
        rhs = float(lip(t, radius)) * sup_distance(x, y, x.start, t) ** 2
        return lhs, rhs
    if condition == "C2":
        growth = _require_rate(model, "growth_rate", "C2")
        xl = x.left_limit(t)
        f = np.atleast_1d(model.drift(t, x))
        lhs = 2.0 * float(xl @ f) + _squared_mark_integral(model, spec, t, x)
        rhs = float(growth(t)) * (1.0 + x.window_sup(x.start, t) ** 2)
        return lhs, rhs
    if condition == "C4":
        bound = _require_rate(model, "bound_rate", "C4")
        f = np.atleast_1d(model.drift(t, x))
        lhs = float(np.sqrt(f @ f)) + _squared_mark_integral(model, spec, t, x)
        rhs = float(bound(t, radius))
        return lhs, rhs
    raise ValueError(f"evaluate_condition does not handle {condition!r}")


def _check_c3(model, t, x, rng) -> tuple[float, float]:
    """Continuity probe: f-gap under path perturbations of shrinking sup norm.

    lhs is the gap at the smallest perturbation, rhs the tolerance it must
    reach; a discontinuous f stops shrinking and trips the comparison.
    """
    base = np.atleast_1d(model.drift(t, x))
    bump = rng.uniform(-1.0, 1.0, size=x.values.shape)
    gap = 0.0
    for scale in _C3_SCALES:
        xp = CadlagPath(x.breakpoints, x.values + scale * bump, x.end, x.jump_times)
        df = np.atleast_1d(model.drift(t, xp)) - base
        gap = float(np.sqrt(df @ df))
    tol = 1e-6 * (1.0 + float(np.sqrt(base @ base)))
    return gap, tol


def check_condition(
    model: CoefficientModel,
    spec: MartingaleMeasureSpec,
    condition: str,
    radius: float,
    sampler: Optional[Callable] = None,
    samples: int = 1000,
    seed: int = 0,
    *,
    horizon: float = 1.0,
    keep_witnesses: int = 16,
) -> ConditionReport:
    """Sample (t, x, y) draws and record every violation beyond tolerance.

    The tolerance is relative, 1e-9 * (1 + |rhs|), to survive floating-point
    cancellation in the inner-product terms.
    """
    if condition not in CONDITIONS:
        raise ValueError(f"unknown condition {condition!r}; expected one of {CONDITIONS}")
    rates = {
        "C1": "local monotonicity envelope L_R(t) = model.lipschitz_rate",
        "C2": "coercivity envelope K(t) = model.growth_rate",
        "C4": "magnitude envelope K~_R(t) = model.bound_rate",
        "C3": "none (modulus-of-continuity probing)",
        "C5": "none (finite second moment of the initial segment)",
    }
    label = f"{model.name or 'model'}: {rates[condition]}"
    report = ConditionReport(condition, samples, rate_functions_used=label)

    if condition == "C5":
        z = model.initial
        sup2 = z.window_sup(z.start, z.end) ** 2
        report.samples = 1
        if not np.isfinite(sup2):
            report.violations.append(Violation(0, 0.0, float(sup2), float("inf"), float("inf"), z))
        return report

    sampler = sampler or random_path_sampler(model, radius, horizon)
    for i in range(samples):
        rng = stream(seed, i)
        t, x, y = sampler(rng)
        if condition == "C3":
            lhs, rhs = _check_c3(model, t, x, rng)
        elif condition == "C1":
            lhs, rhs = evaluate_condition(model, spec, condition, t, x, y, radius)
        else:
            lhs, rhs = evaluate_condition(model, spec, condition, t, x, None, radius)
        tol = 1e-9 * (1.0 + abs(rhs))
        if lhs > rhs + tol and len(report.violations) < keep_witnesses:
            report.violations.append(
                Violation(i, t, lhs, rhs, lhs - rhs, x, y if condition == "C1" else None)
            )
    return report


def suggest_rate(
    model: CoefficientModel,
    spec: MartingaleMeasureSpec,
    condition: str,
    radius: float,
    t_grid: Sequence[float],
    samples: int = 1000,
    seed: int = 0,
    sampler: Optional[Callable] = None,
) -> CadlagPath:
    """Empirical envelope: smallest constant-in-the-sample rate compatible with draws.

    For each grid time, the max over samples of lhs / denominator, where the
    denominator is the sup-norm factor of the condition (1 for C4).  Returned
    as a step function; zero-denominator samples are excluded, and a time
    where everything is excluded is an estimation error.
    """
    if condition not in ("C1", "C2", "C4"):
        raise ValueError("rate suggestion applies to C1, C2 and C4 only")
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    if t_grid.size == 0:
        raise ValueError("empty t grid")
    sampler = sampler or random_path_sampler(model, radius, horizon=float(t_grid[-1]) or 1.0)
    env = np.full(t_grid.size, -np.inf)
    counted = np.zeros(t_grid.size, dtype=int)
    for i in range(samples):
        rng = stream(seed, i)
        _, x, y = sampler(rng)
        for j, t in enumerate(t_grid):
            if t <= x.start:
                continue
            if condition == "C1":
                dx = x.left_limit(t) - y.left_limit(t)
                df = np.atleast_1d(model.drift(t, x)) - np.atleast_1d(model.drift(t, y))
                lhs = 2.0 * float(dx @ df) + _squared_mark_integral(model, spec, t, x, y)
                denom = sup_distance(x, y, x.start, t) ** 2
            elif condition == "C2":
                lhs = 2.0 * float(x.left_limit(t) @ np.atleast_1d(model.drift(t, x)))
                lhs += _squared_mark_integral(model, spec, t, x)
                denom = 1.0 + x.window_sup(x.start, t) ** 2
            else:
                f = np.atleast_1d(model.drift(t, x))
                lhs = float(np.sqrt(f @ f)) + _squared_mark_integral(model, spec, t, x)
                denom = 1.0
            if denom < 1e-12:
                continue
            env[j] = max(env[j], lhs / denom)
            counted[j] += 1
    if np.any(counted == 0):
        raise EstimationError("every sample was excluded at some grid time")
    return CadlagPath(t_grid, env[:, None], float(t_grid[-1]))
