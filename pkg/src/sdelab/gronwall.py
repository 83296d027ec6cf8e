"""Explicit constants and Monte Carlo verification of the pathwise inequalities.

Covers three families:

* the domination lemma for a nonnegative right-continuous process X dominated
  in expectation by a predictable non-decreasing G (tail and p-th moment
  bounds, with the sharp constant c_p = p^{-p} / (1-p));
* the stochastic Gronwall bounds for X(t) <= int_0^t X*(u-) dA(u) + M(t) +
  H(t), in the three variants keyed by what is assumed of H and M;
* the two-point martingale construction showing the H-moment bound cannot be
  made uniform without predictability of H.

Verdicts use one-sided 99% confidence intervals: the inequalities dominate
expectations almost surely, so anything beyond CI noise is a hard failure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import EnsembleError
from .paths import CadlagPath
from .streams import stream

__all__ = [
    "c_p",
    "gronwall_bound",
    "MonotoneFunction",
    "GronwallEnsemble",
    "VerificationReport",
    "verify_gronwall",
    "LenglartReport",
    "lenglart_tail",
    "lenglart_moment",
    "CounterexampleStats",
    "counterexample_stats",
    "counterexample_ensemble",
    "gbm_squared_ensemble",
    "brownian_square_pairs",
    "constant_pairs",
]

# One-sided and two-sided 99% normal quantiles.
Z_ONE_SIDED = 2.3263478740408408
Z_TWO_SIDED = 2.5758293035489004


def c_p(p: float) -> float:
    """The moment-bound constant p^{-p} / (1 - p), for p in (0, 1).

    It is the minimal value of (1-p)^{-1} lambda^{1-p} + lambda^{-p} over
    lambda > 0, attained at lambda = p; tends to 1 as p -> 0+.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0,1), got {p}")
    return p ** (-p) / (1.0 - p)


def gronwall_bound(variant: str, p: float, a_total: float, h_stat: float) -> float:
    """Right-hand side of the chosen Gronwall estimate.

    h_stat is E[H(T)^p] for variants 'a' and 'b' and E[H(T)] for variant 'c'
    (caller contract); a_total is A(T).
    """
    cp = c_p(p)
    if variant == "a":
        return cp / p * h_stat * math.exp(cp ** (1.0 / p) * a_total)
    if variant == "b":
        return (cp + 1.0) / p * h_stat * math.exp((cp + 1.0) ** (1.0 / p) * a_total)
    if variant == "c":
        return cp / p * h_stat ** p * math.exp(cp ** (1.0 / p) * a_total)
    raise ValueError(f"unknown variant {variant!r}; expected 'a', 'b' or 'c'")


@dataclass(frozen=True)
class MonotoneFunction:
    """Deterministic non-decreasing cadlag function with declared jump times."""

    fn: Callable[[float], float]
    jump_times: tuple = ()

    def __call__(self, t: float) -> float:
        return float(self.fn(t))


def _running_sup_clock_integral(
    xs: np.ndarray, a_vals: np.ndarray
) -> np.ndarray:
    """int_0^{pts[j]} X*(u-) dA(u) by left-point Stieltjes sums on the union grid.

    Exact for piecewise-constant X whose breakpoints are all in pts: on each
    cell (pts[i], pts[i+1]] the integrand X*(u-) is constant and equals the
    running sup through pts[i].
    """
    xstar = np.maximum.accumulate(xs)
    out = np.empty_like(xs)
    out[0] = 0.0
    np.cumsum(xstar[:-1] * np.diff(a_vals), out=out[1:])
    return out


@dataclass
class GronwallEnsemble:
    """Simulated (X, M, H) trajectories with a shared deterministic clock A.

    Construction validates the shape invariants (X >= 0, H non-decreasing
    from H(0) >= 0, M starting at 0, A(0) = 0) and the assumption inequality
    X(t) <= int X*(u-) dA(u) + M(t) + H(t) at every breakpoint of every
    replication; failing ensembles are rejected outright.

    h_predictable is a construction-time certificate, set only by generators
    that build H from deterministic or left-continuous data; it is not
    inferable from samples.
    """

    x_paths: Sequence[CadlagPath]
    m_paths: Sequence[CadlagPath]
    h_paths: Sequence[CadlagPath]
    clock: MonotoneFunction
    horizon: float
    p: float
    h_predictable: bool = False
    seed: Optional[int] = None
    label: str = ""
    assumption_tolerance: float = 1e-9

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise EnsembleError(f"p must lie in (0,1), got {self.p}")
        if not (len(self.x_paths) == len(self.m_paths) == len(self.h_paths)):
            raise EnsembleError("X, M, H ensembles must have equal size")
        if abs(self.clock(0.0)) > 1e-12:
            raise EnsembleError(f"A(0) must be 0, got {self.clock(0.0)}")
        tol = self.assumption_tolerance

        def sample(path, pts):
            if path.breakpoints.size == pts.size and np.array_equal(path.breakpoints, pts):
                return path.values[:, 0]
            return np.array([float(path.value_at(t)[0]) for t in pts])

        for r, (x, m, h) in enumerate(zip(self.x_paths, self.m_paths, self.h_paths)):
            if x.dimension != 1 or m.dimension != 1 or h.dimension != 1:
                raise EnsembleError("ensemble paths must be scalar")
            if x.start != 0.0 or m.start != 0.0 or h.start != 0.0:
                raise EnsembleError(f"replication {r}: ensemble paths must start at t=0")
            if np.any(x.values < 0):
                raise EnsembleError(f"replication {r}: X takes a negative value")
            hv = h.values[:, 0]
            if hv[0] < 0 or (hv.size > 1 and np.any(np.diff(hv) < 0)):
                raise EnsembleError(f"replication {r}: H must be non-decreasing from H(0) >= 0")
            if abs(float(m.values[0, 0])) > 1e-12:
                raise EnsembleError(f"replication {r}: M(0) must be 0")
            pts = np.union1d(np.union1d(x.breakpoints, m.breakpoints), h.breakpoints)
            if self.clock.jump_times:
                jt = np.asarray(self.clock.jump_times)
                pts = np.union1d(pts, jt[(jt >= 0) & (jt <= self.horizon)])
            pts = pts[(pts >= 0) & (pts <= self.horizon)]
            xs = sample(x, pts)
            a_vals = np.array([self.clock(t) for t in pts])
            integ = _running_sup_clock_integral(xs, a_vals)
            slack = integ + sample(m, pts) + sample(h, pts) - xs
            if np.any(slack < -tol):
                j = int(np.argmin(slack))
                raise EnsembleError(
                    f"replication {r}: assumption inequality fails at t={pts[j]:.6g} "
                    f"(X={xs[j]:.6g} > bound={xs[j] + slack[j]:.6g})"
                )

    @property
    def replications(self) -> int:
        return len(self.x_paths)

    def scaled(self, factor: float) -> "GronwallEnsemble":
        """Jointly scale (X, M, H) by a positive constant; A is untouched."""
        if factor <= 0:
            raise ValueError("scaling factor must be positive")

        def scale(paths):
            return [
                CadlagPath(p.breakpoints, factor * p.values, p.end, p.jump_times)
                for p in paths
            ]

        return GronwallEnsemble(
            scale(self.x_paths),
            scale(self.m_paths),
            scale(self.h_paths),
            self.clock,
            self.horizon,
            self.p,
            h_predictable=self.h_predictable,
            seed=self.seed,
            label=f"{self.label}*{factor:g}",
        )


@dataclass(frozen=True)
class VerificationReport:
    variant: str
    p: float
    lhs: float
    lhs_ci: float          # one-sided 99% upper confidence bound on the LHS mean
    rhs: float
    verdict: str           # "holds" | "violated"
    replications: int
    seed: Optional[int] = None
    label: str = ""

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def to_json(self) -> str:
        return json.dumps(
            {
                "variant": self.variant,
                "p": self.p,
                "lhs": self.lhs,
                "lhs_ci": self.lhs_ci,
                "rhs": self.rhs,
                "verdict": self.verdict,
                "replications": self.replications,
                "seed": self.seed,
            },
            sort_keys=True,
        )


def _negative_marked_jump(m: CadlagPath) -> bool:
    for t in m.jump_times:
        if float(m.value_at(t)[0] - m.left_limit(t)[0]) < -1e-12:
            return True
    return False


def verify_gronwall(
    ensemble: GronwallEnsemble, variant: str, *, force: bool = False
) -> VerificationReport:
    """Monte Carlo check of E[(X*(T))^p] against the chosen explicit bound.

    Variant 'a' requires the ensemble's predictable-H certificate and variant
    'b' requires every M to be free of negative marked jumps; `force` skips
    the certificate gate (that is how the predictability counterexample is
    demonstrated).  The verdict is "holds" when the one-sided 99% upper
    confidence bound of the LHS stays below the bound.
    """
    p = ensemble.p
    T = ensemble.horizon
    if variant not in ("a", "b", "c"):
        raise ValueError(f"unknown variant {variant!r}")
    if not force:
        if variant == "a" and not ensemble.h_predictable:
            raise EnsembleError("variant 'a' needs the predictable-H certificate (or force=True)")
        if variant == "b":
            for r, m in enumerate(ensemble.m_paths):
                if _negative_marked_jump(m):
                    raise EnsembleError(
                        f"variant 'b' needs M without negative jumps; replication {r} has one"
                    )

    sup_p = np.array([x.window_sup(0.0, T) ** p for x in ensemble.x_paths])
    n = sup_p.size
    lhs = float(sup_p.mean())
    lhs_up = lhs + Z_ONE_SIDED * float(sup_p.std(ddof=1)) / math.sqrt(n) if n > 1 else lhs

    h_T = np.array([float(h.value_at(T)[0]) for h in ensemble.h_paths])
    h_stat = float((h_T ** p).mean()) if variant in ("a", "b") else float(h_T.mean())
    rhs = gronwall_bound(variant, p, ensemble.clock(T), h_stat)
    verdict = "holds" if lhs_up <= rhs else "violated"
    return VerificationReport(
        variant, p, lhs, lhs_up, rhs, verdict, n, ensemble.seed, ensemble.label
    )


# ---------------------------------------------------------------------------
# Domination lemma estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LenglartReport:
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float
    verdict: str
    replications: int
    parameters: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"


def _sup_pairs(x_paths: Iterable[CadlagPath], g_paths: Iterable[CadlagPath]):
    """Stream (sup X, sup G) per replication; the two ensembles are paired by
    index and consumed in lockstep, so generators stay memory-flat."""
    for x, g in zip(x_paths, g_paths):
        yield x.window_sup(x.start, x.end), g.window_sup(g.start, g.end)


def lenglart_tail(
    x_paths: Iterable[CadlagPath], g_paths: Iterable[CadlagPath], c: float, d: float
) -> LenglartReport:
    """Tail bound P(sup X > c) <= (1/c) E[sup G ^ d] + P(sup G >= d).

    The (X, G) pairs must satisfy the stopped-domination contract E[X(tau)] <=
    E[G(tau)] by construction; the shipped generators are certified.  Verdict
    holds when the 99% lower bound of the LHS does not exceed the 99% upper
    bound of the RHS (no extra slack).
    """
    if c <= 0 or d <= 0:
        raise ValueError("both c and d must be positive")
    lh, rh = [], []
    for sx, sg in _sup_pairs(x_paths, g_paths):
        lh.append(1.0 if sx > c else 0.0)
        rh.append(min(sg, d) / c + (1.0 if sg >= d else 0.0))
    lh = np.asarray(lh)
    rh = np.asarray(rh)
    n = lh.size
    l_m, r_m = float(lh.mean()), float(rh.mean())
    l_se = float(lh.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    r_se = float(rh.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    verdict = "holds" if l_m - Z_ONE_SIDED * l_se <= r_m + Z_ONE_SIDED * r_se else "violated"
    return LenglartReport(l_m, l_se, r_m, r_se, verdict, n, {"c": c, "d": d})


def lenglart_moment(
    x_paths: Iterable[CadlagPath], g_paths: Iterable[CadlagPath], p: float
) -> LenglartReport:
    """Moment bound E[(sup X)^p] <= c_p E[(sup G)^p] for p in (0, 1)."""
    cp = c_p(p)
    lh, rh = [], []
    for sx, sg in _sup_pairs(x_paths, g_paths):
        lh.append(sx ** p)
        rh.append(sg ** p)
    lh = np.asarray(lh)
    rh = np.asarray(rh)
    n = lh.size
    l_m = float(lh.mean())
    l_se = float(lh.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    r_m = cp * float(rh.mean())
    r_se = cp * (float(rh.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0)
    verdict = "holds" if l_m + Z_ONE_SIDED * l_se <= r_m else "violated"
    return LenglartReport(l_m, l_se, r_m, r_se, verdict, n, {"p": p})


# ---------------------------------------------------------------------------
# Certified dominated-pair generators
# ---------------------------------------------------------------------------


def brownian_square_pairs(
    replications: int,
    grid_n: int,
    seed: int,
    *,
    horizon: float = 1.0,
    chunk: int = 4096,
):
    """Certified pair X(t) = B(t)^2, G(t) = t on [0, horizon], on a uniform grid.

    E[B(tau)^2] = E[tau] for bounded stopping times, so G dominates X in the
    stopped-expectation sense; G is deterministic, hence predictable.  Returns
    (x_paths, g_paths) ready for the Lenglart estimators: X is generated in
    vectorised chunks to keep memory flat at large counts, G is the one
    shared deterministic path, repeated.
    """
    ts = np.linspace(0.0, horizon, grid_n + 1)
    g_path = CadlagPath(ts, ts[:, None].copy(), horizon)
    dt = horizon / grid_n

    def x_paths():
        done = 0
        chunk_idx = 0
        while done < replications:
            take = min(chunk, replications - done)
            rng = stream(seed, chunk_idx)
            incr = rng.standard_normal((take, grid_n)) * math.sqrt(dt)
            b = np.concatenate([np.zeros((take, 1)), np.cumsum(incr, axis=1)], axis=1)
            sq = b * b
            for r in range(take):
                yield CadlagPath._trusted(ts, sq[r][:, None], horizon)
            done += take
            chunk_idx += 1

    return x_paths(), (g_path for _ in range(replications))


def constant_pairs(value: float, replications: int, horizon: float = 1.0):
    """Deterministic pair X = G = const >= 0 (domination with equality)."""
    p = CadlagPath(np.array([0.0]), np.array([[float(value)]]), horizon)
    return [p] * replications, [p] * replications


# ---------------------------------------------------------------------------
# Two-point martingale counterexample
# ---------------------------------------------------------------------------


def _two_point_values(q: float, alpha: float) -> tuple[float, float]:
    """The up/down values of the two-point variable: up w.p. q, -down w.p. 1-q."""
    up = (1.0 - q) ** (1.0 - 1.0 / alpha) / q
    down = (1.0 - q) ** (-1.0 / alpha)
    return up, down


@dataclass(frozen=True)
class CounterexampleStats:
    q: float
    alpha: float
    p: float
    replications: int
    lhs_mc: float
    lhs_stderr: float
    lhs_exact: float
    h_moment_mc: float
    h_moment_stderr: float
    h_moment_exact: float
    mean_mc: float


def counterexample_stats(
    q: float, alpha: float, p: float, replications: int, seed: int, *, stream_index: int = 0
) -> CounterexampleStats:
    """Monte Carlo vs closed forms for the two-point construction.

    E[(S_+)^p] = (1-q)^{p(1 - 1/alpha)} q^{1-p} blows up as q -> 1 while
    E[(S_-)^alpha] = 1 identically: no q-uniform constant can bound the
    running-sup moment by the alpha-moment of the non-predictable H.
    """
    for name, v in (("q", q), ("alpha", alpha), ("p", p)):
        if not 0.0 < v < 1.0:
            raise ValueError(f"{name} must lie in (0,1), got {v}")
    up, down = _two_point_values(q, alpha)
    rng = stream(seed, stream_index)
    heads = rng.random(replications) < q
    s = np.where(heads, up, -down)
    pos_p = np.where(heads, up ** p, 0.0)
    neg_a = np.where(heads, 0.0, down ** alpha)
    n = replications
    lhs_exact = (1.0 - q) ** (p * (1.0 - 1.0 / alpha)) * q ** (1.0 - p)
    return CounterexampleStats(
        q,
        alpha,
        p,
        n,
        float(pos_p.mean()),
        float(pos_p.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0,
        lhs_exact,
        float(neg_a.mean()),
        float(neg_a.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0,
        1.0,
        float(s.mean()),
    )


def counterexample_ensemble(
    q: float, alpha: float, p: float, replications: int, seed: int
) -> GronwallEnsemble:
    """Gronwall ensemble for the two-point construction on [0, 1].

    M jumps by S at time 1, H absorbs the negative part, X = M + H = S_+, and
    A = 0.  The assumption holds with equality, but H is *not* predictable:
    its jump size is only revealed at time 1, which is exactly why the
    variant-'a' bound formula fails on it.
    """
    up, down = _two_point_values(q, alpha)
    rng = stream(seed, 0)
    heads = rng.random(replications) < q
    bp = np.array([0.0, 1.0])
    xs, ms, hs = [], [], []
    for h in heads:
        s = up if h else -down
        xs.append(CadlagPath(bp, np.array([[0.0], [max(s, 0.0)]]), 1.0, (1.0,)))
        ms.append(CadlagPath(bp, np.array([[0.0], [s]]), 1.0, (1.0,)))
        hs.append(CadlagPath(bp, np.array([[0.0], [max(-s, 0.0)]]), 1.0, (1.0,)))
    return GronwallEnsemble(
        xs,
        ms,
        hs,
        MonotoneFunction(lambda u: 0.0),
        horizon=1.0,
        p=p,
        h_predictable=False,
        seed=seed,
        label=f"two-point(q={q:g},alpha={alpha:g})",
    )


def gbm_squared_ensemble(
    replications: int,
    p: float,
    seed: int,
    *,
    mu: float = 0.05,
    sigma: float = 0.2,
    x0: float = 1.0,
    n: int = 64,
    horizon: float = 1.0,
    chunk: int = 4096,
) -> GronwallEnsemble:
    """Certified ensemble from the squared Euler scheme of a geometric diffusion.

    With S_{k+1} = S_k (1 + mu dt + sigma dW_k) and Y = S^2, the discrete
    identity Y_j = Y_0 + K sum_{k<j} Y_k dt + M_j holds exactly for K = 2 mu +
    sigma^2 + mu^2 dt when M is defined as the residual (a martingale: its
    increments are Y_k (2 sigma dW + 2 mu sigma dt dW + sigma^2 (dW^2 - dt))).
    Bounding the coercivity-style term K Y_k <= K (1 + Y_k) yields the
    assumption inequality with the linear clock A(u) = K u and deterministic
    H(t) = Y_0 + K t, so H is predictable and M has no (marked) jumps at all.
    """
    steps = round(n * horizon)
    if abs(steps - n * horizon) > 1e-9 or steps < 1:
        raise ValueError("horizon must be a whole number of 1/n cells")
    dt = horizon / steps
    K = 2.0 * mu + sigma * sigma + mu * mu * dt
    ts = np.arange(steps + 1) * dt
    h_path = CadlagPath(ts, (x0 * x0 + K * ts)[:, None].copy(), horizon)
    xs, ms = [], []
    done = 0
    chunk_idx = 0
    while done < replications:
        take = min(chunk, replications - done)
        rng = stream(seed, chunk_idx)
        dW = rng.standard_normal((take, steps)) * math.sqrt(dt)
        s = np.empty((take, steps + 1))
        s[:, 0] = x0
        for k in range(steps):
            s[:, k + 1] = s[:, k] * (1.0 + mu * dt + sigma * dW[:, k])
        y = s * s
        drift_cum = np.concatenate(
            [np.zeros((take, 1)), np.cumsum(K * y[:, :-1] * dt, axis=1)], axis=1
        )
        m = y - y[:, :1] - drift_cum
        for r in range(take):
            xs.append(CadlagPath._trusted(ts, y[r][:, None], horizon))
            ms.append(CadlagPath._trusted(ts, m[r][:, None], horizon))
        done += take
        chunk_idx += 1
    return GronwallEnsemble(
        xs,
        ms,
        [h_path] * replications,
        MonotoneFunction(lambda u, _K=K: _K * u),
        horizon=horizon,
        p=p,
        h_predictable=True,
        seed=seed,
        label=f"gbm-squared(mu={mu:g},sigma={sigma:g},n={n})",
    )
