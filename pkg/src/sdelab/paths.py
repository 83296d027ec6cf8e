"""Right-continuous piecewise-constant paths on [start, end].

A path holds one d-dimensional value per half-open segment [t_i, t_{i+1});
the final segment runs through the closed right endpoint of the domain.
Piecewise-constant storage makes left limits and windowed suprema exact and
O(log m) per query, which is all the Euler scheme and the pure-jump noise
ever produce (drift variation within a step is absorbed by grid refinement).

Breakpoints that correspond to genuine discontinuities of the modelled
process (Poisson events, martingale jumps) can be marked via `jump_times`;
unmarked breakpoints are discretisation artifacts.  Certifications such as
"no negative jumps" look only at marked times.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PathDomainError

__all__ = ["CadlagPath", "constant_path", "PathBuilder", "sup_distance", "write_path_csv"]


@dataclass(frozen=True)
class CadlagPath:
    breakpoints: np.ndarray          # (m,) strictly increasing, breakpoints[0] == start
    values: np.ndarray               # (m, d); values[i] on [t_i, t_{i+1})
    end: float                       # domain right endpoint, >= breakpoints[-1]
    jump_times: tuple = ()           # marked genuine discontinuities (subset of breakpoints[1:])

    def __post_init__(self):
        bp = np.ascontiguousarray(np.asarray(self.breakpoints, dtype=float))
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        vals = np.ascontiguousarray(vals)
        if bp.ndim != 1 or bp.size == 0:
            raise ValueError("breakpoints must be a non-empty 1-d sequence")
        if vals.shape[0] != bp.shape[0]:
            raise ValueError(
                f"need one value per segment: {bp.shape[0]} breakpoints vs {vals.shape[0]} values"
            )
        if bp.size > 1 and not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not np.isfinite(bp).all():
            raise ValueError("breakpoints must be finite")
        end = float(self.end)
        if end < bp[-1]:
            raise ValueError(f"end={end} lies before the last breakpoint {bp[-1]}")
        bp.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "end", end)
        object.__setattr__(self, "jump_times", tuple(float(t) for t in self.jump_times))

    @classmethod
    def _trusted(cls, breakpoints, values, end, jump_times=()) -> "CadlagPath":
        """Construct without validation.  Internal use on arrays the builder already owns."""
        p = object.__new__(cls)
        object.__setattr__(p, "breakpoints", breakpoints)
        object.__setattr__(p, "values", values)
        object.__setattr__(p, "end", end)
        object.__setattr__(p, "jump_times", jump_times)
        return p

    # -- basic geometry ------------------------------------------------

    @property
    def start(self) -> float:
        return float(self.breakpoints[0])

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    def _check_domain(self, t: float):
        if t < self.breakpoints[0] or t > self.end:
            raise PathDomainError(
                f"t={t} outside path domain [{self.breakpoints[0]}, {self.end}]"
            )

    # -- queries ---------------------------------------------------------

    def value_at(self, t: float) -> np.ndarray:
        """Value of the segment containing t (right-continuous)."""
        self._check_domain(t)
        i = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.values[i]

    def left_limit(self, t: float) -> np.ndarray:
        """Value of the segment immediately preceding t; requires t > start."""
        self._check_domain(t)
        if t <= self.breakpoints[0]:
            raise PathDomainError(f"left limit undefined at or before start ({t})")
        i = int(np.searchsorted(self.breakpoints, t, side="left")) - 1
        return self.values[i]

    def window_sup(self, a: float, b: float, *, include_right: bool = True) -> float:
        """sup of the euclidean norm |x(t)| over t in [a, b] (or [a, b) if not include_right).

        For a piecewise-constant path this is the exact max over segments
        meeting the window; the closed version includes the value AT b.
        """
        if a > b:
            raise ValueError(f"empty window: a={a} > b={b}")
        self._check_domain(a)
        self._check_domain(b)
        lo = int(np.searchsorted(self.breakpoints, a, side="right")) - 1
        if include_right:
            hi = int(np.searchsorted(self.breakpoints, b, side="right")) - 1
        else:
            if b <= a:
                raise ValueError(f"half-open window [{a}, {b}) is empty")
            hi = int(np.searchsorted(self.breakpoints, b, side="left")) - 1
        chunk = self.values[lo : hi + 1]
        if chunk.shape[1] == 1:
            return float(np.max(np.abs(chunk)))
        return float(np.sqrt(np.max(np.einsum("ij,ij->i", chunk, chunk))))

    def history(self, t: float) -> "CadlagPath":
        """The path frozen at t: equal to self on [start, t], constant afterwards.

        Idempotent; the frozen value propagates through the rest of the domain.
        """
        self._check_domain(t)
        hi = int(np.searchsorted(self.breakpoints, t, side="right"))
        jumps = tuple(j for j in self.jump_times if j <= t)
        return CadlagPath._trusted(self.breakpoints[:hi], self.values[:hi], self.end, jumps)

    # -- convenience ------------------------------------------------------

    def scalar_at(self, t: float) -> float:
        """value_at for 1-d paths, unwrapped to a float."""
        v = self.value_at(t)
        if v.shape != (1,):
            raise ValueError("scalar_at is only defined for 1-d paths")
        return float(v[0])

    def restrict(self, a: float, b: float) -> "CadlagPath":
        """Sub-path on [a, b] (a, b must lie in the domain)."""
        self._check_domain(a)
        self._check_domain(b)
        if a > b:
            raise ValueError(f"empty restriction: a={a} > b={b}")
        lo = int(np.searchsorted(self.breakpoints, a, side="right")) - 1
        hi = int(np.searchsorted(self.breakpoints, b, side="right"))
        bp = self.breakpoints[lo:hi].copy()
        bp[0] = a
        jumps = tuple(j for j in self.jump_times if a < j <= b)
        return CadlagPath(bp, self.values[lo:hi].copy(), b, jumps)


def constant_path(value, start: float, end: float) -> CadlagPath:
    """Path identically equal to `value` on [start, end]."""
    v = np.atleast_1d(np.asarray(value, dtype=float))
    return CadlagPath(np.array([start], dtype=float), v[None, :], end)


class PathBuilder:
    """Incremental construction of a CadlagPath with cheap frozen snapshots.

    The solver appends (time, value) pairs in increasing time order and takes
    a frozen view of the history built so far once per Euler cell.  Views
    share the underlying buffers; appends only ever touch indices beyond any
    existing view, so views stay valid.
    """

    def __init__(self, seed_path: CadlagPath, end: float, capacity_hint: int = 64):
        if end < seed_path.end:
            raise ValueError("builder end must extend the seed path")
        m, d = seed_path.values.shape
        cap = max(capacity_hint + m, 2 * m)
        self._bp = np.empty(cap, dtype=float)
        self._vals = np.empty((cap, d), dtype=float)
        self._bp[:m] = seed_path.breakpoints
        self._vals[:m] = seed_path.values
        self._n = m
        self._end = float(end)
        self._jumps: list[float] = list(seed_path.jump_times)

    def _grow(self):
        cap = 2 * self._bp.shape[0]
        bp = np.empty(cap, dtype=float)
        vals = np.empty((cap, self._vals.shape[1]), dtype=float)
        bp[: self._n] = self._bp[: self._n]
        vals[: self._n] = self._vals[: self._n]
        self._bp, self._vals = bp, vals

    def append(self, t: float, value: np.ndarray, *, jump: bool = False):
        if self._n == self._bp.shape[0]:
            self._grow()
        if t <= self._bp[self._n - 1]:
            raise ValueError(f"appends must strictly increase in time ({t})")
        self._bp[self._n] = t
        self._vals[self._n] = value
        self._n += 1
        if jump:
            self._jumps.append(float(t))

    @property
    def last_time(self) -> float:
        return float(self._bp[self._n - 1])

    @property
    def last_value(self) -> np.ndarray:
        return self._vals[self._n - 1]

    def freeze(self) -> CadlagPath:
        """Frozen view of everything appended so far, on the full domain."""
        return CadlagPath._trusted(
            self._bp[: self._n], self._vals[: self._n], self._end, tuple(self._jumps)
        )

    def finish(self) -> CadlagPath:
        p = self.freeze()
        p.breakpoints.setflags(write=False)
        p.values.setflags(write=False)
        return p


def sup_distance(p: CadlagPath, q: CadlagPath, a: float, b: float) -> float:
    """sup over [a, b] of |p(t) - q(t)| for two piecewise-constant paths.

    Exact: evaluated on the union of breakpoints inside the window plus both
    endpoints.
    """
    if a > b:
        raise ValueError(f"empty window: a={a} > b={b}")
    pts = np.union1d(p.breakpoints, q.breakpoints)
    pts = pts[(pts > a) & (pts <= b)]
    pts = np.concatenate(([a], pts, [b]))
    best = 0.0
    for t in pts:
        diff = p.value_at(t) - q.value_at(t)
        best = max(best, float(np.sqrt(diff @ diff)))
    return best


def write_path_csv(path: CadlagPath, fh):
    """Dump a path as CSV: one row per breakpoint, columns t, x_1..x_d."""
    d = path.dimension
    fh.write("t," + ",".join(f"x_{i+1}" for i in range(d)) + "\n")
    for t, row in zip(path.breakpoints, path.values):
        fh.write(repr(float(t)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
