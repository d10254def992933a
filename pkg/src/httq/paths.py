"""Cadlag sample paths on [0, T] with exact path algebra.

Two interpolation kinds cover everything the library produces:

* ``"step"``   -- right-continuous piecewise-constant paths (counting
  processes, queue lengths).  The path holds ``values[k]`` on
  ``[times[k], times[k+1])`` and ``values[-1]`` up to the horizon.
* ``"linear"`` -- continuous piecewise-linear paths (integrals,
  compensators, Brownian samples tabulated on a grid).

Evaluation, left limits, sup-norms, and integrals are exact for the stored
representation; there is no hidden resampling.  Arithmetic requires matching
kinds and merges breakpoints exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["CadlagPath", "step_path", "linear_path", "counting_path", "uniform_grid"]


def uniform_grid(horizon: float, step: float) -> np.ndarray:
    """Uniform grid 0, step, ..., horizon; horizon must be a multiple of step."""
    if horizon <= 0 or step <= 0:
        raise ValueError("horizon and step must be positive")
    m = round(horizon / step)
    if abs(m * step - horizon) > 1e-9 * max(1.0, horizon):
        raise ValueError(f"horizon {horizon} is not an integer multiple of step {step}")
    return np.linspace(0.0, horizon, m + 1)


@dataclass(frozen=True)
class CadlagPath:
    """A cadlag path on [0, horizon].

    Parameters
    ----------
    times : ndarray
        Strictly increasing breakpoints, ``times[0] == 0``.
    values : ndarray
        Path values at the breakpoints (right-continuous for steps).
    kind : str
        ``"step"`` or ``"linear"``.
    horizon : float
        Right end of the domain, at least ``times[-1]``.
    """

    times: np.ndarray
    values: np.ndarray
    kind: str
    horizon: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or v.shape != t.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if t.size == 0:
            raise ValueError("path needs at least one breakpoint")
        if t[0] != 0.0:
            raise ValueError("paths start at time 0")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if self.kind not in ("step", "linear"):
            raise ValueError(f"unknown path kind {self.kind!r}")
        if self.horizon < t[-1] - 1e-12:
            raise ValueError("horizon precedes the last breakpoint")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "horizon", float(self.horizon))

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t):
        """Right-continuous evaluation, vectorized; flat after the last breakpoint."""
        t = np.asarray(t, dtype=float)
        if np.any(t < -1e-12) or np.any(t > self.horizon + 1e-9):
            raise ValueError("evaluation outside [0, horizon]")
        if self.kind == "step":
            idx = np.searchsorted(self.times, t, side="right") - 1
            idx = np.clip(idx, 0, self.times.size - 1)
            out = self.values[idx]
        else:
            out = np.interp(t, self.times, self.values)
        return out if out.ndim else float(out)

    def left_limit(self, t):
        """Left limit x(t-); at t = 0 returns x(0)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "linear":
            return self(t)
        idx = np.searchsorted(self.times, t, side="left") - 1
        idx = np.clip(idx, 0, self.times.size - 1)
        out = self.values[idx]
        return out if out.ndim else float(out)

    # -- exact path functionals ----------------------------------------------

    def _window(self, a: float, b: float) -> tuple[float, float]:
        b = self.horizon if b is None else float(b)
        if not (0.0 <= a <= b <= self.horizon + 1e-9):
            raise ValueError("window must satisfy 0 <= a <= b <= horizon")
        return float(a), min(b, self.horizon)

    def sup_norm(self, a: float = 0.0, b: float | None = None) -> float:
        """sup over [a, b] of |x(t)|, exact for the stored representation."""
        a, b = self._window(a, b)
        lo = np.searchsorted(self.times, a, side="right")
        hi = np.searchsorted(self.times, b, side="right")
        inner = np.abs(self.values[lo:hi])
        cand = inner.max() if inner.size else 0.0
        return float(max(cand, abs(self(a)), abs(self(b))))

    def min_value(self, a: float = 0.0, b: float | None = None) -> float:
        a, b = self._window(a, b)
        lo = np.searchsorted(self.times, a, side="right")
        hi = np.searchsorted(self.times, b, side="right")
        inner = self.values[lo:hi]
        cand = inner.min() if inner.size else np.inf
        return float(min(cand, self(a), self(b)))

    def integral(self, a: float = 0.0, b: float | None = None) -> float:
        """int_a^b x(s) ds, exact."""
        a, b = self._window(a, b)
        if b <= a:
            return 0.0
        # Breakpoints interior to (a, b), plus the endpoints.
        lo = np.searchsorted(self.times, a, side="right")
        hi = np.searchsorted(self.times, b, side="left")
        knots = np.concatenate(([a], self.times[lo:hi], [b]))
        if self.kind == "step":
            vals = self(knots[:-1])
            return float(np.sum(np.atleast_1d(vals) * np.diff(knots)))
        vals = self(knots)
        return float(np.trapezoid(vals, knots))

    def cumulative_integral(self) -> "CadlagPath":
        """t -> int_0^t x(s) ds as a linear path on the same breakpoints."""
        t = self.times
        if self.kind == "step":
            segs = self.values[:-1] * np.diff(t)
            cum = np.concatenate(([0.0], np.cumsum(segs)))
        else:
            cum = np.concatenate(
                ([0.0], np.cumsum(0.5 * (self.values[1:] + self.values[:-1]) * np.diff(t)))
            )
        if self.horizon > t[-1]:
            tail = self.values[-1] * (self.horizon - t[-1])
            t = np.concatenate((t, [self.horizon]))
            cum = np.concatenate((cum, [cum[-1] + tail]))
        return CadlagPath(t, cum, "linear", self.horizon)

    # -- algebra --------------------------------------------------------------

    def map_values(self, fn) -> "CadlagPath":
        """Apply fn to the breakpoint values.

        Exact for step paths and any fn; for linear paths this interpolates
        fn(x) between knots (exact only when fn is affine between knot values).
        """
        return CadlagPath(self.times, fn(self.values), self.kind, self.horizon)

    def pos_part(self) -> "CadlagPath":
        return self.map_values(lambda v: np.maximum(v, 0.0))

    def neg_part(self) -> "CadlagPath":
        return self.map_values(lambda v: np.maximum(-v, 0.0))

    def scale(self, c: float) -> "CadlagPath":
        return CadlagPath(self.times, c * self.values, self.kind, self.horizon)

    def shift_values(self, c: float) -> "CadlagPath":
        return CadlagPath(self.times, self.values + c, self.kind, self.horizon)

    def add(self, other: "CadlagPath") -> "CadlagPath":
        if self.kind != other.kind:
            raise ValueError("cannot add paths of different kinds exactly")
        if abs(self.horizon - other.horizon) > 1e-9:
            raise ValueError("horizons differ")
        t = np.union1d(self.times, other.times)
        return CadlagPath(t, self(t) + other(t), self.kind, self.horizon)

    def sub(self, other: "CadlagPath") -> "CadlagPath":
        return self.add(other.scale(-1.0))

    def sampled(self, grid: np.ndarray) -> np.ndarray:
        return np.asarray(self(np.asarray(grid, dtype=float)))

    def to_csv(self, path, header: str | None = None, step: float | None = None) -> None:
        """Write (t, value) rows; `step` densifies onto a uniform grid."""
        if step is None:
            t, v = self.times, self.values
        else:
            t = uniform_grid(self.horizon, step)
            v = self.sampled(t)
        with open(path, "w") as fh:
            if header:
                fh.write(header if header.endswith("\n") else header + "\n")
            fh.write("t,value\n")
            for ti, vi in zip(t, v):
                fh.write(f"{float(ti)!r},{float(vi)!r}\n")


def step_path(times, values, horizon: float) -> CadlagPath:
    return CadlagPath(np.asarray(times, float), np.asarray(values, float), "step", horizon)


def linear_path(times, values, horizon: float) -> CadlagPath:
    return CadlagPath(np.asarray(times, float), np.asarray(values, float), "linear", horizon)


def counting_path(event_times, horizon: float, weight: float = 1.0) -> CadlagPath:
    """Step path counting events: t -> weight * #{i : event_times[i] <= t}.

    Event times need not be distinct; simultaneous events coalesce into one
    breakpoint carrying the cumulative count.
    """
    ev = np.sort(np.asarray(event_times, dtype=float))
    if ev.size and (ev[0] < 0 or ev[-1] > horizon + 1e-9):
        raise ValueError("event times outside [0, horizon]")
    counts = np.arange(1, ev.size + 1, dtype=float) * weight
    keep = np.ones(ev.size, dtype=bool)
    if ev.size > 1:
        keep[:-1] = np.diff(ev) > 0  # keep last event at each distinct time
    t = ev[keep]
    v = counts[keep]
    if t.size == 0 or t[0] > 0.0:
        t = np.concatenate(([0.0], t))
        v = np.concatenate(([0.0], v))
    return CadlagPath(t, v, "step", horizon)
