"""Patience (abandonment) laws under diffusion scaling.

The n-th system's patience cdf F_n must satisfy sqrt(n) * F_n(x / sqrt(n))
-> f(x) for a nondecreasing, locally Lipschitz limit f with f(0) = 0.  Three
constructions are supported:

``no_scaling``
    One fixed law F for every n; the limit is f(x) = F'(0+) * x.  The slope
    is analytic per family (exponential -> rate, uniform(0, b) -> 1/b,
    multi-stage erlang and lognormal -> 0, ...).

``hazard_rate``
    F_n(x) = 1 - exp(-int_0^x h(sqrt(n) t) dt) for a given hazard h; the
    limit is f(x) = int_0^x h(t) dt.  The integrated hazard is tabulated by
    cumulative trapezoid with step 1e-3 on the needed range, extended on
    demand.

``direct_f``
    F_n(x) = min(1, f(sqrt(n) x) / sqrt(n)), which makes the scaling identity
    exact at every n where f(x) <= sqrt(n).

Hazards that stop accumulating mass (integrable h) and bounded f produce
defective patience laws at finite n; samplers then return ``inf`` (the
customer never abandons), which the simulator treats exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .distributions import DistributionSpec
from .paths import CadlagPath, linear_path

__all__ = ["PatienceSpec", "limit_f", "constant_hazard", "ramp_hazard", "power_limit"]

_HAZARD_STEP = 1e-3
_PROBE_HI = 8.0
_MAX_TABLE = 1 << 23  # hard cap on integrated-hazard table length


# -- picklable building blocks for declarative configs -------------------------


def _const(theta: float, t):
    return np.full_like(np.asarray(t, dtype=float), theta)


def _ramp(slope: float, t):
    return slope * np.asarray(t, dtype=float)


def _power(coeff: float, exponent: float, x):
    return coeff * np.asarray(x, dtype=float) ** exponent


def constant_hazard(theta: float):
    """h(t) = theta; hazard-mode equivalent of exponential patience."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    return partial(_const, float(theta))


def ramp_hazard(slope: float):
    """h(t) = slope * t, so f(x) = slope * x^2 / 2."""
    if slope <= 0:
        raise ValueError("slope must be positive")
    return partial(_ramp, float(slope))


def power_limit(coeff: float, exponent: float = 1.0):
    """f(x) = coeff * x^exponent for direct_f mode (exponent >= 1)."""
    if coeff <= 0 or exponent < 1.0:
        raise ValueError("need coeff > 0 and exponent >= 1 (local Lipschitz at 0)")
    return partial(_power, float(coeff), float(exponent))


class _CumHazard:
    """Adaptive cumulative-trapezoid table of z -> int_0^z h."""

    def __init__(self, hazard):
        self._h = hazard
        self._z = np.array([0.0])
        self._c = np.array([0.0])
        self._extend_to(16.0)

    def _extend_to(self, z_hi: float) -> None:
        if z_hi <= self._z[-1]:
            return
        npts = round((z_hi - self._z[-1]) / _HAZARD_STEP)
        if self._z.size + npts > _MAX_TABLE:
            raise RuntimeError(
                f"integrated hazard table would exceed {_MAX_TABLE} points; "
                "hazard decays too slowly to invert this far out"
            )
        z_new = self._z[-1] + _HAZARD_STEP * np.arange(1, npts + 1)
        h_new = np.asarray(self._h(np.concatenate(([self._z[-1]], z_new))), dtype=float)
        if np.any(h_new < 0) or not np.all(np.isfinite(h_new)):
            raise ValueError("hazard must be finite and nonnegative")
        inc = 0.5 * (h_new[1:] + h_new[:-1]) * _HAZARD_STEP
        self._z = np.concatenate((self._z, z_new))
        self._c = np.concatenate((self._c, self._c[-1] + np.cumsum(inc)))

    def value(self, z):
        """Integrated hazard at z (vectorized)."""
        z = np.asarray(z, dtype=float)
        zmax = float(z.max()) if z.size else 0.0
        if zmax > self._z[-1]:
            self._extend_to(zmax * 1.25)
        return np.interp(z, self._z, self._c)

    def inverse(self, target):
        """Generalized inverse: smallest z with cum(z) >= target; inf if unreachable."""
        target = np.asarray(target, dtype=float)
        out = np.empty_like(target)
        need = float(target.max()) if target.size else 0.0
        # Extend until the table covers every target or visibly plateaus.
        while self._c[-1] < need:
            before = self._c[-1]
            try:
                self._extend_to(2.0 * self._z[-1])
            except RuntimeError:
                break
            if self._c[-1] - before < 1e-12:
                break  # integrable hazard: remaining mass unreachable
        idx = np.searchsorted(self._c, target, side="left")
        unreachable = idx >= self._c.size
        idx = np.minimum(idx, self._c.size - 1)
        z_hi = self._z[idx]
        c_hi = self._c[idx]
        z_lo = self._z[np.maximum(idx - 1, 0)]
        c_lo = self._c[np.maximum(idx - 1, 0)]
        dc = c_hi - c_lo
        frac = np.where(dc > 0, (target - c_lo) / np.where(dc > 0, dc, 1.0), 0.0)
        out = z_lo + frac * (z_hi - z_lo)
        out = np.where(target <= 0, 0.0, out)
        return np.where(unreachable, np.inf, out)


_cum_hazard_cache: dict = {}


def _cum_hazard(spec: "PatienceSpec") -> _CumHazard:
    tab = _cum_hazard_cache.get(spec)
    if tab is None:
        tab = _CumHazard(spec.hazard)
        _cum_hazard_cache[spec] = tab
    return tab


@dataclass(frozen=True)
class PatienceSpec:
    mode: str
    distribution: DistributionSpec | None = None
    hazard: object = None  # vectorized callable t -> h(t)
    f: object = None  # vectorized callable x -> f(x)

    @staticmethod
    def no_scaling(distribution: DistributionSpec) -> "PatienceSpec":
        if float(distribution.cdf(0.0)) != 0.0:
            raise ValueError("patience law must have no atom at 0")
        return PatienceSpec("no_scaling", distribution=distribution)

    @staticmethod
    def hazard_rate(hazard) -> "PatienceSpec":
        spec = PatienceSpec("hazard_rate", hazard=hazard)
        spec._validate_probe()
        return spec

    @staticmethod
    def direct_f(f) -> "PatienceSpec":
        spec = PatienceSpec("direct_f", f=f)
        spec._validate_probe()
        return spec

    def __post_init__(self):
        if self.mode not in ("no_scaling", "hazard_rate", "direct_f"):
            raise ValueError(f"unknown patience mode {self.mode!r}")

    def _validate_probe(self) -> None:
        grid = np.arange(0.0, _PROBE_HI + _HAZARD_STEP, _HAZARD_STEP)
        if self.mode == "hazard_rate":
            h = np.asarray(self.hazard(grid), dtype=float)
            if h.shape != grid.shape:
                raise ValueError("hazard must be vectorized (shape-preserving)")
            if np.any(h < 0) or not np.all(np.isfinite(h)):
                raise ValueError("hazard must be finite and nonnegative on the probe grid")
        else:
            v = np.asarray(self.f(grid), dtype=float)
            if v.shape != grid.shape:
                raise ValueError("f must be vectorized (shape-preserving)")
            if abs(v[0]) > 1e-12:
                raise ValueError("f(0) must be 0")
            if np.any(np.diff(v) < -1e-12):
                raise ValueError("f must be nondecreasing")
            slopes = np.diff(v) / _HAZARD_STEP
            if not np.all(np.isfinite(slopes)):
                raise ValueError("f must be locally Lipschitz on the probe grid")

    # -- limit ------------------------------------------------------------------

    def limit_function(self):
        """The scaling limit f as a vectorized callable."""
        if self.mode == "no_scaling":
            slope = self.distribution.density_at_zero()

            def f(x, _s=slope):
                return _s * np.asarray(x, dtype=float)

            return f
        if self.mode == "hazard_rate":
            tab = _cum_hazard(self)
            return tab.value
        return self.f

    # -- finite-n law -------------------------------------------------------------

    def cdf_n(self, n: int):
        """Vectorized cdf of the n-th system's patience law."""
        rootn = math.sqrt(n)
        if self.mode == "no_scaling":
            return self.distribution.cdf
        if self.mode == "hazard_rate":
            tab = _cum_hazard(self)

            def cdf(x, _t=tab, _r=rootn):
                x = np.maximum(np.asarray(x, dtype=float), 0.0)
                return -np.expm1(-_t.value(_r * x) / _r)

            return cdf

        def cdf(x, _f=self.f, _r=rootn):
            x = np.maximum(np.asarray(x, dtype=float), 0.0)
            return np.minimum(1.0, np.asarray(_f(_r * x), dtype=float) / _r)

        return cdf

    def sampler_n(self, n: int):
        """Vectorized sampler from the n-th patience law; defective mass -> inf."""
        rootn = math.sqrt(n)
        if self.mode == "no_scaling":
            dist = self.distribution

            def draw(rng: np.random.Generator, size: int, _d=dist) -> np.ndarray:
                return _d.sample(rng, size)

            return draw
        if self.mode == "hazard_rate":
            tab = _cum_hazard(self)

            def draw(rng: np.random.Generator, size: int, _t=tab, _r=rootn) -> np.ndarray:
                u = rng.random(size)
                target = -_r * np.log1p(-u)
                return _t.inverse(target) / _r

            return draw

        def draw(rng: np.random.Generator, size: int, _f=self.f, _r=rootn) -> np.ndarray:
            u = rng.random(size)
            return _invert_f(_f, u * _r) / _r

        return draw

    def to_dict(self) -> dict:
        if self.mode == "no_scaling":
            return {"mode": "no_scaling", "distribution": self.distribution.to_dict()}
        kind = "hazard" if self.mode == "hazard_rate" else "f"
        fn = self.hazard if self.mode == "hazard_rate" else self.f
        if isinstance(fn, partial) and fn.func in (_const, _ramp, _power):
            names = {_const: ("constant", ("theta",)), _ramp: ("ramp", ("slope",)),
                     _power: ("power", ("coeff", "exponent"))}
            label, keys = names[fn.func]
            return {"mode": self.mode, kind: {"kind": label, **dict(zip(keys, fn.args))}}
        raise ValueError("only declarative hazard/f forms serialize to JSON")

    @staticmethod
    def from_dict(d: dict) -> "PatienceSpec":
        allowed = {"mode", "distribution", "hazard", "f"}
        unknown = sorted(set(d) - allowed)
        if unknown:
            raise ValueError(f"unknown keys in patience spec: {unknown}")
        mode = d.get("mode")
        if mode == "no_scaling":
            return PatienceSpec.no_scaling(DistributionSpec.from_dict(d["distribution"]))
        if mode not in ("hazard_rate", "direct_f"):
            raise ValueError(f"unknown patience mode {mode!r}")
        key = "hazard" if mode == "hazard_rate" else "f"
        form = d.get(key)
        if not isinstance(form, dict) or "kind" not in form:
            raise ValueError(f"patience mode {mode} needs a declarative {key!r} object")
        kind = form["kind"]
        args = {k: v for k, v in form.items() if k != "kind"}
        builders = {"constant": constant_hazard, "ramp": ramp_hazard, "power": power_limit}
        if kind not in builders:
            raise ValueError(f"unknown {key} kind {kind!r}; known: {sorted(builders)}")
        fn = builders[kind](**args)
        return PatienceSpec.hazard_rate(fn) if mode == "hazard_rate" else PatienceSpec.direct_f(fn)


def _invert_f(f, targets: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Smallest z >= 0 with f(z) >= target, by vectorized bisection; inf if none."""
    targets = np.asarray(targets, dtype=float)
    hi = np.full_like(targets, 1.0)
    # Grow brackets until they cover their targets or stop making progress.
    for _ in range(80):
        vals = np.asarray(f(hi), dtype=float)
        short = vals < targets
        if not np.any(short):
            break
        hi = np.where(short, hi * 2.0, hi)
        if float(hi.max()) > 1e24:
            break
    vals = np.asarray(f(hi), dtype=float)
    unreachable = vals < targets
    lo = np.zeros_like(targets)
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        below = np.asarray(f(mid), dtype=float) < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if float((hi - lo).max()) < tol:
            break
    out = 0.5 * (lo + hi)
    out = np.where(targets <= 0, 0.0, out)
    return np.where(unreachable, np.inf, out)


def limit_f(spec: PatienceSpec, grid: np.ndarray) -> CadlagPath:
    """Tabulate the scaling limit f on a grid as a linear path."""
    grid = np.asarray(grid, dtype=float)
    f = spec.limit_function()
    return linear_path(grid, np.asarray(f(grid), dtype=float), horizon=float(grid[-1]))
