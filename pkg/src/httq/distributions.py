"""Positive service/interarrival/patience distribution families.

A :class:`DistributionSpec` is a frozen, picklable description of one of six
families.  It knows its moments, cdf, the density at the origin (the only
local datum the conventional-regime patience limit needs), and how to draw
vectorized samples from a numpy Generator.

Families and parameters:

====================  =======================================
exponential           rate > 0
deterministic         value > 0
erlang                shape (integer stages >= 1), rate > 0
hyperexponential      probs (sum to 1), rates (elementwise > 0)
lognormal             mu (log-mean), sigma > 0
uniform               0 <= lo < hi
====================  =======================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = ["DistributionSpec", "ArrivalSpec"]

_FAMILIES = ("exponential", "deterministic", "erlang", "hyperexponential", "lognormal", "uniform")


@dataclass(frozen=True)
class DistributionSpec:
    family: str
    params: tuple  # tuple of (name, value) pairs, order fixed per family

    # -- constructors --------------------------------------------------------

    @staticmethod
    def exponential(rate: float) -> "DistributionSpec":
        if rate <= 0:
            raise ValueError("exponential rate must be positive")
        return DistributionSpec("exponential", (("rate", float(rate)),))

    @staticmethod
    def deterministic(value: float) -> "DistributionSpec":
        if value <= 0:
            raise ValueError("deterministic value must be positive (atom at 0 rejected)")
        return DistributionSpec("deterministic", (("value", float(value)),))

    @staticmethod
    def erlang(shape: int, rate: float) -> "DistributionSpec":
        if int(shape) != shape or shape < 1:
            raise ValueError("erlang shape must be an integer >= 1")
        if rate <= 0:
            raise ValueError("erlang rate must be positive")
        return DistributionSpec("erlang", (("shape", int(shape)), ("rate", float(rate))))

    @staticmethod
    def hyperexponential(probs, rates) -> "DistributionSpec":
        p = np.asarray(probs, dtype=float)
        r = np.asarray(rates, dtype=float)
        if p.shape != r.shape or p.ndim != 1 or p.size == 0:
            raise ValueError("probs and rates must be 1-d arrays of equal length")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        if np.any(r <= 0):
            raise ValueError("rates must be positive")
        return DistributionSpec(
            "hyperexponential", (("probs", tuple(p.tolist())), ("rates", tuple(r.tolist())))
        )

    @staticmethod
    def lognormal(mu: float, sigma: float) -> "DistributionSpec":
        if sigma <= 0:
            raise ValueError("lognormal sigma must be positive")
        return DistributionSpec("lognormal", (("mu", float(mu)), ("sigma", float(sigma))))

    @staticmethod
    def uniform(lo: float, hi: float) -> "DistributionSpec":
        if not (0 <= lo < hi):
            raise ValueError("uniform needs 0 <= lo < hi")
        return DistributionSpec("uniform", (("lo", float(lo)), ("hi", float(hi))))

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; known: {_FAMILIES}")

    def __getitem__(self, key: str):
        for k, v in self.params:
            if k == key:
                return v
        raise KeyError(key)

    # -- moments --------------------------------------------------------------

    def mean(self) -> float:
        f = self.family
        if f == "exponential":
            return 1.0 / self["rate"]
        if f == "deterministic":
            return self["value"]
        if f == "erlang":
            return self["shape"] / self["rate"]
        if f == "hyperexponential":
            p = np.asarray(self["probs"])
            r = np.asarray(self["rates"])
            return float(np.sum(p / r))
        if f == "lognormal":
            return math.exp(self["mu"] + 0.5 * self["sigma"] ** 2)
        return 0.5 * (self["lo"] + self["hi"])

    def var(self) -> float:
        f = self.family
        if f == "exponential":
            return 1.0 / self["rate"] ** 2
        if f == "deterministic":
            return 0.0
        if f == "erlang":
            return self["shape"] / self["rate"] ** 2
        if f == "hyperexponential":
            p = np.asarray(self["probs"])
            r = np.asarray(self["rates"])
            return float(np.sum(2.0 * p / r**2) - np.sum(p / r) ** 2)
        if f == "lognormal":
            s2 = self["sigma"] ** 2
            return (math.exp(s2) - 1.0) * math.exp(2.0 * self["mu"] + s2)
        return (self["hi"] - self["lo"]) ** 2 / 12.0

    def scv(self) -> float:
        """Squared coefficient of variation, var / mean^2."""
        return self.var() / self.mean() ** 2

    # -- law -------------------------------------------------------------------

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        f = self.family
        if f == "exponential":
            out = -np.expm1(-self["rate"] * np.maximum(x, 0.0))
        elif f == "deterministic":
            out = (x >= self["value"]).astype(float)
        elif f == "erlang":
            out = special.gammainc(self["shape"], self["rate"] * np.maximum(x, 0.0))
        elif f == "hyperexponential":
            p = np.asarray(self["probs"])
            r = np.asarray(self["rates"])
            xx = np.maximum(x, 0.0)[..., None]
            out = np.sum(p * -np.expm1(-r * xx), axis=-1)
        elif f == "lognormal":
            out = np.zeros_like(x)
            pos = x > 0
            z = (np.log(x[pos]) - self["mu"]) / self["sigma"]
            out[pos] = 0.5 * (1.0 + special.erf(z / math.sqrt(2.0)))
        else:
            out = np.clip((x - self["lo"]) / (self["hi"] - self["lo"]), 0.0, 1.0)
        out = np.where(x < 0, 0.0, out)
        return out if out.ndim else float(out)

    def density_at_zero(self) -> float:
        """F'(0+); the patience-scaling slope in the conventional regime."""
        f = self.family
        if f == "exponential":
            return self["rate"]
        if f == "erlang":
            return self["rate"] if self["shape"] == 1 else 0.0
        if f == "hyperexponential":
            p = np.asarray(self["probs"])
            r = np.asarray(self["rates"])
            return float(np.sum(p * r))
        if f == "uniform":
            return 1.0 / (self["hi"] - self["lo"]) if self["lo"] == 0.0 else 0.0
        # deterministic, lognormal: flat at the origin
        return 0.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        f = self.family
        if f == "exponential":
            return rng.exponential(1.0 / self["rate"], size)
        if f == "deterministic":
            return np.full(size, self["value"])
        if f == "erlang":
            return rng.gamma(self["shape"], 1.0 / self["rate"], size)
        if f == "hyperexponential":
            p = np.asarray(self["probs"])
            r = np.asarray(self["rates"])
            idx = np.searchsorted(np.cumsum(p), rng.random(size), side="right")
            idx = np.minimum(idx, p.size - 1)
            return rng.exponential(1.0, size) / r[idx]
        if f == "lognormal":
            return rng.lognormal(self["mu"], self["sigma"], size)
        return rng.uniform(self["lo"], self["hi"], size)

    # -- serialization -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {"family": self.family, **{k: list(v) if isinstance(v, tuple) else v for k, v in self.params}}

    @staticmethod
    def from_dict(d: dict) -> "DistributionSpec":
        if "family" not in d:
            raise ValueError("distribution spec needs a 'family' key")
        family = d["family"]
        args = {k: v for k, v in d.items() if k != "family"}
        ctors = {
            "exponential": (DistributionSpec.exponential, {"rate"}),
            "deterministic": (DistributionSpec.deterministic, {"value"}),
            "erlang": (DistributionSpec.erlang, {"shape", "rate"}),
            "hyperexponential": (DistributionSpec.hyperexponential, {"probs", "rates"}),
            "lognormal": (DistributionSpec.lognormal, {"mu", "sigma"}),
            "uniform": (DistributionSpec.uniform, {"lo", "hi"}),
        }
        if family not in ctors:
            raise ValueError(f"unknown family {family!r}; known: {_FAMILIES}")
        ctor, allowed = ctors[family]
        unknown = sorted(set(args) - allowed)
        if unknown:
            raise ValueError(f"unknown keys for {family}: {unknown}")
        missing = sorted(allowed - set(args))
        if missing:
            raise ValueError(f"missing keys for {family}: {missing}")
        return ctor(**args)


@dataclass(frozen=True)
class ArrivalSpec:
    """Arrival process: a mean-1 base interarrival law, sped up to lambda^n.

    The n-th system draws interarrivals as ``base / lambda_n`` with
    ``lambda_n = n * mu * (1 + beta / sqrt(n))``, which makes the traffic
    intensity deviation exactly ``beta / sqrt(n)``.
    """

    base: DistributionSpec

    def __post_init__(self):
        m = self.base.mean()
        if abs(m - 1.0) > 1e-8:
            raise ValueError(f"base interarrival law must have mean 1, got {m}")

    def scv(self) -> float:
        return self.base.scv()

    @staticmethod
    def poisson() -> "ArrivalSpec":
        return ArrivalSpec(DistributionSpec.exponential(1.0))

    def rate_for(self, n: int, mu: float, beta: float) -> float:
        lam = n * mu * (1.0 + beta / math.sqrt(n))
        if lam <= 0:
            raise ValueError(f"arrival rate nonpositive at n={n}: beta={beta} too negative")
        return lam

    def sampler(self, n: int, mu: float, beta: float):
        """Vectorized interarrival sampler for system n."""
        lam = self.rate_for(n, mu, beta)
        base = self.base

        def draw(rng: np.random.Generator, size: int) -> np.ndarray:
            return base.sample(rng, size) / lam

        return draw

    def to_dict(self) -> dict:
        return self.base.to_dict()

    @staticmethod
    def from_dict(d: dict) -> "ArrivalSpec":
        return ArrivalSpec(DistributionSpec.from_dict(d))
