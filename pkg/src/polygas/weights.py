"""Free majorizing weight families.

Two shapes appear throughout the criteria and the iteration engines:

* per-polymer weights mu_g >= 0, with the equivalent parametrizations
  xi_g = 1 + mu_g and a_g = log(1 + mu_g);
* factorized per-site weights xi_x >= 1 (exponents a_x = log xi_x >= 0),
  inducing the polymer weight mu_g = prod_{x in g} xi_x for subset gases.

Conversions are exact where the arithmetic allows: building from xi or mu
keeps rationals rational, building from exponents goes through exp().
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .errors import UniverseError
from .values import Num


@dataclass(frozen=True)
class PolymerWeights:
    """Per-polymer weight family mu_g >= 0."""

    mu: Mapping

    def __post_init__(self):
        for g, v in self.mu.items():
            if v < 0:
                raise UniverseError(f"weight mu[{g!r}] must be nonnegative")

    @classmethod
    def from_mu(cls, mu: Mapping) -> "PolymerWeights":
        return cls(dict(mu))

    @classmethod
    def from_xi(cls, xi: Mapping) -> "PolymerWeights":
        return cls({g: v - 1 for g, v in xi.items()})

    @classmethod
    def from_a(cls, a: Mapping) -> "PolymerWeights":
        return cls({g: math.exp(v) - 1.0 for g, v in a.items()})

    @classmethod
    def uniform(cls, ids, mu: Num) -> "PolymerWeights":
        return cls({g: mu for g in ids})

    def mu_of(self, gamma) -> Num:
        try:
            return self.mu[gamma]
        except KeyError:
            raise UniverseError(f"no weight for polymer {gamma!r}") from None

    def xi_of(self, gamma) -> Num:
        return 1 + self.mu_of(gamma)

    def a_of(self, gamma) -> float:
        return math.log(1.0 + float(self.mu_of(gamma)))

    def xi_prod(self, gammas) -> Num:
        out: Num = 1
        for g in gammas:
            out = out * self.xi_of(g)
        return out


@dataclass(frozen=True)
class SiteWeights:
    """Factorized per-site family xi_x >= 1, i.e. exponents a_x >= 0."""

    xi: Mapping

    def __post_init__(self):
        for x, v in self.xi.items():
            if v < 1:
                raise UniverseError(f"site weight xi[{x!r}] must be >= 1")

    @classmethod
    def from_xi(cls, xi: Mapping) -> "SiteWeights":
        return cls(dict(xi))

    @classmethod
    def from_a(cls, a: Mapping) -> "SiteWeights":
        return cls({x: math.exp(v) for x, v in a.items()})

    @classmethod
    def uniform(cls, sites, *, xi: Num = None, a: float = None) -> "SiteWeights":
        if (xi is None) == (a is None):
            raise ValueError("give exactly one of xi or a")
        value = xi if xi is not None else math.exp(a)
        return cls({x: value for x in sites})

    def xi_of(self, x) -> Num:
        try:
            return self.xi[x]
        except KeyError:
            raise UniverseError(f"no weight for site {x!r}") from None

    def a_of(self, x) -> float:
        return math.log(float(self.xi_of(x)))

    def xi_prod(self, sites) -> Num:
        """xi^X = prod_{x in X} xi_x; the polymer weight mu_g for X = g."""
        out: Num = 1
        for x in sites:
            out = out * self.xi_of(x)
        return out

    def mu_of(self, support) -> Num:
        return self.xi_prod(support)
