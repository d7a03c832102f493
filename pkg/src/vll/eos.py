"""Barotropic pressure law, entropy potential and relative-entropy machinery.

The pressure is p(rho) = a*rho^gamma. The potential H solves
rho*H'(rho) - H(rho) = p(rho) with H'' = p'/rho, which pins
H(rho) = a*rho^gamma/(gamma-1); the prefactor a is kept so the identity stays
exact for every a. The relative entropy H(rho|r) drives the comparison with
the inviscid reference and is convertible into L^gamma control through the
split into quadratic (|rho-r| < 1) and gamma-power (|rho-r| >= 1) regions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidConfigError
from .fields import ScalarField, lp_norm, masked_integral


@dataclass(frozen=True)
class EosParams:
    """Pressure constant a > 0 and adiabatic exponent gamma > 1."""

    a: float = 1.0
    gamma: float = 1.4

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidConfigError(f"pressure constant must be positive, got {self.a}")
        if not self.gamma > 1:
            raise InvalidConfigError(f"adiabatic exponent must exceed 1, got {self.gamma}")


def _check_nonneg(rho, name="rho"):
    arr = np.asarray(rho, dtype=float)
    if np.any(arr < 0):
        raise DomainError(f"{name} must be nonnegative")
    return arr


def pressure(rho, eos: EosParams):
    """p(rho) = a*rho^gamma."""
    arr = _check_nonneg(rho)
    return eos.a * arr**eos.gamma


def pressure_prime(rho, eos: EosParams):
    """p'(rho) = a*gamma*rho^(gamma-1)."""
    arr = _check_nonneg(rho)
    return eos.a * eos.gamma * arr ** (eos.gamma - 1.0)


def pressure_second(rho, eos: EosParams):
    """p''(rho) = a*gamma*(gamma-1)*rho^(gamma-2)."""
    arr = _check_nonneg(rho)
    return eos.a * eos.gamma * (eos.gamma - 1.0) * arr ** (eos.gamma - 2.0)


def entropy_H(rho, eos: EosParams):
    """H(rho) = a*rho^gamma/(gamma-1)."""
    arr = _check_nonneg(rho)
    return eos.a * arr**eos.gamma / (eos.gamma - 1.0)


def entropy_H_prime(rho, eos: EosParams):
    """H'(rho) = a*gamma*rho^(gamma-1)/(gamma-1)."""
    arr = _check_nonneg(rho)
    return eos.a * eos.gamma * arr ** (eos.gamma - 1.0) / (eos.gamma - 1.0)


def entropy_H_second(rho, eos: EosParams):
    """H''(rho) = p'(rho)/rho."""
    arr = _check_nonneg(rho)
    return eos.a * eos.gamma * arr ** (eos.gamma - 2.0)


def relative_entropy(rho, r, eos: EosParams):
    """Pointwise H(rho|r) = H(rho) - H(r) - H'(r)(rho - r); >= 0, zero iff rho == r."""
    arr = _check_nonneg(rho)
    ref = np.asarray(r, dtype=float)
    if np.any(ref <= 0):
        raise DomainError("comparison density r must be strictly positive")
    return entropy_H(arr, eos) - entropy_H(ref, eos) - entropy_H_prime(ref, eos) * (arr - ref)


@dataclass(frozen=True)
class EquivalenceReport:
    """Both directions of the relative-entropy / L^gamma equivalence.

    Direction 1: c1 * ||rho - r||_Lgamma <= (int H)^gamma + int H.
    Direction 2: c2 * int H <= ||rho - r||^gamma + ||rho - r||^2.
    `quadratic_part`/`power_part` carry the split of the integrand by |rho-r|.
    """

    integral_H: float
    lgamma_norm: float
    quadratic_part: float
    power_part: float
    c1: float
    c2: float
    holds: bool

    gamma: float = 2.0

    @property
    def lhs(self) -> float:
        return self.integral_H

    @property
    def rhs(self) -> float:
        return self.lgamma_norm**self.gamma + self.lgamma_norm**2


def entropy_equivalence_check(rho: ScalarField, r: ScalarField, eos: EosParams) -> EquivalenceReport:
    """Evaluate int H(rho|r), the L^gamma distance and both equivalence directions."""
    grid = rho.grid
    if np.any(r.values <= 0):
        raise DomainError("comparison density r must be strictly positive")
    h_rel = relative_entropy(rho.values, r.values, eos)
    integral_H = masked_integral(grid, h_rel)
    diff = ScalarField(grid, rho.values - r.values)
    lg = lp_norm(diff, eos.gamma)
    small = np.abs(diff.values) < 1.0
    quad = masked_integral(grid, diff.values**2, small)
    power = masked_integral(grid, np.abs(diff.values) ** eos.gamma, ~small)

    if lg == 0.0 and integral_H == 0.0:
        return EquivalenceReport(integral_H, lg, quad, power, np.inf, np.inf, True, eos.gamma)
    c1 = (integral_H**eos.gamma + integral_H) / lg if lg > 0 else np.inf
    c2 = (lg**eos.gamma + lg**2) / integral_H if integral_H > 0 else np.inf
    holds = c1 > 0 and c2 > 0
    return EquivalenceReport(integral_H, lg, quad, power, c1, c2, holds, eos.gamma)
