"""Closed-form analysis of a predator-prey model with square-root functional response.

The model couples a logistically growing prey population x(t) with a predator
population y(t) whose consumption scales with sqrt(x), reflecting herd behavior
(predators interact with the perimeter of the herd rather than its bulk):

    dx/dt = r*x*(1 - x) - y*sqrt(x)
    dy/dt = -alpha*y + beta*y*sqrt(x)

with prey birth rate r, predator death rate alpha, and conversion efficiency
beta, all positive.  The system admits the equilibria

    (0, 0)                              extinction
    (1, 0)                              prey only
    ((alpha/beta)^2,
     r*alpha*(beta^2 - alpha^2)/beta^3) interior, present iff beta > alpha

The interior point is locally asymptotically stable iff alpha/beta > 1/sqrt(3)
and unstable for alpha/beta < 1/sqrt(3).  Because sqrt(x) is not differentiable
at x = 0, the origin cannot be classified by linearization.

The sqrt term also permits finite-time prey extinction.  Bounding the predator
below by y0*exp(-alpha*t) and integrating d(sqrt(x))/dt with the factor
exp(-r*t/2) yields the envelope

    sqrt(x(t))*exp(-r*t/2) <= sqrt(x0) - (0.5*y0/(0.5*r + alpha))*(1 - exp(-(0.5*r + alpha)*t))

whose right-hand side reaches zero in finite time whenever

    K(x0) = (r + 2*alpha)*sqrt(x0) <= y0,

forcing x to hit zero no later than the envelope root

    t_upper = -log(1 - K(x0)/y0) / (r/2 + alpha)      (for K(x0) < y0 strictly).

This module holds those closed-form facts; numerical integration lives in
`herddyn.integrator`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

__all__ = [
    "InvalidParameterError",
    "ModelParams",
    "State",
    "EquilibriumKind",
    "Stability",
    "Equilibrium",
    "InteriorClassification",
    "ExtinctionBoundReport",
    "STABILITY_RATIO_THRESHOLD",
    "NON_HYPERBOLIC_BAND",
    "validate_params",
    "equilibria",
    "interior_point",
    "interior_equilibrium",
    "jacobian",
    "classify_interior",
    "extinction_threshold",
    "extinction_bound",
    "envelope",
]

#: Critical value of alpha/beta separating stable and unstable interior points.
STABILITY_RATIO_THRESHOLD = 1.0 / math.sqrt(3.0)

#: Half-width of the band around the threshold reported as non-hyperbolic.
NON_HYPERBOLIC_BAND = 1e-12


class InvalidParameterError(ValueError):
    """A model parameter or state component is out of its admissible range."""


def _require_finite_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")
    if value <= 0.0:
        raise InvalidParameterError(f"{name} must be > 0, got {value!r}")
    return value


def _require_finite_nonnegative(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")
    if value < 0.0:
        raise InvalidParameterError(f"{name} must be >= 0, got {value!r}")
    return value


@dataclass(frozen=True)
class ModelParams:
    """The three positive rates of the model.

    r      prey birth rate (per unit time)
    alpha  predator intrinsic death rate (per unit time)
    beta   biomass conversion efficiency (per unit time)
    """

    r: float
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "r", _require_finite_positive("r", self.r))
        object.__setattr__(self, "alpha", _require_finite_positive("alpha", self.alpha))
        object.__setattr__(self, "beta", _require_finite_positive("beta", self.beta))


def validate_params(r: float, alpha: float, beta: float) -> ModelParams:
    """Validate the rates and return an immutable parameter set.

    Raises InvalidParameterError naming the offending field for non-positive
    or non-finite values.
    """
    return ModelParams(r=r, alpha=alpha, beta=beta)


@dataclass(frozen=True)
class State:
    """A population point (x, y); both components non-negative and finite."""

    x: float
    y: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", _require_finite_nonnegative("x", self.x))
        object.__setattr__(self, "y", _require_finite_nonnegative("y", self.y))


class EquilibriumKind(Enum):
    EXTINCTION = "extinction"
    PREY_ONLY = "prey_only"
    INTERIOR = "interior"


class Stability(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    SADDLE = "saddle"
    NON_HYPERBOLIC = "non_hyperbolic"
    NOT_ANALYZABLE = "not_analyzable"


@dataclass(frozen=True)
class Equilibrium:
    point: State
    kind: EquilibriumKind
    stability: Stability


@dataclass(frozen=True)
class InteriorClassification:
    """Two independent stability verdicts for the interior equilibrium.

    `criterion` applies the closed-form test on ratio = alpha/beta against
    1/sqrt(3); `eigen` takes the sign of the largest real part of the Jacobian
    eigenvalues at the interior point.  Away from the critical ratio the two
    verdicts agree.
    """

    criterion: Stability
    eigen: Stability
    ratio: float
    threshold: float
    eigenvalues: tuple[complex, complex]


@dataclass(frozen=True)
class ExtinctionBoundReport:
    """Result of the analytic finite-time-extinction test for one initial point.

    k_value     threshold (r + 2*alpha)*sqrt(x0)
    sufficient  True iff k_value <= y0 (extinction guaranteed)
    t_upper     root of the envelope, an upper bound on the extinction time;
                present iff k_value < y0 strictly (the log diverges at equality)
    """

    k_value: float
    sufficient: bool
    t_upper: Optional[float]


def interior_point(p: ModelParams) -> State:
    """Closed-form interior equilibrium coordinates (requires beta > alpha)."""
    if p.beta <= p.alpha:
        raise InvalidParameterError(
            f"interior equilibrium requires beta > alpha, got beta={p.beta!r} alpha={p.alpha!r}"
        )
    xs = (p.alpha / p.beta) ** 2
    ys = p.r * p.alpha * (p.beta**2 - p.alpha**2) / p.beta**3
    return State(x=xs, y=ys)


def jacobian(p: ModelParams, s: State) -> np.ndarray:
    """Jacobian of the vector field at a state with x > 0.

    [[ r*(1 - 2x) - y/(2*sqrt(x)),  -sqrt(x)          ],
     [ beta*y/(2*sqrt(x)),          -alpha + beta*sqrt(x) ]]

    The field is not differentiable on the x = 0 axis, so x = 0 is rejected.
    """
    if s.x <= 0.0:
        raise InvalidParameterError(
            "jacobian requires x > 0; the vector field is not differentiable at x = 0"
        )
    root = math.sqrt(s.x)
    return np.array(
        [
            [p.r * (1.0 - 2.0 * s.x) - s.y / (2.0 * root), -root],
            [p.beta * s.y / (2.0 * root), -p.alpha + p.beta * root],
        ]
    )


def classify_interior(p: ModelParams) -> InteriorClassification:
    """Classify the interior equilibrium by both the ratio criterion and eigenvalues.

    Requires beta > alpha so the interior point exists.  Ratios within
    NON_HYPERBOLIC_BAND of 1/sqrt(3) are reported NON_HYPERBOLIC rather than
    guessed either way.
    """
    point = interior_point(p)  # raises if beta <= alpha
    ratio = p.alpha / p.beta
    if abs(ratio - STABILITY_RATIO_THRESHOLD) <= NON_HYPERBOLIC_BAND:
        criterion = Stability.NON_HYPERBOLIC
    elif ratio > STABILITY_RATIO_THRESHOLD:
        criterion = Stability.STABLE
    else:
        criterion = Stability.UNSTABLE

    ev = np.linalg.eigvals(jacobian(p, point))
    max_real = float(np.max(ev.real))
    if max_real < 0.0:
        eigen = Stability.STABLE
    elif max_real > 0.0:
        eigen = Stability.UNSTABLE
    else:
        eigen = Stability.NON_HYPERBOLIC

    return InteriorClassification(
        criterion=criterion,
        eigen=eigen,
        ratio=ratio,
        threshold=STABILITY_RATIO_THRESHOLD,
        eigenvalues=(complex(ev[0]), complex(ev[1])),
    )


def equilibria(p: ModelParams) -> list[Equilibrium]:
    """All non-negative equilibria with stability verdicts.

    Always contains the extinction point (0, 0) and the prey-only point (1, 0);
    the interior point is included exactly when beta > alpha (at beta = alpha it
    degenerates onto the prey-only point).  The origin is never classified by
    linearization and carries NOT_ANALYZABLE.
    """
    out = [
        Equilibrium(State(0.0, 0.0), EquilibriumKind.EXTINCTION, Stability.NOT_ANALYZABLE)
    ]

    # Prey-only Jacobian is triangular with eigenvalues {-r, beta - alpha}.
    if p.beta > p.alpha:
        prey_only_stability = Stability.SADDLE
    elif p.beta < p.alpha:
        prey_only_stability = Stability.STABLE
    else:
        prey_only_stability = Stability.NON_HYPERBOLIC
    out.append(Equilibrium(State(1.0, 0.0), EquilibriumKind.PREY_ONLY, prey_only_stability))

    if p.beta > p.alpha:
        out.append(
            Equilibrium(interior_point(p), EquilibriumKind.INTERIOR, classify_interior(p).criterion)
        )
    return out


def interior_equilibrium(p: ModelParams) -> Optional[Equilibrium]:
    """The interior equilibrium record, or None when beta <= alpha."""
    for eq in equilibria(p):
        if eq.kind is EquilibriumKind.INTERIOR:
            return eq
    return None


def extinction_threshold(p: ModelParams, x0: float) -> float:
    """Predator level K(x0) = (r + 2*alpha)*sqrt(x0) guaranteeing prey extinction."""
    x0 = _require_finite_nonnegative("x0", x0)
    return (p.r + 2.0 * p.alpha) * math.sqrt(x0)


def extinction_bound(p: ModelParams, s0: State) -> ExtinctionBoundReport:
    """Analytic finite-time-extinction test for the initial point s0.

    Extinction is guaranteed when k_value <= y0; with strict inequality the
    envelope root

        t_upper = -log(1 - k_value/y0) / (r/2 + alpha)

    bounds the extinction time from above.
    """
    k = extinction_threshold(p, s0.x)
    sufficient = k <= s0.y
    t_upper: Optional[float] = None
    if k < s0.y:
        t_upper = -math.log1p(-k / s0.y) / (0.5 * p.r + p.alpha)
    return ExtinctionBoundReport(k_value=k, sufficient=sufficient, t_upper=t_upper)


def envelope(p: ModelParams, s0: State, t):
    """Right-hand side of the sqrt-prey envelope at time(s) t >= 0.

        sqrt(x0) - (0.5*y0/(0.5*r + alpha)) * (1 - exp(-(0.5*r + alpha)*t))

    Along any trajectory from s0, sqrt(x(t))*exp(-r*t/2) stays at or below this
    value while x(t) > 0.  Accepts a scalar or an ndarray of times.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or not np.all(np.isfinite(t_arr)):
        raise InvalidParameterError("envelope requires finite t >= 0")
    rate = 0.5 * p.r + p.alpha
    value = math.sqrt(s0.x) - (0.5 * s0.y / rate) * (1.0 - np.exp(-rate * t_arr))
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(value)
    return value
