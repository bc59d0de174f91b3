"""Outcome classification, separatrix estimation, and trajectory bound checks.

In the stable-interior regime (alpha/beta > 1/sqrt(3)) the phase plane splits
into two modes of behavior: initial conditions below a boundary curve spiral
into the interior equilibrium, those above it drive the prey to zero in finite
time.  The boundary (the separatrix) has no closed form; it is estimated here
by bisection in the predator coordinate along vertical scan lines, using only
forward integration.  Backward integration of the boundary is deliberately
avoided because solutions are not unique backward in time through the prey
axis.

The analytic threshold K(x) = (r + 2*alpha)*sqrt(x) is an upper envelope for
the separatrix: any initial condition at or above K(x) is guaranteed to reach
extinction, so every bisection estimate must land at or below it.

Outcome monotonicity in the predator coordinate along a vertical line is
assumed by the bisection and audited empirically (see the tests); it is not
proven.  Classification failures (horizon reached, step-size underflow) are
reported as a first-class UNDETERMINED outcome, never coerced into either
basin.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .integrator import (
    IntegrationError,
    IntegratorConfig,
    NonFiniteStateError,
    StepSizeUnderflowError,
    TerminalKind,
    Trajectory,
    integrate,
)
from .model import (
    InvalidParameterError,
    ModelParams,
    State,
    Stability,
    classify_interior,
    envelope,
    extinction_bound,
    extinction_threshold,
)

__all__ = [
    "Outcome",
    "BasinVerdict",
    "Region",
    "BasinGrid",
    "SeparatrixPoint",
    "SeparatrixLine",
    "BoundCheck",
    "BoundsReport",
    "RegimeError",
    "classify_ic",
    "grid_sweep",
    "separatrix_scan",
    "verify_theorem_bounds",
]

#: Relative slack allowed when checking analytic inequalities against samples.
BOUND_SLACK = 1e-9


class RegimeError(ValueError):
    """Operation requires the stable-interior regime alpha/beta > 1/sqrt(3)."""


class Outcome(Enum):
    COEXISTENCE = "coexistence"
    EXTINCTION = "extinction"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class BasinVerdict:
    """Classification of one initial condition.

    EXTINCTION carries the extinction time; UNDETERMINED carries a
    machine-readable reason ("horizon", "step_underflow", "non_finite").
    """

    outcome: Outcome
    t_ext: Optional[float] = None
    reason: Optional[str] = None

    def __post_init__(self) -> None:
        if self.outcome is Outcome.EXTINCTION:
            if self.t_ext is None or not (self.t_ext > 0.0):
                raise ValueError("extinction verdict requires t_ext > 0")
        if self.outcome is Outcome.UNDETERMINED and not self.reason:
            raise ValueError("undetermined verdict requires a reason")


def classify_ic(p: ModelParams, s0: State, cfg: Optional[IntegratorConfig] = None) -> BasinVerdict:
    """Classify an initial condition by integrating forward.

    Numerical failures become UNDETERMINED verdicts rather than exceptions so
    that sweeps never abort on a single bad cell.
    """
    cfg = cfg or IntegratorConfig()
    try:
        traj = integrate(p, s0, cfg)
    except StepSizeUnderflowError:
        return BasinVerdict(Outcome.UNDETERMINED, reason="step_underflow")
    except NonFiniteStateError:
        return BasinVerdict(Outcome.UNDETERMINED, reason="non_finite")
    except IntegrationError:
        return BasinVerdict(Outcome.UNDETERMINED, reason="integration_failure")
    if traj.terminal.kind is TerminalKind.EXTINCTION:
        return BasinVerdict(Outcome.EXTINCTION, t_ext=traj.terminal.time)
    if traj.terminal.kind is TerminalKind.CONVERGED:
        return BasinVerdict(Outcome.COEXISTENCE)
    return BasinVerdict(Outcome.UNDETERMINED, reason="horizon")


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle [x_min, x_max] x [y_min, y_max] in the first quadrant."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        for name in ("x_min", "x_max", "y_min", "y_max"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidParameterError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.x_min < 0.0 or self.y_min < 0.0:
            raise InvalidParameterError("region must lie in x >= 0, y >= 0")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise InvalidParameterError("region must have positive extent")


def _axis_coords(lo: float, hi: float, n: int) -> list[float]:
    if n == 1:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


@dataclass(frozen=True)
class BasinGrid:
    """Row-major grid of verdicts: cells[i][j] classifies (x_i, y_j)."""

    region: Region
    nx: int
    ny: int
    cells: tuple[tuple[BasinVerdict, ...], ...]

    def initial_condition(self, i: int, j: int) -> State:
        xs = _axis_coords(self.region.x_min, self.region.x_max, self.nx)
        ys = _axis_coords(self.region.y_min, self.region.y_max, self.ny)
        return State(xs[i], ys[j])


def _classify_cell(task) -> BasinVerdict:
    p, x0, y0, cfg = task
    return classify_ic(p, State(x0, y0), cfg)


def grid_sweep(
    p: ModelParams,
    region: Region,
    nx: int,
    ny: int,
    cfg: Optional[IntegratorConfig] = None,
    workers: int = 1,
) -> BasinGrid:
    """Classify every node of an nx-by-ny grid over the region.

    The result is a pure function of the inputs: cells are keyed by index, so
    the grid is identical no matter how many workers evaluate it.
    """
    if nx < 1 or ny < 1:
        raise InvalidParameterError("grid resolution must be >= 1 per axis")
    if workers < 1:
        raise InvalidParameterError("workers must be >= 1")
    cfg = cfg or IntegratorConfig()
    xs = _axis_coords(region.x_min, region.x_max, nx)
    ys = _axis_coords(region.y_min, region.y_max, ny)
    tasks = [(p, x0, y0, cfg) for x0 in xs for y0 in ys]

    if workers == 1:
        flat = [_classify_cell(task) for task in tasks]
    else:
        chunk = max(1, len(tasks) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            flat = list(pool.map(_classify_cell, tasks, chunksize=chunk))

    cells = tuple(tuple(flat[i * ny + j] for j in range(ny)) for i in range(nx))
    return BasinGrid(region=region, nx=nx, ny=ny, cells=cells)


@dataclass(frozen=True)
class SeparatrixPoint:
    """Bracketed critical predator level on one vertical scan line.

    (x, y_lo) classifies as coexistence and (x, y_hi) as extinction, with
    y_hi - y_lo at most the requested bracket tolerance; y_crit is the
    midpoint estimate.
    """

    x: float
    y_lo: float
    y_hi: float
    y_crit: float


@dataclass(frozen=True)
class SeparatrixLine:
    """Per-scan-line result: a bracketed point or a failure description."""

    x: float
    k_value: float
    point: Optional[SeparatrixPoint] = None
    failure: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.point is not None


def _scan_line(task) -> SeparatrixLine:
    p, x, y_lo_init, y_hi_init, bracket_tol, cfg = task
    k = extinction_threshold(p, x)

    lo_verdict = classify_ic(p, State(x, y_lo_init), cfg)
    if lo_verdict.outcome is not Outcome.COEXISTENCE:
        return SeparatrixLine(
            x=x,
            k_value=k,
            failure=f"lower endpoint y={y_lo_init!r} classified {lo_verdict.outcome.value}",
        )
    hi_verdict = classify_ic(p, State(x, y_hi_init), cfg)
    if hi_verdict.outcome is not Outcome.EXTINCTION:
        return SeparatrixLine(
            x=x,
            k_value=k,
            failure=f"upper endpoint y={y_hi_init!r} classified {hi_verdict.outcome.value}",
        )

    lo, hi = y_lo_init, y_hi_init
    while hi - lo > bracket_tol:
        mid = 0.5 * (lo + hi)
        verdict = classify_ic(p, State(x, mid), cfg)
        if verdict.outcome is Outcome.COEXISTENCE:
            lo = mid
        elif verdict.outcome is Outcome.EXTINCTION:
            hi = mid
        else:
            return SeparatrixLine(
                x=x, k_value=k, failure=f"undetermined at y={mid!r} ({verdict.reason})"
            )
    return SeparatrixLine(
        x=x,
        k_value=k,
        point=SeparatrixPoint(x=x, y_lo=lo, y_hi=hi, y_crit=0.5 * (lo + hi)),
    )


def separatrix_scan(
    p: ModelParams,
    x_values: Sequence[float],
    y_max: Optional[float] = None,
    bracket_tol: float = 1e-4,
    cfg: Optional[IntegratorConfig] = None,
    y_lo_init: float = 1e-3,
    workers: int = 1,
) -> list[SeparatrixLine]:
    """Bracket the coexistence/extinction boundary on vertical lines x = const.

    Requires the stable-interior regime (alpha/beta > 1/sqrt(3)); without a
    stable interior point the two-mode dichotomy is not established and the
    scan refuses to run.  Each x must lie in (0, 1].  The upper probe defaults
    to 1.5*K(x), which the extinction threshold guarantees to classify as
    extinction; per-line failures are reported in the result rather than
    aborting the scan.
    """
    cls = classify_interior(p) if p.beta > p.alpha else None
    if cls is None or cls.criterion is not Stability.STABLE:
        raise RegimeError(
            "separatrix scan requires a stable interior equilibrium (alpha/beta > 1/sqrt(3))"
        )
    if not (bracket_tol > 0.0):
        raise InvalidParameterError("bracket_tol must be > 0")
    if not (y_lo_init > 0.0):
        raise InvalidParameterError("y_lo_init must be > 0")
    if workers < 1:
        raise InvalidParameterError("workers must be >= 1")
    xs = [float(x) for x in x_values]
    for x in xs:
        if not (0.0 < x <= 1.0):
            raise InvalidParameterError(f"scan lines must satisfy 0 < x <= 1, got {x!r}")
    if y_max is not None and not (y_max > 0.0):
        raise InvalidParameterError("y_max must be > 0 when given")
    cfg = cfg or IntegratorConfig()

    tasks = []
    for x in xs:
        hi = y_max if y_max is not None else 1.5 * extinction_threshold(p, x)
        tasks.append((p, x, y_lo_init, hi, bracket_tol, cfg))

    if workers == 1:
        return [_scan_line(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_scan_line, tasks))


@dataclass(frozen=True)
class BoundCheck:
    """One analytic inequality checked along a trajectory.

    slack is the worst margin observed (negative means violated beyond the
    shared numerical tolerance); not applicable checks pass vacuously.
    """

    name: str
    passed: bool
    slack: Optional[float]
    applicable: bool = True
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "slack": self.slack,
            "applicable": self.applicable,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class BoundsReport:
    """Pass/fail record for the analytic bounds along one trajectory."""

    predator_lower: BoundCheck
    prey_upper: BoundCheck
    envelope: BoundCheck
    extinction_by_bound: BoundCheck

    @property
    def checks(self) -> tuple[BoundCheck, ...]:
        return (self.predator_lower, self.prey_upper, self.envelope, self.extinction_by_bound)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def verify_theorem_bounds(p: ModelParams, traj: Trajectory) -> BoundsReport:
    """Check the analytic inequalities at every sample of a trajectory.

    (a) predator lower bound   y(t) >= y0*exp(-alpha*t)
    (b) prey upper bound       x(t) <= max(x0, 1)
    (c) sqrt-prey envelope     sqrt(x)*exp(-r*t/2) <= envelope(t)  while x > 0
    (d) when K(x0) < y0 strictly: the trajectory ends in extinction no later
        than the envelope root t_upper.

    Each check tolerates a slack of BOUND_SLACK to absorb integrator error.
    The trajectory must have been produced with the same parameter set.
    """
    if traj.params != p:
        raise ValueError(
            f"trajectory/params mismatch: trajectory was integrated with {traj.params}, got {p}"
        )
    s0 = traj.initial_state
    ts = traj.times()
    xs = traj.prey()
    ys = traj.predators()

    lower = s0.y * np.exp(-p.alpha * ts)
    resid_a = ys - lower * (1.0 - BOUND_SLACK)
    check_a = BoundCheck(
        name="predator_lower_bound",
        passed=bool(np.all(resid_a >= 0.0)),
        slack=float(np.min(ys - lower)),
        detail="y(t) >= y0*exp(-alpha*t) at every sample",
    )

    cap = max(s0.x, 1.0)
    check_b = BoundCheck(
        name="prey_upper_bound",
        passed=bool(np.all(xs <= cap + BOUND_SLACK)),
        slack=float(cap - np.max(xs)),
        detail="x(t) <= max(x0, 1) at every sample",
    )

    mask = xs > 0.0
    if np.any(mask):
        lhs = np.sqrt(xs[mask]) * np.exp(-0.5 * p.r * ts[mask])
        rhs = envelope(p, s0, ts[mask])
        rhs = np.asarray(rhs, dtype=float).reshape(lhs.shape)
        check_c = BoundCheck(
            name="envelope",
            passed=bool(np.all(lhs <= rhs + BOUND_SLACK)),
            slack=float(np.min(rhs - lhs)),
            detail="sqrt(x)*exp(-r*t/2) <= envelope while x > 0",
        )
    else:
        check_c = BoundCheck(
            name="envelope",
            passed=True,
            slack=None,
            applicable=False,
            detail="no samples with x > 0",
        )

    bound = extinction_bound(p, s0)
    if bound.t_upper is not None:
        if traj.terminal.kind is TerminalKind.EXTINCTION:
            t_ext = traj.terminal.time
            check_d = BoundCheck(
                name="extinction_by_bound",
                passed=bool(t_ext <= bound.t_upper + BOUND_SLACK),
                slack=float(bound.t_upper - t_ext),
                detail=f"extinction at t={t_ext!r} within analytic bound t_upper={bound.t_upper!r}",
            )
        else:
            check_d = BoundCheck(
                name="extinction_by_bound",
                passed=False,
                slack=None,
                detail=(
                    "threshold condition held but the trajectory did not end in extinction "
                    f"(terminal={traj.terminal.kind.value})"
                ),
            )
    else:
        check_d = BoundCheck(
            name="extinction_by_bound",
            passed=True,
            slack=None,
            applicable=False,
            detail="threshold condition K(x0) < y0 does not hold; nothing to check",
        )

    return BoundsReport(
        predator_lower=check_a,
        prey_upper=check_b,
        envelope=check_c,
        extinction_by_bound=check_d,
    )
