"""Forward-time integration of the herd model in regularized coordinates.

The raw vector field has an unbounded derivative y/(2*sqrt(x)) near x = 0,
which stalls adaptive steppers exactly where the interesting dynamics (prey
hitting zero in finite time) happen.  Substituting u = sqrt(x) turns the field
into a polynomial,

    du/dt = (r/2)*u*(1 - u^2) - y/2
    dy/dt = -alpha*y + beta*y*u,

and turns prey extinction into a transversal zero crossing of u with slope
du/dt = -y/2 < 0, so the crossing time is a well-defined root rather than an
epsilon-dependent threshold.  Trial steps may overshoot into u < 0; the
accepted step is always truncated at the refined event time, and no exported
state violates u >= 0.

Integration is forward-only: the regularized field extends smoothly through
u = 0 into a mirror copy of the phase plane, so solutions through the prey
axis are not unique in backward time and backward integration is deliberately
unsupported.

Two integrators are provided:

* `integrate`: adaptive Dormand-Prince 5(4) embedded pair with per-step error
  control, extinction located by bisection on step subdivision to a bracket of
  width <= `event_tol`, and convergence to the interior equilibrium declared
  after the state dwells within `conv_tol` of it for `conv_window` time units.
* `integrate_raw_reference`: fixed-step classical RK4 with per-step sign check
  and bisection, kept free of adaptivity so it can serve as an independent
  cross-check of the adaptive path.

Both are deterministic: identical inputs produce bitwise-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .model import (
    Equilibrium,
    InvalidParameterError,
    ModelParams,
    State,
    interior_equilibrium,
)

__all__ = [
    "RegularizedState",
    "IntegratorConfig",
    "TerminalKind",
    "Terminal",
    "IntegrationStats",
    "Trajectory",
    "IntegrationError",
    "StepSizeUnderflowError",
    "NonFiniteStateError",
    "rhs_raw",
    "rhs_regularized",
    "integrate",
    "integrate_raw_reference",
]


class IntegrationError(RuntimeError):
    """Base class for integration failures; carries the failure time."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class StepSizeUnderflowError(IntegrationError):
    def __init__(self, t: float, h: float, h_min: float):
        super().__init__(
            f"step size underflow at t={t!r}: required h={h!r} below h_min={h_min!r}", t
        )


class NonFiniteStateError(IntegrationError):
    def __init__(self, t: float):
        super().__init__(f"non-finite state encountered at t={t!r}", t)


@dataclass(frozen=True)
class RegularizedState:
    """Population point in the coordinates (u, y) with u = sqrt(x)."""

    u: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.u) and math.isfinite(self.y)):
            raise InvalidParameterError("regularized state must be finite")
        if self.u < 0.0 or self.y < 0.0:
            raise InvalidParameterError("regularized state requires u >= 0 and y >= 0")

    @classmethod
    def from_state(cls, s: State) -> "RegularizedState":
        return cls(u=math.sqrt(s.x), y=s.y)

    def to_state(self) -> State:
        return State(x=self.u * self.u, y=self.y)


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and limits for `integrate`.

    conv_tol = 0 disables convergence detection (nothing is ever inside a ball
    of radius zero); everything else must satisfy the checked inequalities.
    The dwell requirement guards against spiral approaches that re-exit small
    balls: convergence is declared only after `conv_window` time units inside
    the `conv_tol` ball, not on first entry.
    """

    rtol: float = 1e-9
    atol: float = 1e-12
    h_init: float = 1e-3
    h_min: float = 1e-12
    h_max: float = 1.0
    t_max: float = 500.0
    event_tol: float = 1e-10
    conv_tol: float = 1e-8
    conv_window: float = 10.0
    continue_after_extinction: bool = False

    def __post_init__(self) -> None:
        if not (self.rtol > 0.0 and math.isfinite(self.rtol)):
            raise InvalidParameterError(f"rtol must be > 0, got {self.rtol!r}")
        if not (self.atol > 0.0 and math.isfinite(self.atol)):
            raise InvalidParameterError(f"atol must be > 0, got {self.atol!r}")
        if not (0.0 < self.h_min <= self.h_max):
            raise InvalidParameterError(
                f"need 0 < h_min <= h_max, got h_min={self.h_min!r} h_max={self.h_max!r}"
            )
        if not (self.h_init > 0.0):
            raise InvalidParameterError(f"h_init must be > 0, got {self.h_init!r}")
        if not (self.t_max > 0.0 and math.isfinite(self.t_max)):
            raise InvalidParameterError(f"t_max must be positive and finite, got {self.t_max!r}")
        if not (self.event_tol > 0.0):
            raise InvalidParameterError(f"event_tol must be > 0, got {self.event_tol!r}")
        if self.conv_tol < 0.0:
            raise InvalidParameterError(f"conv_tol must be >= 0, got {self.conv_tol!r}")
        if not (self.conv_window > 0.0):
            raise InvalidParameterError(f"conv_window must be > 0, got {self.conv_window!r}")


class TerminalKind(Enum):
    EXTINCTION = "extinction"
    CONVERGED = "converged"
    HORIZON = "horizon"


@dataclass(frozen=True)
class Terminal:
    """Terminal event of a trajectory.

    EXTINCTION carries the refined event time plus its enclosing bracket;
    CONVERGED carries the equilibrium reached and the time the dwell window
    completed; HORIZON carries neither.
    """

    kind: TerminalKind
    time: Optional[float] = None
    bracket: Optional[tuple[float, float]] = None
    equilibrium: Optional[Equilibrium] = None

    @classmethod
    def extinction(cls, t: float, bracket: tuple[float, float]) -> "Terminal":
        return cls(kind=TerminalKind.EXTINCTION, time=t, bracket=bracket)

    @classmethod
    def converged(cls, eq: Equilibrium, t: float) -> "Terminal":
        return cls(kind=TerminalKind.CONVERGED, time=t, equilibrium=eq)

    @classmethod
    def horizon(cls) -> "Terminal":
        return cls(kind=TerminalKind.HORIZON)


@dataclass
class IntegrationStats:
    accepted_steps: int = 0
    rejected_steps: int = 0
    rhs_evals: int = 0


@dataclass
class Trajectory:
    """Time-stamped solution samples plus the terminal event.

    Samples are (t, State) pairs with strictly increasing t, recorded at
    accepted step endpoints plus any requested output times (interpolated
    with the fourth-order dense output of the step).  samples[0] is always
    (0, initial state).
    """

    params: ModelParams
    samples: list[tuple[float, State]]
    terminal: Terminal
    stats: IntegrationStats = field(default_factory=IntegrationStats)

    @property
    def initial_state(self) -> State:
        return self.samples[0][1]

    @property
    def extinction_time(self) -> Optional[float]:
        return self.terminal.time if self.terminal.kind is TerminalKind.EXTINCTION else None

    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.samples])

    def prey(self) -> np.ndarray:
        return np.array([s.x for _, s in self.samples])

    def predators(self) -> np.ndarray:
        return np.array([s.y for _, s in self.samples])


def rhs_raw(p: ModelParams, s: State) -> tuple[float, float]:
    """Raw vector field (dx/dt, dy/dt) at a state with x >= 0."""
    root = math.sqrt(s.x)
    return (
        p.r * s.x * (1.0 - s.x) - s.y * root,
        -p.alpha * s.y + p.beta * s.y * root,
    )


def rhs_regularized(p: ModelParams, s: RegularizedState) -> tuple[float, float]:
    """Regularized vector field (du/dt, dy/dt); polynomial, defined for all real u."""
    return (
        0.5 * p.r * s.u * (1.0 - s.u * s.u) - 0.5 * s.y,
        -p.alpha * s.y + p.beta * s.y * s.u,
    )


# Dormand-Prince 5(4) tableau.
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# Difference between the 5th- and 4th-order weights (error estimator).
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
# Dense-output coefficients (fourth-order interpolant): weight of stage s at
# fraction theta of the step is theta*(P[s][0] + theta*(P[s][1] + theta*(...))).
_P = (
    (1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0),
    (0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0),
    (0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0),
    (0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0),
    (0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0),
)

_Rhs = Callable[[float, float], tuple[float, float]]


def _dp45_step(f: _Rhs, u: float, y: float, h: float, k1: tuple[float, float]):
    """One trial Dormand-Prince step of size h from (u, y); the system is autonomous.

    Returns ((u1, y1), (err_u, err_y), stages) where stages[6] is the FSAL
    derivative at the endpoint.
    """
    k1u, k1y = k1
    k2u, k2y = f(u + h * _A21 * k1u, y + h * _A21 * k1y)
    k3u, k3y = f(u + h * (_A31 * k1u + _A32 * k2u), y + h * (_A31 * k1y + _A32 * k2y))
    k4u, k4y = f(
        u + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u),
        y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y),
    )
    k5u, k5y = f(
        u + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u),
        y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y),
    )
    k6u, k6y = f(
        u + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u),
        y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y + _A65 * k5y),
    )
    u1 = u + h * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B5 * k5u + _B6 * k6u)
    y1 = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
    k7u, k7y = f(u1, y1)
    err_u = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
    err_y = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y + _E6 * k6y + _E7 * k7y)
    stages = ((k1u, k1y), (k2u, k2y), (k3u, k3y), (k4u, k4y), (k5u, k5y), (k6u, k6y), (k7u, k7y))
    return (u1, y1), (err_u, err_y), stages


def _dense_eval(u0: float, y0: float, h: float, stages, theta: float) -> tuple[float, float]:
    """Evaluate the dense-output interpolant at fraction theta in [0, 1] of the step."""
    du = 0.0
    dy = 0.0
    for (ku, ky), (p0, p1, p2, p3) in zip(stages, _P):
        w = theta * (p0 + theta * (p1 + theta * (p2 + theta * p3)))
        du += ku * w
        dy += ky * w
    return u0 + h * du, y0 + h * dy


def _refine_event(
    f: _Rhs,
    t0: float,
    u0: float,
    y0: float,
    h: float,
    k1: tuple[float, float],
    event_tol: float,
    stats: IntegrationStats,
):
    """Shrink the bracket around the u = 0 crossing inside an accepted step.

    Bisection on step subdivision: each iteration takes a single truncated
    step from the current positive-u bracket end to the midpoint and keeps
    the half that still brackets the sign change.  Single steps of shrinking
    size keep the local error far below the bracket width.
    """
    lo_t, lo_u, lo_y, lo_k1 = t0, u0, y0, k1
    hi_t = t0 + h
    while hi_t - lo_t > event_tol:
        mid = 0.5 * (lo_t + hi_t)
        if mid <= lo_t or mid >= hi_t:  # bracket at floating-point resolution
            break
        (um, ym), _, stages = _dp45_step(f, lo_u, lo_y, mid - lo_t, lo_k1)
        stats.rhs_evals += 6
        if um > 0.0:
            lo_t, lo_u, lo_y, lo_k1 = mid, um, ym, stages[6]
        else:
            hi_t = mid
    return lo_t, lo_u, lo_y, hi_t


def _validate_t_eval(t_eval: Optional[Sequence[float]], t_max: float) -> list[float]:
    if t_eval is None:
        return []
    out: list[float] = []
    prev = -math.inf
    for q in t_eval:
        q = float(q)
        if not math.isfinite(q) or q < 0.0:
            raise InvalidParameterError(f"t_eval entries must be finite and >= 0, got {q!r}")
        if q > t_max:
            raise InvalidParameterError(f"t_eval entry {q!r} exceeds t_max={t_max!r}")
        if q <= prev:
            raise InvalidParameterError("t_eval must be strictly increasing")
        out.append(q)
        prev = q
    return out


def _prey_axis_trajectory(
    p: ModelParams, s0: State, cfg: IntegratorConfig, t_eval: list[float]
) -> Trajectory:
    # x = 0 is invariant for the raw field; the predator decays exactly.
    times = t_eval if t_eval else _h_grid(cfg.h_max, cfg.t_max)
    samples = [(0.0, s0)]
    for q in times:
        if q <= 0.0:
            continue
        samples.append((q, State(0.0, s0.y * math.exp(-p.alpha * q))))
    if samples[-1][0] < cfg.t_max:
        samples.append((cfg.t_max, State(0.0, s0.y * math.exp(-p.alpha * cfg.t_max))))
    return Trajectory(params=p, samples=samples, terminal=Terminal.horizon())


def _h_grid(h: float, t_end: float) -> list[float]:
    n = int(math.floor(t_end / h))
    out = [i * h for i in range(1, n + 1)]
    if not out or out[-1] < t_end:
        out.append(t_end)
    return out


def integrate(
    p: ModelParams,
    s0: State,
    cfg: Optional[IntegratorConfig] = None,
    t_eval: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Integrate the model forward from s0 in regularized coordinates.

    Terminal outcomes:

    * EXTINCTION  u crossed zero; the crossing time is refined to a bracket of
      width <= cfg.event_tol.  The last sample before the event has x > 0 and
      the event sample has x = 0 exactly.  With
      cfg.continue_after_extinction the exact prey-axis solution
      y(t) = y(t_ext)*exp(-alpha*(t - t_ext)) is appended up to t_max.
    * CONVERGED   the state stayed within cfg.conv_tol of the interior
      equilibrium for cfg.conv_window time units (only when beta > alpha).
    * HORIZON     t reached cfg.t_max without either of the above.

    Raises StepSizeUnderflowError / NonFiniteStateError on numerical failure,
    each naming the time of failure.
    """
    cfg = cfg or IntegratorConfig()
    eval_times = _validate_t_eval(t_eval, cfg.t_max)

    if s0.x == 0.0:
        return _prey_axis_trajectory(p, s0, cfg, eval_times)

    r, a, b = p.r, p.alpha, p.beta

    def f(u: float, y: float) -> tuple[float, float]:
        return 0.5 * r * u * (1.0 - u * u) - 0.5 * y, y * (b * u - a)

    stats = IntegrationStats()
    samples: list[tuple[float, State]] = [(0.0, s0)]

    interior = interior_equilibrium(p)
    xs = interior.point.x if interior is not None else 0.0
    ys = interior.point.y if interior is not None else 0.0
    conv_on = interior is not None and cfg.conv_tol > 0.0
    in_ball_since: Optional[float] = None

    t = 0.0
    u = math.sqrt(s0.x)
    y = s0.y
    k1 = f(u, y)
    stats.rhs_evals += 1
    if not (math.isfinite(k1[0]) and math.isfinite(k1[1])):
        raise NonFiniteStateError(t)

    h = min(max(cfg.h_init, cfg.h_min), cfg.h_max, cfg.t_max)
    ev_idx = 0
    while ev_idx < len(eval_times) and eval_times[ev_idx] <= 0.0:
        ev_idx += 1

    terminal: Optional[Terminal] = None
    while t < cfg.t_max:
        final_stretch = h >= cfg.t_max - t
        if final_stretch:
            h = cfg.t_max - t

        (u1, y1), (eu, ey), stages = _dp45_step(f, u, y, h, k1)
        stats.rhs_evals += 6
        sc_u = cfg.atol + cfg.rtol * max(abs(u), abs(u1))
        sc_y = cfg.atol + cfg.rtol * max(abs(y), abs(y1))
        err = math.sqrt(0.5 * ((eu / sc_u) ** 2 + (ey / sc_y) ** 2))

        if not (err <= 1.0):  # NaN counts as a rejection
            stats.rejected_steps += 1
            if math.isfinite(err):
                shrink = max(0.2, 0.9 * err ** -0.2)
            else:
                shrink = 0.2
            h_new = h * shrink
            if h_new < cfg.h_min:
                if not math.isfinite(err):
                    raise NonFiniteStateError(t)
                raise StepSizeUnderflowError(t, h_new, cfg.h_min)
            h = h_new
            continue

        stats.accepted_steps += 1
        if not (math.isfinite(u1) and math.isfinite(y1)):
            raise NonFiniteStateError(t)
        t1 = cfg.t_max if final_stretch else t + h

        if u1 <= 0.0:
            # Prey extinction inside this step: refine the crossing.
            lo_t, lo_u, lo_y, hi_t = _refine_event(f, t, u, y, h, k1, cfg.event_tol, stats)
            t_ext = 0.5 * (lo_t + hi_t)
            # Requested output times strictly before the last positive sample.
            while ev_idx < len(eval_times) and eval_times[ev_idx] <= lo_t:
                q = eval_times[ev_idx]
                ev_idx += 1
                if q <= t:
                    continue
                uq, yq = _dense_eval(u, y, h, stages, (q - t) / h)
                samples.append((q, State(max(uq, 0.0) ** 2, max(yq, 0.0))))
            if lo_t > samples[-1][0]:
                samples.append((lo_t, State(lo_u * lo_u, lo_y)))
            y_ext = max(lo_y, 0.0)
            samples.append((t_ext, State(0.0, y_ext)))
            terminal = Terminal.extinction(t_ext, (lo_t, hi_t))
            if cfg.continue_after_extinction and t_ext < cfg.t_max:
                tail = [q for q in eval_times[ev_idx:] if q > t_ext]
                if not tail:
                    tail = [t_ext + q for q in _h_grid(cfg.h_max, cfg.t_max - t_ext)]
                for q in tail:
                    samples.append((q, State(0.0, y_ext * math.exp(-a * (q - t_ext)))))
                if samples[-1][0] < cfg.t_max:
                    samples.append(
                        (cfg.t_max, State(0.0, y_ext * math.exp(-a * (cfg.t_max - t_ext))))
                    )
            break

        # Requested output times interior to this step.
        while ev_idx < len(eval_times) and eval_times[ev_idx] < t1:
            q = eval_times[ev_idx]
            ev_idx += 1
            if q <= t:
                continue
            uq, yq = _dense_eval(u, y, h, stages, (q - t) / h)
            samples.append((q, State(max(uq, 0.0) ** 2, max(yq, 0.0))))
        while ev_idx < len(eval_times) and eval_times[ev_idx] == t1:
            ev_idx += 1  # endpoint sample covers it

        samples.append((t1, State(u1 * u1, y1)))

        if conv_on:
            if math.hypot(u1 * u1 - xs, y1 - ys) <= cfg.conv_tol:
                if in_ball_since is None:
                    in_ball_since = t1
                elif t1 - in_ball_since >= cfg.conv_window:
                    terminal = Terminal.converged(interior, t1)
                    break
            else:
                in_ball_since = None

        t, u, y = t1, u1, y1
        k1 = stages[6]  # FSAL
        if err > 0.0:
            h = min(cfg.h_max, h * min(5.0, max(0.2, 0.9 * err ** -0.2)))
        else:
            h = min(cfg.h_max, h * 5.0)

    if terminal is None:
        terminal = Terminal.horizon()
    return Trajectory(params=p, samples=samples, terminal=terminal, stats=stats)


def integrate_raw_reference(
    p: ModelParams,
    s0: State,
    dt: float,
    t_end: float,
    sample_stride: int = 1,
) -> Trajectory:
    """Fixed-step classical RK4 on the regularized system; the cross-validation oracle.

    No adaptivity, no convergence detection: the solution is stepped with a
    constant dt until t_end, recording every `sample_stride`-th step plus the
    final point.  Extinction is detected by a per-step sign check on u and
    refined by bisection on step subdivision to a bracket of width <= 1e-12.
    """
    if s0.x <= 0.0:
        raise InvalidParameterError("integrate_raw_reference requires x0 > 0")
    if not (dt > 0.0 and math.isfinite(dt)):
        raise InvalidParameterError(f"dt must be positive and finite, got {dt!r}")
    if not (t_end > 0.0 and math.isfinite(t_end)):
        raise InvalidParameterError(f"t_end must be positive and finite, got {t_end!r}")
    if sample_stride < 1:
        raise InvalidParameterError("sample_stride must be >= 1")

    r, a, b = p.r, p.alpha, p.beta

    def f(u: float, y: float) -> tuple[float, float]:
        return 0.5 * r * u * (1.0 - u * u) - 0.5 * y, y * (b * u - a)

    def rk4(u: float, y: float, h: float) -> tuple[float, float]:
        k1u, k1y = f(u, y)
        k2u, k2y = f(u + 0.5 * h * k1u, y + 0.5 * h * k1y)
        k3u, k3y = f(u + 0.5 * h * k2u, y + 0.5 * h * k2y)
        k4u, k4y = f(u + h * k3u, y + h * k3y)
        return (
            u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        )

    stats = IntegrationStats()
    samples: list[tuple[float, State]] = [(0.0, s0)]
    u = math.sqrt(s0.x)
    y = s0.y
    n_full = int(math.floor(t_end / dt))

    def refine(t_lo: float, u_lo: float, y_lo: float, t_hi: float):
        while t_hi - t_lo > 1e-12:
            mid = 0.5 * (t_lo + t_hi)
            if mid <= t_lo or mid >= t_hi:
                break
            um, ym = rk4(u_lo, y_lo, mid - t_lo)
            stats.rhs_evals += 4
            if um > 0.0:
                t_lo, u_lo, y_lo = mid, um, ym
            else:
                t_hi = mid
        return t_lo, u_lo, y_lo, t_hi

    terminal: Optional[Terminal] = None
    i = 0
    t_prev = 0.0
    while True:
        if i < n_full:
            t_next = (i + 1) * dt
            h = t_next - t_prev
        else:
            h = t_end - t_prev
            if h <= 0.0:
                break
            t_next = t_end
        u1, y1 = rk4(u, y, h)
        stats.rhs_evals += 4
        stats.accepted_steps += 1
        if not (math.isfinite(u1) and math.isfinite(y1)):
            raise NonFiniteStateError(t_prev)
        if u1 <= 0.0:
            lo_t, lo_u, lo_y, hi_t = refine(t_prev, u, y, t_next)
            t_ext = 0.5 * (lo_t + hi_t)
            if lo_t > samples[-1][0]:
                samples.append((lo_t, State(lo_u * lo_u, lo_y)))
            samples.append((t_ext, State(0.0, max(lo_y, 0.0))))
            terminal = Terminal.extinction(t_ext, (lo_t, hi_t))
            break
        i += 1
        if i % sample_stride == 0 or t_next == t_end:
            samples.append((t_next, State(u1 * u1, y1)))
        t_prev, u, y = t_next, u1, y1
        if t_next == t_end:
            break

    if terminal is None:
        terminal = Terminal.horizon()
        if samples[-1][0] < t_end:
            samples.append((t_end, State(u * u, y)))
    return Trajectory(params=p, samples=samples, terminal=terminal, stats=stats)
