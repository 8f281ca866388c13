"""Control laws and the switching supervisor.

Three laws govern the commanded twist:

* Impedance (co-manipulation): every twist channel is a constant gain times
  the corresponding hand-wrench channel, so the robot follows the operator.
* Adaptive force control on the two lateral channels: a velocity-level law
  tracks a desired contact-force trajectory against an environment of
  unknown compliance, with the compliance estimated online.
* Hybrid: lateral channels adaptive, remaining channels impedance.

The supervisor starts in impedance mode, switches the lateral channels to
the adaptive law when the contact-force magnitude reaches the switch-on
threshold L (snapshotting the force pair and starting an exponentially
decreasing reference toward half the snapshot), and hands control back once
both components have shrunk to 3/4 of their snapshot values.

A 1-DoF plant (velocity-integrator robot pressing on a linear spring) is
included as a testbed for verifying closed-loop force convergence of the
adaptive law in isolation.

Sign convention used everywhere: the force error is
``delta_f = measured - desired``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .model import (
    DEFAULT_LIMITS,
    ScleraForce,
    TwistLimits,
    force_magnitude,
    saturate_twist,
)

# Snapshot components smaller than this are treated as already satisfying the
# 3/4 exit condition, so a near-zero component cannot trap the supervisor in
# force-regulation mode forever.
SNAPSHOT_EPSILON = 1.0  # mN

EXIT_RATIO = 0.75  # fraction of the snapshot each component must reach to exit


class Mode(Enum):
    """Which law governs the lateral channels."""

    IMPEDANCE = 0
    ADAPTIVE = 1


@dataclass(frozen=True)
class ControllerParams:
    """Controller gains and safety thresholds.

    Defaults are the experimentally tuned values: impedance gain 7.5 on all
    channels, force-error gains 0.2, compliance-update rates 5e-6, reference
    decay rate 1 (a trade-off between stability and tracking accuracy),
    switch-on threshold 100 mN and alarm levels 80/100/120 mN with 120 mN the
    unsafe bound.
    """

    k_gain: float = 7.5  # mm/s per mN (linear), rad/s per mN*mm (angular)
    alpha1: float = 0.2  # mm/s per mN, lateral x force-error gain
    alpha2: float = 0.2  # mm/s per mN, lateral y force-error gain
    lambda_rate1: float = 5e-6  # compliance-estimate update rate, x
    lambda_rate2: float = 5e-6  # compliance-estimate update rate, y
    a: float = 1.0  # 1/s, reference decay rate
    L: float = 100.0  # mN, adaptive switch-on threshold
    L1: float = 80.0  # mN, first alarm level
    L2: float = 100.0  # mN, second alarm level
    L3: float = 120.0  # mN, unsafe bound
    lambda_init: float = 0.01  # mm/mN, initial compliance estimate (1/100 stiffness guess)
    min_dwell: float = 0.050  # s, minimum time in adaptive mode (anti-chatter)
    exit_requires_both: bool = True  # both components at 3/4, else either

    def validate(self) -> None:
        """Strict parameter checks applied before running a trial."""
        for name in ("k_gain", "alpha1", "alpha2", "lambda_rate1", "lambda_rate2", "a"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"controller gain {name} must be finite and positive, got {value}")
        if not (0.0 < self.L1 < self.L2 <= self.L < self.L3):
            raise ValueError(
                f"thresholds must satisfy 0 < L1 < L2 <= L < L3, got "
                f"L1={self.L1}, L2={self.L2}, L={self.L}, L3={self.L3}"
            )
        if not (math.isfinite(self.lambda_init) and self.lambda_init > 0.0):
            raise ValueError(f"lambda_init must be finite and positive, got {self.lambda_init}")
        if self.min_dwell < 0.0:
            raise ValueError(f"min_dwell must be >= 0, got {self.min_dwell}")


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Exponentially decreasing force reference started at a mode switch.

    Per channel: F_d(t) = (f0/2) * (exp(-a (t - t0)) + 1), which starts at
    the snapshot value f0, decreases monotonically in magnitude, never
    crosses zero, and settles at f0/2.
    """

    f0x: float  # mN, lateral force x at switch time
    f0y: float  # mN, lateral force y at switch time
    t0: float  # s, switch time
    a: float = 1.0  # 1/s, decay rate


def reference_eval(
    traj: ReferenceTrajectory, t: float
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Reference force pair and its time derivative at time t >= t0.

    Returns ``((f_dx, f_dy), (f_dx_dot, f_dy_dot))`` in mN and mN/s.
    """
    if t < traj.t0:
        raise ValueError(f"reference evaluated before its start time: t={t} < t0={traj.t0}")
    decay = math.exp(-traj.a * (t - traj.t0))
    f_d = (0.5 * traj.f0x * (decay + 1.0), 0.5 * traj.f0y * (decay + 1.0))
    f_d_dot = (-0.5 * traj.a * traj.f0x * decay, -0.5 * traj.a * traj.f0y * decay)
    return f_d, f_d_dot


@dataclass(frozen=True)
class ComplianceEstimate:
    """Online estimate of the environment compliance per lateral axis [mm/mN]."""

    lambda_hat1: float
    lambda_hat2: float


def adaptive_channel(lambda_hat: float, f_d_dot: float, delta_f: float, alpha: float) -> float:
    """Adaptive force-control velocity for one channel [mm/s].

    v = lambda_hat * f_d_dot - alpha * delta_f, with delta_f = measured - desired.
    """
    return lambda_hat * f_d_dot - alpha * delta_f


def update_compliance(
    est: ComplianceEstimate,
    f_d_dot: tuple[float, float],
    delta_f: tuple[float, float],
    lambda_rates: tuple[float, float],
    dt: float,
) -> ComplianceEstimate:
    """One explicit-Euler step of the compliance adaptation law.

    Per axis: lambda_hat' = lambda_hat - rate * f_d_dot * delta_f * dt.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return ComplianceEstimate(
        lambda_hat1=est.lambda_hat1 - lambda_rates[0] * f_d_dot[0] * delta_f[0] * dt,
        lambda_hat2=est.lambda_hat2 - lambda_rates[1] * f_d_dot[1] * delta_f[1] * dt,
    )


def impedance_law(
    params: ControllerParams,
    hand: np.ndarray,
    limits: TwistLimits | None = DEFAULT_LIMITS,
) -> np.ndarray:
    """Co-manipulation law: commanded twist = gain * hand wrench, saturated."""
    hand = np.asarray(hand, dtype=float)
    return saturate_twist(params.k_gain * hand, limits)


@dataclass(frozen=True)
class SupervisorState:
    """Switching-supervisor state carried between control steps.

    ``reference`` is present exactly while the adaptive law is active.  The
    compliance estimate persists across mode switches: the environment does
    not change when the mode does.
    """

    mode: Mode = Mode.IMPEDANCE
    reference: ReferenceTrajectory | None = None
    compliance: ComplianceEstimate = field(
        default_factory=lambda: ComplianceEstimate(0.01, 0.01)
    )

    @classmethod
    def initial(cls, params: ControllerParams) -> "SupervisorState":
        return cls(
            mode=Mode.IMPEDANCE,
            reference=None,
            compliance=ComplianceEstimate(params.lambda_init, params.lambda_init),
        )


def _component_exited(f0: float, f: float) -> bool:
    return abs(f0) < SNAPSHOT_EPSILON or abs(f) <= EXIT_RATIO * abs(f0)


def _exit_satisfied(ref: ReferenceTrajectory, sclera: ScleraForce, params: ControllerParams) -> bool:
    x_done = _component_exited(ref.f0x, sclera.fx)
    y_done = _component_exited(ref.f0y, sclera.fy)
    return (x_done and y_done) if params.exit_requires_both else (x_done or y_done)


def _adaptive_step(
    state: SupervisorState,
    params: ControllerParams,
    hand: np.ndarray,
    sclera: ScleraForce,
    t: float,
    dt: float,
    limits: TwistLimits | None,
) -> tuple[np.ndarray, SupervisorState]:
    assert state.reference is not None
    f_d, f_d_dot = reference_eval(state.reference, t)
    delta_f = (sclera.fx - f_d[0], sclera.fy - f_d[1])
    comp = state.compliance
    twist = np.empty(6)
    twist[0] = adaptive_channel(comp.lambda_hat1, f_d_dot[0], delta_f[0], params.alpha1)
    twist[1] = adaptive_channel(comp.lambda_hat2, f_d_dot[1], delta_f[1], params.alpha2)
    twist[2:] = params.k_gain * np.asarray(hand, dtype=float)[2:]
    updated = update_compliance(
        comp, f_d_dot, delta_f, (params.lambda_rate1, params.lambda_rate2), dt
    )
    return saturate_twist(twist, limits), replace(state, compliance=updated)


def supervisor_step(
    state: SupervisorState,
    params: ControllerParams,
    hand: np.ndarray,
    sclera: ScleraForce,
    t: float,
    dt: float,
    limits: TwistLimits | None = DEFAULT_LIMITS,
) -> tuple[np.ndarray, SupervisorState]:
    """One supervisor decision: pick the governing law and produce the twist.

    In impedance mode, crossing the switch-on threshold snapshots the force
    pair, starts the decreasing reference and emits the adaptive twist for
    this very step.  In adaptive mode, once the minimum dwell has elapsed and
    both components satisfy the 3/4 exit rule, control reverts to impedance
    for this step.  The compliance estimate is updated only while the
    adaptive law is active, and survives mode switches.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if state.mode is Mode.ADAPTIVE and state.reference is None:
        raise ValueError("malformed supervisor state: adaptive mode without a reference")

    if state.mode is Mode.IMPEDANCE:
        if force_magnitude(sclera) >= params.L:
            ref = ReferenceTrajectory(f0x=sclera.fx, f0y=sclera.fy, t0=t, a=params.a)
            engaged = SupervisorState(Mode.ADAPTIVE, ref, state.compliance)
            return _adaptive_step(engaged, params, hand, sclera, t, dt, limits)
        return impedance_law(params, hand, limits), state

    ref = state.reference
    assert ref is not None
    if t - ref.t0 >= params.min_dwell and _exit_satisfied(ref, sclera, params):
        released = SupervisorState(Mode.IMPEDANCE, None, state.compliance)
        return impedance_law(params, hand, limits), released
    return _adaptive_step(state, params, hand, sclera, t, dt, limits)


@dataclass
class OneDofPlant:
    """Velocity-controlled 1-DoF robot pressing on a linear spring.

    The contact force is k * (x - x0).  The mass is retained for
    documentation only; at the velocity level the inner loop hides it.
    """

    k: float = 200.0  # mN/mm, environment stiffness
    x: float = 0.0  # mm, robot position
    x0: float = 0.0  # mm, spring rest position
    m: float = 0.1  # kg, unused by the velocity-level model

    def contact_force(self) -> float:
        return self.k * (self.x - self.x0)


@dataclass(frozen=True)
class OneDofTrace:
    """Sampled closed-loop run of the 1-DoF testbed."""

    t: np.ndarray
    delta_f: np.ndarray  # mN, measured - desired
    lambda_hat: np.ndarray  # mm/mN


def run_1dof_oracle(
    plant: OneDofPlant,
    f_d: float,
    params: ControllerParams,
    duration: float,
    dt: float,
    lambda_init: float | None = None,
) -> OneDofTrace:
    """Closed-loop 1-DoF run: adaptive law + adaptation + spring plant.

    The desired force is constant, so its derivative is zero and the
    compliance estimate should stay frozen; the force error then obeys a
    stable first-order decay for positive gains.  Used to verify the
    convergence claim of the adaptive law independently of the full
    simulator.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if plant.k <= 0.0:
        raise ValueError(f"plant stiffness must be positive, got {plant.k}")
    f_e0 = plant.contact_force()
    if f_d * f_e0 < 0.0:
        raise ValueError(
            f"desired force ({f_d} mN) and initial contact force ({f_e0} mN) must "
            "share a sign (or be zero)"
        )

    n_steps = round(duration / dt)
    lam = params.lambda_init if lambda_init is None else lambda_init
    x = plant.x
    f_d_dot = 0.0  # constant reference

    t_out = np.empty(n_steps + 1)
    df_out = np.empty(n_steps + 1)
    lam_out = np.empty(n_steps + 1)
    for n in range(n_steps + 1):
        f_e = plant.k * (x - plant.x0)
        delta_f = f_e - f_d
        t_out[n] = n * dt
        df_out[n] = delta_f
        lam_out[n] = lam
        if n == n_steps:
            break
        v = adaptive_channel(lam, f_d_dot, delta_f, params.alpha1)
        lam = lam - params.lambda_rate1 * f_d_dot * delta_f * dt
        x += v * dt
    return OneDofTrace(t=t_out, delta_f=df_out, lambda_hat=lam_out)
