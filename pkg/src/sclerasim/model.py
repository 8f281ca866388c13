"""Physical model of the tool-eye system.

The tool shaft leans on the eye wall at the incision point, which is modeled
as a pair of independent linear springs in the handle frame.  The robot is a
velocity-controlled manipulator whose inner loop tracks any bounded commanded
twist, so the plant reduces to direct integration of the commanded lateral
velocities.  Friction and moments at the contact are neglected: only the two
lateral force components contribute to the contact force magnitude.

Units used throughout: millimetres, millinewtons, seconds, radians.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

# Commanded-twist saturation keeps the "bounded desired velocity" assumption
# honest and bounds the state excursion per step.
LINEAR_SATURATION = 10.0  # mm/s
ANGULAR_SATURATION = 1.0  # rad/s

# Single fixed rate for sensing, control and physics.
DEFAULT_DT = 0.001  # s


@dataclass(frozen=True)
class ScleraForce:
    """Lateral contact force pair at the incision, handle frame [mN]."""

    fx: float
    fy: float


def force_magnitude(f: ScleraForce) -> float:
    """Magnitude of the lateral contact force, sqrt(fx^2 + fy^2) [mN]."""
    return math.hypot(f.fx, f.fy)


@dataclass(frozen=True)
class ScleraModel:
    """Linear-compliance eye wall: force is exactly stiffness x displacement.

    The true compliance 1/k is hidden from the controller, which has to
    estimate it online.  The default 200 mN/mm puts the 120 mN unsafe bound
    at a 0.6 mm deflection.
    """

    kx: float = 200.0  # mN/mm
    ky: float = 200.0  # mN/mm
    rest_x: float = 0.0  # mm, contact rest position
    rest_y: float = 0.0  # mm

    def __post_init__(self) -> None:
        if not (self.kx > 0.0 and self.ky > 0.0):
            raise ValueError("sclera stiffnesses must be positive")


@dataclass(frozen=True)
class PlantState:
    """Tool state at the incision plus task progress.

    dx, dy are the lateral shaft displacements in the handle frame [mm];
    progress is the dimensionless task-path parameter in [0, 1]; t is the
    simulation time [s].
    """

    dx: float = 0.0
    dy: float = 0.0
    progress: float = 0.0
    t: float = 0.0


def sclera_force(state: PlantState, model: ScleraModel) -> ScleraForce:
    """Contact force produced by the current lateral displacement."""
    return ScleraForce(
        fx=model.kx * (state.dx - model.rest_x),
        fy=model.ky * (state.dy - model.rest_y),
    )


@dataclass(frozen=True)
class TwistLimits:
    """Per-channel saturation bounds for commanded twists."""

    linear: float = LINEAR_SATURATION  # mm/s, channels 1-3
    angular: float = ANGULAR_SATURATION  # rad/s, channels 4-6


DEFAULT_LIMITS = TwistLimits()


def saturate_twist(twist: np.ndarray, limits: TwistLimits | None = DEFAULT_LIMITS) -> np.ndarray:
    """Clip a 6-vector twist to the configured channel bounds.

    Passing ``limits=None`` disables saturation (useful when inspecting the
    raw control-law output).
    """
    v = np.asarray(twist, dtype=float)
    if v.shape != (6,):
        raise ValueError(f"twist must be a 6-vector, got shape {v.shape}")
    if limits is None:
        return v.copy()
    out = v.copy()
    np.clip(out[:3], -limits.linear, limits.linear, out=out[:3])
    np.clip(out[3:], -limits.angular, limits.angular, out=out[3:])
    return out


def step_plant(
    state: PlantState,
    twist: np.ndarray,
    dt: float,
    progress_rate: float = 0.0,
) -> PlantState:
    """Advance the plant one step under a commanded twist (explicit Euler).

    The inner velocity loop is ideal, so the lateral displacements integrate
    the commanded lateral velocities directly.  Task progress advances with
    the norm of the guidance channels 3-6 scaled by ``progress_rate``
    [progress per mm of guidance travel], clamped to [0, 1].
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    v = np.asarray(twist, dtype=float)
    guidance = math.sqrt(float(v[2] * v[2] + v[3] * v[3] + v[4] * v[4] + v[5] * v[5]))
    progress = min(1.0, state.progress + progress_rate * guidance * dt)
    return PlantState(
        dx=state.dx + float(v[0]) * dt,
        dy=state.dy + float(v[1]) * dt,
        progress=progress,
        t=state.t + dt,
    )


class FirstOrderLag:
    """Optional first-order lag on the tracked twist (time constant tau [s]).

    tau = 0 models the ideal inner velocity loop (pass-through).  The update
    uses the implicit-Euler smoothing factor dt/(tau+dt), stable for any dt.
    """

    def __init__(self, tau: float, n_channels: int = 6) -> None:
        if tau < 0.0:
            raise ValueError("lag time constant must be >= 0")
        self.tau = tau
        self._state = np.zeros(n_channels)

    def apply(self, command: np.ndarray, dt: float) -> np.ndarray:
        command = np.asarray(command, dtype=float)
        if self.tau <= 0.0:
            self._state = command.copy()
            return command
        alpha = dt / (self.tau + dt)
        self._state = self._state + alpha * (command - self._state)
        return self._state.copy()


# Direction of the lateral demand for each of the four vessel segments [rad].
# Spread over the circle so successive segments load different force quadrants.
_VESSEL_ANGLES = (0.35, 1.85, 3.40, 5.10)

_PERMUTATIONS = tuple(itertools.permutations(range(4)))

VESSEL_PROFILE_NAMES = ("flat", "four_vessels")


@dataclass(frozen=True)
class VesselProfile:
    """Lateral-demand curve abstracting the vessel-following task.

    The task path is split into four segments, one per vessel.  Within a
    segment the demanded lateral displacement rises and falls smoothly
    (sin^2 bump) up to ``amplitude`` along that vessel's direction, so task
    motion induces a rising contact load that crosses the alarm thresholds.
    ``order`` permutes which vessel is followed in which quarter of the task.

    The "flat" profile demands zero lateral displacement everywhere (an
    unloaded task, useful as a control case).
    """

    name: str = "four_vessels"
    amplitude: float = 0.8  # mm, peak lateral demand
    order: tuple[int, int, int, int] = (0, 1, 2, 3)

    def __post_init__(self) -> None:
        if self.name not in VESSEL_PROFILE_NAMES:
            raise ValueError(f"unknown vessel profile {self.name!r}; known: {VESSEL_PROFILE_NAMES}")
        if not self.amplitude >= 0.0:
            raise ValueError("vessel amplitude must be >= 0")
        if sorted(self.order) != [0, 1, 2, 3]:
            raise ValueError(f"order must be a permutation of (0, 1, 2, 3), got {self.order}")

    def demand(self, progress: float) -> tuple[float, float]:
        """Demanded lateral displacement (dx*, dy*) [mm] at a task progress."""
        if self.name == "flat" or self.amplitude == 0.0:
            return (0.0, 0.0)
        p = min(max(progress, 0.0), 1.0)
        segment = min(int(p * 4.0), 3)
        u = p * 4.0 - segment  # local coordinate in [0, 1)
        s = math.sin(math.pi * u) ** 2
        angle = _VESSEL_ANGLES[self.order[segment]]
        d = self.amplitude * s
        return (d * math.cos(angle), d * math.sin(angle))

    def reordered_for_seed(self, seed: int) -> "VesselProfile":
        """Copy with the vessel order drawn from the trial seed.

        The order is the (seed mod 24)-th lexicographic permutation, so a
        batch of consecutive trial seeds walks through distinct orderings
        while any single seed always maps to the same course.
        """
        return replace(self, order=_PERMUTATIONS[seed % len(_PERMUTATIONS)])
