"""Simulated human operator and the three-level audio alarm scheme.

The operator produces the hand wrench that performs the vessel-following
task: lateral channels pull the tool toward the vessel-demanded displacement,
the guidance channels carry a steady drive that advances task progress, and
hand tremor is modeled as additive white Gaussian noise on every channel.

Alarms are modeled as discrete levels at the three force thresholds; the
sound itself carries no extra information.  In passive mode the operator
reacts to a sustained mid-level alarm after a skill-dependent delay by
superposing a corrective lateral force that relaxes the displacement, and
keeps correcting until the alarm clears entirely.  In active mode the robot
handles safety, so no corrective term is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .control import ControllerParams
from .model import PlantState, VesselProfile


class AlarmLevel(IntEnum):
    NONE = 0
    LOW = 1
    MID = 2
    HIGH = 3


def alarm_level(f_s: float, params: ControllerParams) -> AlarmLevel:
    """Discrete alarm level for a contact-force magnitude [mN].

    Boundary values belong to the lower level: the first warning starts only
    above L1, the level is MID above L2 and HIGH above the unsafe bound L3.
    """
    if f_s < 0.0:
        raise ValueError(f"force magnitude must be >= 0, got {f_s}")
    if f_s <= params.L1:
        return AlarmLevel.NONE
    if f_s <= params.L2:
        return AlarmLevel.LOW
    if f_s <= params.L3:
        return AlarmLevel.MID
    return AlarmLevel.HIGH


# skill -> (noise_sigma [mN], reaction_delay [s]); more experienced hands are
# steadier and react faster.
SKILL_PRESETS: dict[str, tuple[float, float]] = {
    "expert": (2.0, 0.3),
    "intermediate": (4.0, 0.5),
    "novice": (6.0, 0.7),
}


@dataclass(frozen=True)
class OperatorProfile:
    """Behavioral parameters of the simulated operator."""

    skill: str = "intermediate"
    task_gain: float = 2.0  # mN per mm of lateral path error
    noise_sigma: float = 4.0  # mN, tremor-like white noise per wrench channel
    reaction_delay: float = 0.5  # s, alarm-to-correction latency (passive mode)
    correction_gain: float = 1.5  # scales the relax-toward-center pull while correcting
    drive_force: float = 1.0  # mN, steady push on the guidance channel

    def __post_init__(self) -> None:
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be >= 0")
        if self.reaction_delay < 0.0:
            raise ValueError("reaction_delay must be >= 0")

    @classmethod
    def preset(cls, skill: str, **overrides) -> "OperatorProfile":
        """Profile with skill-derived noise and reaction delay."""
        try:
            noise_sigma, reaction_delay = SKILL_PRESETS[skill]
        except KeyError:
            raise ValueError(
                f"unknown skill {skill!r}; known: {sorted(SKILL_PRESETS)}"
            ) from None
        profile = cls(skill=skill, noise_sigma=noise_sigma, reaction_delay=reaction_delay)
        return replace(profile, **overrides) if overrides else profile


class SimulatedOperator:
    """Stateful wrench source for one trial.

    Owns the trial's random stream and the passive-mode correction latch
    (when the mid-level alarm first became continuous, and whether the
    operator is currently correcting).  Identical profile, vessel course,
    seed and input sequence reproduce the wrench sequence bitwise.
    """

    def __init__(
        self,
        profile: OperatorProfile,
        vessel: VesselProfile,
        rng: np.random.Generator,
    ) -> None:
        self.profile = profile
        self.vessel = vessel
        self.rng = rng
        self._mid_since: float | None = None
        self._correcting = False

    @property
    def correcting(self) -> bool:
        return self._correcting

    def _update_latch(self, alarm: AlarmLevel, t: float) -> None:
        if self._correcting:
            if alarm == AlarmLevel.NONE:
                self._correcting = False
                self._mid_since = None
        elif alarm >= AlarmLevel.MID:
            if self._mid_since is None:
                self._mid_since = t
            elif t - self._mid_since > self.profile.reaction_delay:
                self._correcting = True
        else:
            self._mid_since = None

    def wrench(self, state: PlantState, alarm: AlarmLevel, mode: str, t: float) -> np.ndarray:
        """Hand wrench [mN, mN*mm] for the current sample."""
        p = self.profile
        hand = np.zeros(6)
        dx_star, dy_star = self.vessel.demand(state.progress)
        hand[0] = p.task_gain * (dx_star - state.dx)
        hand[1] = p.task_gain * (dy_star - state.dy)
        hand[2] = p.drive_force
        if mode == "passive":
            self._update_latch(alarm, t)
            if self._correcting:
                hand[0] -= p.correction_gain * p.task_gain * state.dx
                hand[1] -= p.correction_gain * p.task_gain * state.dy
        if p.noise_sigma > 0.0:
            hand += self.rng.normal(0.0, p.noise_sigma, 6)
        return hand
