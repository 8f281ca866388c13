"""Fixed-step closed-loop trial engine and deterministic batch runner.

Each trial wires operator -> supervisor/controller -> plant -> force readout
at a single fixed rate (default 1 kHz for sensing, control and physics) and
logs every sample until the task completes or the timeout elapses.  Trials
are strictly single-threaded and deterministic; the batch runner derives one
seed per trial and may execute trials concurrently, merging results by trial
index so parallel and sequential runs are indistinguishable.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .control import (
    ControllerParams,
    Mode,
    SupervisorState,
    impedance_law,
    supervisor_step,
)
from .model import (
    DEFAULT_DT,
    FirstOrderLag,
    PlantState,
    ScleraModel,
    VesselProfile,
    force_magnitude,
    sclera_force,
    step_plant,
)
from .operator import AlarmLevel, OperatorProfile, SimulatedOperator, alarm_level

MODES = ("active", "passive")

EVENT_SWITCH_ON = "SWITCH_ON"
EVENT_SWITCH_OFF = "SWITCH_OFF"
EVENT_ALARM_CHANGE = "ALARM_CHANGE"
EVENT_TASK_DONE = "TASK_DONE"
EVENT_TIMEOUT = "TIMEOUT"


class ConfigError(ValueError):
    """Scenario configuration rejected before any stepping."""


class SimulationAbort(RuntimeError):
    """A trial hit a non-finite state variable and was stopped."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one trial needs, nested parameter sets included."""

    mode: str = "active"  # "active" (switching supervisor) or "passive" (impedance only)
    controller: ControllerParams = field(default_factory=ControllerParams)
    sclera: ScleraModel = field(default_factory=ScleraModel)
    profile: OperatorProfile = field(default_factory=OperatorProfile)
    vessel: VesselProfile = field(default_factory=VesselProfile)
    dt: float = DEFAULT_DT  # s
    timeout: float = 120.0  # s, hard per-trial cap
    seed: int = 42
    progress_rate: float = 0.005  # task progress per mm of guidance-channel travel
    robot_lag_tau: float = 0.0  # s, inner velocity-loop lag (0 = ideal)


def validate_config(config: ScenarioConfig) -> None:
    """Reject invalid scenarios with a ConfigError naming the offending field."""
    try:
        if config.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {config.mode!r}")
        if not (math.isfinite(config.dt) and config.dt > 0.0):
            raise ValueError(f"dt must be finite and positive, got {config.dt}")
        if not (math.isfinite(config.timeout) and config.timeout > 0.0):
            raise ValueError(f"timeout must be finite and positive, got {config.timeout}")
        if not isinstance(config.seed, int) or config.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {config.seed!r}")
        if not (math.isfinite(config.progress_rate) and config.progress_rate > 0.0):
            raise ValueError(f"progress_rate must be finite and positive, got {config.progress_rate}")
        if config.robot_lag_tau < 0.0:
            raise ValueError(f"robot_lag_tau must be >= 0, got {config.robot_lag_tau}")
        config.controller.validate()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class TrialEvent:
    t: float
    kind: str
    fs: float  # mN, force magnitude when the event fired
    info: str = ""


@dataclass
class TrialLog:
    """Complete sampled record of one trial.

    Sample arrays all share the same length; row n is the measurement at
    t = n * dt together with the twist commanded at that step.
    ``control_mode`` holds Mode values (0 impedance, 1 adaptive) and
    ``alarm`` holds AlarmLevel values.
    """

    condition: str  # "active" | "passive"
    seed: int
    dt: float
    outcome: str  # TASK_DONE | TIMEOUT
    vessel_order: tuple[int, ...]
    t: np.ndarray
    fsx: np.ndarray
    fsy: np.ndarray
    fs: np.ndarray
    control_mode: np.ndarray
    alarm: np.ndarray
    progress: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    twist: np.ndarray  # (n, 6)
    events: list[TrialEvent]

    @property
    def n_samples(self) -> int:
        return len(self.t)

    def switch_pairs(self) -> list[tuple[TrialEvent, TrialEvent]]:
        """Matched (SWITCH_ON, SWITCH_OFF) event pairs, in order."""
        pairs = []
        pending = None
        for event in self.events:
            if event.kind == EVENT_SWITCH_ON:
                pending = event
            elif event.kind == EVENT_SWITCH_OFF and pending is not None:
                pairs.append((pending, event))
                pending = None
        return pairs


def _check_finite(name: str, value: float, t: float) -> None:
    if not math.isfinite(value):
        raise SimulationAbort(f"non-finite state: {name}={value} at t={t:.4f} s")


def run_trial(config: ScenarioConfig) -> TrialLog:
    """Run one closed-loop trial to completion or timeout.

    Per step: read the contact force, derive the alarm level, query the
    operator for a hand wrench, command a twist (switching supervisor in
    active mode, plain impedance in passive mode -- there is no switching in
    passive mode), then integrate the plant.  A non-finite state variable
    aborts the trial loudly.
    """
    validate_config(config)
    params = config.controller
    dt = config.dt
    rng = np.random.default_rng(config.seed)
    vessel = config.vessel.reordered_for_seed(config.seed)
    operator = SimulatedOperator(config.profile, vessel, rng)
    supervisor = SupervisorState.initial(params)
    state = PlantState()
    lag = FirstOrderLag(config.robot_lag_tau) if config.robot_lag_tau > 0.0 else None
    active = config.mode == "active"
    n_max = round(config.timeout / dt)

    col_t: list[float] = []
    col_fsx: list[float] = []
    col_fsy: list[float] = []
    col_fs: list[float] = []
    col_mode: list[int] = []
    col_alarm: list[int] = []
    col_progress: list[float] = []
    col_dx: list[float] = []
    col_dy: list[float] = []
    rows_twist: list[np.ndarray] = []
    events: list[TrialEvent] = []

    prev_alarm: AlarmLevel | None = None
    outcome = EVENT_TIMEOUT
    n = 0
    while True:
        t = n * dt
        _check_finite("dx", state.dx, t)
        _check_finite("dy", state.dy, t)
        _check_finite("progress", state.progress, t)
        force = sclera_force(state, config.sclera)
        _check_finite("fsx", force.fx, t)
        _check_finite("fsy", force.fy, t)
        magnitude = force_magnitude(force)

        alarm = alarm_level(magnitude, params)
        if prev_alarm is not None and alarm != prev_alarm:
            events.append(
                TrialEvent(t, EVENT_ALARM_CHANGE, magnitude, f"{prev_alarm.name}->{alarm.name}")
            )
        prev_alarm = alarm

        hand = operator.wrench(state, alarm, config.mode, t)
        if active:
            mode_before = supervisor.mode
            twist, supervisor = supervisor_step(supervisor, params, hand, force, t, dt)
            if supervisor.mode is not mode_before:
                if supervisor.mode is Mode.ADAPTIVE:
                    ref = supervisor.reference
                    assert ref is not None
                    events.append(
                        TrialEvent(
                            t,
                            EVENT_SWITCH_ON,
                            magnitude,
                            f"f0=({ref.f0x:.3f}, {ref.f0y:.3f})",
                        )
                    )
                else:
                    events.append(TrialEvent(t, EVENT_SWITCH_OFF, magnitude))
            mode_code = supervisor.mode.value
        else:
            twist = impedance_law(params, hand)
            mode_code = Mode.IMPEDANCE.value

        col_t.append(t)
        col_fsx.append(force.fx)
        col_fsy.append(force.fy)
        col_fs.append(magnitude)
        col_mode.append(mode_code)
        col_alarm.append(int(alarm))
        col_progress.append(state.progress)
        col_dx.append(state.dx)
        col_dy.append(state.dy)
        rows_twist.append(twist)

        if state.progress >= 1.0:
            outcome = EVENT_TASK_DONE
            events.append(TrialEvent(t, EVENT_TASK_DONE, magnitude))
            break
        if n >= n_max:
            outcome = EVENT_TIMEOUT
            events.append(TrialEvent(t, EVENT_TIMEOUT, magnitude))
            break

        applied = lag.apply(twist, dt) if lag is not None else twist
        state = step_plant(state, applied, dt, config.progress_rate)
        n += 1

    return TrialLog(
        condition=config.mode,
        seed=config.seed,
        dt=dt,
        outcome=outcome,
        vessel_order=vessel.order,
        t=np.asarray(col_t),
        fsx=np.asarray(col_fsx),
        fsy=np.asarray(col_fsy),
        fs=np.asarray(col_fs),
        control_mode=np.asarray(col_mode, dtype=np.uint8),
        alarm=np.asarray(col_alarm, dtype=np.uint8),
        progress=np.asarray(col_progress),
        dx=np.asarray(col_dx),
        dy=np.asarray(col_dy),
        twist=np.vstack(rows_twist),
        events=events,
    )


def _run_indexed(config: ScenarioConfig, index: int) -> TrialLog:
    try:
        return run_trial(config)
    except SimulationAbort as exc:
        raise SimulationAbort(f"trial {index} (seed {config.seed}): {exc}") from exc


def run_batch(config: ScenarioConfig, n_trials: int, parallel: bool = False) -> list[TrialLog]:
    """Run n_trials independent trials of one scenario.

    Trial i uses seed = config.seed + i, which also selects that trial's
    vessel ordering.  Results come back ordered by trial index regardless of
    execution order; trials share no mutable state, so concurrent execution
    is purely an implementation detail.
    """
    if n_trials < 1:
        raise ConfigError(f"n_trials must be >= 1, got {n_trials}")
    validate_config(config)
    configs = [replace(config, seed=config.seed + i) for i in range(n_trials)]
    if not parallel:
        return [_run_indexed(c, i) for i, c in enumerate(configs)]
    with ThreadPoolExecutor() as pool:
        futures = [pool.submit(_run_indexed, c, i) for i, c in enumerate(configs)]
        return [f.result() for f in futures]
