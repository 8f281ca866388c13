"""Closed-loop simulator comparing two sclera-force safety strategies.

Active strategy: a switching supervisor hands the lateral robot channels to
an adaptive force controller whenever the contact-force magnitude crosses a
safety threshold, autonomously driving the force back down.  Passive
strategy: the robot always follows the operator, who reacts to staged audio
alarms with delayed corrective motions.  Both run against the same compliant
tool-eye contact model, and the same safety metrics are computed per trial.
"""

__version__ = "0.1.0"

from .control import (
    ComplianceEstimate,
    ControllerParams,
    Mode,
    OneDofPlant,
    ReferenceTrajectory,
    SupervisorState,
    adaptive_channel,
    impedance_law,
    reference_eval,
    run_1dof_oracle,
    supervisor_step,
    update_compliance,
)
from .metrics import AggregateStats, TrialMetrics, aggregate, compute_metrics
from .model import (
    PlantState,
    ScleraForce,
    ScleraModel,
    TwistLimits,
    VesselProfile,
    force_magnitude,
    sclera_force,
    step_plant,
)
from .operator import AlarmLevel, OperatorProfile, SimulatedOperator, alarm_level
from .sim import (
    ConfigError,
    ScenarioConfig,
    SimulationAbort,
    TrialEvent,
    TrialLog,
    run_batch,
    run_trial,
)

__all__ = [
    "__version__",
    "AlarmLevel",
    "AggregateStats",
    "ComplianceEstimate",
    "ConfigError",
    "ControllerParams",
    "Mode",
    "OneDofPlant",
    "OperatorProfile",
    "PlantState",
    "ReferenceTrajectory",
    "ScenarioConfig",
    "ScleraForce",
    "ScleraModel",
    "SimulatedOperator",
    "SimulationAbort",
    "SupervisorState",
    "TrialEvent",
    "TrialLog",
    "TrialMetrics",
    "TwistLimits",
    "VesselProfile",
    "adaptive_channel",
    "aggregate",
    "alarm_level",
    "compute_metrics",
    "force_magnitude",
    "impedance_law",
    "reference_eval",
    "run_1dof_oracle",
    "run_batch",
    "run_trial",
    "sclera_force",
    "step_plant",
    "supervisor_step",
    "update_compliance",
]
