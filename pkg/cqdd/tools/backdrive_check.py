"""
Backdrive check.

Runs the virtual backdrive experiment and compares the static and dynamic
backdrive torques with the published values.
"""

from __future__ import annotations

import logging
from typing import Any

from cqdd.dynamics.actuator import ActuatorConfig
from cqdd.dynamics.experiments import virtual_backdrive_experiment
from cqdd.services.config_loader import load_reference
from cqdd.tools.base import BaseTool

logger = logging.getLogger(__name__)


class BackdriveTool(BaseTool):
    """Static (breakaway) and dynamic (sustaining) backdrive torque of the output."""

    name = "actuator.backdrive"
    description = (
        "Drive the unpowered actuator from the output side and measure the torque "
        "needed to break away and to keep it turning."
    )

    def run(
        self,
        config: ActuatorConfig | None = None,
        reference: dict[str, Any] | None = None,
    ) -> dict[str, Any]:
        config = config or ActuatorConfig()
        ref = (reference if reference is not None else load_reference()).get("backdrive", {})
        tolerance = float(ref.get("toleranceNm", 0.0))

        findings = self.create_findings_base(subject="actuator")
        result = virtual_backdrive_experiment(config)
        findings["measurements"] = {
            "staticNm": result.static_nm,
            "dynamicNm": result.dynamic_nm,
            "speedRadS": result.speed_rad_s,
        }

        self.add_threshold_check(
            findings,
            "backdrive.static",
            "Static backdrive torque",
            metric="staticNm",
            actual=result.static_nm,
            threshold=ref.get("staticNm"),
            comparison="within",
            tolerance=tolerance,
            hint="Breakaway torque is set by static_friction_out",
        )
        self.add_threshold_check(
            findings,
            "backdrive.dynamic",
            "Dynamic backdrive torque",
            metric="dynamicNm",
            actual=result.dynamic_nm,
            threshold=ref.get("dynamicNm"),
            comparison="within",
            tolerance=tolerance,
            hint="Sustaining torque is set by kinetic_friction_out and viscous_coeff",
        )
        return self.finalize(findings)
