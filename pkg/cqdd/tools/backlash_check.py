"""
Backlash check.

Runs the virtual backlash experiment at evenly spaced output angles in both
directions and compares the mean lost motion with the published value. The
ripple amplitude at rated load is checked alongside, since both characterize the
transmission.
"""

from __future__ import annotations

import logging
from typing import Any

from cqdd.dynamics.actuator import ActuatorConfig
from cqdd.dynamics.experiments import ripple_peak_to_peak, virtual_backlash_experiment
from cqdd.services.config_loader import load_reference
from cqdd.tools.base import BaseTool

logger = logging.getLogger(__name__)


class BacklashTool(BaseTool):
    """Lost motion of the transmission on direction reversal."""

    name = "actuator.backlash"
    description = "Preload the transmission, reverse it and measure the dead band in arcminutes."

    def run(
        self,
        config: ActuatorConfig | None = None,
        reference: dict[str, Any] | None = None,
        n_locations: int = 6,
    ) -> dict[str, Any]:
        config = config or ActuatorConfig()
        reference = reference if reference is not None else load_reference()
        ref = reference.get("backlash", {})
        tolerance = float(ref.get("toleranceArcmin", 0.0))

        findings = self.create_findings_base(subject="actuator")
        result = virtual_backlash_experiment(config, n_locations=n_locations)
        ripple_p2p = ripple_peak_to_peak(config)
        findings["measurements"] = {
            "meanArcmin": result.mean_arcmin,
            "halfRangeArcmin": result.half_range_arcmin,
            "samplesArcmin": list(result.samples_arcmin),
            "ripplePeakToPeakNm": ripple_p2p,
        }

        self.add_threshold_check(
            findings,
            "backlash.mean",
            "Mean backlash",
            metric="meanArcmin",
            actual=result.mean_arcmin,
            threshold=ref.get("arcmin"),
            comparison="within",
            tolerance=tolerance,
            hint="Backlash follows backlash_width",
        )
        self.add_check(
            findings,
            "backlash.spread",
            "Backlash spread over output angle",
            "low",
            "pass" if result.half_range_arcmin <= tolerance else "warn",
            evidence={"metric": "halfRangeArcmin", "actual": result.half_range_arcmin},
        )

        actuator_ref = reference.get("actuator", {})
        amplitude = actuator_ref.get("rippleAmplitudeNm")
        self.add_threshold_check(
            findings,
            "ripple.peak_to_peak",
            "Ripple peak-to-peak at rated load",
            metric="ripplePeakToPeakNm",
            actual=ripple_p2p,
            threshold=None if amplitude is None else 2.0 * float(amplitude),
            comparison="within",
            tolerance=float(actuator_ref.get("ripplePeakToPeakToleranceNm", 0.0)),
            severity="medium",
            hint="Ripple follows ripple_amplitude and rated_torque",
        )
        return self.finalize(findings)
