"""C-QDD actuator simulation and learned torque estimation."""

from __future__ import annotations

__version__ = "0.3.0"
