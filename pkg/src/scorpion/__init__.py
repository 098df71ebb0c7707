"""Scorpion: a software twin of an inspection-class ROV.

Subpackages cover the vehicle simulator, thrust allocation, the
station-keeping controller, the vision measurement stack, photosphere
stitching, and the telemetry data plane.  ``scorpion.cli`` is the headless
entry point.
"""

__version__ = "0.1.0"

GRAVITY = 9.80665  # m/s^2, standard gravity used for all kgf conversions
