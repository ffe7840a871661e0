"""Spacelike Zoll Lorentzian surfaces built from Killing-adapted chart atlases.

The package constructs the parabolic, elliptic and hyperbolic families of
Lorentzian cylinders with a Killing field, checks their closure conditions by
singular quadrature and by geodesic shooting, and provides the conformal
diagnostics (reflexion map, ping-pong property) and the Blaschke-type blend.
"""

from zollsurf.profiles import (
    BlaschkeSpec,
    EllipticSpec,
    HyperbolicSpec,
    KappaProfile,
    ParabolicSpec,
)

__all__ = [
    "BlaschkeSpec",
    "EllipticSpec",
    "HyperbolicSpec",
    "KappaProfile",
    "ParabolicSpec",
]

__version__ = "0.1.0"
