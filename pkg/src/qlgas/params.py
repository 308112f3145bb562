"""Physical parameters and derived scales.

Natural units hbar = c = 1 internally; both constants are carried
symbolically and configurable, defaulting to 1, so formulas read like the
continuum ones.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PhysicalParams:
    """Masses, charge, background density and lattice scales.

    m      fermion mass
    m0     interaction-strength mass parameter
    e      electric charge (nonzero)
    rho0   background density
    ell    lattice cell size
    zeta   time-scale factor; the step is dt = zeta ell / c
    """

    m: float
    m0: float
    e: float
    rho0: float
    ell: float
    zeta: float = 1.0
    hbar: float = 1.0
    c: float = 1.0

    @property
    def tau(self) -> float:
        """Timestep dt = zeta ell / c."""
        return self.zeta * self.ell / self.c

    @property
    def epsilon(self) -> float:
        """Deformation parameter m0 c ell / hbar; recomputed, never stored."""
        return self.m0 * self.c * self.ell / self.hbar

    @property
    def lambda_L(self) -> float:
        """London depth, lambda_L^2 = m0 c^2 / (e^2 rho0)."""
        return float(np.sqrt(self.m0 * self.c**2 / (self.e**2 * self.rho0)))

    @property
    def doublet_mass(self) -> float:
        """Gauge-sector mass scale hbar / (lambda_L c)."""
        return self.hbar / (self.lambda_L * self.c)

    def validate(self) -> None:
        errors = []
        for name in ("m", "m0", "rho0", "ell"):
            if getattr(self, name) < 0 or (name != "m" and getattr(self, name) == 0):
                errors.append(f"{name} must be positive (m may be zero), got {getattr(self, name)}")
        if self.e == 0:
            errors.append("e must be nonzero")
        if self.zeta <= 0 or self.hbar <= 0 or self.c <= 0:
            errors.append("zeta, hbar, c must be positive")
        if not errors:
            s = self.m * self.c**2 * self.tau / self.hbar
            if s > 1.0:
                errors.append(
                    f"collide feasibility violated: m c^2 dt / hbar = {s:.6g} > 1"
                )
            s_phi = self.doublet_mass * self.c**2 * self.tau / self.hbar
            if s_phi > 1.0:
                errors.append(
                    "collide feasibility violated for the gauge doublet: "
                    f"(hbar/(lambda_L c)) c^2 dt / hbar = {s_phi:.6g} > 1"
                )
        if errors:
            raise ConfigError(errors)
