"""Exception types shared across the package."""


class QlgasError(Exception):
    """Base class for all package errors."""


class NonHermitianError(QlgasError):
    """A generator that must be hermitian failed the hermiticity gate."""

    def __init__(self, residual: float, what: str = "generator"):
        self.residual = float(residual)
        super().__init__(f"{what} is not hermitian: ||H - H^dag|| = {residual:.3e}")


class NullNormError(QlgasError):
    """The Dirac bilinear norm psibar.psi vanishes; expectation undefined."""

    def __init__(self, value: complex):
        self.value = value
        super().__init__(f"psibar.psi = {value:.3e} is null; expectation value undefined")


class NonUnitaryError(QlgasError):
    """A transformation that must be unitary is not."""


class MassTooLargeError(QlgasError):
    """The collide rotation angle is undefined: |m| c^2 dt / hbar exceeds 1."""

    def __init__(self, value: float, site=None):
        self.value = float(value)
        self.site = site
        where = "" if site is None else f" at site {site}"
        super().__init__(
            f"collide infeasible{where}: mass eigenvalue scale {value:.6g} > 1"
        )


class NonHermitianMassWarning(UserWarning):
    """Doublet mass block grew an anti-hermitian part; hermitian part was used."""


class ConfigError(QlgasError):
    """One or more configuration errors; `.errors` lists them all."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


class SnapshotError(QlgasError):
    """Snapshot file is malformed."""


class TruncatedSnapshotError(SnapshotError):
    """Snapshot file ended before the payload announced in its header."""


class OracleError(QlgasError):
    """A reference oracle failed its own self-validation."""
