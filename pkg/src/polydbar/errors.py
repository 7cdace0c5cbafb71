"""Exception hierarchy shared by all modules."""


class DbarError(Exception):
    """Base class for every error raised by polydbar."""


class InvalidArgument(DbarError, ValueError):
    pass


class OutOfDomain(DbarError, ValueError):
    """A point lies outside the closed polydisc, or outside an operator's domain."""


class NearBoundaryError(OutOfDomain):
    def __init__(self, value, margin):
        self.value = value
        self.margin = margin
        super().__init__(
            f"|z| = {abs(value):.6g} is within {margin:g} of the unit circle; "
            f"move the point to |z| <= {1 - margin:.6g} or use the spectral circle rule"
        )


class StencilOutOfDomain(OutOfDomain):
    """A finite-difference stencil leaves the closed polydisc."""


class SectorTieError(DbarError):
    """Two coordinate moduli coincide, so the point lies on a sector boundary."""


class CalibrationError(DbarError):
    """Henkin sign calibration found no admissible table, or more than one."""


class ClosednessError(DbarError):
    """A (0,1)-form is not dbar-closed."""

    def __init__(self, pair, residual=None):
        self.pair = pair
        self.residual = residual
        msg = f"form is not dbar-closed: components {pair[0]} and {pair[1]} disagree"
        if residual is not None:
            msg += f" (residual {residual})"
        super().__init__(msg)


class ResourceGuardError(DbarError):
    """A requested quadrature would exceed the node budget."""
