"""Exception hierarchy shared by all horseshoe modules."""


class HorseshoeError(Exception):
    """Base class for all errors raised by this package."""


# --- expression language ---

class ExprSyntaxError(HorseshoeError):
    """Malformed expression source.  Carries the byte offset of the failure."""

    def __init__(self, offset, message, expected=()):
        self.offset = offset
        self.expected = tuple(expected)
        super().__init__(f"syntax error at offset {offset}: {message}")


class UnknownIdentifier(HorseshoeError):
    def __init__(self, name, offset=None):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r}")


class DomainError(HorseshoeError):
    """Evaluation hit a point outside a subterm's domain (log<=0, sqrt<0, x/0...)."""

    def __init__(self, subterm, point):
        self.subterm = subterm
        self.point = point
        super().__init__(f"domain error in {subterm!r} at {point}")


class NoConvergence(HorseshoeError):
    def __init__(self, achieved_error, message="quadrature did not reach tolerance"):
        self.achieved_error = achieved_error
        super().__init__(f"{message} (achieved {achieved_error:.3e})")


# --- integration ---

class StepSizeUnderflow(HorseshoeError):
    def __init__(self, t, message="step size underflow"):
        self.t = t
        super().__init__(f"{message} at t={t}")


class NonFiniteState(HorseshoeError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"non-finite state at t={t}")


class NoEventBeforeTmax(HorseshoeError):
    def __init__(self, t_max, found=0, wanted=1):
        self.t_max = t_max
        self.found = found
        self.wanted = wanted
        super().__init__(
            f"only {found} of {wanted} events located before t_max={t_max}")


# --- orbits ---

class NotPeriodic(HorseshoeError):
    def __init__(self, t_max):
        self.t_max = t_max
        super().__init__(f"no return to the section before t_max={t_max}")


class ReturnedToWrongPoint(HorseshoeError):
    def __init__(self, distance, tol):
        self.distance = distance
        self.tol = tol
        super().__init__(
            f"first ray return misses the seed by {distance:.3e} (tol {tol:.1e}); "
            "seed may not lie on a closed orbit")


class SelfIntersecting(HorseshoeError):
    def __init__(self, message="orbit polyline is not a simple closed curve"):
        super().__init__(message)


class NoBracket(HorseshoeError):
    """Orbit areas are not nested/monotone along the transversal ray."""


class NotInRegion(HorseshoeError):
    def __init__(self, point):
        self.point = point
        super().__init__(f"point {point} lies outside the region bounded by the outer orbit")


# --- monotonicity ---

class HypothesisViolated(HorseshoeError):
    def __init__(self, condition, detail=""):
        self.condition = condition
        self.detail = detail
        msg = f"hypothesis check failed: {condition}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


# --- geometry ---

class ConditionFails(HorseshoeError):
    """The overlap condition fails for all four cases.  Carries the summary."""

    def __init__(self, summary):
        self.summary = summary
        super().__init__(f"overlap condition fails: {summary}")


class EpsilonUnderflow(HorseshoeError):
    def __init__(self, eps_min):
        self.eps_min = eps_min
        super().__init__(
            f"no valid shrink parameter above {eps_min:.1e}; orbits may be tangential")


class DegenerateOverlap(HorseshoeError):
    def __init__(self, message="polylines overlap along a curve segment"):
        super().__init__(message)


# --- switching ---

class Isochronous(HorseshoeError):
    def __init__(self, p_low, p_high):
        self.p_low = p_low
        self.p_high = p_high
        super().__init__(
            f"boundary periods {p_low!r} and {p_high!r} coincide; "
            "the dwell-time scale diverges")


class BandOutsideQuad(HorseshoeError):
    def __init__(self, level, attainable):
        self.level = level
        self.attainable = attainable
        super().__init__(
            f"required ratio level {level} is not attainable inside the quadrilateral "
            f"(attainable range {attainable})")


class WitnessFailed(HorseshoeError):
    def __init__(self, pair, connection, diagnostic):
        self.pair = pair
        self.connection = connection
        self.diagnostic = diagnostic
        super().__init__(
            f"crossing witness failed for pair {pair}, connection {connection}: {diagnostic}")


# --- cli ---

class ConfigError(HorseshoeError):
    """Invalid project configuration."""
