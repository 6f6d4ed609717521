"""Exception types raised across the toolkit."""


class GibbsForgeError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameter(GibbsForgeError, ValueError):
    pass


class UnknownMap(GibbsForgeError, KeyError):
    pass


class UnknownPotential(GibbsForgeError, KeyError):
    pass


class PointOutsideDomain(GibbsForgeError, ValueError):
    pass


class NoPreimage(GibbsForgeError, ValueError):
    pass


class OrbitEscaped(GibbsForgeError, ValueError):
    pass


class NoConvergence(GibbsForgeError, RuntimeError):
    def __init__(self, iterations, residual_right=float("nan"), residual_left=float("nan")):
        self.iterations = iterations
        self.residual_right = residual_right
        self.residual_left = residual_left
        super().__init__(
            f"power iteration did not converge after {iterations} iterations "
            f"(right residual {residual_right:.3e}, left residual {residual_left:.3e})"
        )


class IntervalSpansBranches(GibbsForgeError, ValueError):
    pass


class NotHyperbolicTime(GibbsForgeError, ValueError):
    pass


class DegenerateBall(GibbsForgeError, ValueError):
    pass


class DegenerateDensity(GibbsForgeError, ValueError):
    pass


class HypothesisViolated(GibbsForgeError, RuntimeError):
    def __init__(self, parameter, conditions):
        self.parameter = parameter
        self.conditions = list(conditions)
        super().__init__(f"hypotheses violated at t={parameter}: {', '.join(self.conditions)}")


class GridTooCoarse(GibbsForgeError, ValueError):
    pass


class ConfigParseError(GibbsForgeError, ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
