"""Exception types shared across the package."""


class PolycalcError(Exception):
    """Base class for all polycalc errors."""


class SingularResolvent(PolycalcError):
    """z is within tolerance of an eigenvalue; (z - T)^{-1} is not computable."""


class NotSectorial(PolycalcError):
    """Matrix has spectrum on the open negative axis, or a defective zero
    eigenvalue, so the principal square root is undefined."""


class DimensionOverflow(PolycalcError):
    """A Kronecker/tensor assembly would exceed the configured dimension cap."""


class DegenerateRegion(PolycalcError):
    """Region construction failed (radius below the numerical tangency floor)."""


class SpectrumOutside(PolycalcError):
    """Spectrum violates the required containment (e.g. not inside E_r union E)."""


class IllConditioned(PolycalcError):
    """Peripheral points too close together; partial-fraction weights blow up."""


class NotConverged(PolycalcError):
    """An iterative computation failed to meet its tolerance within budget."""


class NotPowerBounded(PolycalcError):
    """Power norms exceed the gate cap on the finite test horizon."""


class NotSemisimple(PolycalcError):
    """Eigenvalue carries a nontrivial Jordan block."""


class NotContraction(PolycalcError):
    """Operator norm exceeds 1 beyond tolerance."""


class NotCommuting(PolycalcError):
    """Operators fail the pairwise commutation tolerance."""


class IntertwineFailed(PolycalcError):
    """Embedding does not intertwine with the tuple as the combinator requires."""


class AndoUnsupported(PolycalcError):
    """Commuting pair is outside the classes the finite pair-dilation covers
    (neither doubly commuting nor simultaneously diagonalizable)."""


class Infeasible(PolycalcError):
    """Joint-similarity solver certificate: margin failed to improve; the tuple
    is (numerically) not jointly similar to contractions."""


class DegeneratePoly(PolycalcError):
    """Polynomial sup-norm below floor; a ratio would be meaningless."""


class SpectrumOnContour(PolycalcError):
    """Spectrum too close to the integration contour."""


class BudgetExceeded(PolycalcError):
    """Requested quadrature/sample budget exceeds the configured cap."""


class ConfigError(PolycalcError):
    """Invalid experiment configuration; message names the offending field."""
