"""Exception hierarchy.

Two broad families matter to callers: ``DataError`` (bad input files,
config, shapes of user-supplied data) and ``NumericalError`` (a solver or
formula could not produce a valid result).  The CLI maps these to exit
codes 3 and 4 respectively.
"""


class IICLabError(Exception):
    """Base class for all errors raised by this package."""


class DataError(IICLabError):
    """Problem with user-supplied data or configuration."""


class NumericalError(IICLabError):
    """A numerical routine failed or its preconditions do not hold."""


# -- design-matrix validation ------------------------------------------------

class BadShape(NumericalError):
    """Design matrix has fewer columns than rows (not overparameterized)."""


class NonFinite(NumericalError):
    """Input contains NaN or infinite entries."""


class RankDeficient(NumericalError):
    """Design matrix rows are (numerically) linearly dependent."""


class NotPositiveDefinite(NumericalError):
    """Gram matrix factorization failed; the design is near rank deficient."""


# -- interpolation solvers ----------------------------------------------------

class MaxIterations(NumericalError):
    """Solver did not converge within the iteration budget."""


class SingularHessian(NumericalError):
    """Newton system singular and gradient fallback stalled."""


class NotUnique(NumericalError):
    """The l1 minimizer is not unique (dual certificate failed)."""


class SupportRankDeficient(NumericalError):
    """Columns on the detected support are linearly dependent."""


# -- criterion formulas --------------------------------------------------------

class DimensionBound(NumericalError):
    """d exceeds the admissible range n*p/(p-2) for the p > 2 formulas."""


class ZeroNorm(NumericalError):
    """Interpolator is identically zero; log of its norm is undefined."""


class ZeroCoordinate(NumericalError):
    """Some coordinate of the interpolator vanishes while p > 2."""


class SupportNotFull(NumericalError):
    """Closed-form volume requires support cardinality exactly n."""


class InfiniteVolume(NumericalError):
    """The sign-compatible kernel body has infinite volume (|psi_k| >= 1)."""


class DimensionTooHigh(NumericalError):
    """Kernel dimension exceeds the limit for this integration method."""


class UnboundedBody(NumericalError):
    """Bounding-box LP unbounded; the volume is infinite."""


class TiedMaximum(NumericalError):
    """No strictly dominant |x_j|; the n=1 closed form is undefined."""


class DegenerateCoordinates(NumericalError):
    """Some x_j^2 coincide; the residue formula has non-simple poles."""


class EmptyKernel(NumericalError):
    """Operation undefined for a square (d = n) design."""


# -- numeric oracle ------------------------------------------------------------

class BudgetExhausted(NumericalError):
    """Error estimate still above the requested tolerance at full budget."""


class MinimumAtBoundary(NumericalError):
    """Grid minimum at an endpoint; the tau grid must be widened."""


# -- feature maps ---------------------------------------------------------------

class DegreeExhausted(DataError):
    """Monomials up to the degree cap cannot fill the target dimension."""


# -- datasets, sweeps, statistics ------------------------------------------------

class ParseError(DataError):
    """Non-numeric or missing cell in a CSV file."""

    def __init__(self, row, column, token, message=None):
        self.row = row
        self.column = column
        self.token = token
        super().__init__(
            message
            or f"row {row}, column {column!r}: cannot parse token {token!r}"
        )


class TargetMissing(DataError):
    """Requested target column not present in the CSV header."""


class BadSize(DataError):
    """Split sizes or vector lengths are inconsistent."""


class ConfigInvalid(DataError):
    """Sweep configuration violates its invariants."""


class TooFew(DataError):
    """Not enough points for the requested statistic."""


class ZeroVariance(DataError):
    """All ranks tied in one of the inputs; correlation undefined."""
