"""Exception hierarchy.

Every error raised by the library derives from :class:`DetlimError`, so callers
(and the command line front end) can map failures to stable exit codes by
class.
"""


class DetlimError(Exception):
    """Base class for all library errors."""


# -- distribution construction ------------------------------------------------

class NegativeMass(DetlimError, ValueError):
    pass


class BadSum(DetlimError, ValueError):
    pass


class DuplicateLabel(DetlimError, ValueError):
    pass


class AlphabetMismatch(DetlimError, ValueError):
    """Two distributions (or a distribution and a space) disagree on labels."""


class SpaceMismatch(DetlimError, ValueError):
    pass


# -- divergences ----------------------------------------------------------------

class ZeroWeightAtDifference(DetlimError, ValueError):
    pass


# -- bounds ---------------------------------------------------------------------

class InvalidSpec(DetlimError, ValueError):
    pass


class MissingParameter(DetlimError, ValueError):
    pass


class MissingDiam(MissingParameter):
    pass


class MissingPgStar(MissingParameter):
    pass


class InvalidBase(DetlimError, ValueError):
    """The inner base of a Table-1 Bayesian bound went negative (OPT out of range)."""


# -- hypothesis testing ---------------------------------------------------------

class BothZeroMass(DetlimError, ValueError):
    pass


class TooLarge(DetlimError, ValueError):
    pass


class ZeroRateAtGridPoint(DetlimError, RuntimeError):
    pass


# -- epidemics ------------------------------------------------------------------

class DegenerateDegrees(DetlimError, ValueError):
    pass


class NoEdges(DetlimError, ValueError):
    pass


class PerfectFoolability(DetlimError, ValueError):
    """Detection error of one: recovery never happens and the rate diverges."""
