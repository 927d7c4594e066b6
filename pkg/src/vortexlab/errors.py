"""Exception hierarchy for vortexlab.

Every contract violation raises a named exception so callers (and the CLI
exit-code mapping) can distinguish configuration mistakes from genuine
solver failures.
"""


class VortexlabError(Exception):
    """Base class for all vortexlab errors."""


# geometry
class NonPositivePeriod(VortexlabError):
    pass


class UnsupportedDimension(VortexlabError):
    pass


class BidegreeMismatch(VortexlabError):
    pass


class RadiusTooLarge(VortexlabError):
    pass


# fields
class BundleMismatch(VortexlabError):
    pass


class NonUnitaryGauge(VortexlabError):
    pass


class ShapeMismatch(VortexlabError):
    pass


class TwistNotIntegral(VortexlabError):
    """A section was requested on a bundle whose per-axis flux is not integral."""


# functional
class NonpositiveSigmaDenominator(VortexlabError):
    """tau is too small for the coupled reduction constants to exist."""


# solvers
class SolverError(VortexlabError):
    pass


class ThresholdViolated(SolverError):
    pass


class Diverged(SolverError):
    pass


class MaxIters(SolverError):
    pass


class SingularLinearization(SolverError):
    pass


class IncompatibleTopology(SolverError):
    """Second-connection data cannot live on a degree-0 line bundle."""


class ResidualTooLarge(SolverError):
    pass


class FieldTooLarge(SolverError):
    """Nonabelian Coulomb projection outside its smallness regime."""


# analysis
class HypothesisUnmet(VortexlabError):
    """An operation gated on a solution hypothesis received a non-solution."""


# stability
class EmptySubobject(VortexlabError):
    pass


class RankTwoSecondFactor(VortexlabError):
    pass


# cli / io
class ConfigInvalid(VortexlabError):
    pass


class ArtifactMissing(VortexlabError):
    pass


class ArtifactCorrupt(VortexlabError):
    pass
