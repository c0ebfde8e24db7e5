"""Error types raised by the estimation pipeline.

Each error carries a stable ``name`` used by the CLI for structured stderr
output, and a stable exit code so shell scripts can branch on failure modes.
"""


class MtebandError(Exception):
    """Base class for all library errors."""

    exit_code = 1

    @property
    def name(self):
        return type(self).__name__


# --- data ingestion ---

class MissingColumn(MtebandError):
    exit_code = 3


class NonBinaryTreatment(MtebandError):
    exit_code = 4


class EmptyData(MtebandError):
    exit_code = 5


# --- kernels ---

class NonDifferentiableKernel(MtebandError):
    """The kernel has no second derivative on its support interior, so the
    analytic critical value (which needs g'' with g(u) = u K(u)) is invalid."""

    exit_code = 6


# --- propensity ---

class SeparationDetected(MtebandError):
    exit_code = 10


class RankDeficient(MtebandError):
    exit_code = 11


class NoOverlap(MtebandError):
    exit_code = 12


class EmptyAfterTrim(MtebandError):
    exit_code = 13


# --- partially linear coefficients ---

class SingularResidualGram(MtebandError):
    exit_code = 14


# --- local polynomial ---

class DegenerateCurvature(MtebandError):
    exit_code = 15


class InsufficientLocalMass(MtebandError):
    exit_code = 16


# --- inference ---

class DensityUnderflow(MtebandError):
    exit_code = 17


class NoRealSolution(MtebandError):
    exit_code = 18


class InvalidAlpha(MtebandError):
    exit_code = 19


class NegativeRadicand(InvalidAlpha):
    exit_code = 19


# --- simulation ---

class NotSPD(MtebandError):
    exit_code = 20


class TooManyFailures(MtebandError):
    exit_code = 21
