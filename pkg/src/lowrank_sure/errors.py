"""Exception hierarchy.

Every error carries a short machine-readable ``code`` that the CLI emits in
its JSON error line.
"""


class LowRankSureError(Exception):
    code = "error"


class InvalidInput(LowRankSureError, ValueError):
    code = "invalid_input"


class NumericalFailure(LowRankSureError, ArithmeticError):
    code = "numerical_failure"


class DegenerateSpectrum(LowRankSureError, ArithmeticError):
    """Two singular values coincide within the gap tolerance."""

    code = "degenerate_spectrum"

    def __init__(self, min_relative_gap, gap_tol, coordinate=None):
        self.min_relative_gap = min_relative_gap
        self.gap_tol = gap_tol
        self.coordinate = coordinate
        msg = f"min relative singular value gap {min_relative_gap:.3g} <= gap_tol {gap_tol:.3g}"
        if coordinate is not None:
            msg += f" at perturbed coordinate {coordinate}"
        super().__init__(msg)


class ThresholdAtSingularValue(LowRankSureError, ArithmeticError):
    code = "threshold_at_singular_value"

    def __init__(self, lam, index, value):
        self.lam = lam
        self.index = index
        self.value = value
        super().__init__(f"threshold {lam!r} coincides with singular value d[{index}] = {value!r}")


class ZeroSingularValueWithRectangular(LowRankSureError, ArithmeticError):
    code = "zero_singular_value_rectangular"


class SpectralDomainError(LowRankSureError, ValueError):
    """A spectral function returned a negative or non-finite value."""

    code = "spectral_domain"


class SimulationAborted(LowRankSureError, RuntimeError):
    code = "simulation_aborted"
