"""
C2ED2 - Error Types
Every failure the library raises derives from C2ed2Error
"""

from typing import Optional, Sequence


class C2ed2Error(Exception):
    """Base error"""


class ConfigError(C2ed2Error):
    """Invalid run or simulation configuration"""


# Panel data

class PanelError(C2ed2Error):
    """Problem with the input panel"""


class InputFileError(PanelError):
    """Input file is missing, unreadable or not parseable as CSV"""


class SchemaError(PanelError):
    """Column named in the schema is missing from the file"""

    def __init__(self, message: str, column: Optional[str] = None):
        super().__init__(message)
        self.column = column


class ParseError(PanelError):
    """Non-numeric value where a number is required"""

    def __init__(self, message: str, row: int, column: str):
        super().__init__(message)
        self.row = row
        self.column = column


class StructuralError(PanelError):
    """Unbalanced panel or duplicated (unit, period) rows"""

    def __init__(self, message: str, unit: Optional[str] = None, period=None):
        super().__init__(message)
        self.unit = unit
        self.period = period


class PanelValidationError(PanelError):
    """Panel is well-formed but cannot be used for estimation"""


class AssumptionError(C2ed2Error):
    """Validation report contains failed checks"""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class DegenerateGroupError(C2ed2Error):
    """Variance requested for a group with a single unit"""

    def __init__(self, group: int):
        super().__init__(
            f"degenerate group: g={group} has 1 unit, variance needs at least 2"
        )
        self.group = group


# Numerical degeneracy

class NumericalError(C2ed2Error):
    """Design matrix is rank deficient beyond tolerance"""

    def __init__(
        self,
        message: str,
        effective_rank: Optional[int] = None,
        condition: Optional[float] = None,
    ):
        super().__init__(message)
        self.effective_rank = effective_rank
        self.condition = condition


class FactorRankError(NumericalError):
    """f'f singular over the pre-treatment window"""


class SlopeRankError(NumericalError):
    """sum_i x_i' M_f x_i singular"""


class CollinearityError(NumericalError):
    """Regression columns are collinear"""

    def __init__(
        self,
        message: str,
        columns: Sequence[str] = (),
        effective_rank: Optional[int] = None,
        condition: Optional[float] = None,
    ):
        super().__init__(message, effective_rank, condition)
        self.columns = list(columns)
