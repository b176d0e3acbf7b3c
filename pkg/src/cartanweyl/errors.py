"""Exception types shared across the package."""


class CartanWeylError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(CartanWeylError):
    """Malformed field expression; carries the offending offset."""

    def __init__(self, message, pos):
        super().__init__(f"{message} (at offset {pos})")
        self.pos = pos


class ExprDomainError(CartanWeylError):
    """Evaluation hit a singular point (division by zero, sqrt of a negative)."""


class JetOrderError(CartanWeylError):
    """An operation needed more derivative orders than the jet carries."""


class ShapeError(CartanWeylError):
    """Matrix or form shapes are incompatible."""


class DegenerateVielbeinError(CartanWeylError):
    """|det e| fell below the configured threshold at a sample point."""


class AlgebraResidualError(CartanWeylError):
    """A constructed object failed its Lie-algebra membership check."""


class ScenarioError(CartanWeylError):
    """Scenario file or catalog request is invalid."""
